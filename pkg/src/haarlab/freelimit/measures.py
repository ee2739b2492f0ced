"""Compactly supported probability measures: atoms plus a sampled density.

A :class:`CompactMeasure` stores point masses exactly and the absolutely
continuous part as density values on a uniform grid, together with the
cumulative mass of the continuous part at the grid nodes.  The node
cumulative is the mass-authoritative representation: for densities with
integrable singularities (arcsine-type edges) the trapezoid integral of
the sampled density under-counts the singular cells, so producers that
know better bin masses pass them in and the pointwise density remains a
shape record.  Atoms are never smoothed onto the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np

from ..errors import SpecError

DEFAULT_GRID = 4096
MASS_TOL = 1e-8
PAD_FRACTION = 0.10


@dataclass(frozen=True)
class SupportSet:
    """Disjoint closed real intervals, ascending."""

    intervals: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        if not ivs:
            raise SpecError("support must be nonempty")
        for a, b in ivs:
            if b < a:
                raise SpecError("interval endpoints out of order")
        for (_, b0), (a1, _) in zip(ivs, ivs[1:]):
            if a1 <= b0:
                raise SpecError("intervals must be disjoint and ascending")
        object.__setattr__(self, "intervals", ivs)

    @property
    def min(self) -> float:
        return self.intervals[0][0]

    @property
    def max(self) -> float:
        return self.intervals[-1][1]

    def contains(self, x: float, tolerance: float = 0.0) -> bool:
        return any(a - tolerance <= x <= b + tolerance for a, b in self.intervals)


def _merge_intervals(intervals: List[Tuple[float, float]]) -> Tuple[Tuple[float, float], ...]:
    out: List[Tuple[float, float]] = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return tuple(out)


@dataclass(frozen=True)
class CompactMeasure:
    """Probability measure = atoms + piecewise-linear density on a grid."""

    atoms: Tuple[Tuple[float, float], ...]
    grid: np.ndarray
    density: np.ndarray
    node_cdf: np.ndarray = None  # cumulative continuous mass at nodes

    def __post_init__(self):
        merged = {}
        for a, m in self.atoms:
            merged[float(a)] = merged.get(float(a), 0.0) + float(m)
        atoms = tuple(sorted(merged.items()))
        if any(m <= 0 for _, m in atoms):
            raise SpecError("atom masses must be positive")
        grid = np.asarray(self.grid, dtype=float)
        dens = np.asarray(self.density, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or grid.shape != dens.shape:
            raise SpecError("grid and density must be matching 1-d arrays")
        steps = np.diff(grid)
        if np.any(steps <= 0) or abs(steps.max() - steps.min()) > 1e-9 * steps.max():
            raise SpecError("grid must be uniform and increasing")
        if np.any(dens < 0):
            raise SpecError("density must be nonnegative")
        node_cdf = self.node_cdf
        if node_cdf is None:
            cell = 0.5 * (dens[:-1] + dens[1:]) * steps
            node_cdf = np.concatenate([[0.0], np.cumsum(cell)])
        node_cdf = np.asarray(node_cdf, dtype=float)
        if node_cdf.shape != grid.shape or np.any(np.diff(node_cdf) < -1e-12):
            raise SpecError("node cumulative must be nondecreasing on the grid")
        total = node_cdf[-1] + sum(m for _, m in atoms)
        if abs(total - 1.0) > MASS_TOL:
            raise SpecError(f"total mass {total} deviates from 1 beyond {MASS_TOL}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "node_cdf", node_cdf)

    # -- basic queries ---------------------------------------------------------

    @property
    def interval(self) -> Tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    @property
    def grid_step(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def atom_mass(self) -> float:
        return sum(m for _, m in self.atoms)

    @property
    def continuous_mass(self) -> float:
        return float(self.node_cdf[-1])

    def total_mass(self) -> float:
        return self.atom_mass + self.continuous_mass

    def is_atomic(self) -> bool:
        return self.continuous_mass <= 1e-12

    def cdf(self, x) -> np.ndarray:
        """Right-continuous cumulative function."""
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.grid, self.node_cdf,
                        left=0.0, right=self.continuous_mass)
        for loc, mass in self.atoms:
            out = out + mass * (x >= loc)
        return out

    def quantile(self, s) -> np.ndarray:
        """Generalized inverse of the cumulative function."""
        xs, fs = self._monotone_graph()
        s = np.asarray(s, dtype=float)
        idx = np.searchsorted(fs, np.clip(s, 1e-15, 1.0) - 1e-15, side="left")
        idx = np.clip(idx, 1, len(fs) - 1)
        f0, f1 = fs[idx - 1], fs[idx]
        x0, x1 = xs[idx - 1], xs[idx]
        frac = np.where(f1 > f0, (np.clip(s, None, 1.0) - f0) / np.where(f1 > f0, f1 - f0, 1.0), 1.0)
        return x0 + np.clip(frac, 0.0, 1.0) * (x1 - x0)

    def quantile_map(self, resolution: int = 2048):
        from ..spectral import QuantileMap

        grid = np.linspace(0.0, 1.0, resolution)
        return QuantileMap(self.quantile(grid).astype(complex), grid)

    def _monotone_graph(self) -> Tuple[np.ndarray, np.ndarray]:
        """Graph of the cdf as a monotone polyline (atoms become jumps)."""
        xs: List[float] = []
        fs: List[float] = []
        acc_atoms = 0.0
        atom_idx = 0
        atoms = self.atoms
        for x, f in zip(self.grid, self.node_cdf):
            while atom_idx < len(atoms) and atoms[atom_idx][0] <= x:
                loc, mass = atoms[atom_idx]
                base = float(np.interp(loc, self.grid, self.node_cdf,
                                       left=0.0, right=self.continuous_mass))
                xs.extend([loc, loc])
                fs.extend([base + acc_atoms, base + acc_atoms + mass])
                acc_atoms += mass
                atom_idx += 1
            xs.append(float(x))
            fs.append(float(f) + acc_atoms)
        while atom_idx < len(atoms):
            loc, mass = atoms[atom_idx]
            xs.extend([loc, loc])
            fs.extend([self.continuous_mass + acc_atoms,
                       self.continuous_mass + acc_atoms + mass])
            acc_atoms += mass
            atom_idx += 1
        return np.asarray(xs, dtype=float), np.asarray(fs, dtype=float)

    def moment(self, k: int) -> float:
        """k-th moment; bin masses weighted by the PL in-bin shape of t^k."""
        glx, glw = np.polynomial.legendre.leggauss(4)
        t0, t1 = self.grid[:-1], self.grid[1:]
        mid = 0.5 * (t0 + t1)
        rad = 0.5 * (t1 - t0)
        pts = mid[:, None] + rad[:, None] * glx
        f0, f1 = self.density[:-1], self.density[1:]
        fpts = f0[:, None] + (f1 - f0)[:, None] * (pts - t0[:, None]) / (t1 - t0)[:, None]
        pl_mass = rad * (fpts @ glw)
        pl_weighted = rad * ((fpts * pts**k) @ glw)
        shape = np.where(pl_mass > 1e-300, pl_weighted / np.where(pl_mass > 0, pl_mass, 1.0), mid**k)
        masses = np.diff(self.node_cdf)
        value = float(np.dot(masses, shape))
        value += sum(m * loc**k for loc, m in self.atoms)
        return value

    def mean(self) -> float:
        return self.moment(1)

    def variance(self) -> float:
        m1 = self.moment(1)
        return self.moment(2) - m1 * m1

    # -- transformations ---------------------------------------------------------

    def translate(self, shift: float) -> "CompactMeasure":
        return CompactMeasure(
            tuple((a + shift, m) for a, m in self.atoms),
            self.grid + shift,
            self.density,
            self.node_cdf,
        )

    def dilate(self, c: float) -> "CompactMeasure":
        """Pushforward under t -> c t (c nonzero)."""
        if c == 0:
            raise SpecError("dilation by zero collapses to a point mass")
        atoms = tuple((a * c, m) for a, m in self.atoms)
        if c > 0:
            return CompactMeasure(atoms, self.grid * c, self.density / c, self.node_cdf)
        grid = (self.grid * c)[::-1]
        dens = (self.density / abs(c))[::-1]
        node = (self.continuous_mass - self.node_cdf)[::-1]
        return CompactMeasure(atoms, grid, dens, node)

    # -- constructors -------------------------------------------------------------

    @staticmethod
    def from_atoms(atoms: Sequence[Tuple[float, float]], grid_size: int = 8) -> "CompactMeasure":
        atoms = tuple((float(a), float(m)) for a, m in atoms)
        lo = min(a for a, _ in atoms)
        hi = max(a for a, _ in atoms)
        pad = max(PAD_FRACTION * max(hi - lo, 1.0), 0.5)
        grid = np.linspace(lo - pad, hi + pad, grid_size)
        return CompactMeasure(atoms, grid, np.zeros(grid_size), np.zeros(grid_size))

    @staticmethod
    def from_density(
        interval: Tuple[float, float],
        density_fn: Callable[[np.ndarray], np.ndarray],
        grid_size: int = DEFAULT_GRID,
        atoms: Sequence[Tuple[float, float]] = (),
        cdf_fn: Callable[[np.ndarray], np.ndarray] | None = None,
        pad: bool = True,
    ) -> "CompactMeasure":
        """Sample a density on a uniform grid, normalizing the total mass.

        When ``cdf_fn`` is given, node cumulative values come from it
        exactly; otherwise they are per-cell Gauss-Legendre integrals of
        ``density_fn``, rescaled so the total is exactly 1 - atom mass.
        """
        lo, hi = float(interval[0]), float(interval[1])
        if pad:
            width = hi - lo
            lo -= PAD_FRACTION / 2 * width
            hi += PAD_FRACTION / 2 * width
        grid = np.linspace(lo, hi, grid_size)
        dens = np.maximum(np.asarray(density_fn(grid), dtype=float), 0.0)
        atom_mass = sum(m for _, m in atoms)
        if cdf_fn is not None:
            node = np.asarray(cdf_fn(grid), dtype=float)
            node = node - node[0]
        else:
            glx, glw = np.polynomial.legendre.leggauss(8)
            mid = 0.5 * (grid[:-1] + grid[1:])
            rad = 0.5 * (grid[1:] - grid[:-1])
            pts = mid[:, None] + rad[:, None] * glx
            vals = np.maximum(np.asarray(density_fn(pts.ravel()), dtype=float), 0.0)
            cell = rad * (vals.reshape(pts.shape) @ glw)
            node = np.concatenate([[0.0], np.cumsum(cell)])
        target = 1.0 - atom_mass
        if node[-1] <= 0:
            raise SpecError("density integrates to zero")
        scale = target / node[-1]
        if abs(scale - 1.0) > 2e-2:
            raise SpecError(f"density mass off by {node[-1] - target:+.3e}; refusing to renormalize")
        return CompactMeasure(tuple(atoms), grid, dens * scale, node * scale)


def semicircle_measure(variance: float, grid_size: int = DEFAULT_GRID) -> CompactMeasure:
    """Semicircle law with the given variance; unit variance has support [-2, 2]."""
    if variance <= 0:
        raise SpecError("variance must be positive")
    v = float(variance)
    r = 2.0 * np.sqrt(v)

    def dens(x):
        return np.sqrt(np.maximum(4 * v - x * x, 0.0)) / (2 * np.pi * v)

    def cdf(x):
        xc = np.clip(x, -r, r)
        return 0.5 + (xc * np.sqrt(np.maximum(4 * v - xc * xc, 0.0))
                      + 4 * v * np.arcsin(xc / r)) / (4 * np.pi * v)

    return CompactMeasure.from_density((-r, r), dens, grid_size, cdf_fn=cdf)


def arcsine_measure(radius: float = 2.0, grid_size: int = DEFAULT_GRID) -> CompactMeasure:
    """Arcsine law on (-radius, radius)."""
    if radius <= 0:
        raise SpecError("radius must be positive")
    r = float(radius)

    def dens(x):
        inside = np.maximum(r * r - x * x, 0.0)
        with np.errstate(divide="ignore"):
            out = np.where(inside > 0, 1.0 / (np.pi * np.sqrt(np.where(inside > 0, inside, 1.0))), 0.0)
        return out

    def cdf(x):
        return 0.5 + np.arcsin(np.clip(x, -r, r) / r) / np.pi

    return CompactMeasure.from_density((-r, r), dens, grid_size, cdf_fn=cdf)


def kesten_measure(p: int, grid_size: int = DEFAULT_GRID) -> CompactMeasure:
    """Spectral law of the sum of p free Haar unitaries and their adjoints.

    Support is [-2 sqrt(2p-1), 2 sqrt(2p-1)] and the second moment is 2p.
    For p = 1 this is the arcsine law on (-2, 2).
    """
    if p < 1:
        raise SpecError("p must be >= 1")
    if p == 1:
        return arcsine_measure(2.0, grid_size)
    d = 2 * p
    r = 2.0 * np.sqrt(d - 1.0)

    def dens(x):
        inside = np.maximum(4 * (d - 1) - x * x, 0.0)
        return d * np.sqrt(inside) / (2 * np.pi * (d * d - x * x))

    return CompactMeasure.from_density((-r, r), dens, grid_size)


def two_point_measure(a: float, wa: float, b: float, wb: float) -> CompactMeasure:
    """Convenience two-atom measure, e.g. symmetric Bernoulli."""
    if abs(wa + wb - 1.0) > 1e-12:
        raise SpecError("atom masses must sum to 1")
    return CompactMeasure.from_atoms([(a, wa), (b, wb)])


def measure_support(mu: CompactMeasure, density_threshold: float = 0.0) -> SupportSet:
    """Atoms plus grid runs where density exceeds the threshold.

    Runs are widened by one grid cell on each side (one-cell closure) and
    merged with atom points.
    """
    if density_threshold < 0:
        raise SpecError("threshold must be nonnegative")
    intervals: List[Tuple[float, float]] = [(a, a) for a, _ in mu.atoms]
    above = mu.density > density_threshold
    cell = mu.grid_step
    idx = np.flatnonzero(above)
    if idx.size:
        breaks = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate([[idx[0]], idx[breaks + 1]])
        ends = np.concatenate([idx[breaks], [idx[-1]]])
        for s, e in zip(starts, ends):
            intervals.append((mu.grid[s] - cell, mu.grid[e] + cell))
    if not intervals:
        raise SpecError("measure has empty support at this threshold")
    return SupportSet(_merge_intervals(intervals))


def sup_cdf_distance(mu: CompactMeasure, cdf_fn, xs: np.ndarray | None = None) -> float:
    """Sup distance between the measure's cdf and a reference cdf.

    Evaluated on the measure's grid nodes plus two-sided neighborhoods of
    every atom of the measure (grid-node semantics: features between nodes
    are below the stored resolution).
    """
    if xs is None:
        extras = []
        for loc, _ in mu.atoms:
            extras.extend([loc - 1e-9, loc, loc + 1e-9])
        xs = np.sort(np.concatenate([mu.grid, np.asarray(extras, dtype=float)]))
    ours = mu.cdf(xs)
    theirs = np.asarray(cdf_fn(xs), dtype=float)
    return float(np.abs(ours - theirs).max())


def kolmogorov_distance(samples: Sequence[float], mu: CompactMeasure) -> float:
    """Two-sided Kolmogorov distance of an empirical sample to the measure."""
    x = np.sort(np.asarray(list(samples), dtype=float))
    n = x.size
    if n == 0:
        raise SpecError("empty sample")
    f = mu.cdf(x)
    upper = np.abs(np.arange(1, n + 1) / n - f).max()
    lower = np.abs(np.arange(0, n) / n - f).max()
    return float(max(upper, lower))
