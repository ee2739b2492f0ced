"""Eigendecompositions, empirical cumulative functions and couplings.

Orderings follow one convention throughout: Hermitian spectra ascend on the
real line, unitary spectra ascend by argument taken in [0, 2*pi).  The
coupling operations realize the inverse-transform construction: a Hermitian
matrix A with distinct eigenvalues is pushed onto the reference spectrum
{1/N, ..., N/N} through its own cumulative function, and any target
quantile map is applied through functional calculus in the same eigenbasis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
import scipy.linalg

from .ensembles import SquareMatrix
from .errors import DegenerateSpectrumError, FlagError, SpecError

GAP_RTOL = 1e-12  # eigenvalue gaps below GAP_RTOL * scale count as ties

Ordering = str  # "real_ascending" | "argument_ascending"


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ordered eigenvalues with the diagonalizing unitary basis."""

    eigenvalues: np.ndarray
    basis: SquareMatrix
    ordering: Ordering

    def __post_init__(self):
        object.__setattr__(
            self, "eigenvalues", np.asarray(self.eigenvalues, dtype=complex)
        )
        if self.ordering not in ("real_ascending", "argument_ascending"):
            raise SpecError(f"unknown ordering: {self.ordering}")

    @property
    def dimension(self) -> int:
        return self.eigenvalues.size

    def reconstruct(self) -> SquareMatrix:
        v = self.basis.entries
        return SquareMatrix((v * self.eigenvalues) @ v.conj().T)

    def reconstruction_residual(self, original: SquareMatrix) -> float:
        diff = np.abs(self.reconstruct().entries - original.entries).max()
        scale = max(float(np.abs(original.entries).max()), 1e-300)
        return float(diff) / scale

    def min_gap(self) -> float:
        """Smallest distance between consecutive ordered eigenvalues."""
        if self.dimension < 2:
            return np.inf
        return float(np.abs(np.diff(self.eigenvalues)).min())


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous nondecreasing step function with final value 1."""

    jump_points: np.ndarray
    cumulative_values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.jump_points, dtype=float)
        v = np.asarray(self.cumulative_values, dtype=float)
        if x.ndim != 1 or x.size == 0 or x.shape != v.shape:
            raise SpecError("jump points and values must be matching 1-d arrays")
        if np.any(np.diff(x) <= 0):
            raise SpecError("jump points must be strictly ascending")
        if np.any(np.diff(v) < 0) or abs(v[-1] - 1.0) > 1e-12:
            raise SpecError("values must be nondecreasing with final value 1")
        object.__setattr__(self, "jump_points", x)
        object.__setattr__(self, "cumulative_values", v)

    def __call__(self, t):
        idx = np.searchsorted(self.jump_points, np.asarray(t, dtype=float), side="right")
        padded = np.concatenate([[0.0], self.cumulative_values])
        return padded[idx]


@dataclass(frozen=True)
class QuantileMap:
    """Piecewise-linear map on a uniform grid over [0, 1]."""

    values: np.ndarray
    grid: np.ndarray = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.ndim != 1 or v.size < 2:
            raise SpecError("quantile map needs at least two values")
        if not np.all(np.isfinite(v)):
            raise SpecError("quantile values must be finite")
        g = self.grid
        if g is None:
            g = np.linspace(0.0, 1.0, v.size)
        g = np.asarray(g, dtype=float)
        if g.shape != v.shape or abs(g[0]) > 0 or abs(g[-1] - 1.0) > 0:
            raise SpecError("grid must be uniform points spanning [0, 1]")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "grid", g)

    @property
    def resolution(self) -> int:
        return self.grid.size

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        re = np.interp(t, self.grid, self.values.real)
        im = np.interp(t, self.grid, self.values.imag)
        return re + 1j * im

    def sup_distance(self, other: "QuantileMap") -> float:
        """Sup-norm distance evaluated on the common (union) grid."""
        grid = np.union1d(self.grid, other.grid)
        return float(np.abs(self(grid) - other(grid)).max())

    @staticmethod
    def identity(resolution: int = 2048) -> "QuantileMap":
        g = np.linspace(0.0, 1.0, resolution)
        return QuantileMap(g.astype(complex), g)


def eig_hermitian(a: SquareMatrix) -> SpectralDecomposition:
    """Eigendecomposition of a flagged-Hermitian matrix, ascending order."""
    if "hermitian" not in a.flags:
        raise FlagError("eig_hermitian requires the hermitian flag")
    a.validate_flags()
    vals, vecs = np.linalg.eigh(a.entries)
    return SpectralDecomposition(vals.astype(complex), SquareMatrix(vecs, frozenset({"unitary"})), "real_ascending")


def eig_unitary(u: SquareMatrix) -> SpectralDecomposition:
    """Eigendecomposition of a flagged-unitary matrix, arguments in [0, 2pi)."""
    if "unitary" not in u.flags:
        raise FlagError("eig_unitary requires the unitary flag")
    u.validate_flags()
    # complex Schur of a normal matrix: T is diagonal to rounding, Z unitary
    t, z = scipy.linalg.schur(u.entries, output="complex")
    vals = np.diagonal(t).copy()
    args = np.mod(np.angle(vals), 2.0 * np.pi)
    order = np.argsort(args, kind="stable")
    return SpectralDecomposition(
        vals[order], SquareMatrix(z[:, order], frozenset({"unitary"})), "argument_ascending"
    )


def empirical_cdf(eigenvalues: Sequence[float]) -> StepFunction:
    """Empirical cumulative function: jump 1/N per eigenvalue, ties pooled."""
    vals = np.sort(np.asarray(list(eigenvalues), dtype=float))
    if vals.size == 0:
        raise SpecError("need at least one eigenvalue")
    points, counts = np.unique(vals, return_counts=True)
    return StepFunction(points, np.cumsum(counts) / vals.size)


def _level_tolerance(f: StepFunction) -> float:
    """Rounding slack for quantile levels: far below the smallest jump."""
    diffs = np.diff(f.cumulative_values)
    positive = diffs[diffs > 0]
    smallest = float(positive.min()) if positive.size else float(f.cumulative_values[0])
    return max(1e-9 * smallest, 1e-15)


def generalized_inverse(f: StepFunction, s: float) -> float:
    """inf{t : F(t) >= s} for s in (0, 1]."""
    if not 0.0 < s <= 1.0:
        raise SpecError("quantile level must lie in (0, 1]")
    idx = np.searchsorted(f.cumulative_values, s - _level_tolerance(f), side="left")
    idx = min(int(idx), f.jump_points.size - 1)
    return float(f.jump_points[idx])


def step_quantile(f: StepFunction, s) -> np.ndarray:
    """Vectorized generalized inverse of a step function."""
    s = np.asarray(s, dtype=float)
    tol = _level_tolerance(f)
    idx = np.searchsorted(f.cumulative_values, np.maximum(s, tol) - tol, side="left")
    idx = np.minimum(idx, f.jump_points.size - 1)
    return f.jump_points[idx]


def quantile_map_from_cdf(f: StepFunction, resolution: int = 2048) -> QuantileMap:
    """Sample the generalized inverse of ``f`` on a uniform [0, 1] grid.

    The value at 0 is the limit from the right, i.e. the first jump point.
    """
    grid = np.linspace(0.0, 1.0, resolution)
    return QuantileMap(step_quantile(f, grid).astype(complex), grid)


def functional_calculus(
    d: SpectralDecomposition, f: Callable[[np.ndarray], np.ndarray]
) -> SquareMatrix:
    """basis diag(f(eigenvalues)) basis*."""
    if d.ordering == "real_ascending":
        fv = np.asarray(f(d.eigenvalues.real), dtype=complex)
    else:
        fv = np.asarray(f(d.eigenvalues), dtype=complex)
    if fv.shape != d.eigenvalues.shape or not np.all(np.isfinite(fv)):
        raise SpecError("function must be finite on the whole spectrum")
    v = d.basis.entries
    return SquareMatrix((v * fv) @ v.conj().T)


def _require_distinct(d: SpectralDecomposition, scale: float) -> None:
    if d.min_gap() <= GAP_RTOL * max(scale, 1e-300):
        raise DegenerateSpectrumError(
            "eigenvalue gap below tolerance; coupling needs distinct spectra"
        )


def coupling_reference(a: SquareMatrix) -> SquareMatrix:
    """Matrix with A's eigenbasis and spectrum {1/N, ..., N/N}.

    Equals the image of A under its own empirical cumulative function when
    the eigenvalues are distinct (which is required).
    """
    d = eig_hermitian(a)
    _require_distinct(d, float(np.abs(d.eigenvalues).max()))
    n = d.dimension
    reference = np.arange(1, n + 1) / n
    v = d.basis.entries
    m = (v * reference) @ v.conj().T
    m = (m + m.conj().T) / 2
    return SquareMatrix(m, frozenset({"hermitian"}))


def coupled_copy(m: SquareMatrix, gamma: Union[QuantileMap, Callable]) -> SquareMatrix:
    """Apply a quantile map through the eigenbasis of ``m``.

    ``m`` must be Hermitian with spectrum inside [0, 1]; the result is
    basis diag(gamma(spectrum)) basis*.
    """
    d = eig_hermitian(m)
    lo, hi = float(d.eigenvalues.real.min()), float(d.eigenvalues.real.max())
    if lo < -1e-12 or hi > 1 + 1e-12:
        raise SpecError("spectrum must lie inside [0, 1]")
    levels = np.clip(d.eigenvalues.real, 0.0, 1.0)
    fv = np.asarray(gamma(levels), dtype=complex)
    v = d.basis.entries
    out = (v * fv) @ v.conj().T
    flags = set()
    if np.abs(fv.imag).max() == 0.0:
        out = (out + out.conj().T) / 2
        flags.add("hermitian")
    if np.allclose(np.abs(fv), 1.0, rtol=0, atol=1e-12):
        flags.add("unitary")
    return SquareMatrix(out, frozenset(flags))


def unitary_angle_cdf(d: SpectralDecomposition) -> StepFunction:
    """Empirical cumulative function of the arguments over 2*pi in [0, 1)."""
    if d.ordering != "argument_ascending":
        raise SpecError("need an argument-ordered decomposition")
    theta = np.mod(np.angle(d.eigenvalues), 2.0 * np.pi) / (2.0 * np.pi)
    return empirical_cdf(theta)


def haar_reconstruction_check(u: SquareMatrix) -> float:
    """Residual of rebuilding a unitary from its coupling representation.

    Decomposes U with argument ordering, forms the reference matrix with
    spectrum {i/N} in the same basis, pushes it through exp(2 pi i F^{-1})
    with F the cumulative function of the angles; returns the max-entry
    distance to U, which is at rounding level for distinct arguments.
    """
    d = eig_unitary(u)
    theta = np.mod(np.angle(d.eigenvalues), 2.0 * np.pi) / (2.0 * np.pi)
    if d.dimension > 1:
        ts = np.sort(theta)
        wrap = 1.0 - (ts[-1] - ts[0])
        if min(np.diff(ts).min(), wrap) <= GAP_RTOL:
            raise DegenerateSpectrumError("argument ties beyond tolerance")
    n = d.dimension
    reference = np.arange(1, n + 1) / n
    v = d.basis.entries
    m = SquareMatrix((v * reference) @ v.conj().T, frozenset({"hermitian"}))
    f = empirical_cdf(theta)
    rebuilt = coupled_copy(m, lambda s: np.exp(2j * np.pi * step_quantile(f, s)))
    return float(np.abs(rebuilt.entries - u.entries).max())


def support_neighborhood_check(
    eigenvalues: Sequence[float], support, epsilon: float
) -> bool:
    """True iff every eigenvalue lies within ``epsilon`` of the support."""
    if epsilon <= 0:
        raise SpecError("epsilon must be positive")
    intervals = getattr(support, "intervals", support)
    intervals = [(float(a), float(b)) for a, b in intervals]
    if not intervals:
        raise SpecError("support must be nonempty")
    vals = np.asarray(list(eigenvalues), dtype=float)
    ok = np.zeros(vals.shape, dtype=bool)
    for a, b in intervals:
        ok |= (vals > a - epsilon) & (vals < b + epsilon)
    return bool(np.all(ok))


def operator_norm(a: SquareMatrix) -> float:
    """Largest singular value (full decomposition, desk scale)."""
    if "hermitian" in a.flags:
        return float(np.abs(np.linalg.eigvalsh(a.entries)).max())
    return float(np.linalg.svd(a.entries, compute_uv=False)[0])


def normalized_trace(a: SquareMatrix) -> complex:
    """tau_N(A) = Tr(A) / N."""
    return complex(np.trace(a.entries) / a.dimension)
