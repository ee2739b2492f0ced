"""Seedable samplers for the matrix ensembles used throughout.

Normalization convention: all Gaussian Hermitian ensembles are scaled so
that the normalized trace of the square tends to 1, i.e. the limiting
spectral law is the semicircle supported on [-2, 2].

Haar sampling is QR of a Ginibre matrix with the R-diagonal correction
(unit phases for the unitary group, signs for the orthogonal group); plain
QR is *not* Haar distributed.  The compact symplectic group is handled by
running the same Gram-Schmidt/QR over quaternion blocks, see
:func:`_haar_symplectic`.

Matrices of the symplectic world are stored as 2n x 2n complex matrices in
the big-block quaternion representation [[Z, W], [-conj(W), conj(Z)]],
self-dual with respect to the standard skew form J = [[0, I], [-I, 0]].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import FlagError, SpecError
from .seeding import Seed

HERMITIAN_RTOL = 1e-12
UNITARY_TOL = 1e-10


class EnsembleKind(str, Enum):
    GUE = "GUE"
    GOE = "GOE"
    GSE = "GSE"
    HAAR_UNITARY = "HaarUnitary"
    HAAR_ORTHOGONAL = "HaarOrthogonal"
    HAAR_SYMPLECTIC = "HaarSymplectic"
    PERMUTATION = "Permutation"
    CONJUGATED_DIAGONAL = "ConjugatedDiagonal"


GAUSSIAN_KINDS = {EnsembleKind.GUE, EnsembleKind.GOE, EnsembleKind.GSE}
HAAR_KINDS = {
    EnsembleKind.HAAR_UNITARY,
    EnsembleKind.HAAR_ORTHOGONAL,
    EnsembleKind.HAAR_SYMPLECTIC,
}
EVEN_KINDS = {EnsembleKind.GSE, EnsembleKind.HAAR_SYMPLECTIC}


@dataclass(frozen=True)
class EnsembleSpec:
    """What to sample: ensemble kind, dimension, optional diagonal data."""

    kind: EnsembleKind
    dimension: int
    diagonal_data: Optional[tuple] = None

    def __post_init__(self):
        kind = EnsembleKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.dimension < 1:
            raise SpecError("dimension must be >= 1")
        if kind in EVEN_KINDS and self.dimension % 2 != 0:
            raise SpecError(f"{kind.value} requires even stored dimension")
        if kind is EnsembleKind.CONJUGATED_DIAGONAL:
            if not self.diagonal_data:
                raise SpecError("ConjugatedDiagonal requires diagonal_data")
            if len(self.diagonal_data) != self.dimension:
                raise SpecError("diagonal_data length must equal dimension")
            object.__setattr__(
                self, "diagonal_data", tuple(complex(d) for d in self.diagonal_data)
            )
        elif self.diagonal_data is not None:
            raise SpecError("diagonal_data is only valid for ConjugatedDiagonal")


@dataclass(frozen=True)
class SquareMatrix:
    """Dense complex square matrix with structural flags.

    Flags are a subset of {"hermitian", "unitary", "selfdual"}; each flag
    carries a residual contract checked by :meth:`validate_flags`.
    """

    entries: np.ndarray
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        a = np.ascontiguousarray(np.asarray(self.entries, dtype=complex))
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise SpecError("entries must form a nonempty square matrix")
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "flags", frozenset(self.flags))
        unknown = self.flags - {"hermitian", "unitary", "selfdual"}
        if unknown:
            raise SpecError(f"unknown flags: {sorted(unknown)}")

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def hermitian_residual(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())

    def unitary_residual(self) -> float:
        a = self.entries
        return float(np.abs(a @ a.conj().T - np.eye(self.dimension)).max())

    def selfdual_residual(self) -> float:
        # self-dual == quaternionic: A = J conj(A) J^{-1} with J the skew form
        n = self.dimension // 2
        a = self.entries
        ac = a.conj()
        # J @ ac @ J^{-1} computed blockwise; J = [[0, I], [-I, 0]], J^{-1} = -J
        top = np.hstack([ac[n:, n:], -ac[n:, :n]])
        bot = np.hstack([-ac[:n, n:], ac[:n, :n]])
        return float(np.abs(a - np.vstack([top, bot])).max())

    def validate_flags(self) -> None:
        if "hermitian" in self.flags:
            scale = max(float(np.abs(self.entries).max()), 1e-300)
            if self.hermitian_residual() > HERMITIAN_RTOL * scale:
                raise FlagError("hermitian flag violated")
        if "unitary" in self.flags:
            if self.unitary_residual() > UNITARY_TOL:
                raise FlagError("unitary flag violated")
        if "selfdual" in self.flags:
            if self.dimension % 2 != 0:
                raise FlagError("selfdual flag requires even dimension")
            scale = max(float(np.abs(self.entries).max()), 1e-300)
            if self.selfdual_residual() > 1e-10 * scale:
                raise FlagError("selfdual flag violated")


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SpecError(message)


def sample_ginibre(n: int, field_kind: str, seed: Seed) -> SquareMatrix:
    """i.i.d. Gaussian matrix with entry variance 1/n (per complex entry).

    ``field_kind`` is one of "real", "complex", "quaternion"; the quaternion
    case needs even stored size ``n`` and returns the complex representation.
    """
    _require(n >= 1, "dimension must be >= 1")
    rng = seed.generator()
    if field_kind == "real":
        a = rng.standard_normal((n, n)) / np.sqrt(n)
        return SquareMatrix(a.astype(complex))
    if field_kind == "complex":
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        return SquareMatrix(a / np.sqrt(2 * n))
    if field_kind == "quaternion":
        _require(n % 2 == 0, "quaternion Ginibre requires even stored size")
        half = n // 2
        # E|entry|^2 = 1/n for each complex cell of the representation
        z = (rng.standard_normal((half, half)) + 1j * rng.standard_normal((half, half)))
        w = (rng.standard_normal((half, half)) + 1j * rng.standard_normal((half, half)))
        z /= np.sqrt(2 * n)
        w /= np.sqrt(2 * n)
        a = np.block([[z, w], [-w.conj(), z.conj()]])
        return SquareMatrix(a)
    raise SpecError(f"unknown field kind: {field_kind!r}")


def sample_gaussian_hermitian(spec: EnsembleSpec, seed: Seed) -> SquareMatrix:
    """GUE / GOE / GSE sample, normalized trace of the square -> 1."""
    _require(spec.kind in GAUSSIAN_KINDS, f"not a Gaussian kind: {spec.kind}")
    field_kind = {
        EnsembleKind.GUE: "complex",
        EnsembleKind.GOE: "real",
        EnsembleKind.GSE: "quaternion",
    }[spec.kind]
    g = sample_ginibre(spec.dimension, field_kind, seed).entries
    a = (g + g.conj().T) / np.sqrt(2)
    flags = {"hermitian"}
    if spec.kind is EnsembleKind.GSE:
        flags.add("selfdual")
    return SquareMatrix(a, frozenset(flags))


def _haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return q


def _haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diagonal(r))
    return q.astype(complex)


def _haar_symplectic(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar element of the compact symplectic group, stored n x n complex.

    Modified Gram-Schmidt over the quaternion division ring: quaternion
    column j of the Ginibre start is the complex column pair (j, j+half);
    projection coefficients are snapped to exact quaternion 2x2 form and
    the diagonal normalizer is real positive, which makes the quaternion
    QR unique, hence the Q factor Haar.
    """
    half = n // 2
    z = rng.standard_normal((half, half)) + 1j * rng.standard_normal((half, half))
    w = rng.standard_normal((half, half)) + 1j * rng.standard_normal((half, half))
    cols = np.empty((half, n, 2), dtype=complex)  # quaternion columns
    cols[:, :half, 0] = z.T
    cols[:, half:, 0] = -w.conj().T
    cols[:, :half, 1] = w.T
    cols[:, half:, 1] = z.conj().T
    q = np.empty_like(cols)
    for j in range(half):
        v = cols[j]
        for _ in range(2):  # two MGS passes for orthogonality at 1e-14
            if j:
                r = np.einsum("ipq,pr->iqr", q[:j].conj(), v)
                alpha = 0.5 * (r[:, 0, 0] + r[:, 1, 1].conj())
                beta = 0.5 * (r[:, 0, 1] - r[:, 1, 0].conj())
                rq = np.empty_like(r)
                rq[:, 0, 0] = alpha
                rq[:, 0, 1] = beta
                rq[:, 1, 0] = -beta.conj()
                rq[:, 1, 1] = alpha.conj()
                v = v - np.einsum("ipq,iqr->pr", q[:j], rq)
        # quaternion norm is real: both complex columns of the pair share it
        v = v / np.linalg.norm(v[:, 0])
        # re-impose the exact quaternion pairing on the second column
        v[:half, 1] = -v[half:, 0].conj()
        v[half:, 1] = v[:half, 0].conj()
        q[j] = v
    u = np.empty((n, n), dtype=complex)
    u[:, :half] = q[:, :, 0].T
    u[:, half:] = q[:, :, 1].T
    return u


def sample_haar(spec: EnsembleSpec, seed: Seed) -> SquareMatrix:
    """Haar-distributed element of U(N), O(N) or Sp(N/2)."""
    _require(spec.kind in HAAR_KINDS, f"not a Haar kind: {spec.kind}")
    rng = seed.generator()
    n = spec.dimension
    if spec.kind is EnsembleKind.HAAR_UNITARY:
        return SquareMatrix(_haar_unitary(n, rng), frozenset({"unitary"}))
    if spec.kind is EnsembleKind.HAAR_ORTHOGONAL:
        return SquareMatrix(_haar_orthogonal(n, rng), frozenset({"unitary"}))
    return SquareMatrix(_haar_symplectic(n, rng), frozenset({"unitary", "selfdual"}))


def sample_permutation(n: int, seed: Seed) -> SquareMatrix:
    """Uniformly random N x N permutation matrix."""
    _require(n >= 1, "dimension must be >= 1")
    rng = seed.generator()
    perm = rng.permutation(n)
    a = np.zeros((n, n), dtype=complex)
    a[perm, np.arange(n)] = 1.0
    return SquareMatrix(a, frozenset({"unitary"}))


def conjugate_by_haar(diagonal_data: Sequence[complex], seed: Seed) -> SquareMatrix:
    """V diag(data) V* with V a fresh Haar unitary drawn from ``seed``."""
    data = np.asarray(list(diagonal_data), dtype=complex)
    _require(data.size >= 1, "diagonal_data must be nonempty")
    v = _haar_unitary(data.size, seed.generator())
    a = (v * data) @ v.conj().T
    flags = set()
    if np.all(np.abs(data.imag) == 0.0):
        a = (a + a.conj().T) / 2  # symmetrize away rounding noise
        flags.add("hermitian")
    if np.allclose(np.abs(data), 1.0, rtol=0, atol=1e-13):
        flags.add("unitary")
    return SquareMatrix(a, frozenset(flags))


def sample(spec: EnsembleSpec, seed: Seed) -> SquareMatrix:
    """Dispatch on the ensemble kind."""
    if spec.kind in GAUSSIAN_KINDS:
        return sample_gaussian_hermitian(spec, seed)
    if spec.kind in HAAR_KINDS:
        return sample_haar(spec, seed)
    if spec.kind is EnsembleKind.PERMUTATION:
        return sample_permutation(spec.dimension, seed)
    return conjugate_by_haar(spec.diagonal_data, seed)
