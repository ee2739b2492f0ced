"""Closed-form and variational operator-norm oracles for free Haar families.

``akemann_ostrand_norm`` evaluates the one-dimensional variational formula
for the norm of a weighted sum of free Haar unitaries.  ``lehner_norm`` is
its matrix-coefficient generalization: the printed source formula leaves
the coefficient index free, so the objective implemented here is the
minimal well-formed completion

    E(b) = lambda_max( a0 + 2 b
           + sum_i b^{1/2} ((1 + (b^{-1/2} a_i b^{-1/2})^2)^{1/2} - 1) b^{1/2} )

over positive definite b, which for scalars collapses exactly to the
one-dimensional objective (b = t), and is cross-validated against matrix
Monte Carlo in the experiment harness.
"""

from __future__ import annotations

import math
from typing import List, Sequence, Tuple

import numpy as np
import scipy.optimize

from ..errors import SpecError


def akemann_ostrand_norm(a: Sequence[complex], tol: float = 1e-10) -> float:
    """Norm of sum_i a_i u_i over free Haar unitaries.

    Minimizes 2t + sum_i (sqrt(t^2 + |a_i|^2) - t) over t >= 0; the
    objective is convex, so a bounded scalar minimizer suffices.
    """
    weights = np.abs(np.asarray(list(a), dtype=complex))
    if weights.size == 0:
        raise SpecError("need at least one coefficient")

    def objective(t: float) -> float:
        return 2 * t + float(np.sum(np.sqrt(t * t + weights**2) - t))

    upper = float(weights.max()) * len(weights) + 1.0
    result = scipy.optimize.minimize_scalar(
        objective, bounds=(0.0, upper), method="bounded",
        options={"xatol": tol * max(upper, 1.0) * 1e-2},
    )
    return float(min(result.fun, objective(0.0)))


def kesten_norm(p: int) -> float:
    """Norm of sum_i (u_i + u_i*) for p free Haar unitaries: 2 sqrt(2p-1)."""
    if p < 1:
        raise SpecError("p must be >= 1")
    return 2.0 * math.sqrt(2.0 * p - 1.0)


def fell_norm(p: int) -> float:
    """Norm of sum_i a_i (x) u_i with unitary coefficients: 2 sqrt(p-1)."""
    if p < 2:
        raise SpecError("p must be >= 2")
    return 2.0 * math.sqrt(p - 1.0)


def haagerup_bound(d: int, alpha: Sequence[complex]) -> float:
    """(d+1) times the l2 norm of the word coefficients."""
    if d < 1:
        raise SpecError("degree must be >= 1")
    return (d + 1) * float(np.linalg.norm(np.asarray(list(alpha), dtype=complex)))


def kemp_speicher_bound(d: int, l2: float) -> float:
    """e sqrt(d+1) times an L2 norm (holomorphic word sums)."""
    if d < 1:
        raise SpecError("degree must be >= 1")
    if l2 < 0:
        raise SpecError("l2 norm must be nonnegative")
    return math.e * math.sqrt(d + 1.0) * float(l2)


# -- matrix-coefficient variational formula ------------------------------------


def _check_hermitian(mats: List[np.ndarray]) -> int:
    k = mats[0].shape[0]
    for m in mats:
        if m.shape != (k, k):
            raise SpecError("all coefficients must share one dimension")
        if np.abs(m - m.conj().T).max() > 1e-12 * max(1.0, np.abs(m).max()):
            raise SpecError("coefficients must be Hermitian")
    return k


def _psd_sqrt_and_inv_sqrt(b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh(b)
    vals = np.maximum(vals, 1e-14)
    root = np.sqrt(vals)
    return (vecs * root) @ vecs.conj().T, (vecs / root) @ vecs.conj().T


def _objective(a0: np.ndarray, coeffs: List[np.ndarray], b: np.ndarray) -> float:
    broot, binv = _psd_sqrt_and_inv_sqrt(b)
    total = a0 + 2.0 * b
    for ai in coeffs:
        inner = binv @ ai @ binv
        vals, vecs = np.linalg.eigh(inner @ inner)
        lifted = (vecs * np.sqrt(np.maximum(1.0 + vals, 0.0))) @ vecs.conj().T
        total = total + broot @ (lifted - np.eye(b.shape[0])) @ broot
    return float(np.linalg.eigvalsh(total)[-1])


def lehner_norm(
    coefficients: Sequence[np.ndarray],
    restarts: int = 8,
    tol: float = 1e-6,
    rng_seed: int = 20240,
) -> float:
    """Variational norm of a0 (x) 1 + sum_i a_i (x) u_i, Hermitian a_i.

    Minimizes the positive-definite-cone objective (module docstring) with
    a scalar line search along b = t 1 first, then multi-start local
    optimization parameterized through a square factor b = L L* + eps.
    Scalar inputs reproduce :func:`akemann_ostrand_norm` to optimizer
    accuracy.
    """
    mats = [np.atleast_2d(np.asarray(c, dtype=complex)) for c in coefficients]
    if len(mats) < 2:
        raise SpecError("need a0 plus at least one letter coefficient")
    k = _check_hermitian(mats)
    a0, coeffs = mats[0], mats[1:]

    def scalar_objective(t: float) -> float:
        return _objective(a0, coeffs, t * np.eye(k, dtype=complex))

    scale = max(max(np.abs(m).max() for m in mats), 1e-6)
    line = scipy.optimize.minimize_scalar(
        scalar_objective, bounds=(1e-9, scale * (len(coeffs) + 2.0)),
        method="bounded", options={"xatol": 1e-12},
    )
    best = float(line.fun)
    if k == 1:
        return best

    n_params = 2 * k * k
    rng = np.random.default_rng(rng_seed)
    t_star = float(line.x)

    def unpack(params: np.ndarray) -> np.ndarray:
        ell = params[: k * k].reshape(k, k) + 1j * params[k * k:].reshape(k, k)
        return ell @ ell.conj().T + 1e-10 * np.eye(k)

    def vector_objective(params: np.ndarray) -> float:
        return _objective(a0, coeffs, unpack(params))

    base = np.zeros(n_params)
    base[: k * k] = (np.sqrt(t_star) * np.eye(k)).ravel()
    starts = [base]
    for _ in range(restarts):
        starts.append(base + 0.3 * np.sqrt(t_star) * rng.standard_normal(n_params))
    for start in starts:
        res = scipy.optimize.minimize(
            vector_objective, start, method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": tol * 1e-3, "maxiter": 4000},
        )
        if res.fun < best:
            best = float(res.fun)
    return best
