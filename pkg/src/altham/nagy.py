"""Invariant Hermitian metrics for power-bounded invertible maps.

``P`` below is always a Gram matrix, ``h_T(x, y) = x^* P y``, and the
fiducial structure is ``h_0(x, y) = x^* H0 y``.  Invariance reads
``T^* P T = P``.  The positive factor of the similarity is
``Q = (H0^{-1} P)^{1/2}``, the square root taken in the ``h_0`` geometry,
so that ``h_T(x, y) = h_0(Q x, Q y)`` and ``U = Q T Q^{-1}`` is ``h_0``-unitary.

Two constructions are provided.  The Cesaro mean
``P_N = (2N+1)^{-1} sum_{|k|<=N} (T^k)^* H0 T^k`` is the computable stand-in
for a Banach limit of ``h_0(T^n x, T^n y)``; its invariance defect decays like
``1/N``.  The spectral construction builds ``P`` from an ``h_0``-normalized
eigenbasis and is invariant to roundoff; on semisimple unimodular ``T`` it is
the limit of the Cesaro means.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from scipy.linalg import cholesky, eigh, solve_triangular

from .core import AlthamError, DimensionError, as_square

UNIMODULAR_TOL = 1e-8
SEMISIMPLE_RTOL = 1e-8
EIG_CLUSTER_RTOL = 1e-8
GROWTH_RATIO = 1.5
GROWTH_CAP = 1e8


class SingularT(AlthamError):
    code = "singular_T"


class NotPowerBounded(AlthamError):
    code = "not_power_bounded"


class NotUnimodular(AlthamError):
    code = "not_unimodular"


class NotSemisimple(AlthamError):
    code = "not_semisimple"


def _fiducial(h0, n: int) -> np.ndarray:
    if h0 is None:
        return np.eye(n, dtype=complex)
    h0 = as_square(h0, name="h0").astype(complex)
    if h0.shape != (n, n):
        raise DimensionError(f"h0 is {h0.shape}, T is {(n, n)}")
    return 0.5 * (h0 + h0.conj().T)


def _upper_factor(h0: np.ndarray) -> np.ndarray:
    """``R`` upper triangular with ``H0 = R^* R``."""
    return cholesky(h0, lower=False)


def _in_h0_frame(t: np.ndarray, r: np.ndarray) -> np.ndarray:
    """``R T R^{-1}``: the operator in ``h_0``-orthonormal coordinates."""
    rt = r @ t
    return solve_triangular(r, rt.conj().T, lower=False, trans="C").conj().T


@dataclass
class PowerBoundReport:
    c_estimate: float
    K: int
    table: dict[int, float]
    bounded: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "c_estimate": self.c_estimate,
            "K": self.K,
            "bounded": self.bounded,
            "growth_table": [[k, v] for k, v in sorted(self.table.items())],
        }


def power_bound(t, K: int = 200, h0=None) -> PowerBoundReport:
    """``max_{|k| <= K} ||T^k||`` in the ``h_0`` operator norm.

    ``bounded`` is False when the maximum over ``K/2 < |k| <= K`` exceeds the
    maximum over ``|k| <= K/2`` by more than ``GROWTH_RATIO``, or when the
    table passes ``GROWTH_CAP``.
    """
    t = as_square(t, name="T").astype(complex)
    n = t.shape[0]
    if K < 0:
        raise ValueError("K must be >= 0")
    if np.linalg.matrix_rank(t) < n:
        raise SingularT("T is singular")
    r = _upper_factor(_fiducial(h0, n))
    tt = _in_h0_frame(t, r)
    ti = np.linalg.inv(tt)
    table = {0: 1.0}
    fwd = np.eye(n, dtype=complex)
    bwd = np.eye(n, dtype=complex)
    for k in range(1, K + 1):
        fwd = fwd @ tt
        bwd = bwd @ ti
        table[k] = float(np.linalg.norm(fwd, 2))
        table[-k] = float(np.linalg.norm(bwd, 2))
        if max(table[k], table[-k]) > GROWTH_CAP:
            break
    c = max(table.values())
    kmax = max(table)
    half = kmax // 2
    early = max(v for k, v in table.items() if abs(k) <= half)
    late = max(v for k, v in table.items() if abs(k) > half) if kmax > 0 else early
    bounded = c <= GROWTH_CAP and late <= GROWTH_RATIO * early
    return PowerBoundReport(c, K, table, bounded)


@dataclass
class InvariantMetricResult:
    P: np.ndarray
    Q: np.ndarray
    method: Literal["cesaro", "spectral"]
    defect: float
    N: int | None = None

    def normalized(self) -> np.ndarray:
        """``P`` scaled to unit determinant."""
        n = self.P.shape[0]
        d = np.linalg.det(self.P).real
        return self.P / d ** (1.0 / n)

    def to_dict(self) -> dict[str, Any]:
        from .core import matrix_to_json

        return {
            "method": self.method,
            "N": self.N,
            "P": matrix_to_json(self.P),
            "Q": matrix_to_json(self.Q),
            "invariance_defect": self.defect,
        }


def invariance_defect(t: np.ndarray, p: np.ndarray) -> float:
    """``||T^* P T - P|| / ||P||``."""
    return float(np.linalg.norm(t.conj().T @ p @ t - p) / np.linalg.norm(p))


def _sqrt_factor(p: np.ndarray, h0: np.ndarray) -> np.ndarray:
    """``Q = (H0^{-1} P)^{1/2}``, positive and self-adjoint for ``h_0``."""
    r = _upper_factor(h0)
    # P in h0-orthonormal coordinates: R^{-*} P R^{-1}
    x = solve_triangular(r, p, lower=False, trans="C")
    pt = solve_triangular(r, x.conj().T, lower=False, trans="C").conj().T
    pt = 0.5 * (pt + pt.conj().T)
    w, v = eigh(pt)
    qt = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    # back to original coordinates: Q = R^{-1} Q~ R
    return solve_triangular(r, qt @ r, lower=False)


def invariant_metric_cesaro(t, h0=None, N: int = 1000, K: int = 200) -> InvariantMetricResult:
    """Symmetric Cesaro mean of the transported fiducial metric."""
    t = as_square(t, name="T").astype(complex)
    n = t.shape[0]
    h0m = _fiducial(h0, n)
    pb = power_bound(t, K, h0m)
    if not pb.bounded:
        raise NotPowerBounded(
            f"||T^k|| grows (max {pb.c_estimate:.3e} over |k| <= {K})"
        )
    ti = np.linalg.inv(t)
    acc = h0m.copy()
    fwd = np.eye(n, dtype=complex)
    bwd = np.eye(n, dtype=complex)
    for _ in range(N):
        fwd = fwd @ t
        bwd = bwd @ ti
        acc += fwd.conj().T @ h0m @ fwd + bwd.conj().T @ h0m @ bwd
    p = acc / (2 * N + 1)
    p = 0.5 * (p + p.conj().T)
    return InvariantMetricResult(p, _sqrt_factor(p, h0m), "cesaro", invariance_defect(t, p), N)


def invariant_metric_spectral(t, h0=None, unimodular_tol: float = UNIMODULAR_TOL) -> InvariantMetricResult:
    """``P = S^{-*} S^{-1}`` from an eigenbasis ``S`` of ``T``.

    Within each eigenvalue cluster the eigenvectors are made
    ``h_0``-orthonormal, which selects the same metric as the Cesaro limit.
    A rank-deficient cluster means a Jordan block.
    """
    t = as_square(t, name="T").astype(complex)
    n = t.shape[0]
    h0m = _fiducial(h0, n)
    r = _upper_factor(h0m)
    tt = _in_h0_frame(t, r)
    lam, s = np.linalg.eig(tt)
    off = np.abs(np.abs(lam) - 1.0)
    if off.max() > unimodular_tol:
        k = int(np.argmax(off))
        raise NotUnimodular(f"eigenvalue {lam[k]:.6g} has modulus {abs(lam[k]):.12g}")
    angle = np.angle(lam)
    order = np.argsort(angle)
    lam, s = lam[order], s[:, order]
    cols = []
    groups = _angle_clusters(np.angle(lam))
    for idx in groups:
        block = s[:, idx]
        u, sv, _ = np.linalg.svd(block, full_matrices=False)
        if sv[-1] <= SEMISIMPLE_RTOL * max(sv[0], 1.0):
            raise NotSemisimple(
                f"eigenvalue {lam[idx[0]]:.6g} has a deficient eigenspace (Jordan block)"
            )
        cols.append(u)
    s = np.hstack(cols)
    if np.linalg.cond(s) > 1.0 / SEMISIMPLE_RTOL:
        raise NotSemisimple("eigenvector matrix is numerically singular")
    s_inv = np.linalg.inv(s)
    pt = s_inv.conj().T @ s_inv
    # back from h0 frame: P = R^* P~ R
    p = r.conj().T @ pt @ r
    p = 0.5 * (p + p.conj().T)
    return InvariantMetricResult(p, _sqrt_factor(p, h0m), "spectral", invariance_defect(t, p))


def _angle_clusters(angles: np.ndarray) -> list[np.ndarray]:
    """Cluster sorted eigenvalue angles (absolute gap, wrapping at +-pi)."""
    groups: list[list[int]] = [[0]]
    for k in range(1, len(angles)):
        if angles[k] - angles[k - 1] <= EIG_CLUSTER_RTOL * np.pi:
            groups[-1].append(k)
        else:
            groups.append([k])
    if len(groups) > 1 and angles[0] + 2 * np.pi - angles[-1] <= EIG_CLUSTER_RTOL * np.pi:
        groups[0] = groups.pop() + groups[0]
    return [np.array(g) for g in groups]


@dataclass
class SimilarityResult:
    Q: np.ndarray
    U: np.ndarray
    unitarity_residual: float
    q_spectrum: np.ndarray

    def to_dict(self) -> dict[str, Any]:
        from .core import matrix_to_json

        return {
            "Q": matrix_to_json(self.Q),
            "U": matrix_to_json(self.U),
            "unitarity_residual": self.unitarity_residual,
            "Q_spectrum": [float(x) for x in self.q_spectrum],
        }


def similarity_to_unitary(result: InvariantMetricResult, t, h0=None) -> SimilarityResult:
    """``U = Q T Q^{-1}`` and its ``h_0``-unitarity residual ``||U^* H0 U - H0|| / ||H0||``."""
    t = as_square(t, name="T").astype(complex)
    h0m = _fiducial(h0, t.shape[0])
    q = result.Q
    u = q @ t @ np.linalg.inv(q)
    res = float(np.linalg.norm(u.conj().T @ h0m @ u - h0m) / np.linalg.norm(h0m))
    spec = np.sort(np.linalg.eigvals(q).real)
    return SimilarityResult(q, u, res, spec)


def equivalence_constants(p, h0=None) -> tuple[float, float]:
    """``(A, B)`` with ``A h_T(x, x) <= h_0(x, x) <= B h_T(x, x)``, tight."""
    p = as_square(p, name="P").astype(complex)
    h0m = _fiducial(h0, p.shape[0])
    w = eigh(h0m, 0.5 * (p + p.conj().T), eigvals_only=True)
    return float(w[0]), float(w[-1])


def shift_with_density(rho) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic shift ``(T psi)_i = psi_{i+1}`` and the weighted metric ``diag(rho)``."""
    rho = np.asarray(rho, dtype=float)
    if rho.ndim != 1 or rho.size < 2 or np.any(rho <= 0):
        raise ValueError("rho must be a positive vector of length >= 2")
    n = rho.size
    t = np.roll(np.eye(n), 1, axis=1)
    return t, np.diag(rho)
