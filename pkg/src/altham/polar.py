"""Invariant complex structure from the polar decomposition ``A = J |A|``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

import numpy as np
from scipy.linalg import expm, solve_triangular

from .core import AdmissibleTriple, AlthamError, DimensionError, NotPositiveDefinite, as_square
from .invariants import Factorization

DET_RTOL = 1e-10
EIG_FLOOR = 1e-12
TOL_SKEW_ADJOINT = 1e-8
TOL_POLAR = 1e-10


class SingularA(AlthamError):
    code = "singular_A"


class NotSkewAdjoint(AlthamError):
    code = "not_skew_adjoint"


class InvarianceError(AlthamError):
    code = "invariance_failed"


@dataclass
class PolarResult:
    J: np.ndarray
    absA: np.ndarray
    g: np.ndarray
    residuals: dict[str, float]

    @property
    def liouville_gap(self) -> float:
        """``||J A + I||``; zero exactly when ``|A| = I``, i.e. ``J(Gamma) = -Delta``."""
        return float(np.linalg.norm(self.absA - np.eye(len(self.absA))))

    def to_dict(self) -> dict[str, Any]:
        return {
            "J": self.J.tolist(),
            "absA": self.absA.tolist(),
            "residuals": self.residuals,
            "liouville_gap": self.liouville_gap,
        }


def _check_nonsingular(a: np.ndarray, det_rtol: float) -> None:
    n = a.shape[0]
    sign, logdet = np.linalg.slogdet(a)
    norm = np.linalg.norm(a, 2)
    if sign == 0 or norm == 0 or logdet <= np.log(det_rtol) + n * np.log(norm):
        raise SingularA(
            "det A is numerically zero; the degenerate case is not handled"
        )


def polar_complex_structure(
    a,
    h,
    det_rtol: float = DET_RTOL,
    skew_tol: float = TOL_SKEW_ADJOINT,
) -> PolarResult:
    """Polar decomposition of ``A`` in the metric ``g = H``.

    ``H`` must be an invariant positive definite form, which makes ``A``
    skew-adjoint for ``g``.  Then ``|A| = sqrt(-A^2)`` and ``J = A |A|^{-1}``.
    Everything is computed in ``g``-orthonormal coordinates ``y = L^T x``
    where ``g = L L^T``.
    """
    a = as_square(a, name="A", complex_ok=False)
    g = as_square(getattr(h, "matrix", h), name="H", complex_ok=False)
    if a.shape != g.shape:
        raise DimensionError(f"A is {a.shape}, H is {g.shape}")
    g = 0.5 * (g + g.T)
    try:
        chol = np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("H must be positive definite to serve as a metric") from None
    _check_nonsingular(a, det_rtol)

    # A~ = L^T A L^{-T}
    at = chol.T @ solve_triangular(chol, a.T, lower=True).T
    skew_defect = float(np.linalg.norm(at + at.T) / np.linalg.norm(at))
    if skew_defect > skew_tol:
        raise NotSkewAdjoint(
            f"||A_dag + A|| / ||A|| = {skew_defect:.3e}: H is not invariant under A"
        )
    at = 0.5 * (at - at.T)
    w, v = np.linalg.eigh(at.T @ at)
    if w[0] <= EIG_FLOOR * w[-1]:
        raise SingularA("-A^2 has a (numerically) zero eigenvalue")
    root = np.sqrt(w)
    abs_t = (v * root) @ v.T
    j_t = at @ ((v / root) @ v.T)

    def back(m: np.ndarray) -> np.ndarray:
        # L^{-T} M L^T
        return solve_triangular(chol.T, m @ chol.T, lower=False)

    j = back(j_t)
    abs_a = back(abs_t)
    n = a.shape[0]
    eye = np.eye(n)
    na = np.linalg.norm(a)
    ng = np.linalg.norm(g)
    residuals = {
        "A_minus_J_absA": float(np.linalg.norm(a - j @ abs_a) / na),
        "J_squared_plus_I": float(np.linalg.norm(j @ j + eye)),
        "J_g_orthogonal": float(np.linalg.norm(j.T @ g @ j - g) / ng),
        "J_A_commutator": float(np.linalg.norm(j @ a - a @ j) / na),
        "JA_plus_absA": float(np.linalg.norm(j @ a + abs_a) / na),
        "A_skew_adjoint": skew_defect,
    }
    return PolarResult(j, abs_a, g, residuals)


def invariance_residuals(a: np.ndarray, triple: AdmissibleTriple) -> dict[str, float]:
    na = np.linalg.norm(a)
    g, om, j = triple.g, triple.omega, triple.J
    return {
        "g": float(np.linalg.norm(g @ a + a.T @ g) / (na * np.linalg.norm(g))),
        "omega": float(np.linalg.norm(om @ a + a.T @ om) / (na * np.linalg.norm(om))),
        "J": float(np.linalg.norm(j @ a - a @ j) / (na * np.linalg.norm(j))),
    }


def assemble_invariant_hermitian(a, factorization: Factorization | np.ndarray, tol: float = TOL_POLAR) -> AdmissibleTriple:
    """Invariant triple ``(g = H, J, omega = g J)`` from a factorization with definite ``H``."""
    a = as_square(a, name="A", complex_ok=False)
    h = factorization.H if isinstance(factorization, Factorization) else np.asarray(factorization, float)
    pr = polar_complex_structure(a, h)
    triple = AdmissibleTriple.from_metric(pr.g, pr.J)
    bad = {k: v for k, v in invariance_residuals(a, triple).items() if v > tol}
    if bad:
        raise InvarianceError(f"assembled triple not invariant: {bad}")
    return triple


def quadratic_hamiltonian(triple: AdmissibleTriple, xi) -> float:
    xi = np.asarray(xi, dtype=float)
    return 0.5 * float(xi @ triple.g @ xi)


def flow_invariance(a, triple: AdmissibleTriple, times: Iterable[float]) -> dict[str, float]:
    """Worst relative transport defect of ``g``, ``omega`` and ``J`` under ``exp(tA)``."""
    a = as_square(a, name="A", complex_ok=False)
    worst = {"g": 0.0, "omega": 0.0, "J": 0.0}
    for t in times:
        phi = expm(t * a)
        phi_inv = expm(-t * a)
        for name, m in (("g", triple.g), ("omega", triple.omega)):
            d = np.linalg.norm(phi.T @ m @ phi - m) / np.linalg.norm(m)
            worst[name] = max(worst[name], float(d))
        d = np.linalg.norm(phi @ triple.J @ phi_inv - triple.J) / np.linalg.norm(triple.J)
        worst["J"] = max(worst["J"], float(d))
    return worst
