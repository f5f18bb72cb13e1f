"""Constant invariant forms of a linear vector field and its Hamiltonian factorizations.

A linear field ``xdot = A x`` preserves a constant bilinear form ``B`` iff
``B A + A^T B = 0``.  Any invertible skew solution ``omega`` gives a
factorization ``A = Lambda H`` with ``Lambda = omega^{-1}`` (the Poisson
matrix) and ``H = omega A`` symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

from .core import AlthamError, as_square, is_positive_definite

KERNEL_RTOL = 1e-9
TOL_TRACE = 1e-10
TOL_FACT = 1e-10
INVERTIBLE_RTOL = 1e-10

Kind = Literal["symmetric", "skew"]


class NoInvertibleSkew(AlthamError):
    code = "no_invertible_skew"


def _kind_basis(n: int, kind: Kind) -> list[np.ndarray]:
    """Frobenius-orthonormal basis of symmetric or skew ``n x n`` matrices."""
    basis = []
    s = 1.0 / np.sqrt(2.0)
    for i in range(n):
        if kind == "symmetric":
            e = np.zeros((n, n))
            e[i, i] = 1.0
            basis.append(e)
        for j in range(i + 1, n):
            e = np.zeros((n, n))
            e[i, j] = s
            e[j, i] = s if kind == "symmetric" else -s
            basis.append(e)
    return basis


def _fix_sign(m: np.ndarray) -> np.ndarray:
    flat = m.ravel()
    k = int(np.argmax(np.abs(flat) > 1e-8 * np.abs(flat).max()))
    return -m if flat[k] < 0 else m


@dataclass
class InvariantFormBasis:
    kind: Kind
    basis: list[np.ndarray]
    singular_values: np.ndarray
    threshold: float

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def combine(self, coeffs) -> np.ndarray:
        return sum((c * b for c, b in zip(coeffs, self.basis)), np.zeros_like(self.basis[0]))

    def projection_residual(self, m: np.ndarray) -> float:
        """Relative Frobenius distance from ``m`` to the span of the basis."""
        m = np.asarray(m, dtype=float)
        proj = sum((np.sum(b * m) * b for b in self.basis), np.zeros_like(m))
        return float(np.linalg.norm(m - proj) / np.linalg.norm(m))

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "dimension": self.dimension,
            "basis": [b.tolist() for b in self.basis],
            "kernel_threshold": self.threshold,
        }


def invariance_residual(b: np.ndarray, a: np.ndarray) -> float:
    """``||B A + A^T B|| / (||B|| ||A||)``."""
    scale = np.linalg.norm(b) * np.linalg.norm(a)
    r = np.linalg.norm(b @ a + a.T @ b)
    return float(r / scale) if scale > 0 else float(r)


def solve_invariant_forms(a, kind: Kind = "skew", rtol: float = KERNEL_RTOL) -> InvariantFormBasis:
    """Orthonormal basis of the constant ``kind`` forms preserved by ``xdot = A x``.

    The map ``B -> B A + A^T B`` is written as a matrix on the coordinates of
    an orthonormal basis of the ``kind`` subspace; right singular vectors with
    ``sigma <= rtol * max(sigma_max, ||A||_2)`` span its kernel.  The ``||A||``
    floor matters when the whole operator vanishes up to roundoff.
    """
    a = as_square(a, name="A", complex_ok=False)
    if kind not in ("symmetric", "skew"):
        raise ValueError(f"kind must be 'symmetric' or 'skew', got {kind!r}")
    n = a.shape[0]
    elems = _kind_basis(n, kind)
    if not elems:
        return InvariantFormBasis(kind, [], np.zeros(0), 0.0)
    op = np.column_stack([(e @ a + a.T @ e).ravel() for e in elems])
    _, sv, vh = np.linalg.svd(op)
    scale = max(sv[0] if sv.size else 0.0, np.linalg.norm(a, 2))
    threshold = rtol * scale
    null = [k for k in range(len(elems)) if sv[k] <= threshold]
    basis = []
    for k in null:
        b = sum((c * e for c, e in zip(vh[k], elems)), np.zeros((n, n)))
        basis.append(_fix_sign(b))
    return InvariantFormBasis(kind, basis, sv, float(threshold))


@dataclass
class TraceReport:
    traces: list[float]
    scales: list[float]
    tol: float
    passed: bool

    def to_dict(self) -> dict[str, Any]:
        return {"abs_traces": self.traces, "scales": self.scales, "tol": self.tol, "passed": self.passed}


def check_trace_condition(a, k_max: int = 5, tol: float = TOL_TRACE) -> TraceReport:
    """Necessary condition for ``A = Lambda H``: every odd power of ``A`` is traceless."""
    a = as_square(a, name="A", complex_ok=False)
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    norm = np.linalg.norm(a, 2)
    a2 = a @ a
    power = a.copy()
    traces, scales = [], []
    for k in range(k_max + 1):
        traces.append(float(abs(np.trace(power))))
        scales.append(float(norm ** (2 * k + 1)))
        power = power @ a2
    passed = all(t <= tol * max(s, 1e-300) for t, s in zip(traces, scales))
    return TraceReport(traces, scales, tol, passed)


@dataclass
class Factorization:
    """``A = Lambda @ H`` with ``Lambda = omega^{-1}`` skew and ``H = omega @ A`` symmetric."""

    Lambda: np.ndarray
    H: np.ndarray
    omega: np.ndarray
    residual: float
    positive_definite: bool
    negative_definite: bool
    coefficients: np.ndarray = field(repr=False)

    @property
    def definite(self) -> bool:
        return self.positive_definite or self.negative_definite

    def to_dict(self) -> dict[str, Any]:
        return {
            "Lambda": self.Lambda.tolist(),
            "H": self.H.tolist(),
            "omega": self.omega.tolist(),
            "residual": self.residual,
            "positive_definite": self.positive_definite,
            "negative_definite": self.negative_definite,
        }


def factorization_from_omega(a: np.ndarray, omega: np.ndarray, coeffs=None) -> Factorization:
    omega = 0.5 * (omega - omega.T)
    h = omega @ a
    h = 0.5 * (h + h.T)
    lam = np.linalg.inv(omega)
    lam = 0.5 * (lam - lam.T)
    scale = np.linalg.norm(a)
    res = float(np.linalg.norm(a - lam @ h) / scale) if scale > 0 else 0.0
    return Factorization(
        Lambda=lam,
        H=h,
        omega=omega,
        residual=res,
        positive_definite=is_positive_definite(h),
        negative_definite=is_positive_definite(-h),
        coefficients=np.asarray(coeffs if coeffs is not None else []),
    )


def enumerate_factorizations(
    a,
    attempts: int = 100,
    seed: int = 0,
    basis: InvariantFormBasis | None = None,
    rtol: float = INVERTIBLE_RTOL,
) -> list[Factorization]:
    """Sample invertible invariant skew forms and turn each into ``(Lambda, H)``.

    Each ``omega`` is rescaled to ``|det omega| = 1``.  Attempt ``i`` draws its
    coefficients from ``default_rng([seed, i])`` so results do not depend on
    evaluation order.  Positive definite ``H`` are listed first.
    """
    a = as_square(a, name="A", complex_ok=False)
    if basis is None:
        basis = solve_invariant_forms(a, "skew")
    if basis.dimension == 0:
        raise NoInvertibleSkew("A preserves no nonzero constant skew form")
    n = a.shape[0]
    found = []
    for i in range(attempts):
        rng = np.random.default_rng([seed, i])
        coeffs = rng.standard_normal(basis.dimension)
        omega = basis.combine(coeffs)
        sv = np.linalg.svd(omega, compute_uv=False)
        if sv[-1] <= rtol * sv[0]:
            continue
        omega = omega / np.exp(np.mean(np.log(sv)))
        found.append(factorization_from_omega(a, omega, coeffs))
    if not found:
        raise NoInvertibleSkew(
            f"all {attempts} combinations of the {basis.dimension}-dim skew "
            f"invariant space are singular (n={n})"
        )
    found.sort(key=lambda f: (not f.positive_definite, not f.negative_definite))
    return found


@dataclass
class RecursionReport:
    fields: list[np.ndarray]
    max_commutator: float
    invariance_residuals: list[float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "powers": [2 * k + 1 for k in range(len(self.fields))],
            "fields": [f.tolist() for f in self.fields],
            "max_commutator": self.max_commutator,
            "invariance_residuals": self.invariance_residuals,
        }


def recursion_fields(a, k_max: int = 3, skew_basis: InvariantFormBasis | None = None) -> RecursionReport:
    """Odd powers ``A^{2k+1}``, ``k = 0..k_max``: commuting fields sharing the invariant forms of ``A``."""
    a = as_square(a, name="A", complex_ok=False)
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if skew_basis is None:
        skew_basis = solve_invariant_forms(a, "skew")
    a2 = a @ a
    fields = [a.copy()]
    for _ in range(k_max):
        fields.append(fields[-1] @ a2)
    comm = 0.0
    for i, x in enumerate(fields):
        for y in fields[i + 1:]:
            comm = max(comm, float(np.linalg.norm(x @ y - y @ x)))
    inv = [
        max((invariance_residual(w, f) for w in skew_basis.basis), default=0.0)
        for f in fields
    ]
    return RecursionReport(fields, comm, inv)
