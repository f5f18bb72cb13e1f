"""Shared matrix types: bilinear forms, admissible triples and the JSON matrix format.

Forms are stored through their flat map: a matrix ``B`` represents the
bilinear form ``B(x, y) = (B x) . y``.  For symmetric forms this is the
usual ``x^T B y``; for skew forms it is ``-x^T B y``.  With this reading the
matrix relation ``omega = g @ J`` is exactly ``omega(x, y) = g(J x, y)``.

The Hermitian structure ``h = g + i omega`` is antilinear in its first
argument, so ``h(J x, y) = -i h(x, y)`` and ``h(x, J y) = i h(x, y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

TOL_SYM = 1e-12
TOL_TRIPLE = 1e-10


class AlthamError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"


class DimensionError(AlthamError, ValueError):
    code = "dimension_mismatch"


class NotPositiveDefinite(AlthamError, ValueError):
    code = "not_positive_definite"


class FormKindError(AlthamError, ValueError):
    code = "form_kind"


class MatrixFormatError(AlthamError, ValueError):
    code = "matrix_format"


def as_square(a: Any, *, name: str = "matrix", complex_ok: bool = True) -> np.ndarray:
    """Return ``a`` as a finite square ndarray, raising on anything else."""
    m = np.asarray(a)
    if m.dtype == object:
        raise MatrixFormatError(f"{name}: non-numeric entries")
    if np.iscomplexobj(m):
        if not complex_ok:
            if np.any(m.imag != 0):
                raise MatrixFormatError(f"{name}: real matrix expected")
            m = m.real
        m = m.astype(complex)
    else:
        m = m.astype(float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"{name}: square matrix expected, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise MatrixFormatError(f"{name}: entries must be finite")
    return m


def rel_norm(residual: np.ndarray, scale: np.ndarray | float) -> float:
    s = scale if np.isscalar(scale) else np.linalg.norm(scale)
    r = float(np.linalg.norm(residual))
    return r / s if s > 0 else r


def is_positive_definite(m: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return True


@dataclass(frozen=True)
class BilinearForm:
    """A real bilinear form with a kind tag.

    ``definite`` is computed, not trusted: it is True only for symmetric
    forms whose matrix admits a Cholesky factorization.
    """

    matrix: np.ndarray
    kind: Literal["symmetric", "skew"]
    tol: float = TOL_SYM
    definite: bool = field(init=False)

    def __post_init__(self) -> None:
        m = as_square(self.matrix, name=f"{self.kind} form", complex_ok=False)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.kind == "symmetric":
            defect = m - m.T
        elif self.kind == "skew":
            defect = m + m.T
        else:
            raise FormKindError(f"unknown form kind {self.kind!r}")
        scale = np.linalg.norm(m)
        if np.linalg.norm(defect) > self.tol * max(scale, 1e-300):
            raise FormKindError(f"matrix is not {self.kind} within tol {self.tol:g}")
        object.__setattr__(
            self, "definite", self.kind == "symmetric" and is_positive_definite(m)
        )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.dot(self.matrix @ np.asarray(x), np.asarray(y)))


def _as_form(m: BilinearForm | np.ndarray, kind: str) -> BilinearForm:
    if isinstance(m, BilinearForm):
        return m
    return BilinearForm(np.asarray(m, dtype=float), kind)


def metric_adjoint(a: np.ndarray, g: BilinearForm | np.ndarray) -> np.ndarray:
    """Adjoint of ``a`` with respect to the metric ``g``: ``g^{-1} a^T g``.

    Satisfies ``g(a_dag x, y) = g(x, a y)``.
    """
    a = as_square(a, name="A")
    g = _as_form(g, "symmetric")
    if a.shape != g.matrix.shape:
        raise DimensionError(f"A is {a.shape}, metric is {g.matrix.shape}")
    if not g.definite:
        raise NotPositiveDefinite("metric must be positive definite")
    gm = g.matrix
    return np.linalg.solve(gm, a.T @ gm)


@dataclass(frozen=True)
class AdmissibleTriple:
    """Metric ``g``, complex structure ``J`` and symplectic form ``omega = g J``."""

    g: np.ndarray
    J: np.ndarray
    omega: np.ndarray

    def __post_init__(self) -> None:
        for name in ("g", "J", "omega"):
            m = as_square(getattr(self, name), name=name, complex_ok=False)
            m.setflags(write=False)
            object.__setattr__(self, name, m)

    @classmethod
    def from_metric(cls, g: np.ndarray, J: np.ndarray) -> "AdmissibleTriple":
        g = np.asarray(g, dtype=float)
        J = np.asarray(J, dtype=float)
        return cls(g, J, g @ J)

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    def hamiltonian_field(self) -> np.ndarray:
        """Matrix of the linear field generated by ``1/2 g(x, x)`` through ``omega``."""
        return np.linalg.solve(self.omega, self.g)


@dataclass
class TripleReport:
    accepted: bool
    residuals: dict[str, float]
    reasons: list[str]

    def to_dict(self) -> dict[str, Any]:
        return {"accepted": self.accepted, "residuals": self.residuals, "reasons": self.reasons}


def validate_triple(g, J, omega, tol: float = TOL_TRIPLE) -> TripleReport:
    g = as_square(g, name="g", complex_ok=False)
    J = as_square(J, name="J", complex_ok=False)
    omega = as_square(omega, name="omega", complex_ok=False)
    if not g.shape == J.shape == omega.shape:
        raise DimensionError(f"shapes differ: {g.shape}, {J.shape}, {omega.shape}")
    n = g.shape[0]
    if n % 2:
        return TripleReport(False, {}, [f"odd dimension {n}: no complex structure exists"])
    eye = np.eye(n)
    gn = max(np.linalg.norm(g), 1e-300)
    res = {
        "g_symmetric": rel_norm(g - g.T, gn),
        "omega_skew": rel_norm(omega + omega.T, max(np.linalg.norm(omega), 1e-300)),
        "J_squared": rel_norm(J @ J + eye, np.sqrt(n)),
        "omega_eq_gJ": rel_norm(omega - g @ J, gn),
        "J_orthogonal": rel_norm(J.T @ g @ J - g, gn),
    }
    reasons = [f"{k} residual {v:.3e} > {tol:g}" for k, v in res.items() if v > tol]
    if not is_positive_definite(0.5 * (g + g.T)):
        reasons.append("g is not positive definite")
    return TripleReport(not reasons, res, reasons)


def hermitian_eval(triple: AdmissibleTriple, x, y) -> complex:
    """``h(x, y) = g(x, y) + i g(J x, y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (triple.dim,) or y.shape != (triple.dim,):
        raise DimensionError(f"vectors must have length {triple.dim}")
    g = triple.g
    return complex(x @ g @ y, (triple.J @ x) @ g @ y)


def canonical_complex_structure(n: int) -> np.ndarray:
    """Block diagonal ``[[0, -1], [1, 0]]`` on ``R^{2n}``; sends ``e_1`` to ``e_2``."""
    return np.kron(np.eye(n), np.array([[0.0, -1.0], [1.0, 0.0]]))


def canonical_triple(n: int) -> AdmissibleTriple:
    return AdmissibleTriple.from_metric(np.eye(2 * n), canonical_complex_structure(n))


# -- JSON matrix format -------------------------------------------------------


def matrix_to_json(m: np.ndarray) -> dict[str, Any]:
    m = np.asarray(m)
    if np.iscomplexobj(m):
        entries = [[[float(v.real), float(v.imag)] for v in row] for row in m]
        kind = "complex"
    else:
        entries = [[float(v) for v in row] for row in m]
        kind = "real"
    return {"dim": int(m.shape[0]), "kind": kind, "entries": entries}


def matrix_from_json(obj: Any) -> np.ndarray:
    """Parse ``{"dim": n, "kind": "real"|"complex", "entries": [...]}``.

    A bare nested list is accepted as a real matrix.
    """
    if isinstance(obj, list):
        obj = {"kind": "real", "entries": obj, "dim": len(obj)}
    if not isinstance(obj, dict) or "entries" not in obj:
        raise MatrixFormatError("matrix object needs an 'entries' field")
    kind = obj.get("kind", "real")
    entries = obj["entries"]
    try:
        if kind == "real":
            m = np.array(entries, dtype=float)
        elif kind == "complex":
            arr = np.array(entries, dtype=float)
            if arr.ndim != 3 or arr.shape[-1] != 2:
                raise MatrixFormatError("complex entries must be [re, im] pairs")
            m = arr[..., 0] + 1j * arr[..., 1]
        else:
            raise MatrixFormatError(f"unknown matrix kind {kind!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, MatrixFormatError):
            raise
        raise MatrixFormatError(f"malformed entries: {exc}") from None
    m = as_square(m)
    if "dim" in obj and int(obj["dim"]) != m.shape[0]:
        raise DimensionError(f"declared dim {obj['dim']} but entries are {m.shape}")
    return m
