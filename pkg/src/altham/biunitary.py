"""Transformations unitary for two Hermitian structures on the same complex space.

With ``G = h_1^{-1} h_2`` self-adjoint and positive, a map is unitary for
both ``h_1`` and ``h_2`` exactly when it commutes with ``G`` and is
``h_1``-unitary, i.e. it is block unitary on the eigenspaces of ``G``.  The
group is ``prod_k U(m_k)`` of real dimension ``sum_k m_k^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Literal

import numpy as np
from scipy.linalg import solve_triangular

from .core import AdmissibleTriple, AlthamError, DimensionError, as_square
from .compat import CLUSTER_RTOL, _clusters

TOL_UNITARY = 1e-10


class NotPositive(AlthamError):
    code = "not_positive"


@dataclass
class EigenBlock:
    lam: float
    multiplicity: int
    basis: np.ndarray

    def to_dict(self) -> dict[str, Any]:
        return {"lambda": self.lam, "multiplicity": self.multiplicity}


@dataclass
class BiUnitaryStructure:
    """Eigenblocks of ``G``; block bases are ``h_1``-orthonormal columns."""

    blocks: list[EigenBlock]
    h1: np.ndarray

    @property
    def group_dimension(self) -> int:
        return sum(b.multiplicity ** 2 for b in self.blocks)

    @property
    def cyclic(self) -> bool:
        return all(b.multiplicity == 1 for b in self.blocks)

    @property
    def complex_dim(self) -> int:
        return sum(b.multiplicity for b in self.blocks)

    def G(self) -> np.ndarray:
        """``G`` rebuilt from the spectral data."""
        return self.function_of_G(lambda lam: lam)

    def function_of_G(self, f: Callable[[float], complex]) -> np.ndarray:
        """``f(G)``; the basis columns are ``h_1``-orthonormal, ``P_k = V_k V_k^* h_1``."""
        n = self.complex_dim
        out = np.zeros((n, n), dtype=complex)
        for b in self.blocks:
            out += f(b.lam) * (b.basis @ b.basis.conj().T)
        return out @ self.h1

    def phase_unitary(self, theta: Callable[[float], float]) -> np.ndarray:
        """``exp(i theta(G))``."""
        return self.function_of_G(lambda lam: np.exp(1j * theta(lam)))

    def random_element(self, rng: np.random.Generator) -> np.ndarray:
        """A random element of the group: independent Haar-ish unitaries on each eigenspace."""
        n = self.complex_dim
        out = np.zeros((n, n), dtype=complex)
        for b in self.blocks:
            m = b.multiplicity
            z = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
            q, r = np.linalg.qr(z)
            q = q * (np.diag(r) / np.abs(np.diag(r)))
            out += b.basis @ q @ b.basis.conj().T
        return out @ self.h1

    def to_dict(self) -> dict[str, Any]:
        return {
            "blocks": [b.to_dict() for b in self.blocks],
            "group_dimension": self.group_dimension,
            "cyclic": self.cyclic,
        }


def _hermitian(m: np.ndarray, name: str) -> np.ndarray:
    m = as_square(m, name=name).astype(complex)
    return 0.5 * (m + m.conj().T)


def biunitary_group(h1, h2, cluster_rtol: float = CLUSTER_RTOL) -> BiUnitaryStructure:
    """Eigenspaces of ``G = h_1^{-1} h_2`` and the resulting bi-unitary group."""
    h1 = _hermitian(h1, "h1")
    h2 = _hermitian(h2, "h2")
    if h1.shape != h2.shape:
        raise DimensionError(f"h1 is {h1.shape}, h2 is {h2.shape}")
    try:
        chol = np.linalg.cholesky(h1)
    except np.linalg.LinAlgError:
        raise NotPositive("h1 is not positive definite") from None
    x = solve_triangular(chol, h2, lower=True)
    gt = solve_triangular(chol, x.conj().T, lower=True).conj().T
    gt = 0.5 * (gt + gt.conj().T)
    lam, vecs = np.linalg.eigh(gt)
    if lam[0] <= 0:
        raise NotPositive(f"h2 is not positive definite (G eigenvalue {lam[0]:.3e})")
    blocks = []
    for idx in _clusters(lam, cluster_rtol):
        basis = solve_triangular(chol.conj().T, vecs[:, idx], lower=False)
        blocks.append(EigenBlock(float(np.mean(lam[idx])), len(idx), basis))
    return BiUnitaryStructure(blocks, h1)


@dataclass
class BiUnitaryCheck:
    is_biunitary: bool
    residuals: dict[str, float]


def is_biunitary(u, h1, h2, tol: float = TOL_UNITARY) -> BiUnitaryCheck:
    """True iff ``U^* h_a U = h_a`` for both structures (relative residuals)."""
    u = as_square(u, name="U").astype(complex)
    h1 = _hermitian(h1, "h1")
    h2 = _hermitian(h2, "h2")
    if not u.shape == h1.shape == h2.shape:
        raise DimensionError("U, h1, h2 must have the same shape")
    res = {
        name: float(np.linalg.norm(u.conj().T @ h @ u - h) / np.linalg.norm(h))
        for name, h in (("h1", h1), ("h2", h2))
    }
    return BiUnitaryCheck(all(v <= tol for v in res.values()), res)


def linearized_group_dimension(h1, h2, rtol: float = 1e-9) -> int:
    """Real dimension of ``{X : X^* h_a + h_a X = 0, a = 1, 2}``, by brute force.

    Builds the real-linear map on the ``2 n^2`` real parameters of ``X`` and
    counts its numerically null singular values.
    """
    h1 = _hermitian(h1, "h1")
    h2 = _hermitian(h2, "h2")
    n = h1.shape[0]
    cols = []
    for k in range(2 * n * n):
        x = np.zeros(n * n, dtype=complex)
        x[k % (n * n)] = 1.0 if k < n * n else 1j
        x = x.reshape(n, n)
        parts = [x.conj().T @ h + h @ x for h in (h1, h2)]
        v = np.concatenate([p.ravel() for p in parts])
        cols.append(np.concatenate([v.real, v.imag]))
    op = np.column_stack(cols)
    sv = np.linalg.svd(op, compute_uv=False)
    return int(np.sum(sv <= rtol * sv[0]))


def hermitian_matrix(triple: AdmissibleTriple, basis: np.ndarray | None = None, g: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Complex matrix of ``h = g + i omega`` on ``(R^{2n}, J)``.

    Returns ``(H, basis)`` where ``basis`` holds ``n`` real vectors forming a
    complex basis (multiplication by ``i`` acts as ``J``) that is
    ``h``-orthonormal, so ``H = I``.  Passing an existing ``basis`` and a
    different metric ``g`` sharing the same ``J`` evaluates that second form.
    """
    J = triple.J
    gm = triple.g if g is None else np.asarray(g, float)

    def h(x, y):
        return complex(x @ gm @ y, (J @ x) @ gm @ y)

    if basis is None:
        dim = triple.dim
        basis = []
        for e in np.eye(dim):
            v = e.copy()
            for b in basis:
                c = complex(b @ triple.g @ v, (J @ b) @ triple.g @ v)
                v = v - (c.real * b + c.imag * (J @ b))
            nv = np.sqrt(v @ triple.g @ v)
            if nv > 1e-8:
                basis.append(v / nv)
            if len(basis) == dim // 2:
                break
        basis = np.column_stack(basis)
    k = basis.shape[1]
    out = np.array([[h(basis[:, i], basis[:, j]) for j in range(k)] for i in range(k)])
    return out, basis


def hermitian_pair_from_triples(t1: AdmissibleTriple, t2: AdmissibleTriple, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Complex matrices of ``h_1`` and ``h_2`` for triples sharing one complex structure."""
    if np.linalg.norm(t1.J - t2.J) > tol * np.linalg.norm(t1.J):
        raise ValueError("triples must share the same complex structure J")
    m1, basis = hermitian_matrix(t1)
    m2, _ = hermitian_matrix(t1, basis, g=t2.g)
    return m1, m2


@dataclass
class BoxReport:
    interval: str
    grid: np.ndarray
    eigenvalues: np.ndarray
    multiplicities: dict[float, int]
    group_dimension: int
    cyclic: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "interval": self.interval,
            "grid": self.grid.tolist(),
            "multiplicities": [[k, v] for k, v in self.multiplicities.items()],
            "group_dimension": self.group_dimension,
            "cyclic": self.cyclic,
            "spectral_measure": "d sqrt(lambda - 1)",
        }


def box_grid(n_grid: int, alpha: float, interval: Literal["full", "half"]) -> np.ndarray:
    """Cell midpoints on ``[-alpha, alpha]`` (full) or ``[0, alpha]`` (half).

    The full grid is built from its positive half and mirrored, so points
    pair as ``+-x`` exactly.
    """
    if n_grid < 2 or not alpha > 0:
        raise ValueError("need n_grid >= 2 and alpha > 0")
    if interval == "half":
        h = alpha / n_grid
        return (np.arange(n_grid) + 0.5) * h
    if interval == "full":
        if n_grid % 2:
            raise ValueError("full-interval grid needs an even n_grid so points pair as +-x")
        pos = box_grid(n_grid // 2, alpha, "half")
        return np.concatenate([-pos[::-1], pos])
    raise ValueError(f"interval must be 'full' or 'half', got {interval!r}")


def box_example(n_grid: int, alpha: float = 1.0, interval: Literal["full", "half"] = "full") -> BoxReport:
    """Multiplication operator ``G = 1 + X^2`` on a grid over the box.

    Eigenvalues are grouped by exact equality, which the mirrored grid
    guarantees for ``+-x``.
    """
    x = box_grid(n_grid, alpha, interval)
    eig = 1.0 + x * x
    mult: dict[float, int] = {}
    for v in eig:
        mult[float(v)] = mult.get(float(v), 0) + 1
    mult = dict(sorted(mult.items()))
    gdim = sum(m * m for m in mult.values())
    return BoxReport(interval, x, eig, mult, gdim, all(m == 1 for m in mult.values()))


def box_biunitary_sample(report: BoxReport, rng: np.random.Generator) -> np.ndarray:
    """Random bi-unitary map for ``h_1 = I`` and ``h_2 = diag(1 + x^2)`` on the grid."""
    n = len(report.grid)
    u = np.zeros((n, n), dtype=complex)
    for lam in report.multiplicities:
        idx = np.flatnonzero(report.eigenvalues == lam)
        m = len(idx)
        z = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        q, _ = np.linalg.qr(z)
        u[np.ix_(idx, idx)] = q
    return u
