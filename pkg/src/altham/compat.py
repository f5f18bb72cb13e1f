"""Compatibility of two admissible triples and their double orthogonal decomposition.

Given triples ``(g_a, J_a, omega_a)``, the quadratic function ``1/2 g_a(x, x)``
generates through ``omega_a`` the linear field ``A_a = omega_a^{-1} g_a``
(which equals ``-J_a``).  The triples are compatible when each is invariant
under the other's field.  The connecting operators are

    G = g_1^{-1} g_2,    T = omega_1^{-1} omega_2.

On the eigenspace of ``G`` with eigenvalue ``lam`` the space splits further
into pieces where ``T = +lam`` or ``T = -lam``; there ``g_2 = lam g_1``,
``omega_2 = +-lam omega_1`` and ``J_2 = +-J_1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.linalg import solve_triangular

from .core import AdmissibleTriple, AlthamError, DimensionError

TOL_COMPAT = 1e-9
TOL_BLOCK = 1e-9
CLUSTER_RTOL = 1e-6


class IncompatibleInput(AlthamError):
    code = "incompatible"


class NonPositiveG(AlthamError):
    code = "non_positive_G"


class TMismatch(AlthamError):
    code = "T_mismatch"


@dataclass(frozen=True)
class CompatPair:
    triple1: AdmissibleTriple
    triple2: AdmissibleTriple

    def __post_init__(self) -> None:
        if self.triple1.dim != self.triple2.dim:
            raise DimensionError(f"triples have dims {self.triple1.dim} and {self.triple2.dim}")

    @property
    def A1(self) -> np.ndarray:
        return self.triple1.hamiltonian_field()

    @property
    def A2(self) -> np.ndarray:
        return self.triple2.hamiltonian_field()


def _lie(m: np.ndarray, a: np.ndarray) -> float:
    scale = np.linalg.norm(m) * np.linalg.norm(a)
    return float(np.linalg.norm(m @ a + a.T @ m) / scale)


@dataclass
class CompatibilityReport:
    compatible: bool
    residuals: dict[str, float]
    commutator: float
    tol: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "compatible": self.compatible,
            "residuals": self.residuals,
            "field_commutator": self.commutator,
            "tol": self.tol,
        }


def check_compatibility(pair: CompatPair, tol: float = TOL_COMPAT) -> CompatibilityReport:
    a1, a2 = pair.A1, pair.A2
    t1, t2 = pair.triple1, pair.triple2
    res = {
        "g2_under_A1": _lie(t2.g, a1),
        "omega2_under_A1": _lie(t2.omega, a1),
        "g1_under_A2": _lie(t1.g, a2),
        "omega1_under_A2": _lie(t1.omega, a2),
    }
    comm = float(np.linalg.norm(a1 @ a2 - a2 @ a1) / (np.linalg.norm(a1) * np.linalg.norm(a2)))
    return CompatibilityReport(all(v <= tol for v in res.values()), res, comm, tol)


@dataclass
class ConnectingOperators:
    G: np.ndarray
    T: np.ndarray
    residuals: dict[str, float]

    def to_dict(self) -> dict[str, Any]:
        return {"G": self.G.tolist(), "T": self.T.tolist(), "residuals": self.residuals}


def connecting_operators(pair: CompatPair, tol: float = TOL_COMPAT) -> ConnectingOperators:
    """``G = g_1^{-1} g_2`` and ``T = omega_1^{-1} omega_2`` with their algebraic identities checked.

    The residual table covers pairwise commutation of ``G, T, J_1, J_2``,
    self-adjointness of ``G, T`` and skew-adjointness plus orthogonality of
    ``J_1, J_2`` for both metrics, and ``G = -J_1 T J_2``.
    """
    report = check_compatibility(pair, tol)
    if not report.compatible:
        raise IncompatibleInput(f"triples are not compatible: {report.residuals}")
    t1, t2 = pair.triple1, pair.triple2
    G = np.linalg.solve(t1.g, t2.g)
    T = np.linalg.solve(t1.omega, t2.omega)
    ops = {"G": G, "T": T, "J1": t1.J, "J2": t2.J}
    names = list(ops)
    res: dict[str, float] = {}
    for i, p in enumerate(names):
        for q in names[i + 1:]:
            x, y = ops[p], ops[q]
            res[f"[{p},{q}]"] = float(
                np.linalg.norm(x @ y - y @ x) / (np.linalg.norm(x) * np.linalg.norm(y))
            )
    for mname, m in (("g1", t1.g), ("g2", t2.g)):
        nm = np.linalg.norm(m)
        for p in ("G", "T"):
            x = ops[p]
            res[f"{p}_selfadjoint_{mname}"] = float(
                np.linalg.norm(m @ x - x.T @ m) / (nm * np.linalg.norm(x))
            )
        for p in ("J1", "J2"):
            x = ops[p]
            res[f"{p}_skewadjoint_{mname}"] = float(np.linalg.norm(m @ x + x.T @ m) / (nm * np.linalg.norm(x)))
            res[f"{p}_orthogonal_{mname}"] = float(np.linalg.norm(x.T @ m @ x - m) / nm)
    res["G_eq_minus_J1_T_J2"] = float(np.linalg.norm(G + t1.J @ T @ t2.J) / np.linalg.norm(G))
    return ConnectingOperators(G, T, res)


@dataclass
class Block:
    basis: np.ndarray
    lam: float
    sign: int
    residuals: dict[str, float] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda": self.lam,
            "sign": self.sign,
            "dim": self.dim,
            "basis": self.basis.tolist(),
            "residuals": self.residuals,
        }


@dataclass
class DecompositionReport:
    """Blocks of the double orthogonal decomposition.

    Basis columns are ``g_1``-orthonormal; stacked in block order they form
    a full basis ``B`` with ``B^T g_1 B = I`` and ``B^T g_2 B`` diagonal.
    """

    blocks: list[Block]
    cross_orthogonality: dict[str, float]
    reconstruction: dict[str, float]

    @property
    def signature(self) -> list[tuple[float, int, int]]:
        return [(b.lam, b.sign, b.dim) for b in self.blocks]

    def full_basis(self) -> np.ndarray:
        return np.hstack([b.basis for b in self.blocks])

    def to_dict(self) -> dict[str, Any]:
        return {
            "blocks": [b.to_dict() for b in self.blocks],
            "cross_orthogonality": self.cross_orthogonality,
            "reconstruction": self.reconstruction,
        }


def _clusters(values: np.ndarray, rtol: float) -> list[np.ndarray]:
    """Group sorted ``values`` where consecutive relative gaps are below ``rtol``."""
    groups: list[list[int]] = [[0]]
    for k in range(1, len(values)):
        prev = values[k - 1]
        if abs(values[k] - prev) <= rtol * max(abs(values[k]), abs(prev)):
            groups[-1].append(k)
        else:
            groups.append([k])
    return [np.array(g) for g in groups]


def decompose(
    pair: CompatPair,
    cluster_rtol: float = CLUSTER_RTOL,
    tol: float = TOL_BLOCK,
    compat_tol: float = TOL_COMPAT,
) -> DecompositionReport:
    """Split the space into the common eigenspaces of ``G`` and ``T``.

    ``G`` is symmetric in ``g_1``-orthonormal coordinates (Cholesky
    congruence), so the eigenspaces come out orthogonal for ``g_1``; ``T`` is
    then diagonalized inside each eigenspace and its eigenvectors split by
    sign.  Blocks are ordered by ``lambda`` ascending, ``+`` before ``-``.
    """
    report = check_compatibility(pair, compat_tol)
    if not report.compatible:
        raise IncompatibleInput(f"triples are not compatible: {report.residuals}")
    t1, t2 = pair.triple1, pair.triple2
    g1 = 0.5 * (t1.g + t1.g.T)
    g2 = 0.5 * (t2.g + t2.g.T)
    chol = np.linalg.cholesky(g1)

    def to_tilde(m: np.ndarray) -> np.ndarray:
        # L^{-1} M L^{-T}: a form in g1-orthonormal coordinates
        x = solve_triangular(chol, m, lower=True)
        return solve_triangular(chol, x.T, lower=True).T

    g2t = to_tilde(g2)
    g2t = 0.5 * (g2t + g2t.T)
    # T~ = L^T T L^{-T} = w1~^{-1} w2~
    w1t = to_tilde(t1.omega)
    w2t = to_tilde(t2.omega)
    tt = np.linalg.solve(w1t, w2t)
    tt = 0.5 * (tt + tt.T)

    lam, vecs = np.linalg.eigh(g2t)
    if lam[0] <= 0:
        raise NonPositiveG(f"G has eigenvalue {lam[0]:.3e} <= 0")
    blocks: list[Block] = []
    for idx in _clusters(lam, cluster_rtol):
        v = vecs[:, idx]
        lam_k = float(np.mean(lam[idx]))
        mu, w = np.linalg.eigh(v.T @ tt @ v)
        dev = np.abs(np.abs(mu) - lam_k) / lam_k
        if np.max(dev) > tol:
            raise TMismatch(
                f"T eigenvalue {mu[np.argmax(dev)]:.6g} is not +-{lam_k:.6g} "
                f"(relative deviation {np.max(dev):.2e})"
            )
        for sign in (1, -1):
            sel = (mu > 0) if sign > 0 else (mu < 0)
            if not np.any(sel):
                continue
            basis_t = v @ w[:, sel]
            basis = solve_triangular(chol.T, basis_t, lower=False)
            blocks.append(Block(basis, lam_k, sign))

    for b in blocks:
        B = b.basis
        nb1 = np.linalg.norm(B.T @ g1 @ B)
        j1b, j2b = t1.J @ B, t2.J @ B
        b.residuals = {
            "g2_eq_lam_g1": float(np.linalg.norm(B.T @ (g2 - b.lam * g1) @ B) / (b.lam * nb1)),
            "omega2_eq_sign_lam_omega1": float(
                np.linalg.norm(B.T @ (t2.omega - b.sign * b.lam * t1.omega) @ B)
                / (b.lam * np.linalg.norm(B.T @ t1.omega @ B))
            ),
            "J2_eq_sign_J1": float(np.linalg.norm(j2b - b.sign * j1b) / np.linalg.norm(j1b)),
            "J_invariant": float(np.linalg.norm(j1b - B @ (B.T @ g1 @ j1b))),
        }
        if b.dim % 2:
            raise TMismatch(f"block lambda={b.lam:.6g} sign={b.sign:+d} has odd dim {b.dim}")
        worst = max(b.residuals.values())
        if worst > tol:
            raise TMismatch(
                f"block lambda={b.lam:.6g} sign={b.sign:+d} fails identities: {b.residuals}"
            )

    cross = {"g1": 0.0, "g2": 0.0}
    for i, bi in enumerate(blocks):
        for bj in blocks[i + 1:]:
            cross["g1"] = max(cross["g1"], float(np.abs(bi.basis.T @ g1 @ bj.basis).max()))
            cross["g2"] = max(cross["g2"], float(np.abs(bi.basis.T @ g2 @ bj.basis).max()))

    # rebuild g2 and omega2 from the blocks
    full = np.hstack([b.basis for b in blocks])
    lam_diag = np.concatenate([[b.lam] * b.dim for b in blocks])
    mu_diag = np.concatenate([[b.sign * b.lam] * b.dim for b in blocks])
    g2_rec = g1 @ full @ np.diag(lam_diag) @ full.T @ g1
    t_rec = full @ np.diag(mu_diag) @ full.T @ g1
    om2_rec = t1.omega @ t_rec
    recon = {
        "g2": float(np.linalg.norm(g2_rec - t2.g) / np.linalg.norm(t2.g)),
        "omega2": float(np.linalg.norm(om2_rec - t2.omega) / np.linalg.norm(t2.omega)),
    }
    return DecompositionReport(blocks, cross, recon)


@dataclass
class CanonicalForms:
    plus: list[dict[str, Any]]
    minus: list[dict[str, Any]]

    @property
    def both_signs_present(self) -> bool:
        return bool(self.plus) and bool(self.minus)

    @property
    def lambdas_plus(self) -> list[float]:
        return [b["lambda"] for b in self.plus]

    @property
    def lambdas_minus(self) -> list[float]:
        return [b["lambda"] for b in self.minus]

    def to_dict(self) -> dict[str, Any]:
        return {"plus": self.plus, "minus": self.minus, "both_signs_present": self.both_signs_present}


def canonical_hermitian_forms(report: DecompositionReport) -> CanonicalForms:
    """Weights of ``h_2`` in a basis orthonormal for ``h_1``.

    On ``+`` blocks ``h_2 = lam h_1`` (sesquilinear for ``J_1``); on ``-``
    blocks ``h_2 = lam conj(h_1)``, which is why ``h_2`` is neither linear
    nor antilinear for ``J_1`` once both signs occur.
    """
    plus, minus = [], []
    for k, b in enumerate(report.blocks):
        entry = {"lambda": b.lam, "block": k, "complex_dim": b.dim // 2}
        (plus if b.sign > 0 else minus).append(entry)
    return CanonicalForms(plus, minus)


@dataclass
class PoissonCheck:
    values: dict[str, float]
    tol: float
    passed: bool

    def to_dict(self) -> dict[str, Any]:
        return {"max_scaled_values": self.values, "tol": self.tol, "passed": self.passed}


def poisson_commutation_check(pair: CompatPair, samples: int = 20, seed: int = 0, tol: float = 1e-10) -> PoissonCheck:
    """``{f_1, f_2}_a`` at random points, with ``f_a = 1/2 g_a(x, x)``.

    In coordinates ``{f, h}_a(x) = (grad f)^T Lambda_a (grad h)`` with
    ``Lambda_a = omega_a^{-1}`` and ``grad f_a = g_a x``; values are divided
    by ``||g_1|| ||g_2|| ||Lambda_a|| |x|^2``.
    """
    t1, t2 = pair.triple1, pair.triple2
    rng = np.random.default_rng(seed)
    out = {}
    for name, om in (("bracket_1", t1.omega), ("bracket_2", t2.omega)):
        lam = np.linalg.inv(om)
        scale = np.linalg.norm(t1.g, 2) * np.linalg.norm(t2.g, 2) * np.linalg.norm(lam, 2)
        worst = 0.0
        for _ in range(samples):
            x = rng.standard_normal(t1.dim)
            val = (t1.g @ x) @ lam @ (t2.g @ x)
            worst = max(worst, abs(float(val)) / (scale * float(x @ x)))
        out[name] = worst
    return PoissonCheck(out, tol, all(v <= tol for v in out.values()))


def build_compatible_pair(blocks, seed: int | None = None, congruence=None) -> CompatPair:
    """Compatible pair with prescribed ``(lambda, sign, dim)`` blocks.

    In the canonical frame ``g_1 = I``, ``J_1`` is the standard complex
    structure, ``g_2 = lambda I`` and ``J_2 = sign J_1`` on each block; a
    random (seeded) or given congruence ``S`` is then applied to both triples.
    """
    from .core import canonical_complex_structure

    g2d, signs = [], []
    for lam, sign, dim in blocks:
        if dim % 2 or dim <= 0:
            raise ValueError(f"block dimension must be positive and even, got {dim}")
        if lam <= 0:
            raise ValueError("block lambda must be positive")
        g2d += [float(lam)] * dim
        signs += [int(np.sign(sign))] * dim
    n = len(g2d)
    j0 = canonical_complex_structure(n // 2)
    g1 = np.eye(n)
    g2 = np.diag(g2d)
    j2 = np.diag(signs) @ j0
    if congruence is None and seed is not None:
        rng = np.random.default_rng(seed)
        congruence = np.eye(n) + 0.5 * rng.standard_normal((n, n)) / np.sqrt(n)
    if congruence is not None:
        s = np.asarray(congruence, float)
        s_inv = np.linalg.inv(s)
        g1, g2 = s.T @ g1 @ s, s.T @ g2 @ s
        j1, j2 = s_inv @ j0 @ s, s_inv @ j2 @ s
    else:
        j1 = j0
    t1 = AdmissibleTriple.from_metric(0.5 * (g1 + g1.T), j1)
    t2 = AdmissibleTriple.from_metric(0.5 * (g2 + g2.T), j2)
    return CompatPair(t1, t2)
