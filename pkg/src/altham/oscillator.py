"""Harmonic oscillator in two linearizing coordinate systems.

Sign convention: mode ``k`` obeys ``qdot = lam_k p``, ``pdot = -lam_k q``.
The Poisson bracket is ``{f, g} = f_q g_p - f_p g_q`` so ``{q, p} = 1``.

For the one-mode oscillator the map

    F = exp(lam/2 (q^2 + p^2)),   Q = lam q F,   P = lam p F

is not canonical, ``{P, Q} = lam^2 F^2 (1 + lam (q^2 + p^2)) {p, q}``, yet the
motion stays linear in ``(Q, P)``: ``Qdot = P``, ``Pdot = -Q`` at unit
frequency.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

FD_STEP = 1e-5


@dataclass(frozen=True)
class OscillatorSpec:
    frequencies: tuple[float, ...] = (1.0,)
    lam: float = 1.0

    def __post_init__(self) -> None:
        freqs = tuple(float(f) for f in np.atleast_1d(self.frequencies))
        if not freqs:
            raise ValueError("need at least one frequency")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def n(self) -> int:
        return len(self.frequencies)


@dataclass(frozen=True)
class PhasePoint:
    q: np.ndarray
    p: np.ndarray

    def __post_init__(self) -> None:
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if q.shape != p.shape or q.ndim != 1:
            raise ValueError("q and p must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("phase point must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)


def oscillator_flow(spec: OscillatorSpec, point: PhasePoint, t: float) -> PhasePoint:
    """Exact flow: each mode rotates clockwise at its frequency."""
    w = np.asarray(spec.frequencies)
    if point.q.shape != w.shape:
        raise ValueError(f"point has {point.q.size} modes, spec has {spec.n}")
    c, s = np.cos(w * t), np.sin(w * t)
    return PhasePoint(point.q * c + point.p * s, -point.q * s + point.p * c)


def vector_field(spec: OscillatorSpec, point: PhasePoint) -> PhasePoint:
    w = np.asarray(spec.frequencies)
    return PhasePoint(w * point.p, -w * point.q)


def _require_one_mode(spec: OscillatorSpec) -> None:
    if spec.n != 1:
        raise ValueError("the (Q, P) construction is one-dimensional; spec must have n = 1")


def map_PQ(spec: OscillatorSpec, q: float, p: float) -> tuple[float, float]:
    """``(Q, P) = lam F (q, p)`` with ``F = exp(lam/2 (q^2 + p^2))``."""
    _require_one_mode(spec)
    lam = spec.lam
    f = np.exp(0.5 * lam * (q * q + p * p))
    return float(lam * q * f), float(lam * p * f)


def richardson_derivative(fn: Callable[[float], Any], x: float, h: float) -> Any:
    """Central difference refined by two-level Richardson extrapolation."""

    def central(step):
        return (np.asarray(fn(x + step)) - np.asarray(fn(x - step))) / (2 * step)

    return (4 * central(h / 2) - central(h)) / 3


def _step(x: float, base: float) -> float:
    return base * max(1.0, abs(x))


def jacobian_2d(fn: Callable[[float, float], tuple[float, float]], q: float, p: float, base: float = FD_STEP) -> np.ndarray:
    """``[[du/dq, du/dp], [dv/dq, dv/dp]]`` for ``(u, v) = fn(q, p)``."""
    dq = richardson_derivative(lambda x: fn(x, p), q, _step(q, base))
    dp = richardson_derivative(lambda y: fn(q, y), p, _step(p, base))
    return np.column_stack([dq, dp])


@dataclass
class BracketReport:
    degenerate: bool
    fd_bracket: float | None = None
    predicted: float | None = None
    rel_error: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "degenerate": self.degenerate,
            "fd_bracket_PQ": self.fd_bracket,
            "predicted": self.predicted,
            "rel_error": self.rel_error,
        }


def bracket_identity_check(spec: OscillatorSpec, q: float, p: float, fd_step: float = FD_STEP) -> BracketReport:
    """``{P, Q}`` by finite differences against ``lam^2 F^2 (1 + lam r^2) {p, q}``."""
    _require_one_mode(spec)
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    lam = spec.lam
    if lam == 0:
        return BracketReport(degenerate=True)
    jac = jacobian_2d(lambda x, y: map_PQ(spec, x, y), q, p, fd_step)
    (Qq, Qp), (Pq, Pp) = jac
    fd = Pq * Qp - Pp * Qq
    r2 = q * q + p * p
    f = np.exp(0.5 * lam * r2)
    predicted = lam ** 2 * f ** 2 * (1 + lam * r2) * -1.0  # {p, q} = -1
    return BracketReport(False, float(fd), float(predicted), float(abs(fd - predicted) / abs(predicted)))


@dataclass
class LinearityReport:
    max_residual: float
    max_energy_drift: float
    rate: float
    residuals: list[float] = field(repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_residual": self.max_residual,
            "max_energy_drift": self.max_energy_drift,
            "rate": self.rate,
            "residuals": self.residuals,
        }


def linear_in_both_check(spec: OscillatorSpec, q: float, p: float, t_grid: Sequence[float], fd_step: float = FD_STEP) -> LinearityReport:
    """Check ``Qdot = P`` and ``Pdot = -Q`` along the exact flow.

    Time derivatives are finite differences of ``(Q, P)(flow_t(q, p))``.
    Residuals are relative to ``sqrt(Q^2 + P^2)``.  ``rate`` is the fitted
    angular velocity ``(Qdot P - Pdot Q) / (Q^2 + P^2)``, which equals the
    oscillator frequency.
    """
    _require_one_mode(spec)
    start = PhasePoint([q], [p])

    def qp_at(t: float) -> tuple[float, float]:
        x = oscillator_flow(spec, start, t)
        return map_PQ(spec, x.q[0], x.p[0])

    residuals, rates, drift = [], [], 0.0
    r0 = np.hypot(*qp_at(0.0))
    for t in t_grid:
        Q, P = qp_at(t)
        dQ, dP = richardson_derivative(qp_at, t, _step(t, fd_step))
        radius = np.hypot(Q, P)
        if radius == 0:
            residuals.append(0.0)
            continue
        residuals.append(float(max(abs(dQ - P), abs(dP + Q)) / radius))
        rates.append((dQ * P - dP * Q) / radius ** 2)
        drift = max(drift, abs(radius - r0) / r0)
    rate = float(np.mean(rates)) if rates else 0.0
    return LinearityReport(max(residuals, default=0.0), float(drift), rate, residuals)


@dataclass(frozen=True)
class RadialProfile:
    """``F(q, p) = phi(q^2 + p^2)`` with its first two derivatives in ``s``."""

    phi: Callable[[float], float]
    dphi: Callable[[float], float]
    d2phi: Callable[[float], float]
    name: str = "custom"

    def __call__(self, q: float, p: float) -> float:
        return self.phi(q * q + p * p)

    def gradient(self, q: float, p: float) -> tuple[float, float]:
        """``(dF/dp, dF/dq)``, the pair whose differentials build ``omega_F``."""
        d = self.dphi(q * q + p * p)
        return 2 * p * d, 2 * q * d

    def two_form_coefficient(self, q: float, p: float, mu: float = 1.0) -> float:
        """Closed form ``-mu (4 phi'^2 + 8 s phi' phi'')`` of ``omega_F / (dq ^ dp)``."""
        s = q * q + p * p
        d1, d2 = self.dphi(s), self.d2phi(s)
        return -mu * (4 * d1 * d1 + 8 * s * d1 * d2)


def exponential_profile(lam: float = 1.0) -> RadialProfile:
    """``F = exp(lam s / 2)``; its gradient pair is exactly ``(P, Q)``."""
    return RadialProfile(
        phi=lambda s: np.exp(0.5 * lam * s),
        dphi=lambda s: 0.5 * lam * np.exp(0.5 * lam * s),
        d2phi=lambda s: 0.25 * lam * lam * np.exp(0.5 * lam * s),
        name=f"exp(lam={lam:g})",
    )


def quadratic_profile() -> RadialProfile:
    """``F = q^2 + p^2``."""
    return RadialProfile(lambda s: s, lambda s: 1.0, lambda s: 0.0, name="q^2+p^2")


def general_profile(f: Callable[[float], float], df: Callable[[float], float], d2f: Callable[[float], float]) -> RadialProfile:
    """``F = s (1 + f(s))^2`` from ``f`` and its first two derivatives."""

    def phi(s):
        return s * (1 + f(s)) ** 2

    def dphi(s):
        return (1 + f(s)) ** 2 + 2 * s * (1 + f(s)) * df(s)

    def d2phi(s):
        u, du, d2u = 1 + f(s), df(s), d2f(s)
        return 4 * u * du + 2 * s * (du * du + u * d2u)

    return RadialProfile(phi, dphi, d2phi, name="s(1+f)^2")


def two_form_coefficient_fd(profile: RadialProfile, q: float, p: float, mu: float = 1.0, fd_step: float = FD_STEP) -> float:
    """``c`` in ``omega_F = c dq ^ dp`` from finite differences of the gradient pair."""
    (uq, up), (vq, vp) = jacobian_2d(profile.gradient, q, p, fd_step)
    return float(mu * (uq * vp - up * vq))


@dataclass
class TwoFormReport:
    max_rel_change: float
    values_before: list[float]
    values_after: list[float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_rel_change": self.max_rel_change,
            "values_before": self.values_before,
            "values_after": self.values_after,
        }


def invariant_two_form_check(
    spec: OscillatorSpec,
    profile: RadialProfile | None,
    points: Sequence[tuple[float, float]],
    t: float,
    mu: float = 1.0,
) -> TwoFormReport:
    """Compare ``omega_F`` coefficients at each point and at its image under the flow.

    The flow preserves ``dq ^ dp``, so invariance of ``omega_F`` means the
    coefficient is constant along orbits.
    """
    _require_one_mode(spec)
    if profile is None:
        profile = exponential_profile(spec.lam)
    before, after, worst = [], [], 0.0
    for q, p in points:
        x = oscillator_flow(spec, PhasePoint([q], [p]), t)
        c0 = two_form_coefficient_fd(profile, q, p, mu)
        c1 = two_form_coefficient_fd(profile, float(x.q[0]), float(x.p[0]), mu)
        before.append(c0)
        after.append(c1)
        worst = max(worst, abs(c1 - c0) / abs(c0) if c0 else abs(c1))
    return TwoFormReport(float(worst), before, after)

