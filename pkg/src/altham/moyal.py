"""Moyal star product on polynomials in two phase-space variables.

A :class:`PhasePoly` is a finite sum of terms ``c * hbar^k * x^i * y^j`` over a
pair of variable labels ``(x, y)``, e.g. ``("q", "p")`` or ``("Q", "P")``.
``hbar`` is kept as a formal grading variable unless a number is substituted.
The product is

    f * g = sum_n (i hbar / 2)^n / n! sum_k (-1)^k C(n, k)
                  (d_x^{n-k} d_y^k f) (d_y^{n-k} d_x^k g),

which terminates on polynomials.  Coefficients stay exact (Gaussian
rationals) when the inputs are rational and fall back to ``complex`` floats
otherwise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from numbers import Number, Rational
from typing import Iterable, Mapping, Union

from .core import AlthamError

DEGREE_CAP = 16


class LabelMismatch(AlthamError, ValueError):
    code = "label_mismatch"


class DegreeOverflow(AlthamError, ValueError):
    code = "degree_overflow"


class PolyParseError(AlthamError, ValueError):
    code = "poly_parse"


@dataclass(frozen=True)
class GaussQ:
    """Exact complex rational ``re + i im``."""

    re: Fraction
    im: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    def __add__(self, other):
        o = _lift(other)
        if isinstance(o, GaussQ):
            return GaussQ(self.re + o.re, self.im + o.im)
        return complex(self) + o

    __radd__ = __add__

    def __neg__(self):
        return GaussQ(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-_lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = _lift(other)
        if isinstance(o, GaussQ):
            return GaussQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
        return complex(self) * o

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _lift(other)
        if isinstance(o, GaussQ):
            d = o.re * o.re + o.im * o.im
            return GaussQ((self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d)
        return complex(self) / o

    def conjugate(self) -> "GaussQ":
        return GaussQ(self.re, -self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __eq__(self, other) -> bool:
        o = _lift(other)
        if isinstance(o, GaussQ):
            return self.re == o.re and self.im == o.im
        return complex(self) == o

    def __hash__(self) -> int:
        return hash((self.re, self.im))

    def __abs__(self) -> float:
        return abs(complex(self))

    def __repr__(self) -> str:
        if not self.im:
            return str(self.re)
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


Coeff = Union[GaussQ, complex]


def _lift(c) -> Coeff:
    """Exact values become :class:`GaussQ`; floats become ``complex``."""
    if isinstance(c, GaussQ):
        return c
    if isinstance(c, bool):
        return GaussQ(int(c))
    if isinstance(c, Rational):
        return GaussQ(Fraction(c))
    if isinstance(c, Number):
        return complex(c)
    raise TypeError(f"unsupported coefficient {c!r}")


def _is_zero(c: Coeff) -> bool:
    return not c


class PhasePoly:
    """Immutable polynomial ``sum c[k, i, j] hbar^k x^i y^j`` with labelled variables."""

    __slots__ = ("labels", "_terms")

    def __init__(self, terms: Mapping[tuple[int, ...], object] | None = None, labels: tuple[str, str] = ("q", "p")):
        self.labels = tuple(labels)
        clean: dict[tuple[int, int, int], Coeff] = {}
        for key, c in (terms or {}).items():
            if len(key) == 2:
                key = (0, *key)
            k, i, j = (int(v) for v in key)
            if min(k, i, j) < 0:
                raise ValueError(f"negative exponent in {key}")
            if i > DEGREE_CAP or j > DEGREE_CAP:
                raise DegreeOverflow(f"degree {max(i, j)} exceeds cap {DEGREE_CAP}")
            c = _lift(c)
            if (k, i, j) in clean:
                c = clean[(k, i, j)] + c
            clean[(k, i, j)] = c
        self._terms = {key: c for key, c in sorted(clean.items()) if not _is_zero(c)}

    # -- construction ---------------------------------------------------

    @classmethod
    def const(cls, c, labels=("q", "p")) -> "PhasePoly":
        return cls({(0, 0, 0): c}, labels)

    @classmethod
    def variables(cls, labels=("q", "p")) -> tuple["PhasePoly", "PhasePoly"]:
        return cls({(0, 1, 0): 1}, labels), cls({(0, 0, 1): 1}, labels)

    @classmethod
    def hbar(cls, labels=("q", "p")) -> "PhasePoly":
        return cls({(1, 0, 0): 1}, labels)

    # -- accessors ------------------------------------------------------

    @property
    def terms(self) -> dict[tuple[int, int, int], Coeff]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> tuple[int, int]:
        """Maximal power of each phase-space variable."""
        if not self._terms:
            return (0, 0)
        return max(i for _, i, _ in self._terms), max(j for _, _, j in self._terms)

    @property
    def total_degree(self) -> int:
        return max((i + j for _, i, j in self._terms), default=0)

    @property
    def hbar_degree(self) -> int:
        return max((k for k, _, _ in self._terms), default=0)

    @property
    def exact(self) -> bool:
        return all(isinstance(c, GaussQ) for c in self._terms.values())

    def hbar_part(self, k: int) -> "PhasePoly":
        """Coefficient of ``hbar^k`` as an ``hbar``-free polynomial."""
        return PhasePoly({(0, i, j): c for (kk, i, j), c in self._terms.items() if kk == k}, self.labels)

    def _check(self, other: "PhasePoly") -> None:
        if self.labels != other.labels:
            raise LabelMismatch(f"cannot combine {self.labels} with {other.labels}")

    # -- arithmetic -----------------------------------------------------

    def _coerce(self, other) -> "PhasePoly":
        if isinstance(other, PhasePoly):
            self._check(other)
            return other
        return PhasePoly.const(other, self.labels)

    def __add__(self, other) -> "PhasePoly":
        other = self._coerce(other)
        out = dict(self._terms)
        for key, c in other._terms.items():
            out[key] = out[key] + c if key in out else c
        return PhasePoly(out, self.labels)

    __radd__ = __add__

    def __neg__(self) -> "PhasePoly":
        return PhasePoly({k: -c for k, c in self._terms.items()}, self.labels)

    def __sub__(self, other) -> "PhasePoly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "PhasePoly":
        return self._coerce(other) - self

    def __mul__(self, other) -> "PhasePoly":
        """Commutative (pointwise) product."""
        other = self._coerce(other)
        out: dict[tuple[int, int, int], Coeff] = {}
        for (k1, i1, j1), c1 in self._terms.items():
            for (k2, i2, j2), c2 in other._terms.items():
                key = (k1 + k2, i1 + i2, j1 + j2)
                out[key] = out[key] + c1 * c2 if key in out else c1 * c2
        return PhasePoly(out, self.labels)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "PhasePoly":
        out = PhasePoly.const(1, self.labels)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhasePoly):
            return NotImplemented
        return self.labels == other.labels and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.labels, tuple(self._terms.items())))

    def conjugate(self) -> "PhasePoly":
        """Complex conjugation of the coefficients (``hbar`` and variables real)."""
        return PhasePoly({k: c.conjugate() for k, c in self._terms.items()}, self.labels)

    def diff(self, var: int, order: int = 1) -> "PhasePoly":
        """``order``-th derivative in the first (``var=0``) or second (``var=1``) variable."""
        out = {}
        for (k, i, j), c in self._terms.items():
            e = (i, j)[var]
            if e < order:
                continue
            f = factorial(e) // factorial(e - order)
            key = (k, i - order, j) if var == 0 else (k, i, j - order)
            out[key] = c * f
        return PhasePoly(out, self.labels)

    def subs_hbar(self, value) -> "PhasePoly":
        """Replace the formal ``hbar`` by a number."""
        v = _lift(value)
        out: dict[tuple[int, int, int], Coeff] = {}
        for (k, i, j), c in self._terms.items():
            term = c
            for _ in range(k):
                term = term * v
            key = (0, i, j)
            out[key] = out[key] + term if key in out else term
        return PhasePoly(out, self.labels)

    def max_abs_coeff(self) -> float:
        return max((abs(complex(c)) for c in self._terms.values()), default=0.0)

    def __call__(self, x: complex, y: complex, hbar: complex = 0.0) -> complex:
        return sum(complex(c) * hbar ** k * x ** i * y ** j for (k, i, j), c in self._terms.items())

    # -- text format ----------------------------------------------------

    def __str__(self) -> str:
        return format_poly(self)

    def __repr__(self) -> str:
        return f"PhasePoly({format_poly(self)!r}, labels={self.labels})"


def _fmt_coeff(c: Coeff) -> str:
    if isinstance(c, GaussQ):
        return f"({c.re},{c.im})"
    return f"({c.real!r},{c.imag!r})"


def format_poly(f: PhasePoly) -> str:
    """``(re,im) * q^i p^j`` terms joined by `` + ``, in canonical order."""
    if f.is_zero():
        return "(0,0)"
    x, y = f.labels
    parts = []
    for (k, i, j), c in f.terms.items():
        s = _fmt_coeff(c)
        mono = []
        if k:
            mono.append(f"hbar^{k}")
        if i:
            mono.append(f"{x}^{i}")
        if j:
            mono.append(f"{y}^{j}")
        parts.append(" * ".join([s, " ".join(mono)]) if mono else s)
    return " + ".join(parts)


_TERM = re.compile(r"^\(\s*([^,()]+?)\s*,\s*([^,()]+?)\s*\)\s*(?:\*\s*(.*))?$")


def _parse_number(tok: str):
    tok = tok.strip()
    try:
        return Fraction(tok)
    except ValueError:
        try:
            return float(tok)
        except ValueError:
            raise PolyParseError(f"bad number {tok!r}") from None


def parse_poly(text: str, labels: tuple[str, str] = ("q", "p")) -> PhasePoly:
    """Inverse of :func:`format_poly`.  Exponent ``^1`` may be omitted."""
    x, y = labels
    terms: dict[tuple[int, int, int], Coeff] = {}
    chunks = [c for c in re.split(r"\s\+\s", text.strip()) if c.strip()]
    if not chunks:
        raise PolyParseError("empty polynomial")
    for chunk in chunks:
        m = _TERM.match(chunk.strip())
        if not m:
            raise PolyParseError(f"cannot parse term {chunk!r}; expected '(re,im) * {x}^i {y}^j'")
        re_part, im_part = _parse_number(m.group(1)), _parse_number(m.group(2))
        if isinstance(re_part, float) or isinstance(im_part, float):
            c: Coeff = complex(float(re_part), float(im_part))
        else:
            c = GaussQ(re_part, im_part)
        exps = {"hbar": 0, x: 0, y: 0}
        for factor in (m.group(3) or "").split():
            name, _, power = factor.partition("^")
            if name not in exps:
                raise LabelMismatch(f"variable {name!r} is not one of {labels} or hbar")
            exps[name] += int(power) if power else 1
        key = (exps["hbar"], exps[x], exps[y])
        terms[key] = terms[key] + c if key in terms else c
    return PhasePoly(terms, labels)


# -- star product -----------------------------------------------------------

HALF_I = GaussQ(0, Fraction(1, 2))


def _hbar_factor(hbar, n: int, labels) -> PhasePoly:
    """``(i hbar / 2)^n / n!`` as a polynomial (formal ``hbar`` when ``hbar is None``)."""
    base = HALF_I
    c: Coeff = GaussQ(1)
    for _ in range(n):
        c = c * base
    c = c * GaussQ(Fraction(1, factorial(n)))
    if hbar is None:
        return PhasePoly({(n, 0, 0): c}, labels)
    h = _lift(hbar)
    for _ in range(n):
        c = c * h
    return PhasePoly.const(c, labels)


def star(f: PhasePoly, g: PhasePoly, hbar=None) -> PhasePoly:
    """Moyal product ``f * g``; ``hbar=None`` keeps ``hbar`` formal."""
    f._check(g)
    labels = f.labels
    nmax = min(sum(f.degree), sum(g.degree))
    out = PhasePoly({}, labels)
    for n in range(nmax + 1):
        inner = PhasePoly({}, labels)
        for k in range(n + 1):
            left = f.diff(0, n - k).diff(1, k)
            if left.is_zero():
                continue
            right = g.diff(1, n - k).diff(0, k)
            if right.is_zero():
                continue
            term = left * right * (comb(n, k) * (-1) ** k)
            inner = inner + term
        if not inner.is_zero():
            out = out + _hbar_factor(hbar, n, labels) * inner
    return out


def star_commutator(f: PhasePoly, g: PhasePoly, hbar=None) -> PhasePoly:
    return star(f, g, hbar) - star(g, f, hbar)


def poisson_bracket(f: PhasePoly, g: PhasePoly) -> PhasePoly:
    """``d_x f d_y g - d_y f d_x g``."""
    f._check(g)
    return f.diff(0) * g.diff(1) - f.diff(1) * g.diff(0)


def _divide_by_i_hbar(f: PhasePoly) -> PhasePoly:
    """Exact division of a formal-``hbar`` polynomial with no ``hbar^0`` part by ``i hbar``."""
    out = {}
    for (k, i, j), c in f.terms.items():
        if k == 0:
            raise ValueError("polynomial has an hbar^0 part; not divisible by i hbar")
        out[(k - 1, i, j)] = c * GaussQ(0, -1)
    return PhasePoly(out, f.labels)


@dataclass
class ClassicalLimitReport:
    limit: PhasePoly
    poisson: PhasePoly
    difference: PhasePoly
    first_correction_order: int | None
    first_correction: PhasePoly | None

    @property
    def passed(self) -> bool:
        return self.difference.is_zero()

    def to_dict(self) -> dict:
        return {
            "limit": str(self.limit),
            "poisson_bracket": str(self.poisson),
            "difference": str(self.difference),
            "passed": self.passed,
            "first_correction_hbar_power": self.first_correction_order,
            "first_correction": None if self.first_correction is None else str(self.first_correction),
        }


def classical_limit_check(f: PhasePoly, g: PhasePoly) -> ClassicalLimitReport:
    """``(f*g - g*f)/(i hbar)`` at ``hbar = 0`` against the Poisson bracket.

    The quotient only contains even powers of ``hbar``; the first nonzero
    power above zero is reported together with its coefficient.
    """
    comm = star_commutator(f, g, None)
    quotient = _divide_by_i_hbar(comm)
    limit = quotient.hbar_part(0)
    pb = poisson_bracket(f, g)
    order = None
    corr = None
    for k in range(1, quotient.hbar_degree + 1):
        part = quotient.hbar_part(k)
        if not part.is_zero():
            order, corr = k, part
            break
    return ClassicalLimitReport(limit, pb, limit - pb, order, corr)


@dataclass
class DerivationReport:
    residual: PhasePoly
    hamiltonian_degree: int

    @property
    def passed(self) -> bool:
        return self.residual.is_zero()

    def to_dict(self) -> dict:
        return {
            "residual": str(self.residual),
            "passed": self.passed,
            "hamiltonian_degree": self.hamiltonian_degree,
        }


def derivation_residual(h: PhasePoly, f: PhasePoly, g: PhasePoly, hbar=None) -> PhasePoly:
    """``X(f*g) - (Xf)*g - f*(Xg)`` with ``X = {h, .}``."""

    def x(u):
        return poisson_bracket(h, u)

    return x(star(f, g, hbar)) - star(x(f), g, hbar) - star(f, x(g), hbar)


def derivation_check(h: PhasePoly, f: PhasePoly, g: PhasePoly, hbar=None, allow_higher: bool = False) -> DerivationReport:
    """Is ``{h, .}`` a derivation of the star product?

    Exact for ``h`` of total degree <= 2.  Higher degree ``h`` is refused
    unless ``allow_higher`` is set, in which case the (generally nonzero)
    residual is reported.
    """
    deg = h.total_degree
    if deg > 2 and not allow_higher:
        raise ValueError(
            f"Hamiltonian has degree {deg} > 2; the derivation property is not expected"
        )
    return DerivationReport(derivation_residual(h, f, g, hbar), deg)


def star_evolution_step(h: PhasePoly, f: PhasePoly, dt, order: int = 20, hbar=None, picture: str = "observable") -> PhasePoly:
    """Taylor series of ``exp(dt D) f`` truncated after ``order`` terms.

    For ``picture="observable"``, ``D f = (f*h - h*f)/(i hbar)``, which
    reduces to ``{f, h}`` for quadratic ``h`` and transports observables
    along the classical flow (``q -> q cos t + p sin t`` for the oscillator).
    ``picture="state"`` uses the opposite ordering ``(h*f - f*h)/(i hbar)``,
    the equation obeyed by phase-space densities.  ``hbar`` stays formal
    during the series; the division by ``i hbar`` is exact.
    """
    if h.total_degree > 2:
        raise ValueError("star_evolution_step expects a Hamiltonian of degree <= 2")
    if picture not in ("observable", "state"):
        raise ValueError(f"picture must be 'observable' or 'state', got {picture!r}")
    f._check(h)
    dt_c = _lift(dt)

    def d(u: PhasePoly) -> PhasePoly:
        c = star_commutator(u, h, None) if picture == "observable" else star_commutator(h, u, None)
        if c.is_zero():
            return c
        return _divide_by_i_hbar(c)

    out = f
    term = f
    coef: Coeff = GaussQ(1)
    for n in range(1, order + 1):
        term = d(term)
        if term.is_zero():
            break
        coef = coef * dt_c * GaussQ(Fraction(1, n))
        out = out + term * coef
    if hbar is not None:
        out = out.subs_hbar(hbar)
    return out


@dataclass(frozen=True)
class StarProduct:
    """A star product bound to one pair of variable labels."""

    labels: tuple[str, str]

    def variables(self) -> tuple[PhasePoly, PhasePoly]:
        return PhasePoly.variables(self.labels)

    def poly(self, terms) -> PhasePoly:
        return PhasePoly(terms, self.labels)

    def parse(self, text: str) -> PhasePoly:
        return parse_poly(text, self.labels)

    def _guard(self, *polys: PhasePoly) -> None:
        for p in polys:
            if p.labels != self.labels:
                raise LabelMismatch(f"{p.labels} polynomial passed to the {self.labels} product")

    def __call__(self, f: PhasePoly, g: PhasePoly, hbar=None) -> PhasePoly:
        self._guard(f, g)
        return star(f, g, hbar)

    def commutator(self, f: PhasePoly, g: PhasePoly, hbar=None) -> PhasePoly:
        self._guard(f, g)
        return star_commutator(f, g, hbar)


SUPPORTED_LABELS = (("q", "p"), ("Q", "P"))


def alternative_product(labels: Iterable[str]) -> StarProduct:
    labels = tuple(labels)
    if labels not in SUPPORTED_LABELS:
        raise LabelMismatch(f"unsupported label set {labels}; use one of {SUPPORTED_LABELS}")
    return StarProduct(labels)  # type: ignore[arg-type]
