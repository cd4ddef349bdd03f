"""Exact Moyal algebra over the Gaussian rationals.

A symbol is held as a pair ``(re, im)`` of polynomials with rational
coefficients, so star and Jordan products are computed without rounding.
The series is the same finite Moyal expansion used by the floating-point
:func:`gaussbayes.phase_space.moyal_star`; this module exists to certify
algebraic identities exactly and to cross-check the floating-point path.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Union

import flint

from .phase_space import PhasePolynomial

Rational = Union[int, Fraction]
_CTX = flint.fmpq_mpoly_ctx.get(("q", "p"), "lex")
_ZERO = _CTX.from_dict({})


def _fmpq(x: Rational) -> flint.fmpq:
    x = Fraction(x)
    return flint.fmpq(x.numerator, x.denominator)


def _degree(poly) -> int:
    return max((sum(e) for e in poly.monoms()), default=-1)


@lru_cache(maxsize=None)
def _series_weight(j: int, l: int) -> flint.fmpq:
    # |(i/2)^(j+l) (-1)^l / (j! l!)|; the power of i is applied separately
    return flint.fmpq((-1) ** l, 2 ** (j + l) * math.factorial(j) * math.factorial(l))


class ExactPhasePolynomial:
    """Polynomial in ``(q, p)`` with Gaussian-rational coefficients."""

    __slots__ = ("re", "im")

    def __init__(self, re=None, im=None):
        self.re = _ZERO if re is None else re
        self.im = _ZERO if im is None else im

    @classmethod
    def from_terms(cls, terms: Mapping[tuple[int, int], Union[Rational, tuple[Rational, Rational]]]):
        """Build from ``{(m, n): c}`` with ``c`` rational or a ``(re, im)`` pair of rationals."""
        re, im = {}, {}
        for (m, n), c in terms.items():
            if m < 0 or n < 0:
                raise ValueError(f"negative exponent ({m}, {n})")
            r, i = c if isinstance(c, tuple) else (c, 0)
            if r:
                re[(m, n)] = _fmpq(r)
            if i:
                im[(m, n)] = _fmpq(i)
        return cls(_CTX.from_dict(re), _CTX.from_dict(im))

    @classmethod
    def constant(cls, re: Rational, im: Rational = 0):
        return cls.from_terms({(0, 0): (re, im)})

    @classmethod
    def monomial(cls, m: int, n: int):
        return cls.from_terms({(m, n): 1})

    def degree(self) -> float:
        d = max(_degree(self.re), _degree(self.im))
        return -math.inf if d < 0 else d

    def is_zero(self) -> bool:
        return self.re.is_zero() and self.im.is_zero()

    def is_real(self) -> bool:
        return self.im.is_zero()

    def __add__(self, other: "ExactPhasePolynomial") -> "ExactPhasePolynomial":
        return ExactPhasePolynomial(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "ExactPhasePolynomial") -> "ExactPhasePolynomial":
        return ExactPhasePolynomial(self.re - other.re, self.im - other.im)

    def __neg__(self):
        return ExactPhasePolynomial(-self.re, -self.im)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExactPhasePolynomial):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((str(self.re), str(self.im)))

    def times_i(self, power: int = 1) -> "ExactPhasePolynomial":
        r, i = self.re, self.im
        for _ in range(power % 4):
            r, i = -i, r
        return ExactPhasePolynomial(r, i)

    def scaled(self, c: Rational) -> "ExactPhasePolynomial":
        c = c if isinstance(c, flint.fmpq) else _fmpq(c)
        return ExactPhasePolynomial(self.re * c, self.im * c)

    def pointwise(self, other: "ExactPhasePolynomial") -> "ExactPhasePolynomial":
        """Commutative product of symbols."""
        return ExactPhasePolynomial(self.re * other.re - self.im * other.im,
                                    self.re * other.im + self.im * other.re)

    def derivative(self, dq: int, dp: int) -> "ExactPhasePolynomial":
        r, i = self.re, self.im
        for _ in range(dq):
            r, i = r.derivative(0), i.derivative(0)
        for _ in range(dp):
            r, i = r.derivative(1), i.derivative(1)
        return ExactPhasePolynomial(r, i)

    def terms(self) -> dict[tuple[int, int], tuple[Fraction, Fraction]]:
        out: dict[tuple[int, int], list[Fraction]] = {}
        for slot, part in ((0, self.re), (1, self.im)):
            for mono, c in zip(part.monoms(), part.coeffs()):
                out.setdefault(tuple(mono), [Fraction(0), Fraction(0)])[slot] = Fraction(int(c.p), int(c.q))
        return {k: (v[0], v[1]) for k, v in out.items()}

    def to_float(self) -> PhasePolynomial:
        return PhasePolynomial({k: complex(float(r), float(i)) for k, (r, i) in self.terms().items()})

    def __repr__(self):
        return f"ExactPhasePolynomial(re={self.re}, im={self.im})"


def _series(a: ExactPhasePolynomial, b: ExactPhasePolynomial, even_only: bool) -> ExactPhasePolynomial:
    if a.is_zero() or b.is_zero():
        return ExactPhasePolynomial()
    top = int(min(a.degree(), b.degree()))
    out = ExactPhasePolynomial()
    for j in range(top + 1):
        for l in range(top + 1 - j):
            if even_only and (j + l) % 2:
                continue
            term = a.derivative(j, l).pointwise(b.derivative(l, j))
            if term.is_zero():
                continue
            out = out + term.scaled(_series_weight(j, l)).times_i(j + l)
    return out


def exact_star(a: ExactPhasePolynomial, b: ExactPhasePolynomial) -> ExactPhasePolynomial:
    """Moyal star product, term by term ``(i/2)^(j+l) (-1)^l / (j! l!) d_q^j d_p^l a  d_q^l d_p^j b``."""
    return _series(a, b, even_only=False)


def exact_jordan(a: ExactPhasePolynomial, b: ExactPhasePolynomial) -> ExactPhasePolynomial:
    """Symmetrised product ``(a * b + b * a) / 2``: the even orders of the series."""
    return _series(a, b, even_only=True)


def exact_commutator(a: ExactPhasePolynomial, b: ExactPhasePolynomial) -> ExactPhasePolynomial:
    return exact_star(a, b) - exact_star(b, a)
