"""Polynomials on single-mode phase space and their Moyal algebra.

Symbols are polynomials in the coordinates ``(q, p)`` with complex
coefficients. The Weyl correspondence maps each real symbol to a Hermitian
operator; operator products become Moyal star products of symbols. Units
are ``hbar = 1`` and the symplectic form on the ordering ``(q, p)`` is
``Omega = [[0, 1], [-1, 0]]``, so that ``q * p - p * q = i`` under the star
product.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

Exponent = tuple[int, int]

REALITY_TOL = 1e-14


def _clean(terms: Iterable[tuple[Exponent, complex]]) -> dict[Exponent, complex]:
    out: dict[Exponent, complex] = {}
    for (m, n), c in terms:
        if m < 0 or n < 0:
            raise ValueError(f"negative exponent ({m}, {n})")
        key = (int(m), int(n))
        c = complex(c)
        out[key] = out[key] + c if key in out else c
    return {k: v for k, v in out.items() if v}


@dataclass(frozen=True, eq=False)
class PhasePolynomial:
    """Polynomial ``sum c[m, n] q**m p**n`` with complex coefficients.

    Terms with an exactly-zero coefficient are pruned on construction; no
    epsilon pruning is done.
    """

    terms: Mapping[Exponent, complex] = field(default_factory=dict)

    def __post_init__(self):
        items = self.terms.items() if isinstance(self.terms, Mapping) else self.terms
        object.__setattr__(self, "terms", _clean(items))

    # -- constructors -------------------------------------------------
    @classmethod
    def constant(cls, c: complex) -> "PhasePolynomial":
        return cls({(0, 0): c})

    @classmethod
    def monomial(cls, m: int, n: int, c: complex = 1.0) -> "PhasePolynomial":
        return cls({(m, n): c})

    @classmethod
    def zero(cls) -> "PhasePolynomial":
        return cls({})

    @classmethod
    def quadrature(cls, phi: float) -> "PhasePolynomial":
        """Rotated quadrature ``q cos(phi) + p sin(phi)``."""
        return cls({(1, 0): math.cos(phi), (0, 1): math.sin(phi)})

    # -- basic structure ----------------------------------------------
    def degree(self) -> float:
        if not self.terms:
            return -math.inf
        return max(m + n for m, n in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_real(self, tol: float = REALITY_TOL) -> bool:
        return all(abs(c.imag) <= tol for c in self.terms.values())

    def max_imag(self) -> float:
        return max((abs(c.imag) for c in self.terms.values()), default=0.0)

    def real(self) -> "PhasePolynomial":
        return PhasePolynomial({k: c.real for k, c in self.terms.items()})

    def coefficient(self, m: int, n: int) -> complex:
        return self.terms.get((m, n), 0j)

    def homogeneous_part(self, degree: int) -> "PhasePolynomial":
        return PhasePolynomial({k: c for k, c in self.terms.items() if sum(k) == degree})

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        return PhasePolynomial(list(self.terms.items()) + list(other.terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return PhasePolynomial({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, PhasePolynomial):
            return poly_mul(self, other)
        scalar = complex(other)
        return PhasePolynomial({k: c * scalar for k, c in self.terms.items()})

    def __rmul__(self, other):
        return self * other

    def __truediv__(self, scalar):
        return self * (1.0 / complex(scalar))

    def __pow__(self, k: int):
        out = PhasePolynomial.constant(1.0)
        for _ in range(int(k)):
            out = poly_mul(out, self)
        return out

    def __eq__(self, other):
        if not isinstance(other, PhasePolynomial):
            try:
                other = _coerce(other)
            except TypeError:
                return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def allclose(self, other: "PhasePolynomial", atol: float = 1e-12) -> bool:
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.coefficient(*k) - other.coefficient(*k)) <= atol for k in keys)

    # -- calculus & evaluation ----------------------------------------
    def derivative(self, dq: int = 0, dp: int = 0) -> "PhasePolynomial":
        out = {}
        for (m, n), c in self.terms.items():
            if m < dq or n < dp:
                continue
            fac = math.perm(m, dq) * math.perm(n, dp)
            out[(m - dq, n - dp)] = c * fac
        return PhasePolynomial(out)

    def __call__(self, q, p):
        q = np.asarray(q)
        p = np.asarray(p)
        total = np.zeros(np.broadcast(q, p).shape, dtype=complex)
        for (m, n), c in self.terms.items():
            total = total + c * q**m * p**n
        if self.is_real():
            return total.real
        return total

    def substitute(self, q_sub: "PhasePolynomial", p_sub: "PhasePolynomial") -> "PhasePolynomial":
        """Compose: replace ``q`` by ``q_sub`` and ``p`` by ``p_sub``."""
        out = PhasePolynomial.zero()
        for (m, n), c in self.terms.items():
            out = out + c * (q_sub**m) * (p_sub**n)
        return out

    def rotate(self, phi: float) -> "PhasePolynomial":
        """Symbol expressed in coordinates rotated by ``phi``.

        Returns ``g(u, v) = self(u cos phi - v sin phi, u sin phi + v cos phi)``,
        so that ``u`` is the rotated quadrature ``q cos phi + p sin phi``.
        """
        c, s = math.cos(phi), math.sin(phi)
        q_sub = PhasePolynomial({(1, 0): c, (0, 1): -s})
        p_sub = PhasePolynomial({(1, 0): s, (0, 1): c})
        return self.substitute(q_sub, p_sub)

    # -- text ---------------------------------------------------------
    def sorted_terms(self) -> list[tuple[Exponent, complex]]:
        return sorted(self.terms.items(), key=lambda kv: (kv[0][0] + kv[0][1], kv[0][0]), reverse=True)

    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        return f"PhasePolynomial({format_poly(self)!r})"


def _coerce(x) -> PhasePolynomial:
    if isinstance(x, PhasePolynomial):
        return x
    if isinstance(x, (int, float, complex, np.number)):
        return PhasePolynomial.constant(complex(x))
    raise TypeError(f"cannot convert {type(x).__name__} to PhasePolynomial")


Q = PhasePolynomial.monomial(1, 0)
P = PhasePolynomial.monomial(0, 1)
ONE = PhasePolynomial.constant(1.0)


def poly_add(a: PhasePolynomial, b: PhasePolynomial) -> PhasePolynomial:
    return a + b


def poly_mul(a: PhasePolynomial, b: PhasePolynomial) -> PhasePolynomial:
    """Pointwise (commutative) product of two symbols."""
    return PhasePolynomial(
        ((m1 + m2, n1 + n2), c1 * c2) for (m1, n1), c1 in a.terms.items() for (m2, n2), c2 in b.terms.items()
    )


def _bidifferential(a: PhasePolynomial, b: PhasePolynomial, order: int) -> PhasePolynomial:
    # (d_q^A d_p^B - d_p^A d_q^B)^order applied to a(r) b(r')|_{r'=r}
    out = PhasePolynomial.zero()
    for k in range(order + 1):
        sign = -1 if (order - k) % 2 else 1
        da = a.derivative(k, order - k)
        if da.is_zero():
            continue
        db = b.derivative(order - k, k)
        if db.is_zero():
            continue
        out = out + (sign * math.comb(order, k)) * poly_mul(da, db)
    return out


def moyal_star(a: PhasePolynomial, b: PhasePolynomial) -> PhasePolynomial:
    """Moyal star product ``a * b`` (Weyl symbol of the operator product).

    The series in powers of ``i/2`` terminates at order
    ``min(deg a, deg b)``, so the result is exact.
    """
    if a.is_zero() or b.is_zero():
        return PhasePolynomial.zero()
    top = int(min(a.degree(), b.degree()))
    out = PhasePolynomial.zero()
    for order in range(top + 1):
        out = out + _bidifferential(a, b, order) * ((0.5j) ** order / math.factorial(order))
    return out


def jordan_product(a: PhasePolynomial, b: PhasePolynomial) -> PhasePolynomial:
    """Symbol of the symmetrised product ``(AB + BA) / 2``.

    Only even orders of the Moyal series survive, so the sum is taken over
    those directly; real inputs give a real result.
    """
    if a.is_zero() or b.is_zero():
        return PhasePolynomial.zero()
    top = int(min(a.degree(), b.degree()))
    out = PhasePolynomial.zero()
    for order in range(0, top + 1, 2):
        out = out + _bidifferential(a, b, order) * ((-0.25) ** (order // 2) / math.factorial(order))
    return out


def commutator(a: PhasePolynomial, b: PhasePolynomial) -> PhasePolynomial:
    return moyal_star(a, b) - moyal_star(b, a)


def poisson_bracket(a: PhasePolynomial, b: PhasePolynomial) -> PhasePolynomial:
    return _bidifferential(a, b, 1)


# -- text form ------------------------------------------------------------

def _format_coeff(c: complex) -> str:
    if c.imag == 0:
        return format(c.real, ".17g")
    return "(" + format(c.real, ".17g") + ("+" if c.imag >= 0 else "-") + format(abs(c.imag), ".17g") + "j)"


def _format_mono(m: int, n: int) -> str:
    parts = []
    if m:
        parts.append("q" if m == 1 else f"q^{m}")
    if n:
        parts.append("p" if n == 1 else f"p^{n}")
    return " ".join(parts)


def format_poly(poly: PhasePolynomial) -> str:
    """Canonical text ``c * q^m p^n + ...``, terms sorted by (m+n, m) descending."""
    if poly.is_zero():
        return "0"
    chunks = []
    for (m, n), c in poly.sorted_terms():
        mono = _format_mono(m, n)
        coeff = _format_coeff(c)
        chunks.append(coeff if not mono else f"{coeff} * {mono}")
    return " + ".join(chunks)


_TOKEN = re.compile(
    r"\s*(?:(?P<complex>\([^()]*\))|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<var>[qp])|(?P<pow>\^|\*\*)|(?P<op>[+\-*]))"
)


def parse_poly(text: str) -> PhasePolynomial:
    """Parse the canonical text form (also accepts bare monomials, ``**``, implicit products)."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None or mt.end() == pos:
            raise ValueError(f"cannot parse polynomial {text!r} at column {pos}")
        kind = mt.lastgroup
        tokens.append((kind, mt.group(kind)))
        pos = mt.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    if not tokens:
        raise ValueError("empty polynomial")

    total = PhasePolynomial.zero()
    i = 0
    sign = 1.0
    expect_term = True
    current: PhasePolynomial | None = None
    while i < len(tokens):
        kind, val = tokens[i]
        if kind == "op" and val in "+-":
            if current is not None:
                total = total + sign * current
                current = None
                sign = 1.0
            sign *= -1.0 if val == "-" else 1.0
            expect_term = True
            i += 1
            continue
        if kind == "op" and val == "*":
            if current is None:
                raise ValueError(f"dangling '*' in {text!r}")
            i += 1
            continue
        if kind == "pow":
            raise ValueError(f"misplaced power in {text!r}")
        if kind == "complex":
            factor = PhasePolynomial.constant(complex(val[1:-1].replace(" ", "")))
        elif kind == "num":
            factor = PhasePolynomial.constant(float(val))
        else:
            exp = 1
            if i + 2 < len(tokens) + 1 and i + 1 < len(tokens) and tokens[i + 1][0] == "pow":
                if i + 2 >= len(tokens) or tokens[i + 2][0] != "num":
                    raise ValueError(f"bad exponent in {text!r}")
                exp = int(float(tokens[i + 2][1]))
                i += 2
            factor = Q**exp if val == "q" else P**exp
        current = factor if current is None else current * factor
        expect_term = False
        i += 1
    if expect_term or current is None:
        raise ValueError(f"incomplete polynomial {text!r}")
    total = total + sign * current
    return total
