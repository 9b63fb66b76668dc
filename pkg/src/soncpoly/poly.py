"""Sparse multivariate polynomials with exact rational coefficients.

The whole pipeline stores polynomials as {exponent tuple: Fraction} maps in
graded lexicographic order.  Evaluation at rational points is exact; floats
only appear when the caller passes float coordinates.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DimensionError, PolyParseError
from .geometry import grlex_key, hull_vertices

Exponent = tuple[int, ...]

MAX_EXPONENT = 10**6


@dataclass(frozen=True)
class Term:
    coeff: Fraction
    exp: Exponent


def is_even(exp: Exponent) -> bool:
    return all(e % 2 == 0 for e in exp)


@dataclass
class SparsePoly:
    """Polynomial as a sparse exponent→coefficient map (no zero entries)."""

    nvars: int
    terms: dict[Exponent, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        clean: dict[Exponent, Fraction] = {}
        for exp, c in self.terms.items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.nvars:
                raise DimensionError(f"exponent {exp} does not have {self.nvars} entries")
            if any(e < 0 for e in exp):
                raise DimensionError(f"negative exponent {exp}")
            c = Fraction(c)
            if c != 0:
                clean[exp] = clean.get(exp, Fraction(0)) + c
                if clean[exp] == 0:
                    del clean[exp]
        self.terms = clean

    # -- constructors ------------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "SparsePoly":
        return cls(nvars, {})

    @classmethod
    def monomial(cls, nvars: int, exp: Exponent, coeff=1) -> "SparsePoly":
        return cls(nvars, {tuple(exp): Fraction(coeff)})

    # -- basic structure ---------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def support(self) -> list[Exponent]:
        return sorted(self.terms, key=grlex_key)

    def items(self) -> list[tuple[Exponent, Fraction]]:
        return [(e, self.terms[e]) for e in self.support()]

    def coeff(self, exp: Exponent) -> Fraction:
        return self.terms.get(tuple(exp), Fraction(0))

    def max_abs_coeff(self) -> Fraction:
        return max((abs(c) for c in self.terms.values()), default=Fraction(0))

    def __add__(self, other: "SparsePoly") -> "SparsePoly":
        if other.nvars != self.nvars:
            raise DimensionError("mixed variable counts")
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return SparsePoly(self.nvars, out)

    def __sub__(self, other: "SparsePoly") -> "SparsePoly":
        return self + other.scale(-1)

    def scale(self, s) -> "SparsePoly":
        s = Fraction(s)
        return SparsePoly(self.nvars, {e: c * s for e, c in self.terms.items()})

    def shift(self, exp: Exponent) -> "SparsePoly":
        """Multiply by the monomial x^exp."""
        exp = tuple(exp)
        return SparsePoly(
            self.nvars,
            {tuple(a + b for a, b in zip(e, exp)): c for e, c in self.terms.items()},
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SparsePoly)
            and self.nvars == other.nvars
            and self.terms == other.terms
        )

    # -- evaluation --------------------------------------------------------
    def evaluate(self, point):
        """Evaluate at a point; exact when every coordinate is int/Fraction."""
        if len(point) != self.nvars:
            raise DimensionError("point has wrong number of coordinates")
        exact = all(isinstance(v, (int, Fraction)) for v in point)
        if exact:
            pt = [Fraction(v) for v in point]
            total = Fraction(0)
            for e, c in self.terms.items():
                m = Fraction(1)
                for v, k in zip(pt, e):
                    if k:
                        m *= v**k
                total += c * m
            return total
        total = 0.0
        for e, c in self.terms.items():
            m = float(c)
            for v, k in zip(point, e):
                if k:
                    m *= float(v) ** k
            total += m
        return total

    def gradient_eval(self, point) -> list[Fraction]:
        """Exact gradient at a rational point."""
        pt = [Fraction(v) for v in point]
        grad = [Fraction(0)] * self.nvars
        for e, c in self.terms.items():
            for i, k in enumerate(e):
                if k == 0:
                    continue
                m = c * k
                for j, v in enumerate(pt):
                    kk = e[j] - (1 if j == i else 0)
                    if kk:
                        m *= v**kk
                grad[i] += m
        return grad

    # -- printing ----------------------------------------------------------
    def to_string(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exp, c in reversed(self.items()):  # leading term first
            mono = "*".join(
                f"x{i + 1}^{k}" if k > 1 else f"x{i + 1}"
                for i, k in enumerate(exp)
                if k > 0
            )
            mag = abs(c)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            if not parts:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(f"+ {body}" if c > 0 else f"- {body}")
        return " ".join(parts)

    def __str__(self) -> str:
        return self.to_string()


# --------------------------------------------------------------------------
# Parsing.  Grammar (whitespace insignificant):
#   poly    := [sign] term (sign term)*
#   term    := rational ('*' factor)* | factor ('*' factor)*
#   factor  := 'x' index ['^' exponent]
#   rational:= digits ['/' digits]
# Variables are x1..x<nvars>; exponents are positive integers.
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(\d+)|(x\d+)|([+\-*/^]))")


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise PolyParseError(
                f"unexpected character {stripped[0]!r}", len(text) - len(stripped)
            )
        if m.group(1):
            tokens.append(("int", m.group(1), m.start(1)))
        elif m.group(2):
            tokens.append(("var", m.group(2), m.start(2)))
        else:
            tokens.append(("op", m.group(3), m.start(3)))
        pos = m.end()
    return tokens


def parse_poly(text: str, nvars: int) -> SparsePoly:
    """Parse polynomial text into a SparsePoly over x1..x<nvars>.

    Raises :class:`PolyParseError` with the character position on bad input.
    """
    if nvars < 1:
        raise DimensionError("nvars must be at least 1")
    toks = _tokenize(text)
    if not toks:
        raise PolyParseError("empty polynomial", 0)
    i = 0
    terms: dict[Exponent, Fraction] = {}

    def peek():
        return toks[i] if i < len(toks) else (None, None, len(text))

    def take():
        nonlocal i
        t = peek()
        i += 1
        return t

    def parse_rational(first: str, pos: int) -> Fraction:
        nonlocal i
        num = int(first)
        if peek()[:2] == ("op", "/"):
            take()
            kind, val, p2 = take()
            if kind != "int":
                raise PolyParseError("expected denominator digits", p2)
            den = int(val)
            if den == 0:
                raise PolyParseError("zero denominator", p2)
            return Fraction(num, den)
        return Fraction(num)

    def parse_factor(name: str, pos: int) -> tuple[int, int]:
        nonlocal i
        idx = int(name[1:])
        if idx < 1 or idx > nvars:
            raise PolyParseError(f"variable {name} out of range 1..{nvars}", pos)
        k = 1
        if peek()[:2] == ("op", "^"):
            take()
            kind, val, p2 = take()
            if kind != "int":
                raise PolyParseError("expected exponent digits", p2)
            k = int(val)
            if k < 1:
                raise PolyParseError("exponent must be a positive integer", p2)
            if k > MAX_EXPONENT:
                raise PolyParseError("exponent too large", p2)
        return idx - 1, k

    def parse_term() -> tuple[Fraction, Exponent]:
        nonlocal i
        kind, val, pos = take()
        exp = [0] * nvars
        if kind == "int":
            coeff = parse_rational(val, pos)
            while peek()[:2] == ("op", "*"):
                take()
                kind2, val2, pos2 = take()
                if kind2 != "var":
                    raise PolyParseError("expected a variable after '*'", pos2)
                j, k = parse_factor(val2, pos2)
                exp[j] += k
        elif kind == "var":
            coeff = Fraction(1)
            j, k = parse_factor(val, pos)
            exp[j] += k
            while peek()[:2] == ("op", "*"):
                take()
                kind2, val2, pos2 = take()
                if kind2 != "var":
                    raise PolyParseError("expected a variable after '*'", pos2)
                j, k = parse_factor(val2, pos2)
                exp[j] += k
        else:
            raise PolyParseError("expected a term", pos)
        return coeff, tuple(exp)

    sign = Fraction(1)
    kind, val, pos = peek()
    if kind == "op" and val in "+-":
        take()
        sign = Fraction(-1) if val == "-" else Fraction(1)
    while True:
        coeff, exp = parse_term()
        terms[exp] = terms.get(exp, Fraction(0)) + sign * coeff
        kind, val, pos = peek()
        if kind is None:
            break
        if kind == "op" and val in "+-":
            take()
            sign = Fraction(-1) if val == "-" else Fraction(1)
            continue
        raise PolyParseError("expected '+' or '-' between terms", pos)
    return SparsePoly(nvars, terms)


# --------------------------------------------------------------------------
# Support analysis
# --------------------------------------------------------------------------


@dataclass
class SupportSplit:
    """Support split into Λ (even exponents with positive coefficients) and
    Γ (everything else), as coefficient maps."""

    lambda_terms: dict[Exponent, Fraction]
    gamma_terms: dict[Exponent, Fraction]


def split_support(f: SparsePoly) -> SupportSplit:
    lam: dict[Exponent, Fraction] = {}
    gam: dict[Exponent, Fraction] = {}
    for e, c in f.items():
        if is_even(e) and c > 0:
            lam[e] = c
        else:
            gam[e] = c
    return SupportSplit(lam, gam)


@dataclass
class NecessityReport:
    """Outcome of the vertex parity/positivity check.

    Every vertex of the support's convex hull must be an even exponent with a
    positive coefficient — a failed vertex makes the polynomial take negative
    values far out along a suitable ray.
    """

    passed: bool
    violations: list[tuple[Exponent, str]]


def necessary_conditions(f: SparsePoly) -> NecessityReport:
    if f.is_zero():
        return NecessityReport(True, [])
    violations = []
    for v in hull_vertices(f.support()):
        if not is_even(v):
            violations.append((v, "odd_vertex"))
        elif f.coeff(v) < 0:
            violations.append((v, "negative_vertex_coeff"))
    return NecessityReport(not violations, violations)


def factor_out_monomial(f: SparsePoly) -> tuple[Exponent, SparsePoly]:
    """Largest monomial x^m dividing f, and the quotient.

    Errors on the zero polynomial (every monomial divides it).
    """
    if f.is_zero():
        raise DimensionError("cannot factor a monomial out of the zero polynomial")
    support = f.support()
    m = tuple(min(e[i] for e in support) for i in range(f.nvars))
    quot = SparsePoly(
        f.nvars,
        {tuple(a - b for a, b in zip(e, m)): c for e, c in f.terms.items()},
    )
    return m, quot


def flip_signs(f: SparsePoly, signs) -> SparsePoly:
    """Substitute x_i -> s_i x_i for s ∈ {±1}ⁿ (an involution)."""
    s = tuple(int(v) for v in signs)
    if len(s) != f.nvars or any(v not in (-1, 1) for v in s):
        raise DimensionError("signs must be a ±1 vector of length nvars")
    out = {}
    for e, c in f.terms.items():
        parity = 1
        for si, k in zip(s, e):
            if si < 0 and k % 2 == 1:
                parity = -parity
        out[e] = c * parity
    return SparsePoly(f.nvars, out)


def substitute_powers(f: SparsePoly, k: int) -> SparsePoly:
    """Substitute x_i -> x_i^k, i.e. multiply every exponent by k."""
    if k < 1:
        raise DimensionError("power substitution needs k >= 1")
    return SparsePoly(
        f.nvars, {tuple(k * v for v in e): c for e, c in f.terms.items()}
    )


@dataclass(frozen=True)
class SignAssignment:
    signs: tuple[int, ...]


def find_sign_assignment(f: SparsePoly) -> SignAssignment | None:
    """Search {±1}ⁿ for signs making every non-Λ coefficient negative.

    Exhaustive over 2ⁿ candidates (n is small here); returns None when no
    assignment exists.  Even non-Λ exponents must already carry negative
    coefficients since sign flips cannot change them.
    """
    gamma = split_support(f).gamma_terms
    if not gamma:
        return SignAssignment(tuple([1] * f.nvars))
    for bits in range(2**f.nvars):
        s = tuple(-1 if (bits >> i) & 1 else 1 for i in range(f.nvars))
        ok = True
        for e, c in gamma.items():
            parity = 1
            for si, k in zip(s, e):
                if si < 0 and k % 2 == 1:
                    parity = -parity
            if c * parity >= 0:
                ok = False
                break
        if ok:
            return SignAssignment(s)
    return None
