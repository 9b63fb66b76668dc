"""Circuit polynomials and the exact nonnegativity trichotomy.

A circuit polynomial is Σ_i c_i x^{α_i} − d x^β with positive c_i, the α_i
affinely independent even lattice points, and β in the relative interior of
their convex hull.  Its nonnegativity is decided exactly by comparing |d|
against the circuit number Θ = Π (c_i/λ_i)^{λ_i}: floats prefilter the
comparison, and anything near the boundary is settled by clearing the
rational exponents and comparing big-integer powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import IllConditionedError, NotCircuitError
from .geometry import barycentric, grlex_key
from .poly import Exponent, SparsePoly, is_even


def _log_fraction(q: Fraction) -> float:
    """log of a positive Fraction, safe for huge numerators/denominators."""
    if q <= 0:
        raise ValueError("log of nonpositive rational")
    return math.log(q.numerator) - math.log(q.denominator)


@dataclass(frozen=True)
class CircuitPoly:
    """Validated circuit polynomial.

    ``lambdas`` are recomputed from the trellis and inner exponent on
    construction — they are never taken on trust, which is what lets the
    verifier reuse this class independently of how a certificate was made.
    """

    nvars: int
    trellis: tuple[Exponent, ...]
    coeffs: tuple[Fraction, ...]
    beta: Exponent
    d: Fraction
    lambdas: tuple[Fraction, ...]

    @classmethod
    def make(cls, nvars, trellis, coeffs, beta, d) -> "CircuitPoly":
        pairs = sorted(
            zip((tuple(int(v) for v in p) for p in trellis), map(Fraction, coeffs)),
            key=lambda pc: grlex_key(pc[0]),
        )
        tr = tuple(p for p, _ in pairs)
        cs = tuple(c for _, c in pairs)
        beta = tuple(int(v) for v in beta)
        if len(set(tr)) != len(tr):
            raise NotCircuitError("trellis points must be distinct")
        for p in tr:
            if len(p) != nvars or any(v < 0 for v in p) or not is_even(p):
                raise NotCircuitError(f"trellis point {p} is not an even lattice point")
        if any(c <= 0 for c in cs):
            raise NotCircuitError("outer coefficients must be positive")
        if len(beta) != nvars or any(v < 0 for v in beta):
            raise NotCircuitError("inner exponent must be a nonnegative lattice point")
        if beta in tr:
            raise NotCircuitError("inner exponent must not be a trellis member")
        bc = barycentric(tr, beta)
        if bc.kind != "interior":
            raise NotCircuitError(
                "inner exponent is not in the relative interior of the trellis hull"
            )
        return cls(nvars, tr, cs, beta, Fraction(d), bc.lambdas)

    def to_poly(self) -> SparsePoly:
        terms = {p: c for p, c in zip(self.trellis, self.coeffs)}
        terms[self.beta] = terms.get(self.beta, Fraction(0)) - self.d
        return SparsePoly(self.nvars, terms)


@dataclass(frozen=True)
class CircuitNumber:
    """Circuit number Θ as a float log plus the exact data defining it."""

    log_value: float
    coeffs: tuple[Fraction, ...]
    lambdas: tuple[Fraction, ...]

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def circuit_number(circuit: CircuitPoly) -> CircuitNumber:
    log_theta = sum(
        float(l) * (_log_fraction(c) - _log_fraction(l))
        for c, l in zip(circuit.coeffs, circuit.lambdas)
    )
    return CircuitNumber(log_theta, circuit.coeffs, circuit.lambdas)


def _lcm_denominator(lambdas) -> int:
    n = 1
    for l in lambdas:
        n = n * l.denominator // math.gcd(n, l.denominator)
    return n


def theta_power(coeffs, lambdas, n: int) -> Fraction:
    """Θ^N as an exact rational, for N a common multiple of λ denominators."""
    out = Fraction(1)
    for c, l in zip(coeffs, lambdas):
        k = l * n
        assert k.denominator == 1
        out *= (c / l) ** int(k)
    return out


def theta_compare(coeffs, lambdas, d) -> str:
    """Exact trichotomy of |d| against Θ: "d_below", "d_equal" or "d_above".

    A float comparison of logarithms answers clear cases; within 1e-9 of the
    boundary the decision falls through to exact big-integer powers, so the
    returned verdict is always the exact one.
    """
    coeffs = tuple(Fraction(c) for c in coeffs)
    lambdas = tuple(Fraction(l) for l in lambdas)
    d = Fraction(d)
    if d == 0:
        return "d_below"
    log_theta = sum(
        float(l) * (_log_fraction(c) - _log_fraction(l))
        for c, l in zip(coeffs, lambdas)
    )
    log_d = _log_fraction(abs(d))
    if abs(log_d - log_theta) > 1e-9:
        return "d_above" if log_d > log_theta else "d_below"
    n = _lcm_denominator(lambdas)
    lhs = abs(d) ** n
    rhs = theta_power(coeffs, lambdas, n)
    if lhs == rhs:
        return "d_equal"
    return "d_above" if lhs > rhs else "d_below"


def exact_theta(coeffs, lambdas) -> Fraction | None:
    """Θ itself when it happens to be rational, else None.

    Θ^N is always rational; Θ is rational exactly when that value has an
    integral N-th root on both numerator and denominator.
    """
    coeffs = tuple(Fraction(c) for c in coeffs)
    lambdas = tuple(Fraction(l) for l in lambdas)
    n = _lcm_denominator(lambdas)
    power = theta_power(coeffs, lambdas, n)

    def iroot(v: int, k: int) -> int | None:
        """Exact integer k-th root of v, or None (integer Newton, no floats)."""
        if v < 2:
            return v
        x = 1 << ((v.bit_length() + k - 1) // k)  # upper bound on the root
        while True:
            t = ((k - 1) * x + v // x ** (k - 1)) // k
            if t >= x:
                break
            x = t
        return x if x**k == v else None

    num = iroot(power.numerator, n)
    den = iroot(power.denominator, n)
    if num is None or den is None:
        return None
    return Fraction(num, den)


def is_nonnegative_circuit(circuit: CircuitPoly) -> bool:
    """Exact nonnegativity: even β needs d ≤ Θ, odd β needs |d| ≤ Θ."""
    if is_even(circuit.beta):
        if circuit.d <= 0:
            return True
        return theta_compare(circuit.coeffs, circuit.lambdas, circuit.d) != "d_above"
    return theta_compare(circuit.coeffs, circuit.lambdas, circuit.d) != "d_above"


def circuit_zero(circuit: CircuitPoly) -> tuple[float, ...]:
    """The positive zero x_* of a boundary circuit (d = Θ exactly).

    At the boundary the circuit vanishes exactly where all scaled outer
    terms balance: c_i x^{α_i} = λ_i Θ x^β.  Taking logs turns that into a
    linear system in y = log x, solved by least squares; coordinates
    transverse to the affine span of the trellis come out as 1 because the
    minimum-norm solution lies in the row space.  Residuals beyond 1e-10
    (relative) raise :class:`IllConditionedError`.
    """
    if circuit.d <= 0 or theta_compare(circuit.coeffs, circuit.lambdas, circuit.d) != "d_equal":
        raise NotCircuitError("circuit_zero needs d = Θ with d > 0")
    theta = circuit_number(circuit)
    rows = np.array(
        [[float(a - b) for a, b in zip(p, circuit.beta)] for p in circuit.trellis]
    )
    rhs = np.array(
        [
            theta.log_value + _log_fraction(l) - _log_fraction(c)
            for c, l in zip(circuit.coeffs, circuit.lambdas)
        ]
    )
    y, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    x = tuple(float(v) for v in np.exp(y))

    # Balancing check: all c_i x^{α_i} / λ_i agree to 1e-10 relative.
    ratios = []
    for p, c, l in zip(circuit.trellis, circuit.coeffs, circuit.lambdas):
        m = float(c) / float(l)
        for xv, k in zip(x, p):
            if k:
                m *= xv**k
        ratios.append(m)
    mid = max(ratios)
    if mid <= 0 or (max(ratios) - min(ratios)) > 1e-10 * mid:
        raise IllConditionedError("balancing ratios disagree beyond tolerance")
    scale = sum(ratios) * max(float(l) for l in circuit.lambdas)
    val = circuit.to_poly().evaluate(x)
    if abs(val) > 1e-10 * max(1.0, scale):
        raise IllConditionedError("zero candidate does not annihilate the circuit")
    return x
