"""Mediated sets, sums of binomial squares, and support-preserving rewrites.

A trellis A admits mediated sets: point sets M with A ⊆ M such that every
non-vertex member of M is the average of two distinct even members.  The
largest such set inside conv(A) governs when a nonnegative circuit
polynomial is a sum of binomial squares (SBS), and the SBS form is what
lets a certificate be rewritten onto the original support: squares are
regrouped into "banana" polynomials (many outer terms, one inner term),
each of which the single-inner-term decomposer handles on its own support.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .circuits import CircuitPoly, is_nonnegative_circuit
from .decompose import SoncCertificate, _set_residual_mode, _xpow, decompose
from .errors import AssemblyError, DimensionError
from .geometry import (
    LinearSystem,
    Trellis,
    grlex_key,
    in_convex_hull,
    is_even_point,
    nonneg_solve,
)
from .linalg import Vec, rationalize
from .poly import Exponent, SparsePoly, substitute_powers

__all__ = [
    "MediatedSet",
    "BinomialSquare",
    "SbsCertificate",
    "BananaPoly",
    "lattice_points",
    "maximal_mediated_set",
    "is_h_trellis",
    "sbs_decompose_circuit",
    "sbs_from_sonc",
    "banana_rewrite",
    "resupport",
]

# Bounding-box cap for lattice enumeration.  Scaled trellises grow the box
# multiplicatively, so an explicit guard beats an unbounded loop.
DEFAULT_LATTICE_CAP = 200_000


def lattice_points(points, *, cap: int = DEFAULT_LATTICE_CAP) -> list[Exponent]:
    """All nonnegative lattice points in the convex hull of ``points``.

    Enumerates the bounding box and keeps hull members (exact test per
    point).  Raises :class:`DimensionError` when the box exceeds ``cap``.
    """
    pts = [tuple(int(v) for v in p) for p in points]
    if not pts:
        return []
    n = len(pts[0])
    lo = [min(p[i] for p in pts) for i in range(n)]
    hi = [max(p[i] for p in pts) for i in range(n)]
    box = 1
    for a, b in zip(lo, hi):
        box *= b - a + 1
        if box > cap:
            raise DimensionError(
                f"lattice enumeration box has {box}+ points (cap {cap})"
            )
    found: list[Exponent] = []
    stack = [()]
    for i in range(n):
        stack = [pre + (v,) for pre in stack for v in range(lo[i], hi[i] + 1)]
    for p in stack:
        if in_convex_hull(pts, p):
            found.append(p)
    found.sort(key=grlex_key)
    return found


@dataclass(frozen=True)
class MediatedSet:
    """A trellis together with a mediated set containing it.

    Every member outside the trellis is the average of two distinct even
    members, and all members lie in the trellis hull.
    """

    trellis: Trellis
    members: tuple[Exponent, ...]

    def __contains__(self, p) -> bool:
        return tuple(int(v) for v in p) in set(self.members)

    def __len__(self) -> int:
        return len(self.members)


def _has_average_witness(p: Exponent, evens: set) -> bool:
    double = tuple(2 * v for v in p)
    for e in evens:
        other = tuple(d - ev for d, ev in zip(double, e))
        if other != e and other in evens:
            return True
    return False


def maximal_mediated_set(
    trellis,
    *,
    order_seed: int | None = None,
    cap: int = DEFAULT_LATTICE_CAP,
) -> MediatedSet:
    """Largest mediated set of the trellis: the downward fixed point.

    Start from every lattice point of the hull and delete non-vertex points
    that are not the average of two distinct even members, until stable.
    The result is the greatest fixed point, so the deletion order cannot
    matter; ``order_seed`` shuffles it into one-at-a-time random order,
    which exists purely so tests can confirm that invariance.
    """
    t = trellis if isinstance(trellis, Trellis) else Trellis.of(trellis)
    anchors = set(t.points)
    members = set(lattice_points(t.points, cap=cap))
    rng = random.Random(order_seed) if order_seed is not None else None
    while True:
        evens = {m for m in members if is_even_point(m)}
        doomed = [
            p
            for p in members
            if p not in anchors and not _has_average_witness(p, evens)
        ]
        if not doomed:
            break
        if rng is None:
            members.difference_update(doomed)
        else:
            members.discard(rng.choice(doomed))
    return MediatedSet(t, tuple(sorted(members, key=grlex_key)))


def is_h_trellis(trellis, *, cap: int = DEFAULT_LATTICE_CAP) -> bool:
    """Whether the maximal mediated set is all lattice points of the hull."""
    t = trellis if isinstance(trellis, Trellis) else Trellis.of(trellis)
    full = lattice_points(t.points, cap=cap)
    return len(maximal_mediated_set(t, cap=cap).members) == len(full)


# ---------------------------------------------------------------------------
# Binomial squares


@dataclass(frozen=True)
class BinomialSquare:
    """weight · (a·x^u − b·x^v)², all scalars rational.

    The weight keeps the representation exact: folding it into a and b
    would need square roots.  b = 0 (or a = 0) degenerates to a monomial
    square, the only case where u and v may coincide.
    """

    weight: Fraction
    a: Fraction
    u: Exponent
    b: Fraction
    v: Exponent

    def __post_init__(self):
        if self.weight <= 0:
            raise AssemblyError("square weight must be positive")
        if self.a == 0 and self.b == 0:
            raise AssemblyError("square must have a nonzero side")
        if self.a != 0 and self.b != 0 and self.u == self.v:
            raise AssemblyError("two-sided square needs distinct exponents")
        if any(x < 0 for x in self.u) or any(x < 0 for x in self.v):
            raise AssemblyError("square exponents must be nonnegative")

    def expand(self) -> SparsePoly:
        n = len(self.u)
        w, a, b = self.weight, self.a, self.b
        terms: dict[Exponent, Fraction] = {}
        if a != 0:
            uu = tuple(2 * x for x in self.u)
            terms[uu] = terms.get(uu, Fraction(0)) + w * a * a
        if b != 0:
            vv = tuple(2 * x for x in self.v)
            terms[vv] = terms.get(vv, Fraction(0)) + w * b * b
        if a != 0 and b != 0:
            mid = tuple(x + y for x, y in zip(self.u, self.v))
            terms[mid] = terms.get(mid, Fraction(0)) - 2 * w * a * b
        return SparsePoly(n, terms)


@dataclass
class SbsCertificate:
    """A list of binomial squares claimed to sum to ``claimed_sum``.

    epsilon None means the expansion matches exactly; otherwise it bounds
    the relative coefficient residual (against the largest coefficient of
    the claimed sum).
    """

    nvars: int
    squares: list[BinomialSquare]
    claimed_sum: SparsePoly
    epsilon: float | None = None

    def expansion(self) -> SparsePoly:
        total = SparsePoly.zero(self.nvars)
        for s in self.squares:
            total = total + s.expand()
        return total

    def size(self) -> int:
        return len(self.squares)


def _balancing_point(circuit: CircuitPoly) -> tuple[Fraction, ...]:
    """Rational point where all outer terms balance: c_i x^{α_i} ∝ λ_i.

    Solved in log coordinates (least squares over y and the common log
    mass), then rationalized coordinate-wise.  The point is exact whenever
    the true balancing point is a modest rational — which holds for every
    circuit this package assembles itself — and a close approximation
    otherwise; callers check the resulting leftovers exactly either way.
    """
    rows = np.array(
        [
            [float(a) for a in p] + [-1.0]
            for p in circuit.trellis
        ]
    )
    rhs = np.array(
        [
            float(np.log(float(l))) - float(np.log(float(c)))
            for c, l in zip(circuit.coeffs, circuit.lambdas)
        ]
    )
    sol, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    return tuple(rationalize(float(v)) for v in np.exp(sol[:-1]))


def _unit_flow(
    mediated: MediatedSet, lambdas: dict, beta: Exponent, inner_sign: int
) -> tuple[list, Vec] | None:
    """Binomial-square flow for the unit object Σ λ_i y^{α_i} − σ y^β.

    Columns are pairs of distinct even members whose midpoint is an even
    member or β (other pairs can never carry weight) plus one slack per
    even member for leftover monomial mass.  Rows are those points, made
    equal to λ at trellis points, −σ at β, 0 elsewhere.  Returns the pair
    list and the solved weights, or None if no flow exists.
    """
    members = set(mediated.members)
    evens = sorted((m for m in members if is_even_point(m)), key=grlex_key)
    row_points = list(evens)
    if beta not in members:
        return None
    if not is_even_point(beta):
        row_points.append(beta)
    row_of = {p: i for i, p in enumerate(row_points)}

    pairs = []
    for i, p in enumerate(evens):
        for q in evens[i + 1 :]:
            mid = tuple((a + b) // 2 for a, b in zip(p, q))
            if mid in members and (is_even_point(mid) or mid == beta):
                pairs.append((p, q, mid))

    nrows = len(row_points)
    cols = len(pairs) + len(evens)
    matrix = [[Fraction(0)] * cols for _ in range(nrows)]
    for j, (p, q, mid) in enumerate(pairs):
        matrix[row_of[p]][j] += 1
        matrix[row_of[q]][j] += 1
        cross = -2 if mid != beta else -2 * inner_sign
        matrix[row_of[mid]][j] += cross
    for j, m in enumerate(evens):
        matrix[row_of[m]][len(pairs) + j] = Fraction(1)

    rhs = [Fraction(0)] * nrows
    for p, lam in lambdas.items():
        rhs[row_of[p]] += lam
    rhs[row_of[beta]] += -inner_sign

    res = nonneg_solve(LinearSystem(matrix, rhs, row_labels=row_points))
    if not res.feasible:
        return None
    return pairs, res.x


def sbs_decompose_circuit(
    circuit: CircuitPoly,
    mediated: MediatedSet | None = None,
    *,
    point=None,
) -> SbsCertificate:
    """Write a nonnegative circuit polynomial as a sum of binomial squares.

    Requires the inner exponent to belong to the mediated set (computed
    from the circuit's own trellis when not supplied).  The construction
    scales the circuit to a unit object at its balancing point, routes the
    inner mass through even members by an exact flow, and maps each unit
    square back; interior circuits shed the surplus as monomial squares.
    ``point`` overrides the recovered balancing point.
    """
    if not is_nonnegative_circuit(circuit):
        raise AssemblyError("circuit is not nonnegative; it has no SBS form")
    if mediated is None:
        mediated = maximal_mediated_set(Trellis.of(circuit.trellis, circuit.nvars))
    elif set(mediated.trellis.points) != set(circuit.trellis):
        raise AssemblyError("mediated set belongs to a different trellis")

    target = circuit.to_poly()
    squares: list[BinomialSquare] = []

    def monomial(exp: Exponent, mass: Fraction):
        if mass == 0:
            return
        half = tuple(v // 2 for v in exp)
        squares.append(BinomialSquare(mass, Fraction(1), half, Fraction(0), half))

    if circuit.d == 0 or (circuit.d < 0 and is_even_point(circuit.beta)):
        for p, c in zip(circuit.trellis, circuit.coeffs):
            monomial(p, c)
        if circuit.d < 0:
            monomial(circuit.beta, -circuit.d)
        return SbsCertificate(circuit.nvars, squares, target)

    if circuit.beta not in mediated:
        raise AssemblyError(
            "inner exponent is outside the mediated set; no SBS exists over it"
        )

    inner_sign = 1 if circuit.d > 0 else -1
    x = tuple(map(Fraction, point)) if point is not None else _balancing_point(circuit)
    if any(v <= 0 for v in x):
        raise AssemblyError("balancing point must be positive")
    mass = abs(circuit.d) * _xpow(x, circuit.beta)

    # Surplus above the balanced part stays behind as monomial squares.
    leftovers: list[tuple[Exponent, Fraction]] = []
    drift = Fraction(0)
    for p, c, lam in zip(circuit.trellis, circuit.coeffs, circuit.lambdas):
        l = c - lam * mass / _xpow(x, p)
        if l >= 0:
            leftovers.append((p, l))
        else:
            drift = max(drift, -l / c)
            leftovers.append((p, Fraction(0)))

    lambdas = dict(zip(circuit.trellis, circuit.lambdas))
    flow = _unit_flow(mediated, lambdas, circuit.beta, inner_sign)
    if flow is None:
        raise AssemblyError("binomial-square flow is infeasible")
    pairs, weights = flow

    for j, (p, q, mid) in enumerate(pairs):
        w = weights[j]
        if w == 0:
            continue
        u = tuple(v // 2 for v in p)
        v = tuple(t // 2 for t in q)
        a = 1 / _xpow(x, u)
        b = 1 / _xpow(x, v)
        if mid == circuit.beta and inner_sign < 0:
            b = -b
        squares.append(BinomialSquare(mass * w, a, u, b, v))
    evens = [m for m in mediated.members if is_even_point(m)]
    for j, m in enumerate(evens):
        s = weights[len(pairs) + j]
        monomial(m, mass * s / _xpow(x, m))
    for p, l in leftovers:
        monomial(p, l)

    cert = SbsCertificate(circuit.nvars, squares, target)
    if drift > 0:
        resid = target - cert.expansion()
        cert.epsilon = float(resid.max_abs_coeff() / target.max_abs_coeff())
    return cert


def sbs_from_sonc(cert: SoncCertificate, k: int) -> SbsCertificate:
    """Sum of binomial squares for cert's polynomial with x replaced by x^k.

    Stretching every exponent by k ≥ nvars turns each circuit's trellis
    into one whose mediated set reaches its inner point, so each circuit
    gains an SBS form; monomial squares carry over directly.
    """
    if k < cert.nvars:
        raise DimensionError("power substitution needs k >= number of variables")
    squares: list[BinomialSquare] = []
    eps: float | None = None
    for c in cert.circuits:
        scaled = CircuitPoly.make(
            c.nvars,
            [tuple(k * v for v in p) for p in c.trellis],
            c.coeffs,
            tuple(k * v for v in c.beta),
            c.d,
        )
        part = sbs_decompose_circuit(scaled)
        squares.extend(part.squares)
        if part.epsilon is not None:
            eps = max(eps or 0.0, part.epsilon)
    for exp, coeff in cert.monomial_squares:
        half = tuple(k * v // 2 for v in exp)
        squares.append(BinomialSquare(coeff, Fraction(1), half, Fraction(0), half))
    claimed = substitute_powers(cert.claimed_sum(), k)
    return SbsCertificate(cert.nvars, squares, claimed, eps)


# ---------------------------------------------------------------------------
# Banana rewrite


@dataclass(frozen=True)
class BananaPoly:
    """Positive even outer terms plus a single inner term −d·x^β.

    An even inner exponent forces d > 0 (otherwise the term would just be
    another outer monomial); odd inner exponents take either sign.
    """

    nvars: int
    outer: tuple[tuple[Exponent, Fraction], ...]
    beta: Exponent
    d: Fraction

    def __post_init__(self):
        if self.d == 0:
            raise AssemblyError("banana needs a nonzero inner term")
        if is_even_point(self.beta) and self.d < 0:
            raise AssemblyError("even inner exponent requires positive d")
        for p, c in self.outer:
            if not is_even_point(p) or c <= 0:
                raise AssemblyError("outer terms must be positive at even points")

    def to_poly(self) -> SparsePoly:
        terms: dict[Exponent, Fraction] = {}
        for p, c in self.outer:
            terms[p] = terms.get(p, Fraction(0)) + c
        terms[self.beta] = terms.get(self.beta, Fraction(0)) - self.d
        return SparsePoly(self.nvars, terms)


class _Banana:
    __slots__ = ("outer", "beta", "d")

    def __init__(self, outer: dict, beta: Exponent, d: Fraction):
        self.outer = outer
        self.beta = beta
        self.d = d


def _banana_phases(
    squares: list[BinomialSquare], h: SparsePoly
) -> tuple[dict, list[_Banana]]:
    """Regroup squares into loose monomial mass plus one-inner-term bananas.

    Stage one shreds each square: both ends are positive mass at even
    points, the cross term opens a banana (or joins the pool when it is
    positive at an even point).  Stage two repairs every point against the
    actual sum h: inner mass beyond what h carries is annihilated against
    positive mass at the same point, and whoever donated that positive mass
    inherits the shed banana's outer share.  Each point needs one repair
    because a repair only relabels mass elsewhere, never moves it between
    points.
    """
    pool: dict[Exponent, Fraction] = {}
    bananas: list[_Banana] = []

    def pool_add(p: Exponent, m: Fraction):
        if m != 0:
            pool[p] = pool.get(p, Fraction(0)) + m

    for sq in squares:
        w, a, b = sq.weight, sq.a, sq.b
        if a == 0 or b == 0:
            side, exp = (a, sq.u) if a != 0 else (b, sq.v)
            pool_add(tuple(2 * v for v in exp), w * side * side)
            continue
        p = tuple(2 * v for v in sq.u)
        q = tuple(2 * v for v in sq.v)
        mid = tuple(x + y for x, y in zip(sq.u, sq.v))
        cross = -2 * w * a * b
        if cross > 0 and is_even_point(mid):
            pool_add(p, w * a * a)
            pool_add(q, w * b * b)
            pool_add(mid, cross)
            continue
        outer: dict[Exponent, Fraction] = {}
        outer[p] = outer.get(p, Fraction(0)) + w * a * a
        outer[q] = outer.get(q, Fraction(0)) + w * b * b
        bananas.append(_Banana(outer, mid, -cross))

    points = set(pool) | {b.beta for b in bananas}
    for b in bananas:
        points.update(b.outer)

    def fold_self(b: _Banana):
        # Outer mass sitting on the banana's own inner point nets out.
        have = b.outer.pop(b.beta, Fraction(0))
        if have and b.d > 0:
            if have >= b.d:
                rest = have - b.d
                if rest:
                    b.outer[b.beta] = rest
                b.d = Fraction(0)
            else:
                b.d -= have

    for q in sorted(points, key=grlex_key):
        for b in bananas:
            if b.beta == q:
                fold_self(b)
        hq = h.coeff(q)
        sinks = [b for b in bananas if b.beta == q and b.d > 0]
        total = sum((b.d for b in sinks), Fraction(0))
        excess = total - max(Fraction(0), -hq)
        if excess == 0:
            continue
        # Every sink sheds the same fraction of itself; the shed outer mass
        # follows the positive mass that annihilates the shed inner mass, so
        # a donating banana absorbs its proportional share (this re-rooting
        # is what keeps the surviving bananas as fat as their inner terms).
        phi = excess / total
        shed: dict[Exponent, Fraction] = {}
        for b in sinks:
            for p, m in b.outer.items():
                shed[p] = shed.get(p, Fraction(0)) + phi * m
                b.outer[p] = (1 - phi) * m
            b.d = (1 - phi) * b.d

        def receive(share: Fraction, target: dict | None):
            if share == 0:
                return
            for p, m in shed.items():
                piece = share * m
                if piece == 0:
                    continue
                if target is None:
                    pool_add(p, piece)
                else:
                    target[p] = target.get(p, Fraction(0)) + piece

        need = excess
        take = min(need, pool.get(q, Fraction(0)))
        if take:
            pool[q] -= take
            receive(take / excess, None)
            need -= take
        for b in bananas:
            if need == 0:
                break
            if b.beta == q:
                continue
            have = b.outer.get(q, Fraction(0))
            take = min(need, have)
            if take:
                b.outer[q] = have - take
                receive(take / excess, b.outer)
                need -= take
        for b in bananas:
            if need == 0:
                break
            if b.beta == q and b.d < 0:
                take = min(need, -b.d)
                if take:
                    b.d += take
                    receive(take / excess, b.outer)
                    need -= take
        if need != 0:
            raise AssemblyError("banana repair lost mass; expansion disagrees")

    merged: dict[Exponent, _Banana] = {}
    for b in bananas:
        fold_self(b)
        if b.d == 0:
            for p, m in b.outer.items():
                pool_add(p, m)
            continue
        b.outer = {p: m for p, m in b.outer.items() if m != 0}
        if b.beta in merged:
            tgt = merged[b.beta]
            for p, m in b.outer.items():
                tgt.outer[p] = tgt.outer.get(p, Fraction(0)) + m
            tgt.d += b.d
        else:
            merged[b.beta] = b
    pool = {p: m for p, m in pool.items() if m != 0}
    out = [merged[k] for k in sorted(merged, key=grlex_key)]
    return pool, out


def banana_rewrite(sbs: SbsCertificate) -> list[BananaPoly]:
    """Regroup an SBS into banana polynomials summing to its expansion.

    Outer terms land on even points the expansion actually carries, inner
    terms on its remaining support; loose monomial mass is absorbed into
    the first banana.  An expansion with no inner terms has nothing to
    rewrite and raises :class:`AssemblyError`.
    """
    h = sbs.expansion()
    pool, raw = _banana_phases(sbs.squares, h)
    if not raw:
        raise AssemblyError("expansion has no inner terms; nothing to rewrite")
    first = raw[0]
    for p, m in pool.items():
        first.outer[p] = first.outer.get(p, Fraction(0)) + m
    out = [
        BananaPoly(
            h.nvars,
            tuple(sorted(b.outer.items(), key=lambda t: grlex_key(t[0]))),
            b.beta,
            b.d,
        )
        for b in raw
    ]
    total = SparsePoly.zero(h.nvars)
    for b in out:
        total = total + b.to_poly()
    if not (total - h).is_zero():
        raise AssemblyError("banana rewrite does not re-sum to the expansion")
    return out


# ---------------------------------------------------------------------------
# Support-preserving rewrite


def _divide_exponents(terms, k: int, n: int):
    kept: dict[Exponent, Fraction] = {}
    strays = Fraction(0)
    for exp, c in terms:
        if all(v % k == 0 for v in exp):
            e = tuple(v // k for v in exp)
            kept[e] = kept.get(e, Fraction(0)) + c
        else:
            strays += abs(c)
    return kept, strays


def resupport(f: SparsePoly, cert: SoncCertificate) -> SoncCertificate:
    """Rewrite a certificate for f onto f's own support.

    Pipeline: stretch exponents by an odd k = 2n+1 (parity- and
    nonnegativity-preserving), express every circuit as binomial squares,
    regroup the squares into bananas supported on the stretched support,
    decompose each banana with the single-inner-term pipeline, shrink the
    exponents back, and prune the pieces to a basic solution so at most
    |supp(f)| remain.
    """
    n = f.nvars
    k = 2 * n + 1
    sbs = sbs_from_sonc(cert, k)
    h = sbs.expansion()
    pool, bananas = _banana_phases(sbs.squares, h)

    circuits: list[CircuitPoly] = []
    square_mass: dict[Exponent, Fraction] = {}
    stray_mass = Fraction(0)

    kept, strays = _divide_exponents(pool.items(), k, n)
    stray_mass += strays
    for e, m in kept.items():
        square_mass[e] = square_mass.get(e, Fraction(0)) + m

    for b in bananas:
        terms = list(b.outer.items()) + [(b.beta, -b.d)]
        kept, strays = _divide_exponents(terms, k, n)
        stray_mass += strays
        g = SparsePoly(n, kept)
        if g.is_zero():
            continue
        outcome = decompose(g)
        if outcome.verdict != "SONC":
            raise AssemblyError(
                f"banana piece was not certified ({outcome.verdict}); "
                "cannot preserve support"
            )
        circuits.extend(outcome.certificate.circuits)
        for e, m in outcome.certificate.monomial_squares:
            square_mass[e] = square_mass.get(e, Fraction(0)) + m

    squares = sorted(
        ((e, m) for e, m in square_mass.items() if m != 0),
        key=lambda t: grlex_key(t[0]),
    )

    # Carathéodory pruning: a basic solution over the pieces' coefficient
    # vectors keeps at most one piece per support point.
    pieces: list[SparsePoly] = [c.to_poly() for c in circuits]
    pieces += [SparsePoly.monomial(n, e, m) for e, m in squares]
    claimed = SparsePoly.zero(n)
    for p in pieces:
        claimed = claimed + p
    rows = claimed.support()
    row_of = {e: i for i, e in enumerate(rows)}
    matrix = [[Fraction(0)] * len(pieces) for _ in rows]
    for j, p in enumerate(pieces):
        for e, c in p.items():
            matrix[row_of[e]][j] = c
    rhs = [claimed.coeff(e) for e in rows]
    res = nonneg_solve(LinearSystem(matrix, rhs, row_labels=rows))
    if res.feasible:
        weights = res.x
    else:  # pragma: no cover - the all-ones point is always feasible
        weights = [Fraction(1)] * len(pieces)

    final = SoncCertificate(n)
    for j, c in enumerate(circuits):
        w = weights[j]
        if w == 0:
            continue
        final.circuits.append(
            CircuitPoly.make(n, c.trellis, [w * x for x in c.coeffs], c.beta, w * c.d)
        )
    for j, (e, m) in enumerate(squares):
        w = weights[len(circuits) + j]
        if w != 0:
            final.monomial_squares.append((e, w * m))

    allowed = set(f.support())
    tiny = f.max_abs_coeff() * Fraction(1, 10**8)
    kept_squares = []
    for e, m in final.monomial_squares:
        if e in allowed:
            kept_squares.append((e, m))
        elif m <= tiny:
            stray_mass += m
        else:
            raise AssemblyError("rewritten monomial square escaped the support")
    final.monomial_squares = kept_squares
    for c in final.circuits:
        for p in (*c.trellis, c.beta):
            if p not in allowed:
                raise AssemblyError("rewritten circuit escaped the support")

    _set_residual_mode(final, f)
    if stray_mass:
        final.slack["stray_mass"] = float(stray_mass)
    return final
