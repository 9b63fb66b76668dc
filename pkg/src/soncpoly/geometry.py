"""Exact polytope geometry over lattice point sets.

All predicates here are decided in rational arithmetic via the exact simplex
in :mod:`soncpoly.linalg`; no floating point enters any verdict.  Points are
tuples of ints (or Fractions where interior constructions need them), always
compared and listed in graded lexicographic order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DimensionError
from .linalg import (
    Mat,
    SimplexResult,
    Vec,
    lp_solve,
    nullspace,
    rank,
    rref,
    solve_linear,
)

Point = tuple  # tuple[int | Fraction, ...]


def grlex_key(p: Point):
    """Sort key for graded lexicographic order (total degree, then lex)."""
    return (sum(p), tuple(p))


def _fracpt(p: Point) -> tuple[Fraction, ...]:
    return tuple(Fraction(v) for v in p)


def is_even_point(p: Point) -> bool:
    return all(isinstance(v, int) or Fraction(v).denominator == 1 for v in p) and all(
        int(v) % 2 == 0 for v in p
    )


@dataclass(frozen=True)
class PointSet:
    """Deduplicated, graded-lex ordered finite set of points in n variables."""

    nvars: int
    points: tuple[Point, ...]

    @classmethod
    def of(cls, points, nvars: int | None = None) -> "PointSet":
        pts = [tuple(p) for p in points]
        if not pts and nvars is None:
            raise DimensionError("empty point set needs an explicit nvars")
        n = nvars if nvars is not None else len(pts[0])
        for p in pts:
            if len(p) != n:
                raise DimensionError(f"point {p} does not have {n} coordinates")
        uniq = sorted(set(pts), key=grlex_key)
        return cls(n, tuple(uniq))

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class Trellis:
    """Affinely independent set of even lattice points (simplex vertices)."""

    nvars: int
    points: tuple[Point, ...]

    @classmethod
    def of(cls, points, nvars: int | None = None) -> "Trellis":
        ps = PointSet.of(points, nvars)
        if len(ps.points) != len(list(points)):
            raise DimensionError("trellis points must be distinct")
        for p in ps.points:
            if not is_even_point(p) or any(int(v) < 0 for v in p):
                raise DimensionError(f"trellis point {p} is not even and nonnegative")
        if affine_dimension(ps.points) != len(ps.points) - 1:
            raise DimensionError("trellis points must be affinely independent")
        return cls(ps.nvars, tuple(tuple(int(v) for v in p) for p in ps.points))

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class BarycentricCoords:
    """Exact barycentric coordinates of a point w.r.t. a trellis.

    kind is "interior" (all weights positive), "boundary" (some weight zero,
    none negative; ``face`` lists the members with positive weight) or
    "outside" (outside the simplex or its affine hull; lambdas may be None).
    """

    kind: str
    lambdas: tuple[Fraction, ...] | None
    face: tuple[Point, ...] | None = None


@dataclass
class LinearSystem:
    """Exact linear system A x = b with optional human-readable labels."""

    matrix: Mat
    rhs: Vec
    row_labels: list | None = None
    col_labels: list | None = None

    @property
    def nrows(self) -> int:
        return len(self.matrix)

    @property
    def ncols(self) -> int:
        return len(self.matrix[0]) if self.matrix else 0


def affine_dimension(points) -> int:
    """Dimension of the affine hull of the points (-1 for the empty set)."""
    pts = [_fracpt(p) for p in points]
    if not pts:
        return -1
    base = pts[0]
    diffs = [[v - b for v, b in zip(p, base)] for p in pts[1:]]
    return rank(diffs) if diffs else 0


def _convex_rep_system(points, target) -> tuple[Mat, Vec]:
    """Equality system for 'target is a convex combination of points'."""
    pts = [_fracpt(p) for p in points]
    t = _fracpt(target)
    n = len(t)
    a: Mat = [[p[i] for p in pts] for i in range(n)]
    a.append([Fraction(1)] * len(pts))
    b: Vec = list(t) + [Fraction(1)]
    return a, b


def in_convex_hull(points, target) -> bool:
    a, b = _convex_rep_system(points, target)
    return lp_solve(a, b).status == "optimal"


def hull_vertices(points) -> list[Point]:
    """Vertices of conv(points), graded-lex ordered.

    A point is a vertex iff it is not a convex combination of the others;
    each test is one exact LP.  Intended for the small point sets this
    package works with (tens of points, a handful of variables).
    """
    pts = sorted({tuple(p) for p in points}, key=grlex_key)
    out = []
    for p in pts:
        others = [q for q in pts if q != p]
        if not others or not in_convex_hull(others, p):
            out.append(p)
    return out


def barycentric(trellis, point) -> BarycentricCoords:
    """Exact barycentric coordinates of ``point`` w.r.t. affinely independent
    ``trellis`` members, classifying it as interior/boundary/outside."""
    members = list(trellis)
    if affine_dimension(members) != len(members) - 1:
        raise DimensionError("barycentric needs affinely independent points")
    a, b = _convex_rep_system(members, point)
    lam = solve_linear(a, b)
    if lam is None:
        return BarycentricCoords("outside", None)
    lams = tuple(lam)
    if any(v < 0 for v in lams):
        return BarycentricCoords("outside", lams)
    if all(v > 0 for v in lams):
        return BarycentricCoords("interior", lams)
    face = tuple(m for m, v in zip(members, lams) if v > 0)
    return BarycentricCoords("boundary", lams, face)


@dataclass(frozen=True)
class CircuitCandidate:
    """An affinely independent subset with the inner point in its relative
    interior, together with the exact barycentric weights."""

    points: tuple[Point, ...]
    lambdas: tuple[Fraction, ...]


def enumerate_circuits(a_even, beta) -> list[CircuitCandidate]:
    """All affinely independent subsets of ``a_even`` (any cardinality ≥ 1)
    that contain ``beta`` in their relative interior.

    Ordered by cardinality, then graded-lex on the member tuples.  Because
    barycentric weights over an affinely independent set are unique, no such
    subset contains another, so the list is automatically the set of
    inclusion-minimal supports for ``beta``.
    """
    pts = sorted({tuple(p) for p in a_even}, key=grlex_key)
    n = len(pts[0]) if pts else len(beta)
    out: list[CircuitCandidate] = []
    for card in range(1, min(len(pts), n + 1) + 1):
        for combo in itertools.combinations(pts, card):
            if affine_dimension(combo) != card - 1:
                continue
            bc = barycentric(combo, beta)
            if bc.kind == "interior":
                out.append(CircuitCandidate(combo, bc.lambdas))
    return out


@dataclass(frozen=True)
class HullClassification:
    """Position of a point relative to conv(A): kind is interior (relative
    interior), boundary (with the A-points of the minimal containing face)
    or outside."""

    kind: str
    face: tuple[Point, ...] | None = None


def positive_weight_points(points, target) -> tuple[bool, list[Point]]:
    """Feasibility of target ∈ conv(points) and the set of points that can
    carry positive weight in some convex representation.

    That set is exactly the intersection of ``points`` with the minimal face
    of conv(points) containing ``target``.
    """
    pts = sorted({tuple(p) for p in points}, key=grlex_key)
    a, b = _convex_rep_system(pts, target)
    base = lp_solve(a, b)
    if base.status != "optimal":
        return False, []
    out = []
    for j, p in enumerate(pts):
        if base.x[j] > 0:
            out.append(p)
            continue
        c = [Fraction(0)] * len(pts)
        c[j] = Fraction(-1)  # maximize weight of point j
        res = lp_solve(a, b, c)
        if res.status == "optimal" and res.value < 0:
            out.append(p)
    return True, out


def interior_classification(points, beta) -> HullClassification:
    """Classify ``beta`` against conv(points) (relative-interior semantics)."""
    pts = sorted({tuple(p) for p in points}, key=grlex_key)
    feasible, pos = positive_weight_points(pts, beta)
    if not feasible:
        return HullClassification("outside")
    if len(pos) == len(pts):
        return HullClassification("interior", tuple(pts))
    return HullClassification("boundary", tuple(pos))


def same_side_check(a_even, betas) -> bool:
    """Whether all inner points lie strictly on one side of (or all exactly
    on) every hyperplane spanned by points of ``a_even``.

    Requires conv(a_even) to be full-dimensional; mixed zero/nonzero values
    against a single hyperplane count as a violation.
    """
    pts = sorted({tuple(p) for p in a_even}, key=grlex_key)
    if not pts:
        raise DimensionError("empty point set")
    n = len(pts[0])
    if affine_dimension(pts) != n:
        raise DimensionError("point set is not full-dimensional")
    bts = [_fracpt(b) for b in betas]
    for combo in itertools.combinations(pts, n):
        if affine_dimension(combo) != n - 1:
            continue
        base = _fracpt(combo[0])
        diffs = [[v - b for v, b in zip(_fracpt(p), base)] for p in combo[1:]]
        # A size-1 combo only reaches here when n=1 (hyperplane = point).
        normals = nullspace(diffs) if diffs else [[Fraction(1)]]
        if len(normals) != 1:
            continue  # spans less than a hyperplane
        h = normals[0]
        c = sum((hi * bi for hi, bi in zip(h, base)), Fraction(0))
        vals = [sum((hi * vi for hi, vi in zip(h, bt)), Fraction(0)) - c for bt in bts]
        if all(v == 0 for v in vals):
            continue
        if any(v == 0 for v in vals):
            return False
        if any(v > 0 for v in vals) and any(v < 0 for v in vals):
            return False
    return True


def polytope_edges(points) -> list[tuple[Point, Point]]:
    """Edges of conv(points) as vertex pairs.

    A vertex pair spans an edge iff the minimal face containing its midpoint
    is one-dimensional.
    """
    verts = hull_vertices(points)
    pts = sorted({tuple(p) for p in points}, key=grlex_key)
    edges = []
    for v, w in itertools.combinations(verts, 2):
        mid = tuple((Fraction(a) + Fraction(b)) / 2 for a, b in zip(v, w))
        _, pos = positive_weight_points(pts, mid)
        if affine_dimension(pos) == 1:
            edges.append((v, w))
    return edges


def simple_vertex_check(points) -> bool:
    """Whether conv(points) has a vertex meeting exactly dim-many edges."""
    dim = affine_dimension(points)
    if dim <= 0:
        return True
    verts = hull_vertices(points)
    edges = polytope_edges(points)
    for v in verts:
        deg = sum(1 for e in edges if v in e)
        if deg == dim:
            return True
    return False


@dataclass
class NonnegSolveResult:
    """Outcome of exact nonnegative solving of A x = b."""

    feasible: bool
    x: Vec | None
    farkas: Vec | None
    pivots: int = 0


def nonneg_solve(system: LinearSystem) -> NonnegSolveResult:
    """Exact nonnegative solution of the system, or a Farkas certificate.

    The solution returned is a basic one (vertex of the feasible set).
    """
    res: SimplexResult = lp_solve(system.matrix, system.rhs)
    if res.status == "optimal":
        return NonnegSolveResult(True, res.x, None, res.pivots)
    return NonnegSolveResult(False, None, res.farkas, res.pivots)


def solvable(system: LinearSystem) -> bool:
    """Whether A x = b is consistent over the rationals (signs unrestricted)."""
    if not system.matrix:
        return all(v == 0 for v in system.rhs)
    aug = [row[:] + [system.rhs[i]] for i, row in enumerate(system.matrix)]
    return rank(system.matrix) == rank(aug)


@dataclass
class HellyReport:
    """Result of the column-deletion feasibility crosscheck."""

    hypotheses_hold: bool
    full_feasible: bool
    deleted_feasible: list[bool]
    agree: bool


def _delete_column(system: LinearSystem, j: int) -> LinearSystem:
    keep_rows = [i for i in range(system.nrows) if system.matrix[i][j] == 0]
    mat = [
        [system.matrix[i][k] for k in range(system.ncols) if k != j]
        for i in keep_rows
    ]
    rhs = [system.rhs[i] for i in keep_rows]
    return LinearSystem(mat, rhs)


def helly_crosscheck(system: LinearSystem) -> HellyReport:
    """Compare nonnegative feasibility of the full system against the
    conjunction over all single-column deletions.

    Column deletion removes the column and every row where it has a nonzero
    entry.  The hypotheses under which the equivalence is expected are:
    consistency of the full system, rank > 1, and each deletion dropping the
    rank by exactly one.  This is a property-testing aid; nothing in the
    decomposition pipeline calls it.
    """
    r = rank(system.matrix) if system.matrix else 0
    hypo = solvable(system) and r > 1
    if hypo:
        for j in range(system.ncols):
            sub = _delete_column(system, j)
            if (rank(sub.matrix) if sub.matrix else 0) != r - 1:
                hypo = False
                break
    full = nonneg_solve(system).feasible
    deleted = [
        nonneg_solve(_delete_column(system, j)).feasible for j in range(system.ncols)
    ]
    return HellyReport(hypo, full, deleted, full == all(deleted))
