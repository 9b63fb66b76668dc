"""Exact linear algebra over the rationals.

Everything in this module works on lists of :class:`fractions.Fraction` and
is fully deterministic: row reduction uses leftmost-pivot elimination and the
simplex solver uses Bland's rule.  These routines back the geometric
primitives and every LP the decomposition pipeline solves, so exactness here
is what makes the emitted certificates independently checkable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction

Vec = list[Fraction]
Mat = list[list[Fraction]]

PIVOT_LIMIT_ENV = "SONC_LP_PIVOT_LIMIT"
_DEFAULT_PIVOT_LIMIT = 1_000_000


def frac(x) -> Fraction:
    """Coerce ints, strings like '3/4', and Fractions to Fraction.

    Floats are rejected on purpose: anything entering the exact layer must
    already have been rationalized explicitly.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to Fraction exactly")


def rationalize(x: float, rel_tol: float = 1e-12, max_den: int = 10**15) -> Fraction:
    """Shortest-denominator rational within rel_tol of x (continued fractions).

    Snapping to the shortest representative is what lets downstream code
    recognize exactly-rational critical points (e.g. an all-ones zero) from
    their float approximations.
    """
    if x == 0.0:
        return Fraction(0)
    target = Fraction(x)  # exact binary value
    bound = Fraction(rel_tol) * abs(target)
    den = 1
    while den <= max_den:
        cand = target.limit_denominator(den)
        if abs(cand - target) <= bound:
            return cand
        den *= 10
    return target.limit_denominator(max_den)


def mat_copy(a: Mat) -> Mat:
    return [row[:] for row in a]


def mat_vec(a: Mat, x: Vec) -> Vec:
    return [sum((row[j] * x[j] for j in range(len(x))), Fraction(0)) for row in a]


def vec_dot(x: Vec, y: Vec) -> Fraction:
    return sum((xi * yi for xi, yi in zip(x, y, strict=True)), Fraction(0))


def transpose(a: Mat) -> Mat:
    if not a:
        return []
    return [[a[i][j] for i in range(len(a))] for j in range(len(a[0]))]


def rref(a: Mat) -> tuple[Mat, list[int]]:
    """Reduced row echelon form. Returns (rref matrix, pivot column list)."""
    m = mat_copy(a)
    if not m:
        return m, []
    rows, cols = len(m), len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        pr = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        pv = m[r][c]
        m[r] = [v / pv for v in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [vi - f * vr for vi, vr in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
    return m, pivots


def rank(a: Mat) -> int:
    return len(rref(a)[1])


def solve_linear(a: Mat, b: Vec) -> Vec | None:
    """One exact solution of A x = b, or None if inconsistent.

    Free variables are set to zero.
    """
    if not a:
        return [] if all(v == 0 for v in b) else None
    aug = [row[:] + [b[i]] for i, row in enumerate(a)]
    red, pivots = rref(aug)
    cols = len(a[0])
    if cols in pivots:  # pivot in the rhs column => inconsistent
        return None
    x = [Fraction(0)] * cols
    for r, c in enumerate(pivots):
        x[c] = red[r][cols]
    return x


def nullspace(a: Mat) -> Mat:
    """Basis (list of vectors) of the right nullspace of A."""
    if not a:
        return []
    red, pivots = rref(a)
    cols = len(a[0])
    free = [c for c in range(cols) if c not in pivots]
    basis: Mat = []
    for fcol in free:
        v = [Fraction(0)] * cols
        v[fcol] = Fraction(1)
        for r, c in enumerate(pivots):
            v[c] = -red[r][fcol]
        basis.append(v)
    return basis


def project_onto_columnspace(a: Mat, b: Vec) -> Vec:
    """Exact orthogonal projection of b onto the column space of A.

    Solves the normal equations AᵀA y = Aᵀ b (always consistent) and returns
    A y.  Used to repair right-hand sides that numerical rounding pushed just
    outside an LP's column space.
    """
    at = transpose(a)
    ata = [mat_vec(at, col) for col in at]  # row i = Aᵀ A_i  (symmetric)
    atb = [vec_dot(row, b) for row in at]
    y = solve_linear(ata, atb)
    if y is None:  # cannot happen for normal equations; defensive
        raise ArithmeticError("normal equations inconsistent")
    return mat_vec(a, y)


@dataclass
class SimplexResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Vec | None
    value: Fraction | None
    farkas: Vec | None  # on infeasibility: y with yᵀA ≤ 0, yᵀb > 0
    basis: list[int] | None = None
    pivots: int = 0


def _pivot_limit() -> int:
    raw = os.environ.get(PIVOT_LIMIT_ENV)
    if raw is None:
        return _DEFAULT_PIVOT_LIMIT
    try:
        return max(1, int(raw))
    except ValueError:
        return _DEFAULT_PIVOT_LIMIT


def lp_solve(a: Mat, b: Vec, c: Vec | None = None) -> SimplexResult:
    """Minimize cᵀx subject to A x = b, x ≥ 0, in exact rational arithmetic.

    Two-phase simplex with Bland's rule (anti-cycling, deterministic).  With
    c=None only feasibility is decided.  The returned x is always a basic
    solution, i.e. a vertex of the feasible polyhedron — downstream pruning
    relies on that.  On infeasibility, ``farkas`` certifies it exactly.
    Raises :class:`PivotLimitExceeded` after SONC_LP_PIVOT_LIMIT pivots.
    """
    from .errors import PivotLimitExceeded

    m = len(a)
    ncols = len(a[0]) if m else (len(c) if c else 0)
    limit = _pivot_limit()
    if m == 0:
        x0 = [Fraction(0)] * ncols
        val = vec_dot(c, x0) if c else Fraction(0)
        return SimplexResult("optimal", x0, val, None, [], 0)

    flip = [b[i] < 0 for i in range(m)]
    rows: Mat = [
        ([-v for v in a[i]] if flip[i] else a[i][:]) + [Fraction(0)] * m + [-b[i] if flip[i] else b[i]]
        for i in range(m)
    ]
    for i in range(m):
        rows[i][ncols + i] = Fraction(1)
    total = ncols + m
    basis = [ncols + i for i in range(m)]

    # Phase-I objective row: reduced costs of minimize Σ artificials.
    obj = [Fraction(0)] * (total + 1)
    for j in range(total + 1):
        s = sum((rows[i][j] for i in range(m)), Fraction(0))
        obj[j] = (Fraction(1) if ncols <= j < total else Fraction(0)) - s

    npiv = 0

    def do_pivot(r: int, col: int) -> None:
        pv = rows[r][col]
        rows[r] = [v / pv for v in rows[r]]
        for i in range(m):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [vi - f * vr for vi, vr in zip(rows[i], rows[r])]
        if obj[col] != 0:
            f = obj[col]
            obj[:] = [vi - f * vr for vi, vr in zip(obj, rows[r])]
        basis[r] = col

    def bland_loop(active_cols: int) -> str:
        nonlocal npiv
        while True:
            col = next((j for j in range(active_cols) if obj[j] < 0), None)
            if col is None:
                return "optimal"
            best_r, best_ratio = None, None
            for i in range(m):
                if rows[i][col] > 0:
                    ratio = rows[i][total] / rows[i][col]
                    if (
                        best_ratio is None
                        or ratio < best_ratio
                        or (ratio == best_ratio and basis[i] < basis[best_r])
                    ):
                        best_r, best_ratio = i, ratio
            if best_r is None:
                return "unbounded"
            npiv += 1
            if npiv > limit:
                raise PivotLimitExceeded(f"simplex exceeded {limit} pivots")
            do_pivot(best_r, col)

    status = bland_loop(total)
    assert status == "optimal"  # phase I is bounded below by 0
    phase1_value = -obj[total]
    if phase1_value > 0:
        # Farkas: y_i = 1 - reduced cost of artificial column i, mapped back
        # through the row sign flips.
        y = [Fraction(1) - obj[ncols + i] for i in range(m)]
        y = [-yi if flip[i] else yi for i, yi in enumerate(y)]
        return SimplexResult("infeasible", None, None, y, None, npiv)

    # Drive artificials out of the basis; drop redundant rows.
    keep = list(range(m))
    for r in range(m):
        if basis[r] >= ncols:
            col = next((j for j in range(ncols) if rows[r][j] != 0), None)
            if col is not None:
                npiv += 1
                do_pivot(r, col)
            else:
                keep.remove(r)
    if len(keep) != m:
        rows[:] = [rows[i] for i in keep]
        basis[:] = [basis[i] for i in keep]
        m = len(rows)

    if c is not None:
        obj[:] = [Fraction(0)] * (total + 1)
        for j in range(ncols):
            obj[j] = c[j]
        for r in range(m):
            if obj[basis[r]] != 0:
                f = obj[basis[r]]
                obj[:] = [vi - f * vr for vi, vr in zip(obj, rows[r])]
        status = bland_loop(ncols)
        if status == "unbounded":
            return SimplexResult("unbounded", None, None, None, None, npiv)

    x = [Fraction(0)] * ncols
    for r in range(m):
        if basis[r] < ncols:
            x[basis[r]] = rows[r][total]
    value = vec_dot(c, x) if c is not None else Fraction(0)
    return SimplexResult("optimal", x, value, None, basis[:], npiv)
