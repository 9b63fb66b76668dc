"""Decomposition of sparse polynomials into nonnegative circuit polynomials.

The pipeline: float Newton locates the critical point of the positive part
relative to each inner term, the critical point is snapped to rationals, and
an exact LP distributes coefficient mass over candidate circuits.  Three LP
routes keep the emitted certificates honest:

* strict-interior requests go through an inequality-relaxed LP whose slack
  becomes monomial squares — the certificate then sums to the input exactly;
* when the snapped point is an exactly-verified zero of the polynomial, the
  full boundary system (one column per circuit over the support, one row per
  support point) is solved — feasible gives an exact boundary certificate,
  infeasible is a proof that no circuit decomposition exists at all;
* float boundary requests project the rationalized right-hand side onto the
  LP's column space first — the certificate carries an epsilon-sized,
  exactly-computed residual and slack metadata.

Verdicts are sound by construction: SONC comes with a certificate whose sum
is checked here, NotPSD with a rational point whose exact evaluation is
negative, NotSONC only through the exact-zero boundary system.  Everything
else is Inconclusive with the evidence attached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .circuits import CircuitPoly, is_nonnegative_circuit
from .errors import AssemblyError, DimensionError, SoncError
from .geometry import (
    CircuitCandidate,
    LinearSystem,
    enumerate_circuits,
    grlex_key,
    interior_classification,
    nonneg_solve,
    positive_weight_points,
    same_side_check,
    simple_vertex_check,
)
from .linalg import lp_solve, project_onto_columnspace, rationalize
from .poly import (
    Exponent,
    SparsePoly,
    factor_out_monomial,
    find_sign_assignment,
    flip_signs,
    is_even,
    necessary_conditions,
    split_support,
)

REL_MARGIN = 1e-9  # relative width of the boundary decision band
DEFAULT_EPS = 1e-8  # scale-relative residual bound for epsilon certificates
_EXACT_DEN_LIMIT = 10**6  # only small-denominator points can be exactly critical

RatPoint = tuple[Fraction, ...]


def _xpow(x: RatPoint, exp) -> Fraction:
    out = Fraction(1)
    for v, k in zip(x, exp):
        if k:
            out *= v ** int(k)
    return out


# ---------------------------------------------------------------------------
# Critical points (float Newton on the log-coordinate posynomial)
# ---------------------------------------------------------------------------


@dataclass
class CriticalPoint:
    """Float critical-point data for a decomposition instance.

    ``residual`` is the sup-norm of the stationarity gradient at ``x``;
    ``scale`` is a magnitude reference for judging it.
    """

    x: tuple[float, ...]
    d_star: float
    residual: float
    scale: float
    freed_index: int | None = None
    grid_checked: bool = False

    def ok(self) -> bool:
        return self.residual <= 1e-9 * max(1.0, self.scale)


def _span_basis(rows: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the row space of ``rows``."""
    if rows.size == 0:
        return np.zeros((rows.shape[1] if rows.ndim == 2 else 0, 0))
    u, s, vt = np.linalg.svd(rows, full_matrices=False)
    tol = max(rows.shape) * np.finfo(float).eps * (s[0] if len(s) else 0.0)
    r = int(np.sum(s > tol))
    return vt[:r].T


def _posy_newton(c: np.ndarray, e: np.ndarray, z0: np.ndarray, tol=1e-12, maxit=200):
    """Minimize z -> Σ c_i exp(e_i · z) (convex).  Returns (z, value)."""
    z = z0.copy()
    for _ in range(maxit):
        t = np.clip(e @ z, -700, 700)
        w = c * np.exp(t)
        val = float(w.sum())
        grad = e.T @ w
        if np.max(np.abs(grad), initial=0.0) <= tol * max(1.0, val):
            return z, val
        h = e.T @ (w[:, None] * e)
        try:
            p = np.linalg.solve(h, -grad)
        except np.linalg.LinAlgError:
            p = -grad
        gp = float(grad @ p)
        if gp >= 0:
            p, gp = -grad, float(-(grad @ grad))
        step = 1.0
        for _ in range(60):
            t2 = np.clip(e @ (z + step * p), -700, 700)
            if float((c * np.exp(t2)).sum()) <= val + 1e-4 * step * gp:
                break
            step *= 0.5
        z = z + step * p
    return z, float((c * np.exp(np.clip(e @ z, -700, 700))).sum())


def critical_point_single(lambda_terms: dict, beta: Exponent) -> CriticalPoint:
    """Minimize Σ c_i x^{α_i - β} over the positive orthant.

    Works in log coordinates restricted to the affine span of {α_i - β};
    transverse coordinates of the returned point are exactly 1.
    """
    exps = sorted(lambda_terms, key=grlex_key)
    if not exps:
        raise DimensionError("empty positive part")
    n = len(beta)
    c = np.array([float(lambda_terms[a]) for a in exps])
    rows = np.array([[float(ai - bi) for ai, bi in zip(a, beta)] for a in exps])
    v = _span_basis(rows)
    e = rows @ v
    z, val = _posy_newton(c, e, np.zeros(v.shape[1]))
    y = v @ z if v.size else np.zeros(n)
    x = tuple(float(t) for t in np.exp(y))
    w = c * np.exp(np.clip(e @ z, -700, 700))
    grad_full = rows.T @ w
    scale = float(np.max(np.abs(rows.T) @ w)) if rows.size else val
    return CriticalPoint(
        x, val, float(np.max(np.abs(grad_full), initial=0.0)), max(scale, val)
    )


def critical_point_multi(
    lambda_terms: dict,
    gamma_abs: list[tuple[Exponent, float]],
    freed: int,
    *,
    seed: int = 0,
    grid_points: int = 10_000,
) -> CriticalPoint | None:
    """Free one inner term and minimize the signed exponential sum

        Σ c_i x^{α_i - β_l}  -  Σ_{j≠l} d_j x^{β_j - β_l}

    over the positive orthant (damped Newton from the positive part's
    minimizer).  The result is accepted only if a seeded local grid of
    ``grid_points`` samples finds no lower value nearby; otherwise the
    search restarts from the best grid point, giving up after three
    restarts (returns None, as for divergence).
    """
    exps = sorted(lambda_terms, key=grlex_key)
    beta_l = gamma_abs[freed][0]
    n = len(beta_l)
    pos_rows = np.array([[float(ai - bi) for ai, bi in zip(a, beta_l)] for a in exps])
    neg = [(b, d) for idx, (b, d) in enumerate(gamma_abs) if idx != freed]
    neg_rows = np.array(
        [[float(bi - li) for bi, li in zip(b, beta_l)] for b, _ in neg]
    ).reshape(len(neg), n)
    cpos = np.array([float(lambda_terms[a]) for a in exps])
    cneg = np.array([float(d) for _, d in neg])

    all_rows = np.vstack([pos_rows, neg_rows]) if len(neg) else pos_rows
    v = _span_basis(all_rows)
    ep, en = pos_rows @ v, neg_rows @ v

    def parts(z):
        wp = cpos * np.exp(np.clip(ep @ z, -700, 700))
        wn = cneg * np.exp(np.clip(en @ z, -700, 700)) if len(neg) else np.zeros(0)
        return wp, wn

    def value(z):
        wp, wn = parts(z)
        return float(wp.sum() - wn.sum())

    z, _ = _posy_newton(cpos, ep, np.zeros(v.shape[1]))
    rng = np.random.default_rng(seed)

    for _restart in range(4):
        converged = False
        for _ in range(200):
            wp, wn = parts(z)
            val = float(wp.sum() - wn.sum())
            grad = ep.T @ wp - (en.T @ wn if len(neg) else 0.0)
            scale = float(wp.sum() + wn.sum())
            if np.max(np.abs(grad), initial=0.0) <= 1e-12 * max(1.0, scale):
                converged = True
                break
            h = ep.T @ (wp[:, None] * ep)
            if len(neg):
                h = h - en.T @ (wn[:, None] * en)
            try:
                p = np.linalg.solve(h, -grad)
                if float(grad @ p) >= 0:
                    p = -grad
            except np.linalg.LinAlgError:
                p = -grad
            step, gp = 1.0, float(grad @ p)
            for _ in range(60):
                if value(z + step * p) <= val + 1e-4 * step * gp:
                    break
                step *= 0.5
            z = z + step * p
            if np.max(np.abs(z), initial=0.0) > 200:
                return None  # diverging: not coercive with this term freed
        if not converged:
            return None
        r = v.shape[1]
        if r == 0:
            samples = np.zeros((1, 0))
        elif r == 1:
            samples = np.linspace(-0.5, 0.5, grid_points).reshape(-1, 1)
        elif r == 2:
            side = int(math.isqrt(grid_points))
            g = np.linspace(-0.5, 0.5, side)
            samples = np.stack(np.meshgrid(g, g), -1).reshape(-1, 2)
        else:
            samples = rng.uniform(-0.5, 0.5, size=(grid_points, r))
        pts = z + samples
        vals = np.exp(np.clip(pts @ ep.T, -700, 700)) @ cpos
        if len(neg):
            vals = vals - np.exp(np.clip(pts @ en.T, -700, 700)) @ cneg
        wp, wn = parts(z)
        val = float(wp.sum() - wn.sum())
        scale = float(wp.sum() + wn.sum())
        best = int(np.argmin(vals))
        if vals[best] < val - 1e-9 * max(1.0, scale):
            z = pts[best]
            continue
        y = v @ z if v.size else np.zeros(n)
        x = tuple(float(t) for t in np.exp(y))
        grad_full = pos_rows.T @ wp - (neg_rows.T @ wn if len(neg) else 0.0)
        return CriticalPoint(
            x,
            val,
            float(np.max(np.abs(grad_full), initial=0.0)),
            max(scale, 1.0),
            freed_index=freed,
            grid_checked=True,
        )
    return None


# ---------------------------------------------------------------------------
# LP systems
# ---------------------------------------------------------------------------


def build_single_system(
    lambda_terms: dict, beta: Exponent, candidates: list[CircuitCandidate], x: RatPoint
) -> LinearSystem:
    """Equality system distributing outer mass over circuits at the point x:
    one row per outer exponent α_i, one column per candidate circuit, entry
    λ (the candidate's weight at α_i), right-hand side c_i x^{α_i}."""
    exps = sorted(lambda_terms, key=grlex_key)
    mat = []
    for a in exps:
        row = []
        for cand in candidates:
            if a in cand.points:
                row.append(cand.lambdas[cand.points.index(a)])
            else:
                row.append(Fraction(0))
        mat.append(row)
    rhs = [lambda_terms[a] * _xpow(x, a) for a in exps]
    return LinearSystem(
        mat, rhs, row_labels=list(exps), col_labels=[(beta, c.points) for c in candidates]
    )


def build_multi_system(
    lambda_terms: dict,
    gammas: list[tuple[Exponent, Fraction]],
    freed: int,
    freed_target: Fraction,
    x: RatPoint,
    candidates_per_beta: list[list[CircuitCandidate]],
) -> LinearSystem:
    """Equality system for several inner terms: one row per outer exponent
    plus one row per inner term (total circuit mass).  Columns are laid out
    (inner index j, candidate k) in deterministic order; the freed inner
    row's right-hand side uses ``freed_target`` in place of its requested
    magnitude."""
    exps = sorted(lambda_terms, key=grlex_key)
    cols: list[tuple[int, CircuitCandidate]] = []
    for j, cands in enumerate(candidates_per_beta):
        for cand in cands:
            cols.append((j, cand))
    mat: list[list[Fraction]] = []
    for a in exps:
        row = []
        for _j, cand in cols:
            if a in cand.points:
                row.append(cand.lambdas[cand.points.index(a)])
            else:
                row.append(Fraction(0))
        mat.append(row)
    for j in range(len(gammas)):
        mat.append([Fraction(1) if cj == j else Fraction(0) for cj, _ in cols])
    rhs = [lambda_terms[a] * _xpow(x, a) for a in exps]
    for j, (b, dj) in enumerate(gammas):
        target = freed_target if j == freed else dj
        rhs.append(target * _xpow(x, b))
    return LinearSystem(
        mat,
        rhs,
        row_labels=list(exps) + [b for b, _ in gammas],
        col_labels=[(gammas[j][0], cand.points) for j, cand in cols],
    )


def build_zero_refutation_system(
    f: SparsePoly, x: RatPoint
) -> tuple[LinearSystem, list[tuple[Exponent, CircuitCandidate]]]:
    """The complete circuit-mass system binding at an exact zero x > 0 of f.

    If f is a sum of nonnegative circuits and monomial squares and f(x) = 0,
    every summand vanishes at x: squares are ruled out entirely (they are
    strictly positive on the open orthant), and each circuit is balanced at
    x, so all its coefficients are fixed multiples of one mass variable.
    Columns therefore range over *all* circuits supported on supp(f) — any
    support point may serve as the inner exponent, even one carrying a
    positive coefficient — and there is one row per support point (outer
    contributions enter with weight λ, inner ones with weight -1).
    Feasibility yields an exact boundary decomposition; infeasibility proves
    that no circuit decomposition of f exists.
    """
    supp = f.support()
    even_pts = [p for p in supp if is_even(p)]
    columns: list[tuple[Exponent, CircuitCandidate]] = []
    for b in supp:
        pool = [p for p in even_pts if p != b]
        for cand in enumerate_circuits(pool, b):
            columns.append((b, cand))
    mat: list[list[Fraction]] = []
    for a in supp:
        row = []
        for b, cand in columns:
            if a == b:
                row.append(Fraction(-1))
            elif a in cand.points:
                row.append(cand.lambdas[cand.points.index(a)])
            else:
                row.append(Fraction(0))
        mat.append(row)
    rhs = [f.coeff(a) * _xpow(x, a) for a in supp]
    system = LinearSystem(
        mat, rhs, row_labels=list(supp), col_labels=[(b, c.points) for b, c in columns]
    )
    return system, columns


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


@dataclass
class SoncCertificate:
    """A sum of nonnegative circuit polynomials plus monomial squares.

    mode "exact" means the parts sum to the certified polynomial exactly;
    mode "epsilon" bounds the residual by ``epsilon`` times the certified
    polynomial's largest absolute coefficient.  ``slack`` carries assembly
    metadata (inner-term scaling, residual size).
    """

    nvars: int
    circuits: list[CircuitPoly] = field(default_factory=list)
    monomial_squares: list[tuple[Exponent, Fraction]] = field(default_factory=list)
    mode: str = "exact"
    epsilon: float | None = None
    slack: dict = field(default_factory=dict)

    def claimed_sum(self) -> SparsePoly:
        total = SparsePoly.zero(self.nvars)
        for c in self.circuits:
            total = total + c.to_poly()
        return total + SparsePoly(self.nvars, dict(self.monomial_squares))

    def size(self) -> int:
        return len(self.circuits) + len(self.monomial_squares)


@dataclass
class DecomposeOutcome:
    """Verdict plus the object that proves it.

    SONC -> certificate; NotPSD -> witness_point with exact negative
    witness_value; NotSONC -> witness_system (infeasible circuit-mass
    system at an exact zero); Inconclusive -> reason, possibly with partial
    evidence.  ``hypotheses`` records the completeness side conditions that
    were checked on the way (sign assignment, same-side, simple vertex).
    """

    verdict: str
    certificate: SoncCertificate | None = None
    witness_point: tuple | None = None
    witness_value: Fraction | None = None
    witness_system: LinearSystem | None = None
    reason: str | None = None
    hypotheses: dict | None = None
    d_star: float | None = None
    x_star: tuple | None = None


def _set_residual_mode(cert: SoncCertificate, reference: SparsePoly) -> Fraction:
    """Classify cert as exact or epsilon against ``reference``; returns the
    relative residual size."""
    residual = reference - cert.claimed_sum()
    if residual.is_zero():
        cert.mode, cert.epsilon = "exact", None
        cert.slack.pop("residual_max_rel", None)
        return Fraction(0)
    cert.mode, cert.epsilon = "epsilon", DEFAULT_EPS
    rel = residual.max_abs_coeff() / max(Fraction(1), reference.max_abs_coeff())
    cert.slack["residual_max_rel"] = float(rel)
    return rel


def assemble_certificate(
    reference: SparsePoly,
    x: RatPoint,
    groups: list[tuple[Exponent, list[tuple[CircuitCandidate, Fraction]]]],
    targets: dict[Exponent, Fraction],
) -> SoncCertificate:
    """Turn LP mass into circuits: candidate k for inner exponent β receives
    outer coefficients λ_ik s_k / x^{α_i} and inner magnitude s_k / x^β.

    Because Π (x^{α_i})^{λ_ik} = x^β exactly for barycentric weights, every
    raw circuit sits exactly on its circuit-number boundary regardless of
    how accurate x is.  Each inner group is then scaled to its requested
    signed coefficient (capped at 1 so circuits stay nonnegative; any cap
    shortfall lands in the residual).  Leftover outer mass becomes monomial
    squares.  Raises :class:`AssemblyError` if an emitted circuit fails the
    exact nonnegativity check (impossible for capped scalings; kept as a
    hard guard).
    """
    nvars = reference.nvars
    lam = split_support(reference).lambda_terms
    circuits: list[CircuitPoly] = []
    used: dict[Exponent, Fraction] = {a: Fraction(0) for a in lam}
    scale_info: dict[str, float] = {}
    for beta, members in groups:
        total = sum((s for _c, s in members if s > 0), Fraction(0))
        if total == 0:
            continue
        target = targets[beta]
        xb = _xpow(x, beta)
        sigma = abs(target) * xb / total
        capped = min(sigma, Fraction(1))
        scale_info[f"sigma{tuple(beta)}"] = float(sigma)
        sign = -1 if target > 0 else 1  # the circuit contributes -d x^β
        for cand, s in members:
            if s <= 0:
                continue
            coeffs = []
            for p, l in zip(cand.points, cand.lambdas):
                c_ik = l * s / _xpow(x, p)
                coeffs.append(c_ik)
                used[p] = used.get(p, Fraction(0)) + c_ik
            d = sign * capped * s / xb
            circ = CircuitPoly.make(nvars, cand.points, coeffs, beta, d)
            if not is_nonnegative_circuit(circ):
                raise AssemblyError(
                    f"assembled circuit at inner {tuple(beta)} over {cand.points} "
                    f"violates its circuit-number bound"
                )
            circuits.append(circ)
    squares: list[tuple[Exponent, Fraction]] = []
    for a in sorted(lam, key=grlex_key):
        leftover = lam[a] - used.get(a, Fraction(0))
        if leftover > 0:
            squares.append((a, leftover))
        # negative slivers (projection mode) stay in the residual
    cert = SoncCertificate(nvars, circuits, squares)
    cert.slack = scale_info
    _set_residual_mode(cert, reference)
    return cert


def assemble_boundary_certificate(
    reference: SparsePoly,
    x: RatPoint,
    columns: list[tuple[Exponent, CircuitCandidate]],
    masses: list[Fraction],
) -> SoncCertificate:
    """Assemble an exact certificate from a feasible boundary system: column
    mass s gives the circuit with outer coefficients λ_i s / x^{α_i} and
    inner coefficient s / x^β (exactly balanced at x, hence exactly on its
    circuit-number boundary).  The parts must re-sum to ``reference``."""
    circuits = []
    for (b, cand), s in zip(columns, masses):
        if s <= 0:
            continue
        coeffs = [l * s / _xpow(x, p) for p, l in zip(cand.points, cand.lambdas)]
        circ = CircuitPoly.make(reference.nvars, cand.points, coeffs, b, s / _xpow(x, b))
        if not is_nonnegative_circuit(circ):
            raise AssemblyError(
                f"boundary circuit at inner {tuple(b)} violates its bound"
            )
        circuits.append(circ)
    cert = SoncCertificate(reference.nvars, circuits, [])
    if not (reference - cert.claimed_sum()).is_zero():
        raise AssemblyError("boundary assembly does not re-sum to the input")
    return cert


def scale_to_requested_d(cert: SoncCertificate, d: Fraction) -> SoncCertificate:
    """Rescale a single-inner-term certificate from its current total inner
    coefficient to ``d`` (multiplying every circuit's inner term by d/D).

    Circuits whose scaled inner term becomes ≤ 0 on an even inner exponent
    are simplified to monomial squares.  Requires |d| ≤ D (β odd) or d ≤ D
    (β even), which keeps every circuit nonnegative.
    """
    d = Fraction(d)
    betas = {c.beta for c in cert.circuits}
    if len(betas) != 1:
        raise DimensionError("rescaling requires a single inner exponent")
    beta = next(iter(betas))
    total = sum((c.d for c in cert.circuits), Fraction(0))
    if total <= 0:
        raise DimensionError("certificate has no positive inner mass to rescale")
    factor = d / total
    circuits = []
    squares = list(cert.monomial_squares)
    for c in cert.circuits:
        nd = c.d * factor
        if nd <= 0 and is_even(beta):
            for p, cc in zip(c.trellis, c.coeffs):
                squares.append((p, cc))
            if nd < 0:
                squares.append((beta, -nd))
            continue
        nc = CircuitPoly.make(c.nvars, c.trellis, c.coeffs, beta, nd)
        if not is_nonnegative_circuit(nc):
            raise AssemblyError("rescaled circuit violates its circuit-number bound")
        circuits.append(nc)
    merged: dict[Exponent, Fraction] = {}
    for p, cc in squares:
        merged[p] = merged.get(p, Fraction(0)) + cc
    return SoncCertificate(
        cert.nvars,
        circuits,
        sorted(merged.items(), key=lambda t: grlex_key(t[0])),
        cert.mode,
        cert.epsilon,
        dict(cert.slack),
    )


# ---------------------------------------------------------------------------
# Exactness detection
# ---------------------------------------------------------------------------


def _small_denominators(x: RatPoint) -> bool:
    return all(v.denominator <= _EXACT_DEN_LIMIT for v in x)


def _exactly_critical_single(lam: dict, beta: Exponent, x: RatPoint) -> bool:
    """Whether x is exactly a stationary point of Σ c_i x^{α_i - β}."""
    if not _small_denominators(x) or any(v <= 0 for v in x):
        return False
    for i in range(len(beta)):
        total = Fraction(0)
        for a, c in lam.items():
            if a[i] != beta[i]:
                total += c * (a[i] - beta[i]) * _xpow(x, a)
        if total != 0:
            return False
    return True


def _exact_zero_of(h: SparsePoly, x: RatPoint) -> bool:
    """Whether h(x) = 0 and ∇h(x) = 0 exactly (rational arithmetic)."""
    if not _small_denominators(x) or any(v <= 0 for v in x):
        return False
    if h.evaluate(x) != 0:
        return False
    return all(g == 0 for g in h.gradient_eval(x))


# ---------------------------------------------------------------------------
# Witness construction
# ---------------------------------------------------------------------------


def _separating_direction(face_exps: list[Exponent], off_exps: list[Exponent], n: int):
    """Integer vector u with ⟨q, u⟩ constant on face_exps and strictly
    smaller on every off exponent; None if no strict separation exists."""
    noff = len(off_exps)
    # vars: u+ (n), u- (n), t, gap slack per off point, box slacks (2n)
    ncols = 2 * n + 1 + noff + 2 * n
    it = 2 * n  # column index of t
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    base = face_exps[0]
    for q in face_exps[1:]:
        row = [Fraction(0)] * ncols
        for i in range(n):
            row[i] = Fraction(q[i] - base[i])
            row[n + i] = -Fraction(q[i] - base[i])
        rows.append(row)
        rhs.append(Fraction(0))
    for k, q in enumerate(off_exps):
        row = [Fraction(0)] * ncols  # <base - q, u> - t - slack_k = 0
        for i in range(n):
            row[i] = Fraction(base[i] - q[i])
            row[n + i] = -Fraction(base[i] - q[i])
        row[it] = Fraction(-1)
        row[it + 1 + k] = Fraction(-1)
        rows.append(row)
        rhs.append(Fraction(0))
    for i in range(2 * n):  # u±_i + slack = 1 keeps the LP bounded
        row = [Fraction(0)] * ncols
        row[i] = Fraction(1)
        row[it + 1 + noff + i] = Fraction(1)
        rows.append(row)
        rhs.append(Fraction(1))
    obj = [Fraction(0)] * ncols
    obj[it] = Fraction(-1)  # maximize t
    res = lp_solve(rows, rhs, obj)
    if res.status != "optimal" or res.x is None or res.x[it] <= 0:
        return None
    u = [res.x[i] - res.x[n + i] for i in range(n)]
    den = 1
    for v in u:
        den = den * v.denominator // math.gcd(den, v.denominator)
    return [int(v * den) for v in u]


def _ray_witness(f: SparsePoly, face_exps: list[Exponent], base_point) -> tuple | None:
    """A rational point where f is exactly negative, found by dilating the
    base point along a direction on which the face terms dominate.

    Requires f restricted to face_exps to be negative at base_point.  Works
    because every other support point has strictly smaller integer weight
    along the separating direction, so large dilations are dominated by the
    face part.
    """
    supp = f.support()
    face = set(face_exps)
    off = [q for q in supp if q not in face]
    base = [Fraction(v) for v in base_point]
    if not off:
        return tuple(base) if f.evaluate(base) < 0 else None
    u = _separating_direction(list(face_exps), off, f.nvars)
    if u is None:
        return None
    s = Fraction(2)
    for _ in range(80):
        p = tuple(b * s**ui for b, ui in zip(base, u))
        if f.evaluate(p) < 0:
            return p
        s *= 2
    return None


# ---------------------------------------------------------------------------
# Single-inner-term certification ladder
# ---------------------------------------------------------------------------


def certify_single_beta(
    h: SparsePoly,
    beta: Exponent,
    *,
    cp: CriticalPoint | None = None,
) -> tuple[str, object]:
    """Certify a polynomial with exactly one inner term (interior β) as a
    sum of nonnegative circuits.

    Returns one of
      ("ok", certificate)           — decomposition found,
      ("excess", critical point)    — inner magnitude exceeds the critical
                                      value (the input is negative nearby),
      ("notsonc", system)           — exact zero whose boundary system is
                                      infeasible: no decomposition exists,
      ("fail", critical point)      — no route succeeded; undecided.
    """
    split = split_support(h)
    lam = split.lambda_terms
    c_beta = split.gamma_terms[beta]
    d_req = abs(c_beta)
    if cp is None:
        cp = critical_point_single(lam, beta)
    x_rat = tuple(rationalize(v) for v in cp.x)
    candidates = enumerate_circuits(sorted(lam, key=grlex_key), beta)

    exact_crit = _exactly_critical_single(lam, beta, x_rat)
    if exact_crit:
        xb = _xpow(x_rat, beta)
        d_exact = sum((c * _xpow(x_rat, a) for a, c in lam.items()), Fraction(0)) / xb
        if d_req > d_exact:
            return "excess", cp
        if h.evaluate(x_rat) == 0:
            system, columns = build_zero_refutation_system(h, x_rat)
            res = nonneg_solve(system)
            if res.feasible:
                return "ok", assemble_boundary_certificate(h, x_rat, columns, res.x)
            return "notsonc", system
        # d_req strictly below the exact critical value: fall to the margin LP

    if not candidates:
        return "fail", cp

    delta = (float(d_req) - cp.d_star) / max(1.0, abs(cp.d_star))
    if not exact_crit and delta >= REL_MARGIN:
        return "excess", cp

    if exact_crit or delta <= -REL_MARGIN:
        # inequality-relaxed LP: outer rows get slack, inner total a surplus
        eq = build_single_system(lam, beta, candidates, x_rat)
        m, r = eq.nrows, eq.ncols
        mat = [row[:] + [Fraction(0)] * (m + 1) for row in eq.matrix]
        for i in range(m):
            mat[i][r + i] = Fraction(1)
        mat.append([Fraction(1)] * r + [Fraction(0)] * m + [Fraction(-1)])
        rhs = eq.rhs + [d_req * _xpow(x_rat, beta)]
        res = nonneg_solve(LinearSystem(mat, rhs))
        if res.feasible:
            groups = [(beta, list(zip(candidates, res.x[:r])))]
            return "ok", assemble_certificate(h, x_rat, groups, {beta: c_beta})
        # fall through to the projection route

    system = build_single_system(lam, beta, candidates, x_rat)
    b_proj = project_onto_columnspace(system.matrix, system.rhs)
    res = nonneg_solve(LinearSystem(system.matrix, b_proj))
    if res.feasible:
        groups = [(beta, list(zip(candidates, res.x)))]
        cert = assemble_certificate(h, x_rat, groups, {beta: c_beta})
        if cert.mode == "epsilon" and cert.slack.get("residual_max_rel", 0.0) > DEFAULT_EPS:
            return "fail", cp
        return "ok", cert
    return "fail", cp


# ---------------------------------------------------------------------------
# Multi-inner-term attempt
# ---------------------------------------------------------------------------


def _multi_attempt(
    h: SparsePoly,
    freed: int,
    v_signs: tuple[int, ...] | None,
    *,
    seed: int = 0,
) -> DecomposeOutcome:
    split = split_support(h)
    lam = split.lambda_terms
    gam_exps = sorted(split.gamma_terms, key=grlex_key)
    gammas = [(b, abs(split.gamma_terms[b])) for b in gam_exps]
    cp = critical_point_multi(lam, [(b, float(d)) for b, d in gammas], freed, seed=seed)
    if cp is None or not cp.ok():
        return DecomposeOutcome(
            "Inconclusive",
            reason="critical point search failed for the freed inner term",
        )
    x_rat = tuple(rationalize(v) for v in cp.x)
    beta_l, d_l = gammas[freed]
    delta = (float(d_l) - cp.d_star) / max(1.0, abs(cp.d_star))

    if _exact_zero_of(h, x_rat):
        system, columns = build_zero_refutation_system(h, x_rat)
        res = nonneg_solve(system)
        if res.feasible:
            cert = assemble_boundary_certificate(h, x_rat, columns, res.x)
            return DecomposeOutcome(
                "SONC", certificate=cert, d_star=cp.d_star, x_star=cp.x
            )
        return DecomposeOutcome(
            "NotSONC",
            witness_system=system,
            reason=(
                "the polynomial has an exact zero at a positive rational point, "
                "so any decomposition into nonnegative parts must solve the "
                "attached circuit-mass system, which is infeasible"
            ),
            d_star=cp.d_star,
            x_star=cp.x,
        )

    if delta >= REL_MARGIN:
        if v_signs is None:
            return DecomposeOutcome(
                "Inconclusive",
                reason=(
                    "inner magnitude exceeds the freed critical value, but with "
                    "no sign assignment a negative point cannot be exhibited"
                ),
                d_star=cp.d_star,
                x_star=cp.x,
            )
        for cand in (x_rat, tuple(Fraction(v) for v in cp.x)):
            if any(v <= 0 for v in cand):
                continue
            val = h.evaluate(cand)
            if val < 0:
                return DecomposeOutcome(
                    "NotPSD",
                    witness_point=cand,
                    witness_value=val,
                    d_star=cp.d_star,
                    x_star=cp.x,
                )
        return DecomposeOutcome(
            "Inconclusive",
            reason="negative value indicated but not confirmed in exact arithmetic",
            d_star=cp.d_star,
            x_star=cp.x,
        )

    candidates_per_beta = [
        enumerate_circuits(sorted(lam, key=grlex_key), b) for b in gam_exps
    ]
    if any(not c for c in candidates_per_beta):
        return DecomposeOutcome(
            "Inconclusive", reason="an inner term has no candidate circuits"
        )
    system = build_multi_system(
        lam, gammas, freed, rationalize(cp.d_star), x_rat, candidates_per_beta
    )
    b_proj = project_onto_columnspace(system.matrix, system.rhs)
    res = nonneg_solve(LinearSystem(system.matrix, b_proj))
    if res.feasible:
        groups = []
        col = 0
        for j, b in enumerate(gam_exps):
            members = []
            for cand in candidates_per_beta[j]:
                members.append((cand, res.x[col]))
                col += 1
            groups.append((b, members))
        targets = {b: split.gamma_terms[b] for b in gam_exps}
        cert = assemble_certificate(h, x_rat, groups, targets)
        if cert.mode == "epsilon" and cert.slack.get("residual_max_rel", 0.0) > DEFAULT_EPS:
            return DecomposeOutcome(
                "Inconclusive",
                reason="assembled certificate residual exceeds the epsilon budget",
                d_star=cp.d_star,
                x_star=cp.x,
            )
        return DecomposeOutcome("SONC", certificate=cert, d_star=cp.d_star, x_star=cp.x)
    return DecomposeOutcome(
        "Inconclusive",
        reason=(
            "circuit-mass system infeasible at the rationalized critical point; "
            "no exact zero available to turn infeasibility into a refutation"
        ),
        witness_system=system,
        d_star=cp.d_star,
        x_star=cp.x,
    )


# ---------------------------------------------------------------------------
# Dispatcher
# ---------------------------------------------------------------------------


def _map_certificate(cert: SoncCertificate, v_signs, shift: Exponent) -> SoncCertificate:
    """Undo sign normalization and monomial factoring on a certificate.

    Sign flips leave even exponents alone, so only each circuit's inner
    coefficient picks up the parity of its inner exponent; the monomial
    shift translates every exponent (trellis, inner, squares) and preserves
    barycentric weights.
    """
    circuits = []
    for c in cert.circuits:
        d = c.d
        if v_signs is not None:
            parity = 1
            for s, k in zip(v_signs, c.beta):
                if s < 0 and k % 2 == 1:
                    parity = -parity
            d = d * parity
        circuits.append(
            CircuitPoly.make(
                c.nvars,
                [tuple(a + b for a, b in zip(p, shift)) for p in c.trellis],
                c.coeffs,
                tuple(a + b for a, b in zip(c.beta, shift)),
                d,
            )
        )
    squares = [
        (tuple(a + b for a, b in zip(p, shift)), c) for p, c in cert.monomial_squares
    ]
    return SoncCertificate(
        cert.nvars, circuits, squares, cert.mode, cert.epsilon, dict(cert.slack)
    )


def decompose(f: SparsePoly, *, seed: int = 0) -> DecomposeOutcome:
    """Decide membership of f in the cone of sums of nonnegative circuits
    and certify the answer.

    Dispatch order: support-vertex necessary conditions (failure yields an
    exactly negative point), monomial factoring, trivial all-square inputs,
    sign normalization, face restriction for inner terms on the boundary of
    the outer hull, then the single- or multi-inner-term LP pipelines.
    """
    if f.is_zero():
        return DecomposeOutcome("SONC", certificate=SoncCertificate(f.nvars))
    nec = necessary_conditions(f)
    if not nec.passed:
        vertex, kind = nec.violations[0]
        base = [1] * f.nvars
        if kind == "odd_vertex" and f.coeff(vertex) > 0:
            i = next(i for i, k in enumerate(vertex) if k % 2 == 1)
            base[i] = -1
        w = _ray_witness(f, [vertex], base)
        if w is not None:
            return DecomposeOutcome(
                "NotPSD",
                witness_point=w,
                witness_value=f.evaluate(w),
                reason=f"support vertex {vertex} fails the parity/positivity requirement",
            )
        return DecomposeOutcome(
            "Inconclusive",
            reason="necessary-condition violation found but witness construction failed",
        )
    shift, g = factor_out_monomial(f)
    if not is_even(shift):
        raise SoncError("internal: factored monomial is odd despite the vertex check")
    out = _decompose_core(g, seed=seed)

    if out.certificate is not None:
        cert = _map_certificate(out.certificate, None, shift)
        rel = _set_residual_mode(cert, f)
        if float(rel) > DEFAULT_EPS:
            return DecomposeOutcome(
                "Inconclusive",
                reason="certificate residual exceeds the epsilon budget",
                hypotheses=out.hypotheses,
                d_star=out.d_star,
                x_star=out.x_star,
            )
        out = DecomposeOutcome(
            out.verdict, cert, out.witness_point, out.witness_value,
            out.witness_system, out.reason, out.hypotheses, out.d_star, out.x_star,
        )
    if out.verdict == "NotPSD":
        if out.witness_point is None:
            return DecomposeOutcome(
                "Inconclusive", reason="negative verdict lost its witness point"
            )
        val = f.evaluate(out.witness_point)
        if not val < 0:
            return DecomposeOutcome(
                "Inconclusive",
                reason="witness point lost exact negativity after normalization",
            )
        out = DecomposeOutcome(
            "NotPSD", witness_point=out.witness_point, witness_value=val,
            reason=out.reason, hypotheses=out.hypotheses,
            d_star=out.d_star, x_star=out.x_star,
        )
    return out


def _decompose_core(g: SparsePoly, *, seed: int = 0) -> DecomposeOutcome:
    split = split_support(g)
    if not split.gamma_terms:
        squares = sorted(split.lambda_terms.items(), key=lambda t: grlex_key(t[0]))
        return DecomposeOutcome("SONC", certificate=SoncCertificate(g.nvars, [], squares))
    assignment = find_sign_assignment(g)
    v_signs = assignment.signs if assignment is not None else None
    h = flip_signs(g, v_signs) if v_signs is not None else g
    out = _decompose_signed(h, v_signs, seed=seed)
    if v_signs is None:
        return out
    if out.certificate is not None:
        out = DecomposeOutcome(
            out.verdict,
            _map_certificate(out.certificate, v_signs, (0,) * g.nvars),
            out.witness_point, out.witness_value, out.witness_system,
            out.reason, out.hypotheses, out.d_star, out.x_star,
        )
    if out.witness_point is not None:
        p = tuple(Fraction(s) * Fraction(v) for s, v in zip(v_signs, out.witness_point))
        out = DecomposeOutcome(
            out.verdict, out.certificate, p, g.evaluate(p),
            out.witness_system, out.reason, out.hypotheses, out.d_star, out.x_star,
        )
    return out


def _decompose_signed(h: SparsePoly, v_signs, *, seed: int = 0) -> DecomposeOutcome:
    """Pipeline for a sign-normalized polynomial (every inner coefficient
    negative whenever a sign assignment exists)."""
    split = split_support(h)
    lam, gam = split.lambda_terms, split.gamma_terms
    lam_pts = sorted(lam, key=grlex_key)
    if not lam_pts:
        return DecomposeOutcome(
            "Inconclusive", reason="no even positive terms to build circuits from"
        )
    for b in sorted(gam, key=grlex_key):
        cls = interior_classification(lam_pts, b)
        if cls.kind == "outside":
            raise SoncError(
                "internal: inner exponent outside the outer hull despite the vertex check"
            )
        if cls.kind == "boundary":
            return _face_restriction(h, (b, cls.face), seed=seed)

    if len(gam) == 1:
        beta = next(iter(gam))
        status, payload = certify_single_beta(h, beta)
        if status == "ok":
            return DecomposeOutcome("SONC", certificate=payload)
        if status == "notsonc":
            return DecomposeOutcome(
                "NotSONC",
                witness_system=payload,
                reason=(
                    "exact zero at a positive rational point with an infeasible "
                    "circuit-mass system"
                ),
            )
        if status == "excess":
            cp: CriticalPoint = payload
            x_rat = tuple(rationalize(v) for v in cp.x)
            for cand in (x_rat, tuple(Fraction(v) for v in cp.x)):
                if any(v <= 0 for v in cand):
                    continue
                val = h.evaluate(cand)
                if val < 0:
                    return DecomposeOutcome(
                        "NotPSD",
                        witness_point=cand,
                        witness_value=val,
                        d_star=cp.d_star,
                        x_star=cp.x,
                    )
            return DecomposeOutcome(
                "Inconclusive",
                reason="inner magnitude exceeds the critical value but exact "
                "negativity was not confirmed",
                d_star=cp.d_star,
                x_star=cp.x,
            )
        cp = payload
        return DecomposeOutcome(
            "Inconclusive",
            reason="no LP route produced a certificate for the single inner term",
            d_star=getattr(cp, "d_star", None),
            x_star=getattr(cp, "x", None),
        )

    try:
        same_side = same_side_check(lam_pts, sorted(gam, key=grlex_key))
    except DimensionError:
        same_side = False
    hypos = {
        "sign_assignment": v_signs is not None,
        "same_side": same_side,
        "simple_vertex": simple_vertex_check(h.support()),
        "all_inner_interior": True,
    }
    gam_sorted = sorted(gam, key=grlex_key)
    order = sorted(range(len(gam_sorted)), key=lambda j: (-abs(gam[gam_sorted[j]]), -j))
    last: DecomposeOutcome | None = None
    for freed in order:
        out = _multi_attempt(h, freed, v_signs, seed=seed)
        out.hypotheses = hypos
        if out.verdict != "Inconclusive":
            return out
        last = out
    return last if last is not None else DecomposeOutcome(
        "Inconclusive", reason="no freed inner term produced a decision", hypotheses=hypos
    )


def _face_restriction(h: SparsePoly, boundary_beta, *, seed: int = 0) -> DecomposeOutcome:
    """Split off the terms on the minimal outer-hull face containing a
    boundary inner exponent and decompose the pieces separately.

    Sound combinations only: face and remainder both certified certify h; a
    negative face makes h negative (dilation along the face's supporting
    direction); a face refutation lifts to h because decompositions within
    the support restrict to faces.  Everything else is Inconclusive — with
    several inner terms the mass split can lose solutions.
    """
    beta, face_lambda_pts = boundary_beta
    face_set = set(face_lambda_pts)
    split = split_support(h)
    lam_pts = sorted(split.lambda_terms, key=grlex_key)
    face_exps = [e for e in h.support() if e in face_set]
    for e in split.gamma_terms:
        if e in face_set:
            continue
        feasible, pos = positive_weight_points(lam_pts, e)
        if feasible and set(pos) <= face_set:
            face_exps.append(e)
    face_exps = sorted(set(face_exps), key=grlex_key)
    f_face = SparsePoly(h.nvars, {e: h.terms[e] for e in face_exps})
    f_rest = h - f_face
    face_out = decompose(f_face, seed=seed)
    if face_out.verdict == "NotPSD":
        w = _ray_witness(h, face_exps, face_out.witness_point)
        if w is not None:
            return DecomposeOutcome(
                "NotPSD",
                witness_point=w,
                witness_value=h.evaluate(w),
                reason=f"restriction to the face through {tuple(beta)} is negative",
            )
        return DecomposeOutcome(
            "Inconclusive",
            reason="face restriction is negative but the dilation witness failed",
        )
    if face_out.verdict == "NotSONC":
        return DecomposeOutcome(
            "NotSONC",
            witness_system=face_out.witness_system,
            reason=(
                "restriction to an outer-hull face admits no circuit "
                "decomposition; decompositions within the support restrict to faces"
            ),
        )
    if face_out.verdict != "SONC":
        return DecomposeOutcome(
            "Inconclusive",
            reason=f"face restriction at {tuple(beta)} was undecided",
        )
    if f_rest.is_zero():
        return face_out
    rest_out = decompose(f_rest, seed=seed)
    if rest_out.verdict == "SONC":
        cert = SoncCertificate(
            h.nvars,
            face_out.certificate.circuits + rest_out.certificate.circuits,
            face_out.certificate.monomial_squares
            + rest_out.certificate.monomial_squares,
        )
        _set_residual_mode(cert, h)
        return DecomposeOutcome("SONC", certificate=cert)
    return DecomposeOutcome(
        "Inconclusive",
        reason=(
            "face split remainder did not certify; the split is not exhaustive "
            "with several inner terms"
        ),
    )
