"""Recover normal parameters from the first 8S+1 photon-number probabilities.

Pipeline: probabilities -> f_1..f_8S -> minimal polynomial q_0 (smallest k
for which the Hankel-structured matrix A_k loses rank) -> inverse roots
lambda'_k with multiplicity 1 (c_k = 0) or 2 (c_k > 0) -> Hermite
interpolation solve for m_k / 2 and c'_k lambda'_k**2 -> normal parameters.

All algebra runs in extended precision. The inputs' own precision sets the
default tolerances: ``10**(-digits/2)`` for the rank and residual tests,
which is 1e-8 for double-precision inputs.
"""

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from ._numerics import FLOAT_DIGITS, context
from .errors import (
    ComplexRoot,
    GaussCounterError,
    IllConditioned,
    InvalidParameters,
    MultiplicityRoundingFailed,
    NegativeWeight,
    NoKernelFound,
    RankAmbiguity,
    RootOutOfRange,
)
from .forward import PhotonDistribution
from .moments import probabilities_to_f
from .state_model import NormalParameters

TOL_ROOT = 1e-5
TOL_IMAG = 1e-6
RANK_BAND = 100.0
ROUNDING_LIMIT = 0.25
GUARD_DIGITS = 30


def default_tolerance(input_digits):
    return 10.0 ** (-input_digits / 2)


@dataclass(frozen=True)
class MinimalPolynomial:
    """``q_0(z) = sum_l g_l z**l`` with ``g_0 = 1``."""

    coefficients: tuple
    singular_ratios: tuple = ()
    annihilation_residual: float = 0.0

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def as_floats(self):
        return [float(g) for g in self.coefficients]

    def __call__(self, z):
        out = 0
        for g in reversed(self.coefficients):
            out = out * z + g
        return out


@dataclass(frozen=True)
class InversionReport:
    parameters: NormalParameters
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {"parameters": self.parameters.to_dict(), "diagnostics": self.diagnostics}



def _as_ctx(values, ctx):
    return [ctx.mpf(v) if not isinstance(v, (float, np.floating)) else ctx.mpf(float(v)) for v in values]


def _singular_values(ctx, a):
    return ctx.svd_r(a, compute_uv=False)


def find_minimal_polynomial(f, mode_count, tol_rank=None, ctx=None, input_digits=FLOAT_DIGITS):
    """Minimal-degree ``q`` with ``q(0) = 1`` annihilating ``f`` on degrees 4S..8S-1."""
    s = int(mode_count)
    if len(f) < 8 * s:
        raise InvalidParameters(f"need f_1..f_{8 * s}, got {len(f)} values")
    if ctx is None:
        ctx = context(input_digits + GUARD_DIGITS)
    if tol_rank is None:
        tol_rank = default_tolerance(input_digits)
    f = _as_ctx(f[: 8 * s], ctx)
    fmax = max(abs(x) for x in f)

    def entry(i):  # f_i, 1-based
        return f[i - 1]

    ratios = []
    chosen = None
    for k in range(1, 4 * s + 1):
        a = ctx.matrix([[entry(j + 1 - l) for l in range(k + 1)] for j in range(4 * s, 8 * s)])
        if k + 1 > 4 * s:
            ratio = 0.0
        else:
            sv = _singular_values(ctx, a)
            ratio = float(sv[k] / sv[0]) if sv[0] != 0 else 0.0
        ratios.append(ratio)
        if ratio < tol_rank:
            chosen = (k, a)
            break
    k, a = chosen
    if k > 1 and ratios[-1] >= tol_rank / RANK_BAND and ratios[-2] <= tol_rank * RANK_BAND:
        raise RankAmbiguity(
            f"singular ratios {ratios[-2]:.3e} (k={k - 1}) and {ratios[-1]:.3e} (k={k}) "
            f"both lie near tol_rank={tol_rank:.1e}",
            details={"hankel_singular_ratios": ratios, "tol_rank": tol_rank},
        )
    _, _, v = ctx.svd_r(a, full_matrices=True, compute_uv=True)
    kernel = [v[v.rows - 1, i] for i in range(k + 1)]
    scale = max(abs(x) for x in kernel)
    if abs(kernel[0]) <= 1e-3 * tol_rank * scale:
        raise NoKernelFound(
            f"kernel of A_{k} has vanishing constant term; input is inconsistent",
            details={"hankel_singular_ratios": ratios, "tol_rank": tol_rank},
        )
    g = [x / kernel[0] for x in kernel]
    resid = max(abs(ctx.fsum(g[l] * entry(j - l + 1) for l in range(k + 1))) for j in range(4 * s, 8 * s))
    return MinimalPolynomial(tuple(g), tuple(ratios), float(resid / fmax) if fmax else 0.0)


# --- polynomial helpers (descending coefficient lists) ---------------------


def _normalized(p):
    scale = max(abs(x) for x in p)
    return [x / scale for x in p]


def _trim(p, tol):
    p = list(p)
    while len(p) > 1 and abs(p[0]) <= tol:
        p.pop(0)
    return p


def _divmod(a, b):
    a = list(a)
    quotient = []
    while len(a) >= len(b):
        factor = a[0] / b[0]
        quotient.append(factor)
        for i in range(len(b)):
            a[i] -= factor * b[i]
        a.pop(0)
    return quotient, a


def _derivative(p):
    n = len(p) - 1
    return [c * (n - i) for i, c in enumerate(p[:-1])]


def _gcd(a, b, tol):
    """Euclid with relative remainder threshold; returns a descending coefficient list."""
    a, b = _normalized(a), _normalized(b)
    while len(b) > 1:
        _, r = _divmod(a, b)
        rmax = max((abs(x) for x in r), default=0)
        if rmax <= tol:
            return b
        r = _trim(r, tol * rmax)
        a, b = b, _normalized(r)
    return [b[0] / b[0]]


def _polyroots(ctx, p):
    if len(p) == 2:
        return [-p[1] / p[0]]
    try:
        return list(ctx.polyroots(p, maxsteps=200, extraprec=2 * ctx.prec))
    except mpmath.libmp.libhyper.NoConvergence:
        n = len(p) - 1
        comp = ctx.zeros(n, n)
        for i in range(1, n):
            comp[i, i - 1] = 1
        for i in range(n):
            comp[0, i] = -p[i + 1] / p[0]
        return list(ctx.eig(comp, left=False, right=False))


def _rel_dist(ctx, a, b):
    return abs(a - b) / max(abs(a), abs(b))


def _cluster(ctx, roots, tol_root):
    """Group roots whose relative distance is below ``tol_root`` (single linkage)."""
    groups = []
    for r in sorted(roots, key=lambda x: -ctx.re(x)):
        for g in groups:
            if any(_rel_dist(ctx, r, x) <= tol_root for x in g):
                g.append(r)
                break
        else:
            groups.append([r])
    return groups


def roots_with_multiplicity(q, tol_root=TOL_ROOT, ctx=None, tol_gcd=None):
    """Inverse roots ``lambda'`` of ``q`` with multiplicity 1 or 2, sorted decreasing.

    Returns ``(pairs, diagnostics)`` where pairs is a list of ``(lambda', mult)``
    in working precision.
    """
    if ctx is None:
        ctx = context(FLOAT_DIGITS + GUARD_DIGITS)
    if tol_gcd is None:
        tol_gcd = default_tolerance(FLOAT_DIGITS)
    g = [ctx.mpf(x) for x in q.coefficients]
    # w**k q(1/w) has the lambda' as roots; its descending coefficients are g_0..g_k
    poly = g
    degree = len(poly) - 1
    roots = None
    borderline = []
    if degree >= 2:
        common = _gcd(poly, _derivative(poly), tol_gcd)
        if 1 <= len(common) - 1 <= degree // 2:
            squarefree, _ = _divmod(_normalized(poly), common)
            simple = _polyroots(ctx, squarefree)
            doubled = _polyroots(ctx, common)
            matched = all(any(_rel_dist(ctx, d, r) <= tol_root for r in simple) for d in doubled)
            if matched:
                roots = simple + doubled
    if roots is None:
        roots = _polyroots(ctx, poly)
    groups = _cluster(ctx, roots, tol_root)
    pairs = []
    for grp in groups:
        if len(grp) > 2:
            raise ComplexRoot(f"{len(grp)} roots coincide within tol_root; multiplicity > 2 is impossible")
        center = ctx.fsum(grp) / len(grp)
        if abs(ctx.im(center)) > TOL_IMAG * abs(ctx.re(center)):
            raise ComplexRoot(f"root {ctx.nstr(center, 8)} is not real")
        lp = ctx.re(center)
        if not 0 < lp < 1:
            raise RootOutOfRange(f"lambda' = {ctx.nstr(lp, 12)} outside (0, 1)")
        pairs.append((lp, len(grp)))
    for i, a in enumerate(groups):
        for b in groups[i + 1 :]:
            dist = min(_rel_dist(ctx, x, y) for x in a for y in b)
            if dist <= tol_root * RANK_BAND:
                borderline.append((i, groups.index(b)))
    if sum(m for _, m in pairs) != degree:
        raise ComplexRoot("root multiplicities do not add up to the polynomial degree")
    pairs.sort(key=lambda t: -t[0])
    scale = max(abs(x) for x in poly)
    root_residuals = [
        float(abs(ctx.polyval(poly, lp)) / scale) if m == 1 else float(abs(ctx.polyval(_derivative(poly), lp)) / scale)
        for lp, m in pairs
    ]
    return pairs, {"root_residuals": root_residuals, "borderline": borderline}


def _z_matrix(ctx, pairs, size):
    doubles = [lp for lp, m in pairs if m == 2]
    rows = []
    for n in range(1, size + 1):
        row = [lp**n for lp, _ in pairs]
        row += [n * lp ** (n - 1) for lp in doubles]
        rows.append(row)
    return rows


def solve_weights(f, pairs, ctx=None, tol_res=None):
    """Solve the Hermite interpolation system ``Z w = (f_1..f_{h+hbar})``.

    Returns ``(m_raw, omega, diagnostics)``; ``m_raw[k] = 2 w_k`` and
    ``omega[j] = c'_j lambda'_j**2 = (c_j / (1 + lambda_j))**2`` for each
    double root in order.
    """
    if ctx is None:
        ctx = context(FLOAT_DIGITS + GUARD_DIGITS)
    if tol_res is None:
        tol_res = default_tolerance(FLOAT_DIGITS)
    f = _as_ctx(f, ctx)
    size = len(pairs) + sum(1 for _, m in pairs if m == 2)
    if size > len(f):
        raise InvalidParameters("not enough f values for the interpolation system")
    z = ctx.matrix(_z_matrix(ctx, pairs, size))
    rhs = ctx.matrix(f[:size])
    w = ctx.lu_solve(z, rhs)
    fnorm = max(abs(x) for x in f)
    solve_res = float(ctx.norm(z * w - rhs, p=ctx.inf) / fnorm)
    if solve_res > tol_res:
        raise IllConditioned(
            f"Z-solve residual {solve_res:.3e} exceeds tol_res={tol_res:.1e}",
            details={"z_solve_residual": solve_res, "tol_res": tol_res},
        )
    full = ctx.matrix(_z_matrix(ctx, pairs, len(f)))
    model_res = float(ctx.norm(full * w - ctx.matrix(f), p=ctx.inf) / fnorm)
    h = len(pairs)
    m_raw = [2 * w[i] for i in range(h)]
    omega = [w[i] for i in range(h, size)]
    weight_tol = tol_res * fnorm
    if any(m < -weight_tol for m in m_raw) or any(x < -weight_tol for x in omega):
        raise NegativeWeight(
            f"negative interpolation weight: m = {[ctx.nstr(x, 6) for x in m_raw]}, "
            f"omega = {[ctx.nstr(x, 6) for x in omega]}",
            details={"multiplicities_raw": [float(x) for x in m_raw], "model_residual": model_res},
        )
    return m_raw, omega, {"z_solve_residual": solve_res, "model_residual": model_res}


def _round_multiplicities(m_raw, mode_count):
    raw = [float(x) for x in m_raw]
    rounded = [int(round(x)) for x in raw]
    deltas = [abs(x - r) for x, r in zip(raw, rounded)]
    if any(d > ROUNDING_LIMIT for d in deltas):
        raise MultiplicityRoundingFailed(f"multiplicities {raw} are not close to integers")
    target = 2 * mode_count
    diff = target - sum(rounded)
    if diff:
        # repair: move the entry with the most slack in the needed direction
        step = 1 if diff > 0 else -1
        for _ in range(abs(diff)):
            slack = [(x - r) * step for x, r in zip(raw, rounded)]
            i = int(np.argmax(slack))
            rounded[i] += step
        deltas = [abs(x - r) for x, r in zip(raw, rounded)]
        if any(r < 1 for r in rounded) or any(d > 0.5 + ROUNDING_LIMIT for d in deltas):
            raise MultiplicityRoundingFailed(
                f"multiplicities {raw} cannot be rounded to positive integers summing to {target}"
            )
    if any(r < 1 for r in rounded):
        raise MultiplicityRoundingFailed(f"multiplicities {raw} round to a non-positive value")
    return rounded, deltas


def _staged(stage, fn, *args, context_details=None, **kwargs):
    """Run one pipeline stage, labelling errors with the stage and the diagnostics gathered so far."""
    try:
        return fn(*args, **kwargs)
    except GaussCounterError as exc:
        if exc.stage is None:
            exc.stage = stage
        if context_details:
            exc.details = {**context_details, **(exc.details or {})}
        raise


def _candidate_assignments(pairs, info):
    """Initial multiplicity assignment plus alternatives for borderline clusters."""
    yield pairs
    doubles = [i for i, (_, m) in enumerate(pairs) if m == 2]
    for i in doubles:
        alt = list(pairs)
        alt[i] = (pairs[i][0], 1)
        yield alt


def invert_distribution(dist, tol_rank=None, tol_root=TOL_ROOT, tol_res=None, mode_count=None):
    """Normal parameters from ``p_0..p_8S``.

    Only the first 8S+1 entries of ``dist`` are used. Tolerances default to
    ``10**(-digits/2)`` where ``digits`` is the precision the probabilities carry.
    """
    if not isinstance(dist, PhotonDistribution):
        raise TypeError("expected PhotonDistribution")
    s = int(mode_count or dist.mode_count)
    needed = 8 * s + 1
    if len(dist) < needed:
        raise InvalidParameters(f"inversion needs p_0..p_{8 * s} ({needed} values), got {len(dist)}")
    input_digits = dist.digits if dist.precise is not None else FLOAT_DIGITS
    tol_rank = default_tolerance(input_digits) if tol_rank is None else tol_rank
    tol_res = default_tolerance(input_digits) if tol_res is None else tol_res
    ctx = context(input_digits + GUARD_DIGITS)
    values = dist.values(ctx, count=needed)

    f = _staged("moments", probabilities_to_f, values, s, 8 * s, ctx)
    q = _staged("minimal_polynomial", find_minimal_polynomial, f, s, tol_rank, ctx, input_digits)
    gathered = {
        "hankel_singular_ratios": list(q.singular_ratios),
        "tol_rank": tol_rank,
        "minimal_polynomial": q.as_floats(),
        "annihilation_residual": q.annihilation_residual,
    }
    pairs, root_info = _staged(
        "roots", roots_with_multiplicity, q, tol_root, ctx, tol_rank, context_details=gathered
    )

    best = None
    for candidate in _candidate_assignments(pairs, root_info):
        try:
            solved = solve_weights(f, candidate, ctx, tol_res)
        except GaussCounterError as exc:
            if best is None and candidate is pairs:
                first_error = exc
            continue
        score = solved[2]["model_residual"]
        if best is None or score < best[0]:
            best = (score, candidate, solved)
        if candidate is pairs and score <= tol_res:
            break
    if best is None:
        first_error.stage = first_error.stage or "weights"
        first_error.details = {**gathered, **(first_error.details or {})}
        raise first_error
    _, pairs, (m_raw, omega, solve_info) = best

    def rebuild():
        m_int, deltas = _round_multiplicities(m_raw, s)
        lam, c = [], []
        omega_iter = iter(omega)
        for lp, mult in pairs:
            lam_k = lp / (1 - lp)
            lam.append(float(lam_k))
            if mult == 2:
                w = next(omega_iter)
                c.append(float((1 + lam_k) * ctx.sqrt(max(w, 0))))
            else:
                c.append(0.0)
        return NormalParameters(lam, m_int, c, tol_distinct=0.0), deltas

    gathered.update(solve_info, multiplicities_raw=[float(x) for x in m_raw])
    params, deltas = _staged("reconstruction", rebuild, context_details=gathered)
    diagnostics = {
        "mode_count": s,
        "input_digits": input_digits,
        "working_digits": int(ctx.dps),
        "tolerances": {"tol_rank": tol_rank, "tol_root": tol_root, "tol_res": tol_res},
        "hankel_singular_ratios": list(q.singular_ratios),
        "minimal_polynomial": q.as_floats(),
        "degree": q.degree,
        "annihilation_residual": q.annihilation_residual,
        "lambda_prime": [float(lp) for lp, _ in pairs],
        "root_multiplicities": [m for _, m in pairs],
        "root_residuals": root_info["root_residuals"],
        "z_solve_residual": solve_info["z_solve_residual"],
        "model_residual": solve_info["model_residual"],
        "multiplicities_raw": [float(x) for x in m_raw],
        "multiplicity_rounding_deltas": deltas,
        "displacement_weights": [float(x) for x in omega],
    }
    return InversionReport(params, diagnostics)
