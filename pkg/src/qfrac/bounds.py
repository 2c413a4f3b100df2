"""Numerical checks of the two-sided, range and decay estimates for e_{alpha,beta}(-z; q).

The strict range 0 < e_{alpha,1}(-z; q) < 1 is treated as a hard invariant.
The two-sided estimate and the decay bound are measured: every row records
signed relative margins so a scan documents how tight the constants are.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field

from .errors import PoleError, QCalcError
from .qcore import QContext, q_gamma
from .qspecial import DEFAULT, MLParams, q_exp, q_mittag_leffler

CSV_FIELDS = (
    "alpha",
    "beta",
    "q",
    "z",
    "value",
    "lower",
    "upper",
    "decay_bound",
    "holds_lower",
    "holds_upper",
    "holds_range",
    "holds_decay",
    "margin_lower",
    "margin_upper",
)

NAN = float("nan")


@dataclass
class BoundReport:
    alpha: float
    beta: float
    q: float
    z: float
    value: float = NAN
    lower: float = NAN
    upper: float = NAN
    decay_bound: float = NAN
    holds_lower: bool | None = None
    holds_upper: bool | None = None
    holds_range: bool | None = None
    holds_decay: bool | None = None
    margin_lower: float = NAN
    margin_upper: float = NAN
    # not serialised to CSV; kept for summaries
    decay_constant: float = field(default=NAN, repr=False)
    empirical_constant: bool = field(default=False, repr=False)
    error: str | None = field(default=None, repr=False)

    def row(self):
        return {k: getattr(self, k) for k in CSV_FIELDS}


@dataclass(frozen=True)
class DecayConstant:
    alpha_prime: float
    c_q: float
    computable: bool


def decay_constant(alpha, beta, ctx):
    """alpha' = 2^alpha / ((1 - q^beta)(1 - q^(1/2))), C_q = e_{q^(1/2)}(alpha') / Gamma_q(beta).

    The q^(1/2)-exponential is evaluated through its product form, since its
    argument always lies outside the series radius. A pole or a nonpositive
    product value makes the constant meaningless and it is flagged as such.
    """
    q = ctx.q
    if beta <= 0:
        return DecayConstant(math.inf, NAN, False)
    root = math.sqrt(q)
    alpha_prime = 2.0**alpha / ((1.0 - q**beta) * (1.0 - root))
    try:
        e = q_exp(alpha_prime, ctx.with_q(root))
    except PoleError:
        return DecayConstant(alpha_prime, NAN, False)
    if not e.ok or not math.isfinite(e.value) or e.value <= 0:
        return DecayConstant(alpha_prime, NAN, False)
    return DecayConstant(alpha_prime, e.value / q_gamma(beta, ctx), True)


def _margin_lower(value, lower):
    return (value - lower) / abs(lower)


def _margin_upper(value, upper):
    return (upper - value) / abs(upper)


def ml_bounds_check(alpha, z, ctx, strat=DEFAULT):
    """Evaluate e_{alpha,1}(-z; q) against both sides of the two-sided estimate."""
    if not 0 < alpha < 1:
        raise ValueError("the two-sided estimate needs 0 < alpha < 1")
    if z < 0:
        raise ValueError("z must be nonnegative")
    rep = BoundReport(alpha, 1.0, ctx.q, z)
    value = q_mittag_leffler(MLParams(alpha, 1.0), -z, ctx, strat).value
    rep.value = value
    rep.lower = 1.0 / (1.0 + q_gamma(1.0 - alpha, ctx) * z)
    rep.upper = 1.0 / (1.0 + z / q_gamma(alpha + 1.0, ctx))
    rep.margin_lower = _margin_lower(value, rep.lower)
    rep.margin_upper = _margin_upper(value, rep.upper)
    rep.holds_lower = rep.margin_lower >= 0
    rep.holds_upper = rep.margin_upper >= 0
    rep.holds_range = 0.0 < value < 1.0 if z > 0 else None
    _fill_decay(rep, alpha, 1.0, z, value, ctx)
    return rep


def _fill_decay(rep, alpha, beta, z, value, ctx):
    dc = decay_constant(alpha, beta, ctx)
    if dc.computable:
        rep.decay_constant = dc.c_q
        rep.decay_bound = dc.c_q / (1.0 + z)
        rep.empirical_constant = False
    else:
        # empirical stand-in; bounds_scan widens it to the sup over the grid
        c = (1.0 + z) * abs(value)
        rep.decay_constant = c
        rep.decay_bound = c / (1.0 + z)
        rep.empirical_constant = True
    rep.holds_decay = (1.0 + z) * abs(value) <= rep.decay_constant


def ml_decay_check(p, z, ctx, strat=DEFAULT):
    """|e_{alpha,beta}(-z; q)| against C_q / (1 + z)."""
    if not 0 < p.alpha < 2:
        raise ValueError("the decay bound needs 0 < alpha < 2")
    if z < 0:
        raise ValueError("z must be nonnegative")
    rep = BoundReport(p.alpha, p.beta, ctx.q, z)
    value = q_mittag_leffler(p, -z, ctx, strat).value
    rep.value = value
    if p.beta == 1.0 and p.alpha < 1:
        rep.lower = 1.0 / (1.0 + q_gamma(1.0 - p.alpha, ctx) * z)
        rep.upper = 1.0 / (1.0 + z / q_gamma(p.alpha + 1.0, ctx))
        rep.margin_lower = _margin_lower(value, rep.lower)
        rep.margin_upper = _margin_upper(value, rep.upper)
        rep.holds_lower = rep.margin_lower >= 0
        rep.holds_upper = rep.margin_upper >= 0
        rep.holds_range = 0.0 < value < 1.0 if z > 0 else None
    _fill_decay(rep, p.alpha, p.beta, z, value, ctx)
    return rep


def bounds_scan(alphas, betas, qs, zs, ctx_template=None, strat=DEFAULT, *, kind="decay"):
    """Cartesian sweep, one report per admissible (alpha, beta, q, z) tuple.

    ``kind="two-sided"`` uses ``ml_bounds_check`` (betas ignored), ``"decay"``
    uses ``ml_decay_check``. ``zs`` is either a list, or a callable
    ``zs(alpha, q)`` returning the list for that pair. Row errors are stored
    on the row and never abort the scan.
    """
    if ctx_template is None:
        ctx_template = QContext(0.5)
    rows = []
    beta_list = [1.0] if kind == "two-sided" else list(betas)
    for alpha, beta, q in itertools.product(alphas, beta_list, qs):
        ctx = QContext(
            q,
            eps_product=ctx_template.eps_product,
            eps_series=ctx_template.eps_series,
            max_terms=ctx_template.max_terms,
            q_min=ctx_template.q_min,
            q_max=ctx_template.q_max,
        )
        z_list = zs(alpha, q) if callable(zs) else zs
        group = []
        for z in z_list:
            try:
                if kind == "two-sided":
                    rep = ml_bounds_check(alpha, z, ctx, strat)
                else:
                    rep = ml_decay_check(MLParams(alpha, beta), z, ctx, strat)
            except (QCalcError, ValueError) as exc:
                rep = BoundReport(alpha, beta, q, z, error=f"{type(exc).__name__}: {exc}")
            group.append(rep)
        _apply_empirical(group)
        rows.extend(group)
    return rows


def _apply_empirical(group):
    emp = [r for r in group if r.empirical_constant and r.error is None]
    if not emp:
        return
    sup = max((1.0 + r.z) * abs(r.value) for r in emp)
    for r in emp:
        r.decay_constant = sup
        r.decay_bound = sup / (1.0 + r.z)
        r.holds_decay = (1.0 + r.z) * abs(r.value) <= sup


def default_radius_grid(n, lo=1e-3, hi=0.95):
    """n log-spaced z values between lo and hi times the series radius (1-q)^-alpha."""

    def zs(alpha, q):
        radius = (1.0 - q) ** (-alpha)
        return [radius * lo * (hi / lo) ** (i / (n - 1)) for i in range(n)]

    return zs


def violation_factor(rep):
    """How far a violated side of the two-sided estimate is off, as a ratio >= 1."""
    f = 1.0
    if rep.holds_lower is False:
        f = max(f, rep.lower / rep.value if rep.value > 0 else math.inf)
    if rep.holds_upper is False:
        f = max(f, rep.value / rep.upper)
    return f


def summarize(rows):
    """Pass rates and worst margins of a scan."""

    def rate(key):
        vals = [getattr(r, key) for r in rows if getattr(r, key) is not None]
        return (sum(bool(v) for v in vals) / len(vals)) if vals else None

    def worst(key):
        vals = [getattr(r, key) for r in rows if not math.isnan(getattr(r, key))]
        return min(vals) if vals else None

    violations = [
        i for i, r in enumerate(rows) if r.holds_lower is False or r.holds_upper is False
    ]
    return {
        "rows": len(rows),
        "errors": {i: r.error for i, r in enumerate(rows) if r.error},
        "pass_rate": {
            k: rate(k) for k in ("holds_lower", "holds_upper", "holds_range", "holds_decay")
        },
        "worst_margin": {k: worst(k) for k in ("margin_lower", "margin_upper")},
        "two_sided_violations": [
            {"row": i, "factor": violation_factor(rows[i])} for i in violations
        ],
        "empirical_constant_rows": [i for i, r in enumerate(rows) if r.empirical_constant],
    }


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(float(v))


def to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([_fmt(v) for v in r.row().values()])
    return buf.getvalue()


def _json_val(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def to_json(rows):
    return json.dumps(
        [{k: _json_val(v) for k, v in r.row().items()} for r in rows], indent=1
    )
