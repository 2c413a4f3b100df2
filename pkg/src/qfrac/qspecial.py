"""q-exponential and q-Mittag-Leffler functions, plain and q-translated."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import AccelerationFailed, InvalidTranslation, OutsideRadius, PoleError
from .qcore import (
    QContext,
    SeriesResult,
    Status,
    gamma_ratio,
    q_pochhammer_inf,
    q_pochhammer_inf_vec,
    qpow_pochhammer_inf,
    rq_gamma,
)
from .summation import Neumaier, wynn_sweep

EXP_POLE_TOL = 1e-9


@dataclass(frozen=True)
class MLParams:
    alpha: float
    beta: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta!r}")


class Mode(enum.Enum):
    SeriesOnly = "series"
    SeriesThenAccelerate = "accelerate"


@dataclass(frozen=True)
class EvalStrategy:
    mode: Mode = Mode.SeriesThenAccelerate
    accel_table_size: int = 40

    def __post_init__(self):
        if self.accel_table_size < 1:
            raise ValueError("accel_table_size must be positive")
        if self.mode is Mode.SeriesThenAccelerate and self.accel_table_size < 4:
            raise ValueError("acceleration needs a table of at least 4 partial sums")


STRICT = EvalStrategy(Mode.SeriesOnly)
DEFAULT = EvalStrategy()


# --------------------------------------------------------------------------
# q-exponential


def q_exp(x, ctx):
    """e_q(x) = sum x^k / [k]_q!.

    Inside |x|(1 - q) < 1 the series is summed directly. Outside, the Euler
    product 1 / ((1 - q) x; q)_inf continues it and the result is flagged
    ``Accelerated``.
    """
    q = ctx.q
    a = (1.0 - q) * x
    if abs(a) < 1.0:
        acc = Neumaier(1.0)
        term = 1.0
        k = 0
        while True:
            term *= a / (1.0 - q ** (k + 1))
            k += 1
            acc.add(term)
            rho = abs(a) / (1.0 - q ** (k + 1))
            tail = abs(term) * rho / (1.0 - rho) if rho < 1 else math.inf
            if tail <= ctx.eps_series * max(1.0, abs(acc.value)):
                return SeriesResult(acc.value, k + 1, tail, Status.Converged)
            if k >= ctx.max_terms:
                return SeriesResult(acc.value, k + 1, tail, Status.Truncated)
    n = math.log(a) / -ctx.log_q if a > 0 else -1.0
    if n >= -EXP_POLE_TOL and abs(n - round(n)) < EXP_POLE_TOL:
        raise PoleError(
            f"e_q has a pole at x={x!r} ((1-q)x = q^-{round(n)})",
            module="qspecial",
            operation="q_exp",
        )
    prod = q_pochhammer_inf(a, ctx)
    status = Status.Accelerated if prod.status is Status.Converged else prod.status
    return SeriesResult(1.0 / prod.value, prod.terms_used, prod.tail_estimate, status)


# --------------------------------------------------------------------------
# Mittag-Leffler series machinery


@lru_cache(maxsize=256)
def _scaled_rgamma(alpha, beta, q, eps_product, max_terms, n):
    """g_k = (1/Gamma_q(alpha k + beta)) / (1 - q)^(alpha k), k < n.

    Scaling out the geometric part keeps terms representable for large k.
    """
    ctx = QContext(q, eps_product=eps_product, max_terms=max_terms, q_min=q, q_max=q)
    k = np.arange(n, dtype=float)
    e = alpha * k + beta
    g = gamma_ratio(e, ctx) * (1.0 - q) ** (beta - 1.0)
    # exact zero at beta = 0, k = 0 (1/Gamma_q(0) = 0)
    if beta == 0.0:
        g[0] = 0.0
    g.setflags(write=False)
    return g


def _coeffs(alpha, beta, ctx, n):
    size = 64
    while size < n:
        size *= 2
    return _scaled_rgamma(alpha, beta, ctx.q, ctx.eps_product, ctx.max_terms, size)[:n]


def _series(alpha, beta, r, ctx, weight=None, start=0, relative=False):
    """Sum_{k >= start} r^k g_k w_k with a rigorous geometric tail bound.

    ``r`` is z (1 - q)^alpha and ``weight(ks)`` returns translation factors
    with w_{k+1} <= w_k. The ratio g_{k+1}/g_k decreases to 1, so
    rho_k = |r| g_{k+1}/g_k bounds every later term ratio. With
    ``relative=True`` the tail is compared with |S| instead of max(1, |S|),
    for sums that are small by construction.
    """
    acc = Neumaier()
    n = start
    block = 64
    while True:
        ks = np.arange(n, n + block + 2)
        g = _coeffs(alpha, beta, ctx, n + block + 3)
        w = weight(ks) if weight is not None else 1.0
        terms = g[n : n + block + 2] * w * np.power(r, ks.astype(float))
        for j in range(block):
            k = n + j
            acc.add(float(terms[j]))
            gk1 = g[k + 1]
            rho = abs(r) * g[k + 2] / gk1 if gk1 != 0 else math.inf
            used = k - start + 1
            tail = abs(float(terms[j + 1])) / (1.0 - rho) if rho < 1.0 else math.inf
            scale = abs(acc.value) if relative else max(1.0, abs(acc.value))
            if tail <= ctx.eps_series * scale:
                return SeriesResult(acc.value, used, tail, Status.Converged)
            if used >= ctx.max_terms:
                return SeriesResult(acc.value, used, tail, Status.Truncated)
        n += block


def _accelerate(alpha, beta, r, ctx, strat, weight=None, start=0):
    n = strat.accel_table_size
    ks = np.arange(start, start + n)
    g = _coeffs(alpha, beta, ctx, start + n)[start:]
    w = weight(ks) if weight is not None else 1.0
    terms = g * w * np.power(r, ks.astype(float))
    best, err = wynn_sweep(terms)
    best, err = float(best), float(err)
    if not (math.isfinite(best) and err <= 100 * ctx.eps_series * max(1.0, abs(best))):
        raise AccelerationFailed(
            f"epsilon table did not stabilise (error proxy {err:.3g})",
            module="qspecial",
            operation="q_mittag_leffler",
        )
    return SeriesResult(best, n, err, Status.Accelerated)


def _evaluate(alpha, beta, z, ctx, strat, weight=None, start=0, op="q_mittag_leffler"):
    r = z * (1.0 - ctx.q) ** alpha
    if abs(r) < 1.0:
        res = _series(alpha, beta, r, ctx, weight, start, relative=start > 0)
        if res.status is not Status.Truncated or z > 0 or strat.mode is not Mode.SeriesThenAccelerate:
            return res
        # alternating series just inside the radius: max_terms runs out
        # long before the tail bound bites, while the epsilon table converges
        try:
            acc = _accelerate(alpha, beta, r, ctx, strat, weight, start)
        except AccelerationFailed:
            return res
        return acc if acc.tail_estimate < res.tail_estimate else res
    if strat.mode is not Mode.SeriesThenAccelerate or z > 0:
        raise OutsideRadius(
            f"|z|(1-q)^alpha = {abs(r):.6g} >= 1 "
            + ("with acceleration disabled" if z < 0 else "for positive z"),
            module="qspecial",
            operation=op,
        )
    try:
        return _accelerate(alpha, beta, r, ctx, strat, weight, start)
    except AccelerationFailed as exc:
        exc.operation = op
        raise


def q_mittag_leffler(p, z, ctx, strat=DEFAULT):
    """e_{alpha,beta}(z; q) = sum z^k / Gamma_q(alpha k + beta)."""
    if z == 0.0:
        return SeriesResult(rq_gamma(p.beta, ctx), 1, 0.0, Status.Converged)
    return _evaluate(p.alpha, p.beta, z, ctx, strat)


def ml_tail(p, z, ctx, strat=DEFAULT):
    """e_{alpha,beta}(z; q) - 1/Gamma_q(beta), summed from k = 1 to full relative precision."""
    if z == 0.0:
        return SeriesResult(0.0, 0, 0.0, Status.Converged)
    return _evaluate(p.alpha, p.beta, z, ctx, strat, start=1, op="ml_tail")


def ml_one_minus(alpha, z, ctx, strat=DEFAULT):
    """1 - e_{alpha,1}(z; q), summed without the k = 0 term (no cancellation)."""
    res = ml_tail(MLParams(alpha, 1.0), z, ctx, strat)
    return SeriesResult(-res.value, res.terms_used, res.tail_estimate, res.status)


def translated_ml(p, c, t, s, ctx, strat=DEFAULT, *, shift_scale=None):
    """q-translate of e_{alpha,beta}(c t^alpha; q).

    Returns sum_k c^k t^(alpha k) (y/t; q)_{alpha k} / Gamma_q(alpha k + beta)
    with y = shift_scale * s. The default shift_scale = q^alpha is the one
    that appears in the Duhamel kernel; shift_scale = 1 gives the translate
    whose s-derivative reproduces that kernel.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s > t * (1 + 1e-15):
        raise InvalidTranslation(
            f"translation point s={s!r} exceeds t={t!r}",
            module="qspecial",
            operation="translated_ml",
        )
    alpha, beta = p.alpha, p.beta
    if shift_scale is None:
        shift_scale = ctx.q**alpha
    w0 = shift_scale * s / t
    z = c * t**alpha
    if z == 0.0:
        return SeriesResult(rq_gamma(beta, ctx), 1, 0.0, Status.Converged)
    if w0 == 0.0:
        return _evaluate(alpha, beta, z, ctx, strat, op="translated_ml")
    head = q_pochhammer_inf(w0, ctx).value

    def weight(ks):
        if head == 0.0:
            return np.where(ks == 0, 1.0, 0.0)
        return head / q_pochhammer_inf_vec(w0 * ctx.q ** (alpha * ks), ctx)

    return _evaluate(alpha, beta, z, ctx, strat, weight, op="translated_ml")
