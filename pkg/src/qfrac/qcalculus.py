"""q-derivative, Jackson integrals, and the fractional q-integral/derivative.

Functions are plain callables ``f(t) -> float``. Every operator only samples
its argument on q-geometric points ``x q^m``, so a trace stored on such a
grid can be wrapped and fed in directly (see ``spectral.residual_check``).
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import NonAbsolutelyConvergent, ZeroPoint
from .qcore import QContext, SeriesResult, Status, qpow_pochhammer_inf, rq_gamma
from .summation import Neumaier

QFunction = Callable[[float], float]

# consecutive negligible increments required before a sum is declared converged
_QUIET_RUN = 3
# window used to detect growing (non-absolutely convergent) terms
_GROWTH_WINDOW = 20


def q_derivative(f, x, ctx):
    """D_q f(x) = (f(x) - f(qx)) / (x (1 - q))."""
    if x == 0:
        raise ZeroPoint(
            "the q-difference quotient is undefined at x = 0",
            module="qcalculus",
            operation="q_derivative",
        )
    return (f(x) - f(ctx.q * x)) / (x * (1.0 - ctx.q))


def q_derivative_n(f, n, ctx):
    """The n-fold q-derivative as a new callable."""
    g = f
    for _ in range(n):
        g = (lambda h: (lambda t: q_derivative(h, t, ctx)))(g)
    return g


def _sum_terms(term, ctx, m_min, op):
    """Sum term(0), term(1), ... until increments stay negligible.

    Convergence needs m >= m_min and ``_QUIET_RUN`` consecutive increments
    below eps_series * max(1, |S|).
    """
    acc = Neumaier()
    mags = []
    quiet = 0
    for m in range(ctx.max_terms):
        t = float(term(m))
        acc.add(t)
        mags.append(abs(t))
        tol = ctx.eps_series * max(1.0, abs(acc.value))
        if m >= m_min and abs(t) <= tol:
            quiet += 1
            if quiet >= _QUIET_RUN:
                return SeriesResult(acc.value, m + 1, _tail(mags), Status.Converged)
        else:
            quiet = 0
        if (
            m >= m_min + _GROWTH_WINDOW
            and abs(t) > tol
            and abs(t) >= mags[m - _GROWTH_WINDOW] > 0
        ):
            raise NonAbsolutelyConvergent(
                f"terms are not decaying (|term {m}| = {abs(t):.3g})",
                module="qcalculus",
                operation=op,
            )
    return SeriesResult(acc.value, ctx.max_terms, _tail(mags), Status.Truncated)


def _tail(mags):
    nz = [v for v in mags[-8:] if v > 0]
    if len(nz) < 2:
        return 0.0
    rho = nz[-1] / nz[-2]
    return nz[-1] * rho / (1.0 - rho) if rho < 1 else nz[-1]


def _min_terms(ctx):
    return int(math.ceil(math.log(ctx.eps_series) / ctx.log_q))


def _jackson0(f, a, ctx, op):
    if a == 0:
        return SeriesResult(0.0, 0, 0.0, Status.Converged)
    q = ctx.q
    scale = (1.0 - q) * a
    res = _sum_terms(lambda m: q**m * f(a * q**m), ctx, _min_terms(ctx), op)
    return SeriesResult(scale * res.value, res.terms_used, abs(scale) * res.tail_estimate, res.status)


def _combine(hi, lo):
    status = Status.Converged
    if Status.Truncated in (hi.status, lo.status):
        status = Status.Truncated
    return SeriesResult(
        hi.value - lo.value,
        hi.terms_used + lo.terms_used,
        hi.tail_estimate + lo.tail_estimate,
        status,
    )


def jackson_integral(f, a, b, ctx):
    """Jackson integral of f over [a, b] as the difference of two integrals from 0."""
    if a < 0 or b < 0:
        raise ValueError("Jackson integral endpoints must be nonnegative")
    if a == b:
        return SeriesResult(0.0, 0, 0.0, Status.Converged)
    return _combine(_jackson0(f, b, ctx, "jackson_integral"), _jackson0(f, a, ctx, "jackson_integral"))


def jackson_integral_0inf(f, ctx):
    """(1 - q) sum_{m in Z} q^m f(q^m), each side truncated independently."""
    q = ctx.q
    op = "jackson_integral_0inf"
    lower = _sum_terms(lambda m: q**m * f(q**m), ctx, _min_terms(ctx), op)
    upper = _sum_terms(lambda m: q ** -(m + 1) * f(q ** -(m + 1)), ctx, 0, op)
    status = Status.Converged
    if Status.Truncated in (lower.status, upper.status):
        status = Status.Truncated
    return SeriesResult(
        (1.0 - q) * (lower.value + upper.value),
        lower.terms_used + upper.terms_used,
        (1.0 - q) * (lower.tail_estimate + upper.tail_estimate),
        status,
    )


@lru_cache(maxsize=128)
def _rl_weights(alpha, q, eps_product, max_terms, n):
    """q^m (q^(m+1); q)_(alpha-1) for m < n: Jackson weight times kernel factor."""
    ctx = QContext(q, eps_product=eps_product, max_terms=max_terms, q_min=q, q_max=q)
    m = np.arange(n, dtype=float)
    w = q**m * qpow_pochhammer_inf(m + 1.0, ctx) / qpow_pochhammer_inf(m + alpha, ctx)
    w.setflags(write=False)
    return w


def rl_weight(alpha, m, ctx):
    size = 128
    while size <= m:
        size *= 2
    return _rl_weights(alpha, ctx.q, ctx.eps_product, ctx.max_terms, size)[m]


def rl_fractional_integral(f, alpha, x, ctx):
    """Riemann-Liouville fractional q-integral of order alpha, base point 0.

    (1/Gamma_q(alpha)) int_0^x x^(alpha-1) (qt/x; q)_(alpha-1) f(t) d_q t,
    evaluated on the Jackson nodes t = x q^m where the kernel argument is
    exactly q^(m+1).
    """
    if alpha <= 0:
        raise ValueError("order must be positive")
    if x <= 0:
        raise ValueError("x must be positive")
    q = ctx.q
    res = _sum_terms(
        lambda m: rl_weight(alpha, m, ctx) * f(x * q**m),
        ctx,
        _min_terms(ctx),
        "rl_fractional_integral",
    )
    scale = (1.0 - q) * x**alpha * rq_gamma(alpha, ctx)
    return SeriesResult(scale * res.value, res.terms_used, abs(scale) * res.tail_estimate, res.status)


def caputo_derivative(f, alpha, x, ctx):
    """Caputo fractional q-derivative: I^(n - alpha) D_q^n f with n = ceil(alpha).

    For n >= 2 the n-th q-difference of a generic f divides rounding noise
    by t^n near 0; see ``_frozen_rl``.
    """
    if alpha <= 0:
        raise ValueError("order must be positive")
    if x <= 0:
        raise ValueError("x must be positive")
    n = math.ceil(alpha)
    g = q_derivative_n(f, n, ctx)
    if n == alpha:
        return SeriesResult(g(x), n + 1, 0.0, Status.Converged)
    if n == 1:
        return rl_fractional_integral(g, n - alpha, x, ctx)
    return _frozen_rl(f, g, n, n - alpha, x, ctx)


def _frozen_rl(f, g, n, beta, x, ctx):
    """I^beta g for g = D_q^n f, stopping where rounding swamps g.

    The noise of g(t) is about 2^n eps max|f| / (q^(n(n-1)/2) ((1-q) t)^n),
    growing like t^-n. Once it exceeds the curvature seen between the last
    three nodes, g is linear to working precision there. The remaining
    Jackson weight and first moment are known exactly, as
    sum_m w_m = 1/(1-q^beta) and sum_m w_m q^m = (1-q)/((1-q^beta)(1-q^(beta+1))),
    so the tail is added for the line through the last two reliable values.
    """
    q = ctx.q
    eps = np.finfo(float).eps
    c_noise = 2.0**n * eps / q ** (n * (n - 1) / 2)
    acc = Neumaier()
    w0 = Neumaier()
    w1 = Neumaier()
    mags = []
    vals = []
    quiet = 0
    m_min = _min_terms(ctx)
    status = Status.Truncated
    tail = 0.0
    for m in range(ctx.max_terms):
        t = x * q**m
        d = g(t)
        scale = max(abs(f(t * q**i)) for i in range(n + 1))
        noise = c_noise * scale
        for _ in range(n):
            # one factor at a time: ((1-q) t)^n underflows on deep grids
            noise /= (1.0 - q) * t
        if len(vals) >= 2 and noise > abs((d - vals[-1]) - q * (vals[-1] - vals[-2])):
            slope = (vals[-2] - vals[-1]) / (t / q**2 - t / q)
            rest0 = 1.0 / (1.0 - q**beta) - w0.value
            rest1 = x * (1.0 - q) / ((1.0 - q**beta) * (1.0 - q ** (beta + 1))) - w1.value
            t_last = t / q
            acc.add(rest0 * (vals[-1] - slope * t_last) + rest1 * slope)
            tail = rest0 * noise
            status = Status.Converged
            break
        w = rl_weight(beta, m, ctx)
        term = w * d
        acc.add(term)
        w0.add(w)
        w1.add(w * t)
        mags.append(abs(term))
        vals.append(d)
        if m >= m_min and abs(term) <= ctx.eps_series * max(1.0, abs(acc.value)):
            quiet += 1
            if quiet >= _QUIET_RUN:
                status = Status.Converged
                tail = _tail(mags)
                break
        else:
            quiet = 0
    else:
        tail = _tail(mags)
    scale = (1.0 - q) * x**beta * rq_gamma(beta, ctx)
    return SeriesResult(scale * acc.value, len(mags), abs(scale) * tail, status)
