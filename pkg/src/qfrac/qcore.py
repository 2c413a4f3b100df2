"""q-numbers, q-shifted factorials and the q-Gamma function."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DivisionByZeroProduct, PoleError

POLE_TOL = 1e-12


@dataclass(frozen=True)
class QContext:
    """Base ``q`` and the truncation tolerances shared by every evaluation."""

    q: float
    eps_product: float = 1e-16
    eps_series: float = 1e-14
    max_terms: int = 10_000
    q_min: float = 1e-3
    q_max: float = 1 - 1e-3

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q!r}")
        if not self.q_min <= self.q <= self.q_max:
            raise ValueError(
                f"q={self.q!r} outside the admissible window [{self.q_min}, {self.q_max}]"
            )
        if self.eps_product <= 0 or self.eps_series <= 0:
            raise ValueError("tolerances must be strictly positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")

    @property
    def log_q(self):
        return math.log(self.q)

    def with_q(self, q):
        """Same tolerances, different base (the q^(1/2) exponential needs this)."""
        return QContext(
            q,
            eps_product=self.eps_product,
            eps_series=self.eps_series,
            max_terms=self.max_terms,
            q_min=min(self.q_min, q),
            q_max=max(self.q_max, q),
        )


class Status(enum.Enum):
    Converged = "converged"
    Accelerated = "accelerated"
    Truncated = "truncated"
    Diverged = "diverged"


@dataclass(frozen=True)
class SeriesResult:
    value: float
    terms_used: int
    tail_estimate: float
    status: Status

    def __float__(self):
        return float(self.value)

    @property
    def ok(self):
        return self.status in (Status.Converged, Status.Accelerated)


# integer arguments up to here use finite sums and products
_FACTORIAL_MAX = 64


def q_number(alpha, ctx):
    """[alpha]_q = (1 - q^alpha) / (1 - q)."""
    if alpha == int(alpha) and 0 <= alpha <= _FACTORIAL_MAX:
        # 1 + q + ... + q^(n-1): exact at n = 1, 2 where the quotient is not
        return math.fsum(ctx.q**k for k in range(int(alpha)))
    return -math.expm1(alpha * ctx.log_q) / (1.0 - ctx.q)


def q_pochhammer(a, n, ctx):
    """Finite q-shifted factorial (a; q)_n."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    p = 1.0
    qk = 1.0
    for _ in range(n):
        p *= 1.0 - qk * a
        qk *= ctx.q
    return p


def _tail_bound(a_qN, q):
    return math.expm1(abs(a_qN) / (1.0 - q))


def q_pochhammer_inf(a, ctx):
    """(a; q)_inf as a truncated product.

    Stops at the first N with |a| q^N < eps_product; the omitted factors
    change the product by at most exp(|a| q^N / (1 - q)) - 1 (relative).
    """
    q = ctx.q
    p = 1.0
    qk = 1.0
    n = 0
    while abs(a) * qk >= ctx.eps_product:
        if n >= ctx.max_terms:
            return SeriesResult(p, n, _tail_bound(a * qk, q), Status.Truncated)
        p *= 1.0 - qk * a
        if p == 0.0:
            return SeriesResult(0.0, n + 1, 0.0, Status.Converged)
        qk *= q
        n += 1
    return SeriesResult(p, n, _tail_bound(a * qk, q), Status.Converged)


def qpow_pochhammer_inf(e, ctx):
    """(q^e; q)_inf for real exponent(s) ``e``, vectorised.

    Factors are formed as -expm1((e + k) log q), which keeps full relative
    accuracy when q^(e+k) is close to one.
    """
    e = np.asarray(e, dtype=float)
    lq = ctx.log_q
    # largest |q^(e+k)| decides the length; negative exponents need more factors
    emin = float(np.min(e)) if e.size else 0.0
    n = int(math.ceil((math.log(ctx.eps_product) / lq) - emin)) + 1
    n = max(1, min(n, ctx.max_terms))
    k = np.arange(n, dtype=float)
    factors = -np.expm1((e[..., None] + k) * lq)
    return np.prod(factors, axis=-1)


def q_pochhammer_real(a, nu, ctx):
    """(a; q)_nu = (a; q)_inf / (a q^nu; q)_inf for real index nu."""
    if nu == 0 or a == 0:
        return SeriesResult(1.0, 0, 0.0, Status.Converged)
    num = q_pochhammer_inf(a, ctx)
    den = q_pochhammer_inf(a * ctx.q**nu, ctx)
    if abs(den.value) <= ctx.eps_product:
        raise DivisionByZeroProduct(
            f"(a q^nu; q)_inf vanishes for a={a!r}, nu={nu!r}",
            module="qcore",
            operation="q_pochhammer_real",
        )
    status = Status.Converged
    if Status.Truncated in (num.status, den.status):
        status = Status.Truncated
    tail = (1 + num.tail_estimate) * (1 + den.tail_estimate) - 1
    return SeriesResult(num.value / den.value, num.terms_used + den.terms_used, tail, status)


def _is_pole(x):
    r = round(x)
    return r <= 0 and abs(x - r) < POLE_TOL


def gamma_ratio(e, ctx):
    """(q^e; q)_inf / (q; q)_inf, vectorised.

    Multiplies the factor ratios (1 - q^(e+k)) / (1 - q^(k+1)) directly, so
    neither product underflows on its own when q is close to one.
    """
    e = np.asarray(e, dtype=float)
    lq = ctx.log_q
    emin = min(float(np.min(e)) if e.size else 1.0, 1.0)
    need = int(math.ceil((math.log(ctx.eps_product) / lq) - emin)) + 1
    n = max(1, min(need, ctx.max_terms))
    k = np.arange(n, dtype=float)
    factors = np.expm1((e[..., None] + k) * lq) / np.expm1((k + 1.0) * lq)
    value = np.prod(factors, axis=-1)
    if n < need:
        value = value * np.exp(_log_ratio_tail(e, n, ctx))
    return value


def _log_ratio_tail(e, n, ctx):
    """log of prod_{k >= n} (1 - q^(e+k)) / (1 - q^(k+1)).

    From log (a; q)_inf = -sum_j a^j / (j (1 - q^j)); only reached when
    max_terms cuts the product short (q very close to 1), where q^n is
    already small and a handful of j suffice.
    """
    q = ctx.q
    total = np.zeros_like(e)
    for j in range(1, 200):
        qj = q**j
        term = (q ** (j * (n + 1)) - q ** (j * (n + e))) / (j * (1.0 - qj))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(1.0, np.abs(total))):
            break
    return total


def rq_gamma(x, ctx):
    """1 / Gamma_q(x); entire, vanishing at the poles of Gamma_q."""
    if _is_pole(x):
        return 0.0
    return float(gamma_ratio(x, ctx)) * (1.0 - ctx.q) ** (x - 1.0)


def q_gamma(x, ctx):
    """Gamma_q(x) = (q; q)_inf / (q^x; q)_inf * (1 - q)^(1 - x)."""
    if _is_pole(x):
        raise PoleError(f"Gamma_q has a pole at x={x!r}", module="qcore", operation="q_gamma")
    if x == int(x) and x <= _FACTORIAL_MAX:
        # finite product: exact at small n, where the infinite one is off by an ulp or two
        return q_factorial(int(x) - 1, ctx)
    return 1.0 / rq_gamma(x, ctx)


def q_factorial(n, ctx):
    """[n]_q! = [1]_q [2]_q ... [n]_q, with [0]_q! = 1."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    p = 1.0
    for k in range(1, n + 1):
        p *= q_number(k, ctx)
    return p


def q_pochhammer_inf_vec(a, ctx):
    """(a; q)_inf for an array of ``a`` values, all truncated at a common length."""
    a = np.asarray(a, dtype=float)
    amax = float(np.max(np.abs(a))) if a.size else 0.0
    if amax == 0.0:
        return np.ones_like(a)
    n = int(math.ceil(math.log(ctx.eps_product / amax) / ctx.log_q)) + 1
    n = max(1, min(n, ctx.max_terms))
    qk = ctx.q ** np.arange(n, dtype=float)
    return np.prod(1.0 - a[..., None] * qk, axis=-1)
