"""Compensated accumulation and Wynn's epsilon algorithm."""

from __future__ import annotations

import numpy as np


class Neumaier:
    """Running compensated sum.

    ``math.fsum`` only returns the final total; series code here needs the
    partial sums as they are formed, so the compensation is kept by hand.
    """

    __slots__ = ("_s", "_c")

    def __init__(self, start=0.0):
        self._s = float(start)
        self._c = 0.0

    def add(self, x):
        s = self._s
        t = s + x
        if abs(s) >= abs(x):
            self._c += (s - t) + x
        else:
            self._c += (x - t) + s
        self._s = t

    @property
    def value(self):
        return self._s + self._c


def compensated_cumsum(terms):
    """Partial sums of ``terms`` along axis 0 with Neumaier compensation."""
    terms = np.asarray(terms, dtype=float)
    out = np.empty_like(terms)
    s = np.zeros(terms.shape[1:])
    c = np.zeros(terms.shape[1:])
    for i, x in enumerate(terms):
        t = s + x
        big = np.abs(s) >= np.abs(x)
        c += np.where(big, (s - t) + x, (x - t) + s)
        s = t
        out[i] = s + c
    return out


def wynn_epsilon(partial_sums):
    """Wynn's epsilon table applied to a sequence of partial sums.

    ``partial_sums`` has the sequence index along axis 0; trailing axes are
    treated elementwise. Returns two consecutive entries of the even columns
    along the extrapolated diagonal, choosing the consecutive pair that
    agrees best; their difference is the usual error proxy.
    """
    s = np.asarray(partial_sums, dtype=float)
    n = s.shape[0]
    if n < 3:
        raise ValueError("need at least three partial sums")
    prev = np.zeros((n + 1,) + s.shape[1:])
    cur = s.copy()
    estimates = [s[-1]]
    with np.errstate(divide="ignore", invalid="ignore"):
        for col in range(1, n):
            diff = cur[1:] - cur[:-1]
            # a zero difference breaks the recursion; mark it instead of letting
            # 1/0 = inf copy earlier columns forward as spurious agreement
            inv = np.where(diff == 0.0, np.nan, 1.0 / np.where(diff == 0.0, 1.0, diff))
            nxt = prev[1 : len(cur)] + inv
            prev, cur = cur, nxt
            if col % 2 == 0:
                last = cur[-1]
                estimates.append(np.where(np.isfinite(last), last, np.nan))
    if len(estimates) < 2:
        return estimates[-1], estimates[-1]
    est = np.asarray(estimates)
    diffs = np.abs(np.diff(est, axis=0))
    diffs = np.where(np.isfinite(diffs), diffs, np.inf)
    # late columns are dominated by rounding; keep the most stable pair
    i = np.argmin(diffs, axis=0) + 1
    best = np.take_along_axis(est, i[None, ...], axis=0)[0] if est.ndim > 1 else est[i]
    prev = np.take_along_axis(est, (i - 1)[None, ...], axis=0)[0] if est.ndim > 1 else est[i - 1]
    return best, prev


def wynn_sweep(terms, min_size=12, step=4):
    """Epsilon extrapolation over several table sizes with a cross-size error proxy.

    Long tables of a divergent alternating series drown in rounding (the
    partial sums grow geometrically) while short ones have not converged.
    Each size n gives an estimate e_n; its error proxy is the largest of its
    own diagonal difference, the rounding floor eps * max |S_k| of its
    partial sums, and its disagreement with the neighbouring sizes. The estimate with the smallest proxy is returned with that proxy.
    Works elementwise on trailing axes, like ``wynn_epsilon``.
    """
    terms = np.asarray(terms, dtype=float)
    n = terms.shape[0]
    sums = compensated_cumsum(terms)
    sizes = list(range(min(min_size, n), n + 1, step))
    if sizes[-1] != n:
        sizes.append(n)
    ests = []
    diffs = []
    eps = np.finfo(float).eps
    for m in sizes:
        best, prev = wynn_epsilon(sums[:m])
        ests.append(best)
        # no estimate beats the rounding already present in its partial sums
        floor = eps * np.max(np.abs(sums[:m]), axis=0)
        diffs.append(np.fmax(np.abs(best - prev), floor))
    ests = np.asarray(ests)
    proxy = np.asarray(diffs)
    with np.errstate(invalid="ignore"):
        if len(sizes) > 1:
            gap = np.abs(np.diff(ests, axis=0))
            proxy[1:] = np.fmax(proxy[1:], gap)
            proxy[:-1] = np.fmax(proxy[:-1], gap)
    proxy = np.where(np.isfinite(proxy), proxy, np.inf)
    i = np.argmin(proxy, axis=0)
    if ests.ndim == 1:
        return ests[i], proxy[i]
    pick = i[None, ...]
    return np.take_along_axis(ests, pick, axis=0)[0], np.take_along_axis(proxy, pick, axis=0)[0]
