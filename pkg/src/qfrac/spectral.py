"""Mode-by-mode solvers for time-fractional q-problems on a discrete spectrum.

An operator with eigenvalues lambda_k (and optionally an orthonormal basis
psi_k) turns the evolution equation into independent scalar problems

    cD^alpha u_k(t) + (lambda_k + m) u_k(t) = f_k(t),

solved in closed form with q-Mittag-Leffler functions. Time is sampled on
the q-geometric grid T q^j, where every Jackson sum and Caputo derivative
lands on grid nodes exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import (
    AccelerationFailed,
    DenominatorUnderflow,
    InsufficientGrid,
    ModeDiverged,
    NoBasis,
    OutsideRadius,
)
from .qcalculus import _QUIET_RUN, _min_terms, caputo_derivative, q_derivative
from .qcore import QContext, Status, q_gamma, qpow_pochhammer_inf
from .qspecial import DEFAULT, MLParams, Mode, _coeffs, _series, ml_one_minus, ml_tail
from .summation import wynn_sweep

DEFAULT_FLOOR = 1e-60
# extra nodes beyond the predicted depth, covering the quiet run of a sum
_DEPTH_SLACK = 4


# --------------------------------------------------------------------------
# data model


@dataclass(frozen=True)
class SpectralModel:
    eigenvalues: np.ndarray
    mass_shift: float
    basis: Callable[[int, float], float] | None = None
    name: str = "custom"

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if lam.ndim != 1 or lam.size < 1:
            raise ValueError("need at least one eigenvalue")
        if np.any(lam < 0):
            raise ValueError("eigenvalues must be nonnegative")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be sorted increasingly")
        if not self.mass_shift > 0:
            raise ValueError("mass shift m must be positive")
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def K(self):
        return self.eigenvalues.size

    @property
    def shifted(self):
        """lambda_k + m."""
        return self.eigenvalues + self.mass_shift

    @classmethod
    def dirichlet_sine(cls, K, mass_shift=1.0):
        """Dirichlet Laplacian on (0, pi): lambda_k = k^2, psi_k = sqrt(2/pi) sin(k x)."""
        k = np.arange(1, K + 1, dtype=float)
        c = math.sqrt(2.0 / math.pi)
        return cls(k**2, mass_shift, lambda j, x: c * math.sin(j * x), "dirichlet-sine")


@dataclass(frozen=True)
class CoefficientField:
    coefficients: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=float))

    def __len__(self):
        return self.coefficients.size

    @classmethod
    def zeros(cls, K):
        return cls(np.zeros(K))


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    q: float
    J: int

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon T must be positive")
        if self.J < 1:
            raise ValueError("grid needs J >= 1")

    @classmethod
    def geometric(cls, T, q, floor=None):
        """Nodes T q^j, j = 0..J, with J the first index where T q^J < floor (default T*1e-60)."""
        if floor is None:
            floor = T * DEFAULT_FLOOR
        J = max(1, int(math.floor(math.log(floor / T) / math.log(q))) + 1)
        return cls(T, q, J)

    @classmethod
    def for_order(cls, T, q, alpha, eps=1e-16):
        """Geometric grid deep enough to check residuals of order-alpha traces.

        A trace behaving like t^alpha has Caputo sums whose terms decay like
        q^(nu m), nu = alpha (alpha <= 1) or alpha - 1, so J must reach
        q^(nu J) < eps. Never shallower than the default floor, never below
        the smallest normal double.
        """
        nu = alpha if alpha <= 1 else alpha - 1.0
        if nu <= 0:
            raise ValueError("order must be positive and not an integer above 1")
        need = math.ceil(math.log(eps) / (nu * math.log(q))) + 2 * _DEPTH_SLACK
        grid = cls.geometric(T, q)
        deepest = int(math.floor(math.log(1e-300 / T) / math.log(q)))
        return cls(T, q, max(grid.J, min(need, deepest)))

    @property
    def positive_nodes(self):
        return self.horizon * self.q ** np.arange(self.J + 1, dtype=float)

    @property
    def nodes(self):
        """T q^0 > T q^1 > ... > T q^J, then the limit point 0."""
        return np.append(self.positive_nodes, 0.0)

    def index(self, t):
        """Grid index of ``t`` (J + 1 for t = 0); raises if t is not a node."""
        if t == 0:
            return self.J + 1
        j = round(math.log(t / self.horizon) / math.log(self.q))
        if j < 0 or abs(self.horizon * self.q**j - t) > 1e-9 * t:
            raise ValueError(f"t={t!r} is not a grid node")
        if j > self.J:
            raise InsufficientGrid(
                f"node T q^{j} lies below the grid floor (J={self.J})",
                module="spectral",
                operation="residual_check",
            )
        return j


Source = Callable[[float], float]


@dataclass
class SolutionBundle:
    model: SpectralModel
    grid: TimeGrid
    traces: np.ndarray
    sources: list
    diagnostics: list
    alpha: float
    kind: str
    phi: CoefficientField
    rho: CoefficientField | None = None
    residual_max: float = float("nan")
    extra: dict = field(default_factory=dict)
    # u_k(t) - u_k(0) (minus t rho_k when 1 < alpha < 2) at full relative
    # precision; near t = 0 the traces round to their Taylor part and lose
    # the O(t^alpha) variation that the Caputo derivative sees
    deviation: np.ndarray | None = None

    @property
    def failed_modes(self):
        return [d["mode"] for d in self.diagnostics if d["status"] not in ("converged", "accelerated")]

    def trace_function(self, k, centered=False):
        """Mode k trace (0-based) as a callable on grid nodes.

        ``centered=True`` returns u_k minus its Taylor part at 0, which has
        the same Caputo derivative.
        """
        row = self.deviation[k] if centered and self.deviation is not None else self.traces[k]
        grid = self.grid

        def u(t):
            return row[grid.index(t)]

        return u


def _normalize_sources(source, K):
    """None, CoefficientField (time independent) or K callables -> list of callables or None."""
    if source is None:
        return [None] * K
    if isinstance(source, CoefficientField):
        if len(source) != K:
            raise ValueError("source length does not match the model")
        return [(lambda c: (lambda t: c))(float(c)) if c != 0 else None for c in source.coefficients]
    source = list(source)
    if len(source) != K:
        raise ValueError("source length does not match the model")
    return source


def _check_len(c, K, name):
    if c is not None and len(c) != K:
        raise ValueError(f"{name} has {len(c)} coefficients, model has K={K}")


# --------------------------------------------------------------------------
# norms


def sobolev_norm(c, model, d):
    """(sum_k (1 + lambda_k)^d |c_k|^2)^(1/2)."""
    coef = c.coefficients if isinstance(c, CoefficientField) else np.asarray(c, dtype=float)
    _check_len(coef, model.K, "coefficients")
    w = (1.0 + model.eigenvalues) ** d
    return math.sqrt(math.fsum(w * coef**2))


# --------------------------------------------------------------------------
# Duhamel kernel


@lru_cache(maxsize=64)
def _kernel_table(alpha, q, eps_product, max_terms, nk, nm):
    """P[k, m] = (q^(m+1); q)_(alpha k + alpha - 1)."""
    ctx = QContext(q, eps_product=eps_product, max_terms=max_terms, q_min=q, q_max=q)
    k = np.arange(nk, dtype=float)[:, None]
    m = np.arange(nm, dtype=float)[None, :]
    table = qpow_pochhammer_inf(m + 1.0, ctx) / qpow_pochhammer_inf(m + alpha * k + alpha, ctx)
    table.setflags(write=False)
    return table


def _pow2(n, lo=64):
    size = lo
    while size < n:
        size *= 2
    return size


def duhamel_kernel(alpha, lam, t, nm, ctx, strat=DEFAULT):
    """Kernel values t^(alpha-1) (qs/t; q)_(alpha-1) * [q^alpha s-translate of e_{alpha,alpha}(-lam t^alpha)]
    at the Jackson nodes s = t q^m, m < nm.

    Returns (values, status). Summed over the Mittag-Leffler index with a
    cached Pochhammer table; outside the series radius the partial sums are
    extrapolated elementwise with the epsilon algorithm.
    """
    q = ctx.q
    r = -lam * t**alpha * (1.0 - q) ** alpha
    scale = t ** (alpha - 1.0)
    if r == 0.0:
        P = _kernel_table(alpha, q, ctx.eps_product, ctx.max_terms, 1, _pow2(nm))
        return scale * _coeffs(alpha, alpha, ctx, 1)[0] * P[0, :nm], Status.Converged
    if abs(r) < 1.0:
        nk = _series(alpha, alpha, r, ctx).terms_used + 2
        P = _kernel_table(alpha, q, ctx.eps_product, ctx.max_terms, _pow2(nk, 16), _pow2(nm))
        c = _coeffs(alpha, alpha, ctx, nk) * r ** np.arange(nk, dtype=float)
        return scale * (c @ P[:nk, :nm]), Status.Converged
    if strat.mode is not Mode.SeriesThenAccelerate:
        raise OutsideRadius(
            f"kernel argument outside the series radius (|r|={abs(r):.4g})",
            module="spectral",
            operation="duhamel_kernel",
        )
    nk = strat.accel_table_size
    P = _kernel_table(alpha, q, ctx.eps_product, ctx.max_terms, _pow2(nk, 16), _pow2(nm))
    c = _coeffs(alpha, alpha, ctx, nk) * r ** np.arange(nk, dtype=float)
    best, err = wynn_sweep(c[:, None] * P[:nk, :nm])
    if not np.all(np.isfinite(best)) or np.any(err > 100 * ctx.eps_series * np.maximum(1.0, np.abs(best))):
        raise AccelerationFailed(
            "kernel extrapolation did not stabilise",
            module="spectral",
            operation="duhamel_kernel",
        )
    return scale * best, Status.Accelerated


def duhamel_term(alpha, lam, f, t, ctx, strat=DEFAULT):
    """int_0^t kernel(t, s) f(s) d_q s on the Jackson nodes s = t q^m."""
    if f is None or t == 0:
        return 0.0, Status.Converged
    q = ctx.q
    nm = _pow2(_min_terms(ctx) + 2 * _QUIET_RUN)
    while True:
        kern, status = duhamel_kernel(alpha, lam, t, nm, ctx, strat)
        s = t * q ** np.arange(nm, dtype=float)
        vals = np.array([f(si) for si in s])
        terms = (1.0 - q) * s * kern * vals
        total = math.fsum(terms)
        tol = ctx.eps_series * abs(total)
        if np.all(np.abs(terms[-_QUIET_RUN:]) <= tol):
            return total, status
        if nm >= ctx.max_terms:
            return total, Status.Truncated
        nm = min(2 * nm, ctx.max_terms)


# --------------------------------------------------------------------------
# solvers


_STATUS_RANK = {Status.Converged: 0, Status.Accelerated: 1, Status.Truncated: 2, Status.Diverged: 3}


def _worse(a, b):
    return a if _STATUS_RANK[a] >= _STATUS_RANK[b] else b


def _solve_modes(alpha, phi, rho, sources, model, grid, ctx, strat, kind):
    K = model.K
    if abs(grid.q - ctx.q) > 1e-15:
        raise ValueError("grid and context use different q")
    nodes = grid.positive_nodes
    traces = np.zeros((K, nodes.size + 1))
    deviation = np.zeros_like(traces)
    diagnostics = []
    p2 = MLParams(alpha, 2.0)
    for k in range(K):
        lam = float(model.shifted[k])
        phik = float(phi.coefficients[k])
        rhok = float(rho.coefficients[k]) if rho is not None else 0.0
        f = sources[k]
        status = Status.Converged
        diag = {"mode": k + 1, "lambda_shifted": lam}
        try:
            for j, t in enumerate(nodes):
                z = -lam * t**alpha
                u = 0.0
                if phik != 0.0:
                    e1 = ml_one_minus(alpha, z, ctx, strat)
                    status = _worse(status, e1.status)
                    u -= phik * e1.value
                if rhok != 0.0:
                    # e_{alpha,2} = 1 + tail; the linear part t rho_k is added to
                    # the trace but kept out of the deviation (D_q^2 kills it)
                    e2 = ml_tail(p2, z, ctx, strat)
                    status = _worse(status, e2.status)
                    u += t * rhok * e2.value
                if f is not None:
                    d, st = duhamel_term(alpha, lam, f, t, ctx, strat)
                    status = _worse(status, st)
                    u += d
                deviation[k, j] = u
                traces[k, j] = phik + t * rhok + u
            traces[k, -1] = phik
            diag["status"] = status.value
        except OutsideRadius as exc:
            traces[k, :] = np.nan
            deviation[k, :] = np.nan
            diag["status"] = "outside_radius"
            diag["error"] = str(exc)
        except (AccelerationFailed, ModeDiverged) as exc:
            traces[k, :] = np.nan
            deviation[k, :] = np.nan
            diag["status"] = "diverged"
            diag["error"] = str(exc)
        diagnostics.append(diag)
    return SolutionBundle(
        model=model,
        grid=grid,
        traces=traces,
        sources=sources,
        diagnostics=diagnostics,
        alpha=alpha,
        kind=kind,
        phi=phi,
        rho=rho,
        deviation=deviation,
    )


def direct_solve_suborder(alpha, phi, source, model, grid, ctx, strat=DEFAULT):
    """u_k(t) = phi_k e_{alpha,1}(-(lambda_k+m) t^alpha) + Duhamel term, 0 < alpha <= 1.

    ``source`` is None, a CoefficientField of constants, or K callables f_k(t).
    Modes that cannot be evaluated are recorded in the diagnostics with NaN
    traces rather than aborting the solve.
    """
    if not 0 < alpha <= 1:
        raise ValueError("suborder solver needs 0 < alpha <= 1")
    _check_len(phi, model.K, "phi")
    sources = _normalize_sources(source, model.K)
    return _solve_modes(alpha, phi, None, sources, model, grid, ctx, strat, "suborder")


def direct_solve_superorder(alpha, phi, rho, source, model, grid, ctx, strat=DEFAULT):
    """Adds t rho_k e_{alpha,2}(-(lambda_k+m) t^alpha) to the suborder formula, 1 < alpha < 2."""
    if not 1 < alpha < 2:
        raise ValueError("superorder solver needs 1 < alpha < 2")
    _check_len(phi, model.K, "phi")
    _check_len(rho, model.K, "rho")
    sources = _normalize_sources(source, model.K)
    return _solve_modes(alpha, phi, rho, sources, model, grid, ctx, strat, "superorder")


def denominator_floor(alpha, lam, T, ctx):
    """Lower bound g/(1+g), g = (lambda+m) T^alpha / Gamma_q(alpha+1), for 1 - e_{alpha,1}(-(lambda+m)T^alpha)."""
    g = lam * T**alpha / q_gamma(alpha + 1.0, ctx)
    return g / (1.0 + g)


def inverse_solve(alpha, phi, rho, T, model, ctx, strat=DEFAULT, grid=None):
    """Recover the time-independent source from u(0) = phi and u(T) = rho.

    Returns the trajectory bundle and the source coefficients
    f_k = (lambda_k+m) phi_k - (lambda_k+m)(phi_k - rho_k) / (1 - e_{alpha,1}(-(lambda_k+m)T^alpha)).
    """
    if not 0 < alpha < 1:
        raise ValueError("inverse solver needs 0 < alpha < 1")
    _check_len(phi, model.K, "phi")
    _check_len(rho, model.K, "rho")
    if grid is None:
        grid = TimeGrid.for_order(T, ctx.q, alpha)
    if abs(grid.horizon - T) > 1e-15 * T:
        raise ValueError("grid horizon must equal T")
    nodes = grid.positive_nodes
    K = model.K
    f = np.zeros(K)
    traces = np.zeros((K, nodes.size + 1))
    deviation = np.zeros_like(traces)
    diagnostics = []
    for k in range(K):
        lam = float(model.shifted[k])
        pk = float(phi.coefficients[k])
        rk = float(rho.coefficients[k])
        den = ml_one_minus(alpha, -lam * T**alpha, ctx, strat)
        floor = denominator_floor(alpha, lam, T, ctx)
        if den.value < 1e-14 and den.value < 0.5 * floor:
            raise DenominatorUnderflow(
                f"mode {k + 1}: 1 - e(-(lambda+m)T^alpha) = {den.value:.3g} below floor {floor:.3g}",
                module="spectral",
                operation="inverse_solve",
            )
        f[k] = lam * pk - lam * (pk - rk) / den.value
        status = den.status
        for j, t in enumerate(nodes):
            om = den if j == 0 else ml_one_minus(alpha, -lam * t**alpha, ctx, strat)
            status = _worse(status, om.status)
            deviation[k, j] = -(pk - rk) * (om.value / den.value)
            traces[k, j] = pk + deviation[k, j]
        traces[k, -1] = pk
        diagnostics.append(
            {
                "mode": k + 1,
                "lambda_shifted": lam,
                "status": status.value,
                "denominator": den.value,
                "denominator_floor": floor,
                "floor_margin": den.value - floor,
            }
        )
    fk = CoefficientField(f)
    bundle = SolutionBundle(
        model=model,
        grid=grid,
        traces=traces,
        sources=_normalize_sources(fk, K),
        diagnostics=diagnostics,
        alpha=alpha,
        kind="inverse",
        phi=phi,
        rho=rho,
        extra={"source_coefficients": f.tolist()},
        deviation=deviation,
    )
    return bundle, fk


# --------------------------------------------------------------------------
# verification


def residual_check(bundle, alpha, model, ctx):
    """max over modes and nodes of |cD^alpha u_k + (lambda_k+m) u_k - f_k| / (1 + |f_k|).

    The Caputo derivative is taken from the stored traces alone; nodes whose
    Jackson sum would run past the grid floor are skipped, as are modes the
    solver could not evaluate (NaN when that leaves nothing to check).
    """
    grid = bundle.grid
    nodes = grid.positive_nodes
    worst = 0.0
    checked = 0
    finite = [k for k in range(model.K) if np.all(np.isfinite(bundle.traces[k]))]
    if not finite:
        bundle.residual_max = float("nan")
        return bundle.residual_max
    for k in finite:
        lam = float(model.shifted[k])
        u = bundle.trace_function(k, centered=True)
        f = bundle.sources[k]
        row = bundle.traces[k]
        for j, t in enumerate(nodes):
            try:
                d = caputo_derivative(u, alpha, float(t), ctx)
            except InsufficientGrid:
                break
            if d.status is not Status.Converged:
                break
            fv = f(float(t)) if f is not None else 0.0
            res = abs(d.value + lam * row[j] - fv) / (1.0 + abs(fv))
            worst = max(worst, res)
            checked += 1
    if checked == 0:
        raise InsufficientGrid(
            "no grid node has enough depth below it for the fractional integral",
            module="spectral",
            operation="residual_check",
        )
    bundle.residual_max = worst
    bundle.extra["residual_nodes_checked"] = checked
    return worst


def reconstruct_field(bundle, points):
    """Partial sum sum_k u_k(t) psi_k(x); rows follow the grid nodes, columns the points."""
    model = bundle.model
    if model.basis is None:
        raise NoBasis("model has no basis evaluator", module="spectral", operation="reconstruct_field")
    psi = np.array([[model.basis(k + 1, float(x)) for x in points] for k in range(model.K)])
    return bundle.traces.T @ psi


@dataclass(frozen=True)
class EstimateReport:
    lhs: float
    rhs: float
    ratio: float
    source_norm_sq: float = float("nan")
    data_norm_sq: float = float("nan")
    source_ratio: float = float("nan")


def _c1q_norm_sq(sources, model, nodes, d, ctx):
    """(sup_t ||f(t)||_{H^d} + sup_t ||D_q f(t)||_{H^d})^2 on the positive grid nodes."""
    if all(f is None for f in sources):
        return 0.0
    sup_f = 0.0
    sup_df = 0.0
    for t in nodes:
        vals = np.array([f(t) if f is not None else 0.0 for f in sources])
        dvals = np.array([q_derivative(f, t, ctx) if f is not None else 0.0 for f in sources])
        sup_f = max(sup_f, sobolev_norm(vals, model, d))
        sup_df = max(sup_df, sobolev_norm(dvals, model, d))
    return (sup_f + sup_df) ** 2


def energy_estimate_report(bundle, phi, rho, source, d, ctx=None):
    """lhs = max_t ||cD^alpha u||^2_{H^d} + ||u||^2_{H^{d+2}} against the data side.

    Direct problems use C_T [ ||phi||^2 + (||rho||^2) + ||f||^2_{C^1_q} ] with
    C_T = max(2, T); the inverse problem compares against ||phi||^2 + ||rho||^2
    (both at order d+2) and additionally records ||f||^2_{H^d} against it.
    Nothing is asserted; the ratios are the output.
    """
    model = bundle.model
    grid = bundle.grid
    if ctx is None:
        ctx = QContext(grid.q)
    nodes = grid.positive_nodes
    sources = _normalize_sources(source, model.K) if source is not None else bundle.sources
    lam = model.shifted
    lhs = 0.0 if np.all(np.isfinite(bundle.traces)) else float("nan")
    for j, t in enumerate(nodes):
        if math.isnan(lhs):
            break
        u = bundle.traces[:, j]
        fv = np.array([f(t) if f is not None else 0.0 for f in sources])
        caputo = fv - lam * u
        lhs = max(lhs, sobolev_norm(caputo, model, d) ** 2 + sobolev_norm(u, model, d + 2) ** 2)
    data = sobolev_norm(phi, model, d + 2) ** 2
    if rho is not None:
        data += sobolev_norm(rho, model, d + 2) ** 2
    if bundle.kind == "inverse":
        rhs = data
        fcoef = np.asarray(bundle.extra["source_coefficients"])
        fsq = sobolev_norm(fcoef, model, d) ** 2
        return EstimateReport(lhs, rhs, _ratio(lhs, rhs), fsq, data, _ratio(fsq, data))
    c_t = max(2.0, grid.horizon)
    rhs = c_t * (data + _c1q_norm_sq(sources, model, nodes, d, ctx))
    return EstimateReport(lhs, rhs, _ratio(lhs, rhs))


def _ratio(a, b):
    if a == 0 and b == 0:
        return 0.0
    return a / b if b != 0 else math.inf
