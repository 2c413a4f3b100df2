"""Invariant suites behind the ``verify`` and ``selftest`` commands.

Each check measures an error against a tolerance and reports both, so the
output doubles as a record of how much slack every identity has.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import bounds, qcalculus, qcore, qspecial, spectral
from .qcore import QContext
from .qspecial import MLParams


@dataclass(frozen=True)
class Check:
    name: str
    module: str
    error: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.error <= self.tolerance)

    @property
    def margin(self):
        return self.tolerance - self.error

    def row(self):
        d = asdict(self)
        d["passed"] = self.passed
        d["margin"] = self.margin
        return d


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _max(values):
    values = list(values)
    return max(values) if values else 0.0


# --------------------------------------------------------------------------
# trivial fixtures


def trivial_checks():
    c = QContext(0.5)
    one = lambda t: 1.0
    zero = lambda t: 0.0
    checks = [
        Check("q_number(0) = 0", "qcore", abs(qcore.q_number(0.0, c)), 0.0),
        Check("q_number(1) = 1", "qcore", abs(qcore.q_number(1.0, c) - 1), 1e-15),
        Check("q_number(2) = 1 + q", "qcore", abs(qcore.q_number(2.0, c) - 1.5), 1e-15),
        Check("(a;q)_0 = 1", "qcore", abs(qcore.q_pochhammer(0.7, 0, c) - 1), 0.0),
        Check("(0;q)_5 = 1", "qcore", abs(qcore.q_pochhammer(0.0, 5, c) - 1), 0.0),
        Check("(0;q)_inf = 1", "qcore", abs(qcore.q_pochhammer_inf(0.0, c).value - 1), 0.0),
        Check("(1;q)_inf = 0", "qcore", abs(qcore.q_pochhammer_inf(1.0, c).value), 0.0),
        Check("(a;q)_nu at nu=0 is 1", "qcore", abs(qcore.q_pochhammer_real(0.3, 0.0, c).value - 1), 1e-15),
        Check("(0;q)_nu = 1", "qcore", abs(qcore.q_pochhammer_real(0.0, 2.7, c).value - 1), 1e-15),
        Check("Gamma_q(1) = 1", "qcore", abs(qcore.q_gamma(1.0, c) - 1), 1e-15),
        Check("Gamma_q(2) = 1", "qcore", abs(qcore.q_gamma(2.0, c) - 1), 1e-15),
        Check("Gamma_q(3) = 1 + q", "qcore", abs(qcore.q_gamma(3.0, c) - 1.5), 1e-14),
        Check("[2]_q! = 1 + q", "qcore", abs(qcore.q_factorial(2, c) - 1.5), 1e-15),
        Check("e_q(0) = 1", "qspecial", abs(qspecial.q_exp(0.0, c).value - 1), 0.0),
        Check(
            "e_{a,b}(0) = 1/Gamma_q(b)",
            "qspecial",
            abs(qspecial.q_mittag_leffler(MLParams(0.5, 1.5), 0.0, c).value - 1 / qcore.q_gamma(1.5, c)),
            1e-15,
        ),
        Check(
            "e_{1,1} = e_q",
            "qspecial",
            abs(qspecial.q_mittag_leffler(MLParams(1.0), 0.4, c).value - qspecial.q_exp(0.4, c).value),
            1e-12,
        ),
        Check(
            "translate at s=0 is plain",
            "qspecial",
            abs(
                qspecial.translated_ml(MLParams(0.5), -1.0, 0.7, 0.0, c).value
                - qspecial.q_mittag_leffler(MLParams(0.5), -(0.7**0.5), c).value
            ),
            1e-15,
        ),
        Check(
            "translate with c=0",
            "qspecial",
            abs(qspecial.translated_ml(MLParams(0.5, 2.0), 0.0, 0.7, 0.3, c).value - 1.0),
            1e-15,
        ),
        Check("D_q const = 0", "qcalculus", abs(qcalculus.q_derivative(lambda t: 3.0, 0.7, c)), 0.0),
        Check("int_0^1 1 = 1", "qcalculus", abs(qcalculus.jackson_integral(one, 0.0, 1.0, c).value - 1), 1e-14),
        Check("int_a^a = 0", "qcalculus", abs(qcalculus.jackson_integral(one, 0.4, 0.4, c).value), 0.0),
        Check("I^a 0 = 0", "qcalculus", abs(qcalculus.rl_fractional_integral(zero, 0.5, 1.0, c).value), 0.0),
        Check("cD^a const = 0", "qcalculus", abs(qcalculus.caputo_derivative(lambda t: 2.0, 0.5, 1.0, c).value), 0.0),
    ]
    rep = bounds.ml_bounds_check(0.5, 0.0, c)
    checks.append(
        Check(
            "z=0 row all ones",
            "bounds",
            max(abs(rep.value - 1), abs(rep.lower - 1), abs(rep.upper - 1), abs(rep.margin_lower), abs(rep.margin_upper)),
            1e-15,
        )
    )
    rep = bounds.ml_decay_check(MLParams(0.5, 0.5), 0.0, c)
    checks.append(Check("beta=0.5, z=0 value", "bounds", _rel(rep.value, 1 / qcore.q_gamma(0.5, c)), 1e-14))
    checks.append(Check("empty scan", "bounds", float(len(bounds.bounds_scan([], [], [], []))), 0.0))

    model1 = spectral.SpectralModel(np.array([0.0]), 1.0)
    grid = spectral.TimeGrid.geometric(1.0, 0.5)
    checks.append(
        Check("||(3,4)||_0 = 5", "spectral", abs(spectral.sobolev_norm([3.0, 4.0], spectral.SpectralModel([1.0, 7.0], 1.0), 0) - 5), 1e-15)
    )
    phi = spectral.CoefficientField([0.8])
    b = spectral.direct_solve_suborder(0.5, phi, None, model1, grid, c)
    checks.append(Check("u(0) = phi", "spectral", abs(b.traces[0, -1] - 0.8), 0.0))
    z = spectral.CoefficientField([0.0])
    b = spectral.direct_solve_suborder(0.5, z, None, model1, grid, c)
    checks.append(Check("zero data, zero solution", "spectral", float(np.max(np.abs(b.traces))), 0.0))
    checks.append(Check("zero bundle residual", "spectral", spectral.residual_check(b, 0.5, model1, c), 0.0))
    rep = spectral.energy_estimate_report(b, z, None, None, 0, c)
    checks.append(Check("zero data ratio", "spectral", abs(rep.ratio) + rep.lhs + rep.rhs, 0.0))
    b = spectral.direct_solve_suborder(0.5, phi, spectral.CoefficientField([0.8]), model1, grid, c)
    checks.append(Check("steady state residual", "spectral", spectral.residual_check(b, 0.5, model1, c), 1e-8))
    m2 = spectral.SpectralModel.dirichlet_sine(3)
    data = spectral.CoefficientField([0.5, -0.2, 0.1])
    b, f = spectral.inverse_solve(0.5, data, data, 0.01, m2, c)
    checks.append(
        Check("rho = phi gives f = (lambda+m) phi", "spectral", float(np.max(np.abs(f.coefficients - m2.shifted * data.coefficients))), 1e-14)
    )
    checks.append(Check("rho = phi gives u = phi", "spectral", float(np.max(np.abs(b.traces - data.coefficients[:, None]))), 1e-14))
    return checks


# --------------------------------------------------------------------------
# full invariant suite


def _gamma_checks():
    worst_rec = 0.0
    worst_fact = 0.0
    for q in (0.3, 0.5, 0.7, 0.9):
        c = QContext(q)
        for i in range(1, 51):
            x = i / 10
            worst_rec = max(worst_rec, _rel(qcore.q_gamma(x + 1, c), qcore.q_number(x, c) * qcore.q_gamma(x, c)))
        for n in range(13):
            worst_fact = max(worst_fact, _rel(qcore.q_gamma(n + 1.0, c), qcore.q_factorial(n, c)))
    return [
        Check("Gamma_q(x+1) = [x]_q Gamma_q(x)", "qcore", worst_rec, 1e-12),
        Check("Gamma_q(n+1) = [n]_q!", "qcore", worst_fact, 1e-12),
    ]


def _pochhammer_checks():
    worst_split = 0.0
    worst_ratio = 0.0
    for q in (0.3, 0.5, 0.7, 0.9):
        c = QContext(q)
        c2 = QContext(q * q, q_min=min(q * q, c.q_min))
        for a in (-0.5, 0.0, 0.3, 0.9):
            for n in range(21):
                lhs = qcore.q_pochhammer(a, 2 * n, c)
                rhs = qcore.q_pochhammer(a, n, c2) * qcore.q_pochhammer(a * q, n, c2)
                worst_split = max(worst_split, _rel(rhs, lhs))
                den = qcore.q_pochhammer_inf(a * q**n, c).value
                if abs(den) > 1e-8:
                    ratio = qcore.q_pochhammer_inf(a, c).value / den
                    worst_ratio = max(worst_ratio, _rel(ratio, qcore.q_pochhammer(a, n, c)))
    return [
        Check("(a;q)_2n = (a;q^2)_n (aq;q^2)_n", "qcore", worst_split, 1e-12),
        Check("(a;q)_n = (a;q)_inf / (aq^n;q)_inf", "qcore", worst_ratio, 1e-10),
    ]


def _calculus_checks():
    c = QContext(0.5)
    q = c.q
    power = _max(
        _rel(qcalculus.q_derivative(lambda t: t**n, x, c), qcore.q_number(n, c) * x ** (n - 1))
        for n in range(1, 11)
        for x in (0.25, 1.0, 2.0)
    )
    ftc = _max(
        abs(
            qcalculus.jackson_integral(lambda t: qcalculus.q_derivative(lambda u: u**3 + u, t, c), 0.0, b, c).value
            - (b**3 + b)
        )
        for b in (0.5, 1.0, 2.0)
    )
    # integration by parts on [0.25, 1] with polynomials of degree <= 4
    polys = [lambda t: 1 + t, lambda t: t**2 - 2 * t, lambda t: t**4, lambda t: 3 - t**3]
    lo, hi = 0.25, 1.0
    parts = 0.0
    for f in polys:
        for g in polys:
            lhs = qcalculus.jackson_integral(lambda t: f(t) * qcalculus.q_derivative(g, t, c), lo, hi, c).value
            rhs = (
                f(hi) * g(hi)
                - f(lo) * g(lo)
                - qcalculus.jackson_integral(lambda t: qcalculus.q_derivative(f, t, c) * g(q * t), lo, hi, c).value
            )
            parts = max(parts, abs(lhs - rhs) / max(1.0, abs(lhs)))
    caputo_const = _max(abs(qcalculus.caputo_derivative(lambda t: 2.5, a, 0.8, c).value) for a in (0.3, 0.7, 1.3, 1.7))
    # product-derivative identity, differentiating in the translation variable
    prod = 0.0
    for nu in (0.3, 0.7, 1.5):
        for x in (1.0, 2.0):
            for j in range(1, 9):
                s = x * q**j
                f = lambda u: x**nu * qcore.q_pochhammer_real(u / x, nu, c).value
                lhs = qcalculus.q_derivative(f, s, c)
                rhs = -qcore.q_number(nu, c) * x ** (nu - 1) * qcore.q_pochhammer_real(q * s / x, nu - 1, c).value
                prod = max(prod, _rel(lhs, rhs))
    return [
        Check("D_q power rule", "qcalculus", power, 1e-13),
        Check("product-derivative identity", "qcalculus", prod, 1e-8),
        Check("q-integration by parts", "qcalculus", parts, 1e-10),
        Check("fundamental theorem", "qcalculus", ftc, 1e-10),
        Check("Caputo of constants", "qcalculus", caputo_const, 1e-14),
    ]


GRID_ALPHAS = (0.2, 0.35, 0.5, 0.65, 0.8)
GRID_QS = (0.3, 0.5, 0.7)


def _bounds_checks():
    rows = bounds.bounds_scan(GRID_ALPHAS, [1.0], GRID_QS, bounds.default_radius_grid(20), kind="two-sided")
    errors = sum(r.error is not None for r in rows)
    # range: strict with margin 1e-12 on both ends
    range_short = _max(max(0.0, 1e-12 - min(r.value, 1.0 - r.value)) for r in rows if r.error is None)
    factor = _max(bounds.violation_factor(r) for r in rows if r.error is None)
    decay = bounds.bounds_scan(
        (0.5, 1.0, 1.5), (0.5, 1.0, 1.5), (0.3, 0.5), bounds.default_radius_grid(15), kind="decay"
    )
    decay_fail = sum(1 for r in decay if r.error is not None or not math.isfinite((1 + r.z) * abs(r.value)))
    decay_fail += sum(1 for r in decay if r.holds_decay is False)
    return [
        Check("e_{a,1}(-z) in (0,1) with margin 1e-12", "bounds", range_short + errors, 0.0),
        Check("two-sided estimate violation factor - 1", "bounds", factor - 1.0, 9.0),
        Check("decay bound failures", "bounds", float(decay_fail), 0.0),
    ]


def _spectral_checks():
    c = QContext(0.5)
    model1 = spectral.SpectralModel(np.array([0.0]), 1.0)
    grid = spectral.TimeGrid.geometric(1.0, 0.5)
    one = spectral.CoefficientField([1.0])
    res = 0.0
    for alpha in (0.5, 0.9):
        for src in (None, spectral.CoefficientField([0.7])):
            b = spectral.direct_solve_suborder(alpha, one, src, model1, grid, c)
            res = max(res, spectral.residual_check(b, alpha, model1, c))
    zero = spectral.CoefficientField([0.0])
    sup = spectral.direct_solve_superorder(1.5, zero, one, None, model1, grid, c)
    sup_res = spectral.residual_check(sup, 1.5, model1, c)
    first = spectral.direct_solve_superorder(1.5, one, zero, None, model1, grid, c)
    nodes = grid.positive_nodes
    shape = _max(
        abs(first.traces[0, j] - qspecial.q_mittag_leffler(MLParams(1.5), -(t**1.5), c).value) for j, t in enumerate(nodes)
    )
    K = 16
    model = spectral.SpectralModel.dirichlet_sine(K, 1.0)
    T = inverse_horizon(model, 0.5, c)
    phi, rho = decaying_data(K, seed=0)
    b, f = spectral.inverse_solve(0.5, phi, rho, T, model, c)
    d = spectral.direct_solve_suborder(0.5, phi, f, model, b.grid, c)
    return [
        Check("suborder residual", "spectral", res, 1e-6),
        Check("superorder residual", "spectral", sup_res, 1e-5),
        Check("superorder u(0) = 0", "spectral", abs(sup.traces[0, -1]), 0.0),
        Check("superorder first term shape", "spectral", shape, 1e-10),
        Check("inverse round trip at T", "spectral", float(np.max(np.abs(d.traces[:, 0] - rho.coefficients))), 1e-6),
        Check("inverse u(T) = rho", "spectral", float(np.max(np.abs(b.traces[:, 0] - rho.coefficients))), 1e-12),
        Check("inverse u(0) = phi", "spectral", float(np.max(np.abs(b.traces[:, -1] - phi.coefficients))), 1e-12),
    ]


def inverse_horizon(model, alpha, ctx, radius_fraction=0.8):
    """Largest T with (lambda_K + m) T^alpha (1 - q)^alpha <= radius_fraction."""
    return (radius_fraction / (model.shifted[-1] * (1.0 - ctx.q) ** alpha)) ** (1.0 / alpha)


def decaying_data(K, seed=0):
    """Random phi, rho with coefficients of size k^-3."""
    rng = np.random.default_rng(seed)
    k = np.arange(1, K + 1, dtype=float)
    phi = rng.uniform(-1.0, 1.0, K) * k**-3
    rho = rng.uniform(-1.0, 1.0, K) * k**-3
    return spectral.CoefficientField(phi), spectral.CoefficientField(rho)


def invariant_checks():
    return _gamma_checks() + _pochhammer_checks() + _calculus_checks() + _bounds_checks() + _spectral_checks()
