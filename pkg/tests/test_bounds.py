import csv
import io
import json
import math

import mpmath as mp
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from qfrac import MLParams, QContext, q_gamma
from qfrac.bounds import (
    CSV_FIELDS,
    BoundReport,
    bounds_scan,
    decay_constant,
    default_radius_grid,
    ml_bounds_check,
    ml_decay_check,
    summarize,
    to_csv,
    to_json,
    violation_factor,
)

C = QContext(0.5)


def compensated_series(alpha, z, q, terms=80):
    """80-term sum of (-z)^k / Gamma_q(alpha k + 1) in 40-digit arithmetic."""
    return float(oracles.ml_series(alpha, 1.0, -z, q, terms=terms))


class TestTwoSided:
    def test_origin_row(self):
        r = ml_bounds_check(0.5, 0.0, C)
        assert (r.value, r.lower, r.upper) == (1.0, 1.0, 1.0)
        assert r.margin_lower == 0.0 and r.margin_upper == 0.0
        assert r.holds_range is None

    def test_near_origin(self):
        r = ml_bounds_check(0.5, 1e-13, C)
        for v in (r.value, r.lower, r.upper):
            assert v == pytest.approx(1.0, abs=1e-12)
        assert abs(r.margin_lower) < 1e-12 and abs(r.margin_upper) < 1e-12

    def test_range_at_half(self):
        r = ml_bounds_check(0.5, 0.5, C)
        assert r.holds_range is True
        assert 0 < r.value < 1

    def test_value_against_series(self):
        r = ml_bounds_check(0.5, 0.5, C)
        assert r.value == pytest.approx(compensated_series(0.5, 0.5, 0.5), rel=1e-12)

    def test_flags_match_margins(self):
        r = ml_bounds_check(0.35, 0.8, QContext(0.7))
        assert r.holds_lower == (r.margin_lower >= 0)
        assert r.holds_upper == (r.margin_upper >= 0)

    def test_domain(self):
        with pytest.raises(ValueError):
            ml_bounds_check(1.0, 0.5, C)
        with pytest.raises(ValueError):
            ml_bounds_check(0.5, -0.5, C)

    @given(
        st.sampled_from([0.2, 0.35, 0.5, 0.65, 0.8]),
        st.sampled_from([0.3, 0.5, 0.7]),
        st.floats(1e-3, 0.95),
    )
    def test_strict_range_inside_radius(self, alpha, q, frac):
        c = QContext(q)
        z = frac * (1 - q) ** -alpha
        r = ml_bounds_check(alpha, z, c)
        assert min(r.value, 1 - r.value) >= 1e-12
        # ordering of the two bound expressions is a checked fact, not an assumption
        assert r.lower <= r.upper


class TestDecay:
    def test_origin_beta_one(self):
        c = QContext(0.3)
        r = ml_decay_check(MLParams(0.5, 1.0), 0.0, c)
        assert r.value == 1.0
        dc = decay_constant(0.5, 1.0, c)
        assert dc.computable and dc.c_q >= 1.0
        assert r.holds_decay is True and not r.empirical_constant
        assert r.decay_bound == dc.c_q

    def test_constant_at_a_product_pole(self):
        # q = 1/2: (1 - sqrt q) alpha' q^(3/2) = 1 exactly, a pole of 1/(x; sqrt q)_inf
        dc = decay_constant(0.5, 1.0, C)
        assert not dc.computable and math.isnan(dc.c_q)
        r = ml_decay_check(MLParams(0.5, 1.0), 0.0, C)
        assert r.empirical_constant and r.holds_decay is True

    def test_origin_beta_half(self):
        r = ml_decay_check(MLParams(0.5, 0.5), 0.0, C)
        assert r.value == pytest.approx(1 / q_gamma(0.5, C), rel=1e-14)

    def test_outside_radius_value_recorded(self):
        # z = 2 exceeds the radius (1-q)^-alpha = sqrt(2); the value is extrapolated
        r = ml_decay_check(MLParams(0.5, 1.0), 2.0, C)
        assert math.isfinite((1 + r.z) * abs(r.value))
        expected = float(oracles.ml_continuation(0.5, 1.0, -2.0, 0.5))
        assert r.value == pytest.approx(expected, rel=1e-10)

    def test_constant_against_mpmath(self):
        # alpha' and C_q through an independent product evaluation
        alpha, beta, q = 0.5, 1.5, 0.3
        dc = decay_constant(alpha, beta, QContext(q))
        ap = 2**alpha / ((1 - q**beta) * (1 - math.sqrt(q)))
        r = mp.sqrt(mp.mpf(q))
        e = 1 / mp.qp((1 - r) * ap, r)
        assert dc.alpha_prime == pytest.approx(ap, rel=1e-15)
        if e > 0:
            assert dc.computable
            assert dc.c_q == pytest.approx(float(e / oracles.qgamma(beta, q)), rel=1e-11)
        else:
            assert not dc.computable

    def test_beta_zero_not_computable(self):
        assert not decay_constant(0.5, 0.0, C).computable

    def test_domain(self):
        with pytest.raises(ValueError):
            ml_decay_check(MLParams(2.0), 0.5, C)

    def test_empirical_fallback_flagged(self):
        rows = bounds_scan([1.5], [0.5, 1.0, 1.5], [0.3, 0.5], default_radius_grid(15), kind="decay")
        for r in rows:
            assert r.error is None
            assert math.isfinite((1 + r.z) * abs(r.value))
            if r.empirical_constant:
                # the empirical constant is the sup over the group, so it holds by construction
                assert r.holds_decay is True
                assert (1 + r.z) * abs(r.value) <= r.decay_constant
            else:
                assert r.holds_decay == (abs(r.value) <= r.decay_bound)


class TestScan:
    def test_empty(self):
        assert bounds_scan([], [], [], []) == []
        assert bounds_scan([0.5], [1.0], [0.5], []) == []

    def test_singleton_matches_pointwise(self):
        [row] = bounds_scan([0.5], [1.0], [0.5], [0.7], kind="two-sided")
        direct = ml_bounds_check(0.5, 0.7, C)
        assert row.row() == direct.row()

    def test_order_is_lexicographic(self):
        rows = bounds_scan([0.3, 0.6], [1.0], [0.3, 0.5], [0.1, 0.2], kind="two-sided")
        keys = [(r.alpha, r.q, r.z) for r in rows]
        assert keys == [(a, q, z) for a in (0.3, 0.6) for q in (0.3, 0.5) for z in (0.1, 0.2)]

    def test_row_errors_do_not_abort(self):
        rows = bounds_scan([0.5, 1.5], [1.0], [0.5], [0.3], kind="two-sided")
        assert len(rows) == 2
        assert rows[0].error is None
        assert rows[1].error.startswith("ValueError")

    def test_radius_grid(self):
        zs = default_radius_grid(20)(0.5, 0.5)
        assert len(zs) == 20
        assert all(a < b for a, b in zip(zs, zs[1:]))
        assert zs[-1] == pytest.approx(0.95 * 2**0.5)

    def test_summary(self):
        rows = bounds_scan([0.5], [1.0], [0.3, 0.5], default_radius_grid(10), kind="two-sided")
        s = summarize(rows)
        assert s["rows"] == 20
        assert s["pass_rate"]["holds_range"] == 1.0
        assert set(s["worst_margin"]) == {"margin_lower", "margin_upper"}

    def test_violation_factor(self):
        ok = BoundReport(0.5, 1.0, 0.5, 1.0, value=0.5, lower=0.4, upper=0.6, holds_lower=True, holds_upper=True)
        assert violation_factor(ok) == 1.0
        bad = BoundReport(0.5, 1.0, 0.5, 1.0, value=0.5, lower=0.4, upper=0.25, holds_lower=True, holds_upper=False)
        assert violation_factor(bad) == 2.0


class TestSerialisation:
    def test_csv_header_and_rows(self):
        rows = bounds_scan([0.5], [1.0], [0.5], [0.2, 0.4], kind="two-sided")
        parsed = list(csv.reader(io.StringIO(to_csv(rows))))
        assert tuple(parsed[0]) == CSV_FIELDS
        assert len(parsed) == 3
        assert float(parsed[1][4]) == rows[0].value
        assert parsed[1][10] == "true"

    def test_json_same_keys(self):
        rows = bounds_scan([0.5], [1.0], [0.5], [0.0, 0.4], kind="two-sided")
        data = json.loads(to_json(rows))
        assert [tuple(d) for d in data] == [CSV_FIELDS] * 2
        assert data[0]["holds_range"] is None
