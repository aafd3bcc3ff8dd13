import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import series
from oracles import naive_backtest
from riskonoff.backtest import CostModel, Panel, WeightSeries, rescale_to_target_vol, run_backtest, turnover
from riskonoff.errors import AlignmentError, BacktestError, ValidationError
from riskonoff.metrics import annualized_vol
from riskonoff.synthetic import weekdays
from riskonoff.ts_core import TradingCalendar


def panel(values, cls=Panel):
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    cal = TradingCalendar(weekdays(dt.date(2021, 1, 4), v.shape[0]))
    return cls(cal, v, tuple(f"a{i}" for i in range(v.shape[1])))


class TestRecursion:
    def test_zero_weights_stay_flat(self, rng):
        bt = run_backtest(panel(np.zeros(20)), panel(rng.normal(0, 0.02, 20)))
        assert np.all(bt.values.values == 1.0)

    def test_buy_and_hold(self, rng):
        r = rng.normal(0, 0.01, 30)
        bt = run_backtest(panel(np.ones(30)), panel(r), initial_weights=1.0)
        np.testing.assert_allclose(bt.values.values[1:], np.cumprod(1 + r), rtol=1e-13)
        assert bt.turnover_annualized == 0.0

    def test_hand_example(self):
        # enter fully on day 1 and earn 1% on day 2
        bt = run_backtest(panel([1.0, 1.0]), panel([0.05, 0.01]))
        assert bt.values.values[1] == pytest.approx(0.9998, abs=1e-15)
        assert bt.values.values[2] == pytest.approx(0.9998 * 1.01, abs=1e-15)

    def test_free_entry(self):
        bt = run_backtest(panel([1.0, 1.0]), panel([0.05, 0.01]), charge_entry=False)
        assert bt.values.values[1] == 1.0

    def test_origin_precedes_first_date(self):
        bt = run_backtest(panel([0.5, 0.5]), panel([0.0, 0.0]))
        assert bt.values.dates[0] < bt.calendar.dates[0]
        assert len(bt.values) == len(bt.calendar) + 1
        with pytest.raises(ValidationError):
            run_backtest(panel([0.5, 0.5]), panel([0.0, 0.0]), origin="2021-01-04")

    def test_matches_oracle_multi_asset(self, rng):
        for _ in range(30):
            n, k = int(rng.integers(2, 60)), int(rng.integers(1, 5))
            w = rng.uniform(0, 1, (n, k))
            r = rng.normal(0, 0.02, (n, k))
            w0 = rng.uniform(0, 1, k)
            bt = run_backtest(panel(w, WeightSeries), panel(r), CostModel(0.001), initial_weights=w0)
            want = naive_backtest(w.tolist(), r.tolist(), 0.001, initial=w0.tolist())
            np.testing.assert_allclose(bt.values.values, want, rtol=1e-12)

    def test_path_consistency(self, rng):
        bt = run_backtest(panel(rng.uniform(0, 1, 50)), panel(rng.normal(0, 0.01, 50)))
        v = bt.values.values
        np.testing.assert_allclose(bt.daily_returns.values, v[1:] / v[:-1] - 1, rtol=1e-15)

    def test_deterministic(self, rng):
        w, r = panel(rng.uniform(0, 1, 40)), panel(rng.normal(0, 0.01, 40))
        a, b = run_backtest(w, r), run_backtest(w, r)
        assert a.values == b.values and a.cost_paid == b.cost_paid

    def test_annihilation_names_the_date(self):
        with pytest.raises(BacktestError, match="2021-01-05"):
            run_backtest(panel([1.0, 1.0]), panel([0.0, -1.0]))

    def test_absent_weight_rejected(self):
        with pytest.raises(ValidationError, match="absent weight"):
            run_backtest(panel([np.nan, 1.0]), panel([0.0, 0.0]))

    def test_out_of_range_weight(self):
        with pytest.raises(ValidationError):
            panel([1.5, 0.0], WeightSeries)

    def test_calendar_mismatch(self):
        w = panel([1.0, 1.0])
        r = Panel(TradingCalendar(["2022-01-03", "2022-01-04"]), [0.0, 0.0], ("a0",))
        with pytest.raises(AlignmentError):
            run_backtest(w, r)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(0, 1), min_size=2, max_size=40),
    st.floats(0, 0.01),
    st.floats(0, 0.01),
)
def test_cost_is_monotone(weights, b1, b2):
    lo, hi = sorted((b1, b2))
    r = np.linspace(-0.01, 0.012, len(weights))
    v_lo = run_backtest(panel(weights), panel(r), CostModel(lo)).values.values[-1]
    v_hi = run_backtest(panel(weights), panel(r), CostModel(hi)).values.values[-1]
    assert v_hi <= v_lo * (1 + 1e-12)


class TestTurnover:
    def test_single_entry(self):
        w = panel(np.ones(252), WeightSeries)
        assert turnover(w) == pytest.approx(1.0)

    def test_daily_flip(self):
        w = panel(np.tile([1.0, 0.0], 126), WeightSeries)
        assert turnover(w) == pytest.approx(252.0)

    def test_needs_two_dates(self):
        with pytest.raises(ValidationError):
            turnover(panel([1.0], WeightSeries))


class TestRescale:
    def test_hits_target(self, rng):
        s = series(rng.normal(0, 0.02, 300))
        out = rescale_to_target_vol(s, 0.1)
        assert annualized_vol(out.values) == pytest.approx(0.1, rel=1e-12)

    def test_zero_vol(self):
        with pytest.raises(BacktestError):
            rescale_to_target_vol(series([0.001] * 10), 0.1)
