import dataclasses
import datetime as dt
import math

import numpy as np
import pytest

from conftest import series
from riskonoff.backtest import run_backtest
from riskonoff.config import StrategyId
from riskonoff.errors import AlignmentError, ValidationError
from riskonoff.ingestion import PriceTable
from riskonoff.strategies import (
    SelectionEntry,
    SelectionLog,
    choose,
    dynamic_selector,
    equal_weight_basket_returns,
    long_only_weights,
    replay_selection,
    selection_frequency,
    si_news_weights,
    weights_from_signal,
)
from riskonoff.synthetic import weekdays
from riskonoff.ts_core import DailySeries, TradingCalendar

SI, NEWS = StrategyId.SI, StrategyId.SINews


def candidates(rng, n=700, start=dt.date(2019, 1, 1)):
    cal = TradingCalendar(weekdays(start, n))
    r = DailySeries(cal, rng.normal(0.0004, 0.01, n), "r")
    w1 = DailySeries(cal, rng.uniform(0, 1, n), "w")
    w2 = DailySeries(cal, (rng.uniform(0, 1, n) > 0.4).astype(float), "w")
    return run_backtest(w1, r), run_backtest(w2, r), cal


class TestWeights:
    def test_shift_by_lag(self, rng):
        s = series(rng.integers(0, 2, 30).astype(float))
        for lag in (1, 2, 5):
            w = weights_from_signal(s, lag).values[:, 0]
            assert np.all(np.isnan(w[:lag]))
            np.testing.assert_array_equal(w[lag:], s.values[:-lag])

    def test_lag_zero_rejected(self):
        with pytest.raises(ValidationError):
            weights_from_signal(series([1.0, 0.0]), 0)

    def test_si_news_is_the_lagged_product(self, rng):
        si = series(rng.uniform(0.01, 0.99, 40))
        nw = series(rng.integers(0, 2, 40).astype(float))
        w = si_news_weights(si, nw).values[:, 0]
        np.testing.assert_array_equal(w[1:], si.values[:-1] * nw.values[:-1])
        assert np.all(w[1:][nw.values[:-1] == 0] == 0)

    def test_long_only(self):
        cal = TradingCalendar(weekdays(dt.date(2020, 1, 1), 5))
        assert np.all(long_only_weights(cal).values == 1.0)


class TestBasket:
    def _table(self, cols):
        n = len(next(iter(cols.values())))
        dates = weekdays(dt.date(2020, 1, 1), n)
        return PriceTable({k: DailySeries.from_pairs(dates, v, k) for k, v in cols.items()})

    def test_identical_markets(self, rng):
        p = 100 * np.cumprod(1 + rng.normal(0, 0.01, 50))
        b = equal_weight_basket_returns(self._table({"A": p, "B": p, "C": p}))
        np.testing.assert_allclose(b.values[1:], p[1:] / p[:-1] - 1, atol=1e-15)

    def test_offsetting_markets(self):
        b = equal_weight_basket_returns(self._table({"A": [100.0, 101.0], "B": [100.0, 99.0]}))
        assert b.values[1] == pytest.approx(0.0, abs=1e-15)

    def test_per_date_mean(self, rng):
        cols = {m: 50 * np.cumprod(1 + rng.normal(0, 0.01, 80)) for m in "ABCDEF"}
        b = equal_weight_basket_returns(self._table(cols))
        for t in range(1, 80):
            expected = sum(cols[m][t] / cols[m][t - 1] - 1 for m in "ABCDEF") / 6
            assert b.values[t] == pytest.approx(expected, abs=1e-15)

    def test_single_market_rejected(self):
        with pytest.raises(ValidationError):
            equal_weight_basket_returns(self._table({"A": [1.0, 2.0]}))


class TestChoose:
    # Dec..Apr Sharpe pairs and the strategy that must follow each
    TABLE = [
        ((0.4, 0.9), NEWS),
        ((-0.1, 0.7), NEWS),
        ((0.2, 0.5), NEWS),
        ((0.5, 0.1), SI),
        ((1.2, 0.6), SI),
    ]

    def test_replay(self):
        picks = replay_selection([p for p, _ in self.TABLE], initial=SI)
        assert picks == [want for _, want in self.TABLE]

    def test_tie_and_nan_keep_previous(self):
        assert choose(0.3, 0.3, NEWS) is NEWS
        assert choose(math.nan, 0.3, SI) is SI
        assert choose(0.3, math.nan, NEWS) is NEWS


class TestDynamicSelector:
    def test_weights_constant_source_within_month(self, rng):
        a, b, cal = candidates(rng)
        w, log = dynamic_selector(a, b, 250)
        months = cal.dates.astype("datetime64[M]")
        for e in log:
            mask = months == np.datetime64(e.month, "M")
            src = a if e.selected is SI else b
            np.testing.assert_array_equal(w.values[mask], src.weights_applied.values[mask])

    def test_decision_uses_trailing_window(self, rng):
        a, b, cal = candidates(rng)
        _, log = dynamic_selector(a, b, 250)
        dates = cal.dates
        for prev, nxt in zip(log.entries, log.entries[1:]):
            end = int(np.flatnonzero(dates.astype("datetime64[M]") == np.datetime64(prev.month, "M"))[-1]) + 1
            if end < 250:
                assert math.isnan(prev.sharpe_si) and nxt.selected is SI
                continue
            ra, rb = a.daily_returns.values[end - 250:end], b.daily_returns.values[end - 250:end]
            sa = ra.mean() / ra.std(ddof=1) * math.sqrt(252)
            sb = rb.mean() / rb.std(ddof=1) * math.sqrt(252)
            assert prev.sharpe_si == pytest.approx(sa, rel=1e-12)
            assert prev.sharpe_si_news == pytest.approx(sb, rel=1e-12)
            assert nxt.selected is choose(sa, sb, prev.selected)

    def test_identical_candidates_hold_si(self, rng):
        a, _, _ = candidates(rng)
        w, log = dynamic_selector(a, a, 250)
        assert all(e.selected is SI for e in log)
        assert w == a.weights_applied

    def test_scale_invariance(self, rng):
        a, b, _ = candidates(rng)
        _, log1 = dynamic_selector(a, b, 250)
        a3 = dataclasses.replace(a, daily_returns=a.daily_returns.with_values(a.daily_returns.values * 3))
        b3 = dataclasses.replace(b, daily_returns=b.daily_returns.with_values(b.daily_returns.values * 3))
        _, log3 = dynamic_selector(a3, b3, 250)
        assert [e.selected for e in log1] == [e.selected for e in log3]

    def test_warm_up_holds_initial(self, rng):
        a, b, _ = candidates(rng, n=200)
        w, log = dynamic_selector(a, b, 250, initial=NEWS)
        assert all(e.selected is NEWS for e in log)
        assert w == b.weights_applied

    def test_month_lookback(self, rng):
        a, b, _ = candidates(rng)
        _, log = dynamic_selector(a, b, 250, lookback="month")
        assert not math.isnan(log.entries[0].sharpe_si)

    def test_calendar_mismatch(self, rng):
        a, _, _ = candidates(rng, start=dt.date(2019, 1, 1))
        b, _, _ = candidates(rng, start=dt.date(2019, 2, 1))
        with pytest.raises(AlignmentError):
            dynamic_selector(a, b, 250)


class TestFrequency:
    def test_71_29(self):
        entries = [SelectionEntry(f"m{i}", 0.0, 0.0, SI if i < 71 else NEWS) for i in range(100)]
        freq = selection_frequency(SelectionLog(tuple(entries)))
        assert freq[SI] == 0.71 and freq[NEWS] == 0.29

    def test_empty(self):
        with pytest.raises(ValueError):
            selection_frequency([])
