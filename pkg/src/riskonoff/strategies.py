"""Signal-to-weight rules for the six strategies and the monthly selector."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .backtest import BacktestResult, WeightSeries
from .config import StrategyId
from .errors import AlignmentError, ValidationError
from .ingestion import PriceTable, market_calendar
from .metrics import sharpe
from .ts_core import DailySeries, TradingCalendar, align, month_ends, simple_returns


def weights_from_signal(signal: DailySeries, lag: int = 1, column: str = "asset") -> WeightSeries:
    """``w_t = signal_{t - lag}``; absent while the lagged signal is."""
    if lag < 1:
        raise ValidationError("signal lag must be >= 1")
    return WeightSeries(signal.calendar, signal.shift(lag).values, (column,))


def si_news_weights(si_appetite: DailySeries, news: DailySeries, lag: int = 1, column: str = "asset") -> WeightSeries:
    """Product of the SI appetite and the binary news signal, lagged."""
    si, nw = align([si_appetite, news])
    prod = si.with_values(si.values * nw.values, "si_news")
    return weights_from_signal(prod, lag, column)


def long_only_weights(calendar: TradingCalendar, column: str = "asset") -> WeightSeries:
    return WeightSeries(calendar, np.ones(len(calendar)), (column,))


def equal_weight_basket_returns(markets: PriceTable, market_ids: Sequence[str] | None = None) -> DailySeries:
    """Daily-rebalanced equal-weight basket: the per-date mean of simple returns."""
    ids = list(market_ids) if market_ids is not None else markets.markets
    if len(ids) < 2:
        raise ValidationError("an equal-weight basket needs at least 2 markets")
    cal = market_calendar(markets, ids)
    rets = np.vstack([simple_returns(markets[m].restrict(cal)).values for m in ids])
    return DailySeries(cal, rets.mean(axis=0), "basket")


# ----------------------------------------------------------------------------
# Dynamic selection between SI and SI+News
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SelectionEntry:
    month: str                 # YYYY-MM
    sharpe_si: float           # measured at this month's last date
    sharpe_si_news: float
    selected: StrategyId       # strategy held during this month


@dataclass(frozen=True)
class SelectionLog:
    entries: tuple[SelectionEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def choose(sharpe_si: float, sharpe_si_news: float, previous: StrategyId) -> StrategyId:
    """Higher Sharpe wins; a tie or an undefined Sharpe keeps ``previous``."""
    if math.isnan(sharpe_si) or math.isnan(sharpe_si_news) or sharpe_si == sharpe_si_news:
        return previous
    return StrategyId.SI if sharpe_si > sharpe_si_news else StrategyId.SINews


def replay_selection(
    sharpes: Iterable[tuple[float, float]], initial: StrategyId = StrategyId.SI
) -> list[StrategyId]:
    """Apply :func:`choose` month by month.

    Element k of the result is the strategy held in the month after the
    k-th Sharpe pair was measured.
    """
    out, current = [], initial
    for s_si, s_news in sharpes:
        current = choose(s_si, s_news, current)
        out.append(current)
    return out


def dynamic_selector(
    bt_si: BacktestResult,
    bt_si_news: BacktestResult,
    window: int = 250,
    cal: TradingCalendar | None = None,
    *,
    lookback: str = "window",
    initial: StrategyId = StrategyId.SI,
    rf_daily: float = 0.0,
    factor: int = 252,
) -> tuple[WeightSeries, SelectionLog]:
    """Monthly switch between the SI and SI+News candidates.

    On each month's last trading day both candidates' Sharpe ratios are
    measured on their trailing ``window`` net daily returns; the winner's
    weights are copied for every date of the next month.  Until ``window``
    returns exist the ``initial`` candidate is held.  With
    ``lookback="month"`` the Sharpe uses that month's returns only.
    """
    cal = cal or bt_si.calendar
    if bt_si.calendar != cal or bt_si_news.calendar != cal:
        raise AlignmentError("candidate backtests must share one calendar")
    if bt_si.weights_applied.columns != bt_si_news.weights_applied.columns:
        raise AlignmentError("candidate weight columns differ")
    if lookback not in ("window", "month"):
        raise ValueError(f"unknown lookback {lookback!r}")
    if window < 2:
        raise ValueError("selector window must be >= 2")
    if initial not in (StrategyId.SI, StrategyId.SINews):
        raise ValueError("initial selection must be SI or SINews")

    r_si = bt_si.daily_returns.values
    r_nw = bt_si_news.daily_returns.values
    dates = cal.dates
    months = dates.astype("datetime64[M]")
    w_si = bt_si.weights_applied.values
    w_nw = bt_si_news.weights_applied.values
    out = np.empty_like(w_si)

    entries = []
    current = initial
    start = 0
    for me in month_ends(cal):
        end = int(np.searchsorted(dates, me)) + 1
        src = w_si if current is StrategyId.SI else w_nw
        out[start:end] = src[start:end]

        if lookback == "window":
            lo = end - window
            warm = lo < 0
        else:
            lo = start
            warm = end - lo < 2
        if warm:
            s_si = s_nw = float("nan")
            nxt = initial
        else:
            s_si = sharpe(r_si[lo:end], rf_daily, factor)
            s_nw = sharpe(r_nw[lo:end], rf_daily, factor)
            nxt = choose(s_si, s_nw, current)
        entries.append(SelectionEntry(str(months[start]), s_si, s_nw, current))
        current = nxt
        start = end

    weights = WeightSeries(cal, out, bt_si.weights_applied.columns)
    return weights, SelectionLog(tuple(entries))


def selection_frequency(log: SelectionLog | Sequence[SelectionEntry]) -> dict[StrategyId, float]:
    """Share of months in which each candidate was held."""
    entries = list(log)
    if not entries:
        raise ValueError("empty selection log")
    counts = Counter(e.selected for e in entries)
    n = len(entries)
    return {sid: counts.get(sid, 0) / n for sid in (StrategyId.SI, StrategyId.SINews)}
