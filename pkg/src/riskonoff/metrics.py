"""Performance statistics: Sharpe, Calmar, vol, max drawdown, turnover.

Undefined ratios (zero variance, zero drawdown) come back as NaN, never 0
or infinity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .backtest import BacktestResult
    from .config import StrategyId

NAN = float("nan")


def _arr(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x), dtype=float)


def _std(x: np.ndarray) -> float:
    if x.size < 2:
        raise ValueError("need at least 2 observations")
    if x.max() == x.min():
        return 0.0
    return float(np.std(x, ddof=1))


def annualized_vol(daily_returns, factor: int = 252) -> float:
    """Sample standard deviation times sqrt(factor)."""
    return _std(_arr(daily_returns)) * math.sqrt(factor)


def sharpe(daily_returns, rf_daily: float = 0.0, factor: int = 252) -> float:
    """Annualized mean excess return over its volatility; NaN when flat."""
    ex = _arr(daily_returns) - rf_daily
    sd = _std(ex)
    if sd == 0.0:
        return NAN
    return float(ex.mean() / sd * math.sqrt(factor))


def drawdown_path(values) -> np.ndarray:
    v = _arr(values)
    return 1.0 - v / np.maximum.accumulate(v)


def max_drawdown(values) -> float:
    """Largest peak-to-trough loss, as a fraction of the peak."""
    v = _arr(values)
    if v.size == 0:
        raise ValueError("empty value path")
    if np.any(v <= 0):
        raise ValueError("value path must be positive")
    return float(drawdown_path(v).max())


def annualized_return(values, factor: int = 252) -> float:
    """Geometric annual growth, ``(S_T / S_0) ** (factor / steps) - 1``."""
    v = _arr(values)
    if v.size < 2:
        raise ValueError("need at least 2 values")
    return float((v[-1] / v[0]) ** (factor / (v.size - 1)) - 1.0)


def calmar(values, factor: int = 252) -> float:
    mdd = max_drawdown(values)
    if mdd == 0.0:
        return NAN
    return annualized_return(values, factor) / mdd


@dataclass(frozen=True)
class PerfStats:
    sharpe: float
    calmar: float
    vol: float
    max_dd: float
    ann_return: float
    turnover: float


def perf_stats(result: "BacktestResult", factor: int = 252, rf_daily: float = 0.0) -> PerfStats:
    r = result.daily_returns.values
    return PerfStats(
        sharpe=sharpe(r, rf_daily, factor),
        calmar=calmar(result.values, factor),
        vol=annualized_vol(r, factor),
        max_dd=max_drawdown(result.values),
        ann_return=annualized_return(result.values, factor),
        turnover=result.turnover_annualized,
    )


TABLE_COLUMNS = ("Strategy", "Sharpe", "Calmar", "Vol", "Max DD", "Turnover")


@dataclass(frozen=True)
class PerfRow:
    strategy: "StrategyId"
    stats: PerfStats


def perf_table(results: Sequence[tuple["StrategyId", "BacktestResult"]], factor: int = 252, rf_daily: float = 0.0) -> list[PerfRow]:
    """One row per strategy, best Sharpe first.

    Ties (and NaN Sharpes, which go last) fall back to strategy order.
    """
    if not results:
        raise ValueError("no results to tabulate")
    rows = [PerfRow(sid, perf_stats(bt, factor, rf_daily)) for sid, bt in results]
    return sort_rows(rows)


def sort_rows(rows: Sequence[PerfRow]) -> list[PerfRow]:
    def key(row: PerfRow):
        s = row.stats.sharpe
        return (math.isnan(s), -s if not math.isnan(s) else 0.0, row.strategy.rank)

    return sorted(rows, key=key)


def _num(x: float, spec: str) -> str:
    return "n.a." if math.isnan(x) else format(x, spec)


def _pct(x: float, digits: int) -> str:
    return "n.a." if math.isnan(x) else f"{x * 100:.{digits}f}%"


def _turnover_cell(row: PerfRow, fmt) -> str:
    from .config import StrategyId

    if row.strategy is StrategyId.LongOnly:
        return "n.a."
    return fmt(row.stats.turnover)


def table_csv_rows(rows: Sequence[PerfRow]) -> list[list[str]]:
    """Full-precision cells for the CSV export."""
    out = [list(TABLE_COLUMNS)]
    for r in rows:
        s = r.stats
        out.append([
            r.strategy.label,
            repr(s.sharpe), repr(s.calmar), repr(s.vol), repr(s.max_dd),
            _turnover_cell(r, repr),
        ])
    return out


def table_markdown(rows: Sequence[PerfRow], title: str | None = None) -> str:
    """Aligned markdown in the layout of the comparison tables."""
    body = [list(TABLE_COLUMNS)]
    for r in rows:
        s = r.stats
        body.append([
            r.strategy.label,
            _num(s.sharpe, ".2f"),
            _num(s.calmar, ".2f"),
            _pct(s.vol, 1),
            _pct(s.max_dd, 0),
            _turnover_cell(r, lambda x: _num(x, ".1f")),
        ])
    return render_markdown(body, title)


def render_markdown(cells: Sequence[Sequence[str]], title: str | None = None) -> str:
    widths = [max(len(row[i]) for row in cells) for i in range(len(cells[0]))]

    def line(row):
        parts = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        return "| " + " | ".join(parts) + " |"

    sep = "|" + "|".join(
        [":" + "-" * (widths[0] + 1)] + ["-" * (w + 1) + ":" for w in widths[1:]]
    ) + "|"
    lines = [line(cells[0]), sep] + [line(r) for r in cells[1:]]
    if title:
        lines = [f"### {title}", ""] + lines
    return "\n".join(lines) + "\n"
