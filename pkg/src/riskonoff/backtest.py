"""Cost-aware strategy value recursion.

For weights w_t and asset returns r_t on dates t = 1..T::

    S_t = S_{t-1} * (1 + sum_i w_{t-1}^i r_t^i - b * sum_i |w_t^i - w_{t-1}^i|)

with S_0 = 1 on an origin date before the first weight date.  The position
held before date 1 is ``initial_weights`` (zero unless told otherwise), so
building the first position pays cost.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import AlignmentError, BacktestError, ValidationError
from .metrics import annualized_vol
from .ts_core import DailySeries, TradingCalendar, _frozen


@dataclass(frozen=True, eq=False)
class Panel:
    """Several aligned columns on one calendar; NaN marks absent values."""

    calendar: TradingCalendar
    values: np.ndarray
    columns: tuple[str, ...] = ("asset",)

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape != (len(self.calendar), len(self.columns)):
            raise ValidationError(
                f"panel shape {v.shape} does not match {len(self.calendar)} dates x {len(self.columns)} columns"
            )
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "columns", tuple(self.columns))

    @classmethod
    def from_series(cls, *series: DailySeries):
        cal = series[0].calendar
        for s in series[1:]:
            if s.calendar != cal:
                raise AlignmentError("panel columns must share one calendar")
        return cls(cal, np.column_stack([s.values for s in series]), tuple(s.name or f"c{i}" for i, s in enumerate(series)))

    @property
    def dates(self) -> np.ndarray:
        return self.calendar.dates

    def __len__(self) -> int:
        return len(self.calendar)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Panel):
            return NotImplemented
        return (
            self.calendar == other.calendar
            and self.columns == other.columns
            and bool(np.array_equal(self.values, other.values, equal_nan=True))
        )

    __hash__ = None

    def column(self, i: int = 0) -> DailySeries:
        return DailySeries(self.calendar, self.values[:, i], self.columns[i])

    def defined(self) -> np.ndarray:
        """Dates on which every column is present."""
        return ~np.isnan(self.values).any(axis=1)

    def restrict(self, calendar: TradingCalendar):
        pos = np.searchsorted(self.dates, calendar.dates)
        if np.any(pos >= len(self)) or not np.array_equal(self.dates[pos], calendar.dates):
            raise AlignmentError("target calendar is not a subset of the panel calendar")
        return type(self)(calendar, self.values[pos], self.columns)

    def truncate(self, end):
        cal = self.calendar.until(end)
        return type(self)(cal, self.values[: len(cal)], self.columns)


class WeightSeries(Panel):
    """Long-only weights in [0, 1], absent (NaN) during warm-up."""

    def __post_init__(self) -> None:
        super().__post_init__()
        v = self.values[~np.isnan(self.values)]
        if np.any((v < 0.0) | (v > 1.0)):
            raise ValidationError("weights must lie in [0, 1]")


@dataclass(frozen=True)
class CostModel:
    b: float = 0.0002

    def __post_init__(self) -> None:
        if not self.b >= 0:
            raise ValidationError("cost rate b must be >= 0")


@dataclass(frozen=True, eq=False)
class BacktestResult:
    values: DailySeries          # origin date + one value per weight date
    weights_applied: WeightSeries
    daily_returns: DailySeries
    cost_paid: DailySeries       # fraction of the previous value
    turnover_annualized: float
    initial_weights: np.ndarray = field(default_factory=lambda: np.zeros(1))

    @property
    def calendar(self) -> TradingCalendar:
        return self.weights_applied.calendar


def _as_panel(x, columns: Sequence[str] | None = None) -> Panel:
    if isinstance(x, Panel):
        return x
    if isinstance(x, DailySeries):
        return Panel(x.calendar, x.values, (x.name or "asset",))
    raise TypeError(f"expected Panel or DailySeries, got {type(x).__name__}")


def _initial(initial_weights, k: int) -> np.ndarray:
    if initial_weights is None:
        return np.zeros(k)
    w0 = np.broadcast_to(np.asarray(initial_weights, dtype=float), (k,)).copy()
    if np.any((w0 < 0) | (w0 > 1)) or np.any(np.isnan(w0)):
        raise ValidationError("initial weights must lie in [0, 1]")
    return w0


def turnover(weights: Panel, annualization: int = 252, initial_weights=None) -> float:
    """Average yearly sum of absolute weight changes, entry trade included."""
    w = weights.values
    if w.shape[0] < 2:
        raise ValidationError("turnover needs at least 2 dates")
    w0 = _initial(initial_weights, w.shape[1])
    prev = np.vstack([w0[None, :], w[:-1]])
    total = np.abs(w - prev).sum()
    return float(total * annualization / w.shape[0])


def run_backtest(
    weights: Panel | DailySeries,
    returns: Panel | DailySeries,
    cost: CostModel = CostModel(),
    *,
    initial_weights=None,
    charge_entry: bool = True,
    origin=None,
    annualization: int = 252,
) -> BacktestResult:
    """Fold the value recursion over the weight dates.

    Args:
        weights: target weights per date, one column per asset.
        returns: simple asset returns on the same calendar; ``r_t`` is
            earned by the weight held at ``t - 1``.
        cost: linear cost per unit of absolute weight change.
        initial_weights: position held before the first date (default 0).
        charge_entry: when False the first date's trade is free.
        origin: date stamped on S_0; defaults to the day before the first date.

    Raises:
        BacktestError: a step factor is <= 0, naming the date.
    """
    w_in = _as_panel(weights)
    r_in = _as_panel(returns)
    if not isinstance(w_in, WeightSeries):
        w_in = WeightSeries(w_in.calendar, w_in.values, w_in.columns)
    if w_in.calendar != r_in.calendar:
        raise AlignmentError("weights and returns must share one calendar")
    if w_in.values.shape[1] != r_in.values.shape[1]:
        raise AlignmentError(
            f"{w_in.values.shape[1]} weight columns vs {r_in.values.shape[1]} return columns"
        )
    n = len(w_in)
    if n == 0:
        raise ValidationError("empty backtest")
    W, R = w_in.values, r_in.values
    for what, arr in (("weight", W), ("return", R)):
        bad = np.isnan(arr).any(axis=1)
        if bad.any():
            raise ValidationError(f"absent {what} on {w_in.dates[np.flatnonzero(bad)[0]]}")

    w0 = _initial(initial_weights, W.shape[1])
    prev = np.vstack([w0[None, :], W[:-1]])
    gross = (prev * R).sum(axis=1)
    dw = np.abs(W - prev).sum(axis=1)
    if not charge_entry:
        dw[0] = 0.0
    paid = cost.b * dw
    step = 1.0 + gross - paid
    if np.any(step <= 0):
        i = int(np.flatnonzero(step <= 0)[0])
        raise BacktestError(f"strategy value annihilated on {w_in.dates[i]} (step factor {step[i]!r})")
    values = np.cumprod(np.concatenate([[1.0], step]))

    first = w_in.dates[0]
    origin_d = first - np.timedelta64(1, "D") if origin is None else np.datetime64(origin, "D")
    if origin_d >= first:
        raise ValidationError("origin must precede the first weight date")
    value_cal = TradingCalendar._trusted(np.concatenate([[origin_d], w_in.dates]))

    return BacktestResult(
        values=DailySeries(value_cal, values, "value"),
        weights_applied=w_in,
        daily_returns=DailySeries(w_in.calendar, values[1:] / values[:-1] - 1.0, "ret"),
        cost_paid=DailySeries(w_in.calendar, paid, "cost"),
        turnover_annualized=turnover(w_in, annualization, w0) if n >= 2 else float("nan"),
        initial_weights=w0,
    )


def rescale_to_target_vol(returns: DailySeries, target_vol: float, factor: int = 252) -> DailySeries:
    """Scale returns by a constant so their full-sample annualized vol hits ``target_vol``."""
    if target_vol < 0:
        raise ValidationError("target_vol must be >= 0")
    vol = annualized_vol(returns.values[~np.isnan(returns.values)], factor)
    if not vol > 0:
        raise BacktestError("cannot rescale a series with zero realized volatility")
    return returns.with_values(returns.values * (target_vol / vol))
