"""Calendar-aligned daily series and the rolling statistics built on them.

Absent values (warm-up, not yet observed) are stored as NaN.  Every
statistic here is causal: the output at date t reads only inputs dated <= t,
so truncating the input never changes an earlier output.
"""
from __future__ import annotations

import bisect
import datetime as dt
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .errors import AlignmentError, ValidationError


def to_date64(value) -> np.datetime64:
    """Coerce an ISO string, ``date`` or ``datetime64`` to ``datetime64[D]``."""
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[D]")
    if isinstance(value, dt.datetime):
        value = value.date()
    if isinstance(value, dt.date):
        return np.datetime64(value.isoformat(), "D")
    if isinstance(value, str):
        try:
            return np.datetime64(dt.date.fromisoformat(value.strip()).isoformat(), "D")
        except ValueError as exc:
            raise ValidationError(f"not an ISO-8601 date: {value!r}") from exc
    raise ValidationError(f"cannot interpret {value!r} as a date")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


class TradingCalendar:
    """Strictly increasing sequence of trading dates."""

    __slots__ = ("dates",)

    def __init__(self, dates: Iterable) -> None:
        arr = np.asarray([to_date64(d) for d in dates], dtype="datetime64[D]")
        if arr.size > 1 and not np.all(arr[1:] > arr[:-1]):
            bad = int(np.argmin(arr[1:] > arr[:-1])) + 1
            raise ValidationError(
                f"calendar dates must be strictly increasing (violation at {arr[bad]})"
            )
        self.dates = _frozen(arr)

    @classmethod
    def _trusted(cls, arr: np.ndarray) -> "TradingCalendar":
        obj = cls.__new__(cls)
        obj.dates = _frozen(np.asarray(arr, dtype="datetime64[D]"))
        return obj

    def __len__(self) -> int:
        return int(self.dates.size)

    def __iter__(self):
        return iter(self.dates)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return TradingCalendar._trusted(self.dates[item])
        return self.dates[item]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TradingCalendar):
            return NotImplemented
        return bool(np.array_equal(self.dates, other.dates))

    def __hash__(self) -> int:
        return hash(self.dates.tobytes())

    def __repr__(self) -> str:
        if not len(self):
            return "TradingCalendar([])"
        return f"TradingCalendar({self.dates[0]}..{self.dates[-1]}, n={len(self)})"

    def position(self, date) -> int:
        """Index of ``date``; raises ``KeyError`` if it is not a trading day."""
        d = to_date64(date)
        i = int(np.searchsorted(self.dates, d))
        if i >= len(self) or self.dates[i] != d:
            raise KeyError(f"{d} not in calendar")
        return i

    def until(self, date) -> "TradingCalendar":
        """Dates <= ``date``."""
        stop = int(np.searchsorted(self.dates, to_date64(date), side="right"))
        return self[:stop]


@dataclass(frozen=True, eq=False)
class DailySeries:
    """One float per calendar date; NaN marks an absent value."""

    calendar: TradingCalendar
    values: np.ndarray
    name: str = ""

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size != len(self.calendar):
            raise ValidationError(
                f"series {self.name!r}: {vals.size} values for {len(self.calendar)} dates"
            )
        object.__setattr__(self, "values", _frozen(vals))

    @classmethod
    def from_pairs(cls, dates: Sequence, values: Sequence[float], name: str = "") -> "DailySeries":
        return cls(TradingCalendar(dates), np.asarray(values, dtype=float), name)

    @property
    def dates(self) -> np.ndarray:
        return self.calendar.dates

    def __len__(self) -> int:
        return len(self.calendar)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DailySeries):
            return NotImplemented
        return self.calendar == other.calendar and bool(
            np.array_equal(self.values, other.values, equal_nan=True)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"DailySeries({self.name!r}, {self.calendar!r})"

    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def first_defined(self) -> np.datetime64 | None:
        idx = np.flatnonzero(self.defined())
        return self.dates[idx[0]] if idx.size else None

    def truncate(self, end) -> "DailySeries":
        """Keep dates <= ``end``."""
        cal = self.calendar.until(end)
        return DailySeries(cal, self.values[: len(cal)], self.name)

    def restrict(self, calendar: TradingCalendar) -> "DailySeries":
        """Restrict to a sub-calendar; every target date must already exist."""
        pos = np.searchsorted(self.dates, calendar.dates)
        ok = (pos < len(self)) & (self.dates[np.minimum(pos, len(self) - 1)] == calendar.dates)
        if not np.all(ok):
            missing = calendar.dates[~ok][0]
            raise AlignmentError(f"series {self.name!r} has no value on {missing}")
        return DailySeries(calendar, self.values[pos], self.name)

    def shift(self, lag: int) -> "DailySeries":
        """Move values ``lag`` trading days later along the same calendar."""
        if lag < 0:
            raise ValueError("lag must be >= 0")
        out = np.full(len(self), np.nan)
        if lag < len(self):
            out[lag:] = self.values[: len(self) - lag]
        return DailySeries(self.calendar, out, self.name)

    def with_values(self, values: np.ndarray, name: str | None = None) -> "DailySeries":
        return DailySeries(self.calendar, values, self.name if name is None else name)

    def to_pandas(self) -> pd.Series:
        return pd.Series(self.values, index=pd.DatetimeIndex(self.dates), name=self.name or None)


@dataclass(frozen=True)
class RollingParams:
    """Trailing window (``None`` for expanding) and minimum observation count."""

    window: int | None
    min_obs: int

    def __post_init__(self) -> None:
        if self.window is not None and self.window < 1:
            raise ValueError("window must be >= 1")
        if self.min_obs < 1:
            raise ValueError("min_obs must be >= 1")
        if self.window is not None and self.min_obs > self.window:
            raise ValueError("min_obs must not exceed window")


def align(series_list: Sequence[DailySeries]) -> list[DailySeries]:
    """Restrict every series to the intersection of their calendars."""
    if not series_list:
        return []
    for s in series_list:
        if len(s) == 0:
            raise AlignmentError(f"series {s.name!r} is empty")
    common = series_list[0].dates
    for j, s in enumerate(series_list[1:], start=1):
        nxt = np.intersect1d(common, s.dates, assume_unique=True)
        if nxt.size == 0:
            names = [x.name or f"#{i}" for i, x in enumerate(series_list)]
            culprit = s.name or f"#{j}"
            raise AlignmentError(
                f"calendars of {names} have an empty intersection; {culprit!r} is disjoint "
                "from the dates shared by the series before it"
            )
        common = nxt
    cal = TradingCalendar._trusted(common)
    return [s.restrict(cal) for s in series_list]


def _rolling_moments(x: np.ndarray, window: int):
    """Per-date count, mean and sample variance over the trailing window.

    NaNs are skipped.  Windows whose present values are all equal get an
    exact zero variance and an exact mean.
    """
    n = x.size
    padded = np.concatenate([np.full(window - 1, np.nan), x])
    win = np.lib.stride_tricks.sliding_window_view(padded, window)[:n]
    mask = ~np.isnan(win)
    cnt = mask.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        hi = np.where(mask, win, -np.inf).max(axis=1)
        lo = np.where(mask, win, np.inf).min(axis=1)
        mean = np.where(mask, win, 0.0).sum(axis=1) / cnt
        flat = hi == lo
        mean[flat] = hi[flat]
        dev = np.where(mask, win - mean[:, None], 0.0)
        var = (dev * dev).sum(axis=1) / (cnt - 1)
    var[flat] = 0.0
    return cnt, mean, var


def _expanding_moments(x: np.ndarray):
    n = x.size
    cnt = np.zeros(n, dtype=int)
    mean = np.full(n, np.nan)
    var = np.full(n, np.nan)
    k, m, m2 = 0, 0.0, 0.0
    hi, lo = -math.inf, math.inf
    for t in range(n):
        v = x[t]
        if not math.isnan(v):
            k += 1
            delta = v - m
            m += delta / k
            m2 += delta * (v - m)
            hi, lo = max(hi, v), min(lo, v)
        cnt[t] = k
        if k:
            if hi == lo:
                mean[t], var[t] = hi, 0.0
            else:
                mean[t] = m
                var[t] = m2 / (k - 1)
    return cnt, mean, var


def _moments(x: np.ndarray, p: RollingParams):
    if p.window is None:
        return _expanding_moments(x)
    return _rolling_moments(x, p.window)


def rolling_mean(s: DailySeries, p: RollingParams) -> DailySeries:
    """Trailing mean over ``p.window`` observations ending at t (inclusive)."""
    cnt, mean, _ = _moments(s.values, p)
    out = np.where(cnt >= p.min_obs, mean, np.nan)
    return s.with_values(out)


def rolling_zscore(s: DailySeries, p: RollingParams) -> DailySeries:
    """``(s_t - mean) / std`` over the trailing window, sample std.

    A window with zero dispersion scores 0.
    """
    if p.min_obs < 2:
        raise ValueError("z-scores need min_obs >= 2")
    x = s.values
    cnt, mean, var = _moments(x, p)
    ok = (cnt >= p.min_obs) & ~np.isnan(x)
    out = np.full(x.size, np.nan)
    std = np.sqrt(var[ok])
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(std > 0, (x[ok] - mean[ok]) / std, 0.0)
    out[ok] = z
    return s.with_values(out)


def percentile_linear(sorted_vals: Sequence[float], q: float) -> float:
    """Linear interpolation between closest ranks, rank h = (n - 1) * q."""
    n = len(sorted_vals)
    h = (n - 1) * q
    lo = math.floor(h)
    hi = min(lo + 1, n - 1)
    frac = h - lo
    a, b = sorted_vals[lo], sorted_vals[hi]
    return a if frac == 0 or a == b else a + frac * (b - a)


def expanding_percentile(s: DailySeries, q: float, min_obs: int) -> DailySeries:
    """q-th percentile of every observation up to and including t."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if min_obs < 2:
        raise ValueError("min_obs must be >= 2")
    seen: list[float] = []
    out = np.full(len(s), np.nan)
    for t, v in enumerate(s.values):
        if not math.isnan(v):
            bisect.insort(seen, float(v))
        if len(seen) >= min_obs:
            out[t] = percentile_linear(seen, q)
    return s.with_values(out)


_SQRT2 = math.sqrt(2.0)


def normal_cdf(x: float) -> float:
    """Standard normal CDF."""
    if not math.isfinite(x):
        raise ValueError(f"normal_cdf needs a finite argument, got {x!r}")
    return 0.5 * math.erfc(-x / _SQRT2)


def normal_cdf_array(x: np.ndarray) -> np.ndarray:
    """Elementwise :func:`normal_cdf`; NaN passes through as absent."""
    x = np.asarray(x, dtype=float)
    if np.any(np.isinf(x)):
        raise ValueError("normal_cdf needs finite arguments")
    out = np.full(x.shape, np.nan)
    ok = ~np.isnan(x)
    out[ok] = [0.5 * math.erfc(-v / _SQRT2) for v in x[ok]]
    return out


def month_ends(cal: TradingCalendar) -> list[np.datetime64]:
    """Last trading date of every calendar month present in ``cal``."""
    if not len(cal):
        raise ValidationError("month_ends needs a non-empty calendar")
    months = cal.dates.astype("datetime64[M]")
    last = np.append(months[1:] != months[:-1], True)
    return list(cal.dates[last])


def asof_reindex(s: DailySeries, calendar: TradingCalendar, limit: int, *, strict: bool = True) -> DailySeries:
    """Carry the latest observation dated <= t onto ``calendar``.

    Dates before the first observation are absent.  A value carried across
    more than ``limit`` target dates raises (``strict``) or becomes absent.
    """
    src = s.dates
    tgt = calendar.dates
    idx = np.searchsorted(src, tgt, side="right") - 1
    out = np.full(tgt.size, np.nan)
    have = idx >= 0
    if not np.any(have):
        return DailySeries(calendar, out, s.name)
    u = src[np.maximum(idx, 0)]
    stale = np.arange(tgt.size) - np.searchsorted(tgt, u, side="right") + 1
    too_old = have & (stale > limit)
    if np.any(too_old):
        if strict:
            first = tgt[np.flatnonzero(too_old)[0]]
            raise ValidationError(
                f"series {s.name!r}: gap longer than {limit} trading days at {first}"
            )
        have = have & ~too_old
    out[have] = s.values[idx[have]]
    return DailySeries(calendar, out, s.name)


def simple_returns(levels: DailySeries) -> DailySeries:
    """``P_t / P_{t-1} - 1``; absent on the first date."""
    x = levels.values
    out = np.full(x.size, np.nan)
    out[1:] = x[1:] / x[:-1] - 1.0
    return levels.with_values(out)
