"""News sentiment, stress index and VIX regime signals."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import AlignmentError, ValidationError
from .ingestion import CATEGORIES, RiskFactorTable, SentimentDay, sentiment_calendar
from .ts_core import (
    DailySeries,
    RollingParams,
    expanding_percentile,
    normal_cdf_array,
    rolling_mean,
    rolling_zscore,
)

log = logging.getLogger(__name__)

# Largest/smallest doubles strictly inside (0, 1); the CDF rounds to 0 or 1 in the far tails.
_OPEN_LO = np.nextafter(0.0, 1.0)
_OPEN_HI = np.nextafter(1.0, 0.0)


@dataclass(frozen=True, eq=False)
class SignalSeries(DailySeries):
    """A daily series whose defined values obey a range contract.

    ``kind`` is ``"binary"`` (values in {0, 1}) or ``"open_unit"`` (0 < v < 1).
    """

    kind: str = "binary"

    def __post_init__(self) -> None:
        super().__post_init__()
        v = self.values[~np.isnan(self.values)]
        if self.kind == "binary":
            if not np.all((v == 0.0) | (v == 1.0)):
                raise ValidationError(f"signal {self.name!r}: binary signal has values outside {{0, 1}}")
        elif self.kind == "open_unit":
            if not np.all((v > 0.0) & (v < 1.0)):
                raise ValidationError(f"signal {self.name!r}: values must lie strictly inside (0, 1)")
        else:
            raise ValueError(f"unknown signal kind {self.kind!r}")

    @classmethod
    def of(cls, series: DailySeries, kind: str, name: str | None = None) -> "SignalSeries":
        return cls(series.calendar, series.values, name or series.name, kind)


# ----------------------------------------------------------------------------
# News
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class NewsSignalParams:
    agg_window: int = 10
    smooth_window: int = 10
    z_window: int | None = None
    z_min_obs: int = 60
    threshold: float = 0.0

    def __post_init__(self) -> None:
        if self.agg_window < 1 or self.smooth_window < 1:
            raise ValueError("news windows must be >= 1")
        if self.z_window is not None and self.z_window < 1:
            raise ValueError("news z_window must be >= 1")


def daily_sentiment_score(day: SentimentDay) -> int:
    return day.n_pos - day.n_neg


def news_signal_stages(days: Sequence[SentimentDay], p: NewsSignalParams = NewsSignalParams()) -> dict[str, DailySeries]:
    """Every intermediate of the news chain, keyed by stage name.

    score -> trailing mean (agg) -> z-score -> trailing mean (smooth) -> signal.
    Summing instead of averaging at the first stage would only rescale it,
    which the z-score removes.
    """
    if not days:
        raise ValidationError("no sentiment days")
    cal = sentiment_calendar(days)
    score = DailySeries(cal, np.array([daily_sentiment_score(d) for d in days], dtype=float), "news_score")
    agg = rolling_mean(score, RollingParams(p.agg_window, p.agg_window))
    z = rolling_zscore(agg, RollingParams(p.z_window, p.z_min_obs))
    smooth = rolling_mean(z, RollingParams(p.smooth_window, p.smooth_window))
    sig = np.where(np.isnan(smooth.values), np.nan, (smooth.values > p.threshold).astype(float))
    return {
        "score": score,
        "agg": agg,
        "z": z,
        "smooth": smooth,
        "signal": SignalSeries(cal, sig, "news", "binary"),
    }


def news_signal_pipeline(days: Sequence[SentimentDay], p: NewsSignalParams = NewsSignalParams()) -> SignalSeries:
    """Binary news indicator on the sentiment calendar; absent during warm-up."""
    return news_signal_stages(days, p)["signal"]


# ----------------------------------------------------------------------------
# Stress index
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class StressIndexParams:
    z_window: int | None = 500
    z_min_obs: int = 250
    categories: tuple[str, ...] = CATEGORIES

    def __post_init__(self) -> None:
        if self.z_min_obs < 2:
            raise ValueError("stress z_min_obs must be >= 2")
        if self.z_window is not None and self.z_window < self.z_min_obs:
            raise ValueError("stress z_window must be >= z_min_obs")
        bad = [c for c in self.categories if c not in CATEGORIES]
        if bad or not self.categories:
            raise ValueError(f"bad stress categories {bad or '(none)'}")


def factor_zscores(risks: RiskFactorTable, p: StressIndexParams) -> dict[str, DailySeries]:
    rp = RollingParams(p.z_window, p.z_min_obs)
    return {fid: rolling_zscore(f.series, rp) for fid, f in sorted(risks.factors.items())}


def category_stress(risks: RiskFactorTable, zscores: Mapping[str, DailySeries], categories: Sequence[str]) -> dict[str, DailySeries]:
    """Mean of the defined member z-scores per category and date."""
    groups = risks.by_category()
    out = {}
    for cat in categories:
        members = groups.get(cat)
        if not members:
            raise ValidationError(f"stress category {cat!r} has no risk factors")
        stack = np.vstack([zscores[m.factor_id].values for m in members])
        cnt = (~np.isnan(stack)).sum(axis=0)
        total = np.where(np.isnan(stack), 0.0, stack).sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.where(cnt > 0, total / cnt, np.nan)
        out[cat] = zscores[members[0].factor_id].with_values(mean, cat)
    return out


def composite_stress(category_values: Mapping[str, DailySeries]) -> SignalSeries:
    """Normal CDF of the equal-weight mean of category values.

    A date missing any category is absent; dates where only some categories
    are available are reported in a warning rather than partially averaged.
    """
    series = list(category_values.values())
    cal = series[0].calendar
    for s in series[1:]:
        if s.calendar != cal:
            raise AlignmentError("category series are not on one calendar")
    stack = np.vstack([s.values for s in series])
    present = ~np.isnan(stack)
    full = present.all(axis=0)
    partial = present.any(axis=0) & ~full
    if partial.any():
        bad = cal.dates[partial]
        log.warning(
            "stress index absent on %d date(s) with incomplete categories: %s%s",
            bad.size, ", ".join(str(d) for d in bad[:10]), " ..." if bad.size > 10 else "",
        )
    grand = np.full(len(cal), np.nan)
    grand[full] = stack[:, full].mean(axis=0)
    idx = normal_cdf_array(grand)
    idx = np.where(np.isnan(idx), np.nan, np.clip(idx, _OPEN_LO, _OPEN_HI))
    return SignalSeries(cal, idx, "stress", "open_unit")


def stress_index_pipeline(risks: RiskFactorTable, p: StressIndexParams = StressIndexParams()) -> SignalSeries:
    """Composite stress in (0, 1); high values mean market stress."""
    cals = {f.series.calendar for f in risks.factors.values()}
    if len(cals) != 1:
        raise AlignmentError("risk factors must share one calendar; reindex them at ingestion first")
    zs = factor_zscores(risks, p)
    return composite_stress(category_stress(risks, zs, p.categories))


# ----------------------------------------------------------------------------
# VIX and SI appetite
# ----------------------------------------------------------------------------

def vix_signal(vix: DailySeries, q: float = 0.8, min_obs: int = 250) -> SignalSeries:
    """1 (risk-on) while VIX is at or below its expanding q-percentile, else 0."""
    pct = expanding_percentile(vix, q, min_obs)
    ok = ~np.isnan(pct.values) & ~np.isnan(vix.values)
    out = np.full(len(vix), np.nan)
    out[ok] = (vix.values[ok] <= pct.values[ok]).astype(float)
    return SignalSeries(vix.calendar, out, "vix", "binary")


def si_risk_appetite(stress: SignalSeries, mode: str = "proportional", threshold: float = 0.5) -> SignalSeries:
    """Map stress to an allocation appetite: high stress, low appetite.

    ``proportional`` gives ``1 - stress``; ``threshold`` gives 1 when stress
    is below ``threshold`` and 0 otherwise.
    """
    s = stress.values
    if mode == "proportional":
        # 1 - s can round to exactly 1 for s below ~1e-17
        out = np.where(np.isnan(s), np.nan, np.clip(1.0 - s, _OPEN_LO, _OPEN_HI))
        return SignalSeries(stress.calendar, out, "si_appetite", "open_unit")
    if mode == "threshold":
        out = np.where(np.isnan(s), np.nan, (s < threshold).astype(float))
        return SignalSeries(stress.calendar, out, "si_appetite", "binary")
    raise ValueError(f"unknown SI mode {mode!r}")
