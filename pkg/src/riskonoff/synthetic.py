"""Seeded synthetic dataset: six markets, sixteen stress factors plus VIX, headlines.

A two-state calm/stress Markov chain drives everything: market drift and
volatility, the level of every risk price, and the mix of good and bad
headlines.  Headlines are written from phrase lists the bundled lexicon
scorer labels unambiguously, and are left unlabeled in the CSV.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingestion import (
    CATEGORIES,
    HeadlineRecord,
    PriceTable,
    RiskFactor,
    RiskFactorTable,
    write_headlines_csv,
    write_price_csv,
    write_risk_csv,
)
from .ts_core import DailySeries, TradingCalendar

MARKETS = {
    # id: (beta to the common factor, idiosyncratic daily vol, start level)
    "SP500": (1.0, 0.003, 1850.0),
    "NASDAQ": (1.25, 0.005, 4150.0),
    "NIKKEI": (0.9, 0.007, 16000.0),
    "EUROSTOXX": (0.95, 0.006, 3100.0),
    "EM": (1.1, 0.008, 1000.0),
    "FTSE": (0.8, 0.005, 6700.0),
}

SUBJECTS = (
    "Stocks", "US equities", "Asian shares", "European bourses", "Tech stocks",
    "Bank shares", "Emerging markets", "Small caps", "Global equities", "Futures",
)
GOOD = (
    "rally on strong earnings", "climb as growth optimism builds", "rebound after upbeat data",
    "gain on easing inflation", "advance to record highs", "surge as recovery takes hold",
)
BAD = (
    "slump on recession fears", "tumble as crisis deepens", "fall amid contagion worries",
    "slide after weak data", "plunge in broad selloff", "sink as default concerns mount",
)
FLAT = (
    "trade mixed ahead of central bank meeting", "hold steady before payrolls report",
    "little changed in quiet session", "await policy decision", "drift sideways on thin volume",
)


@dataclass(frozen=True)
class SyntheticDataset:
    prices: PriceTable
    risks: RiskFactorTable
    headlines: list[HeadlineRecord]


def weekdays(start: dt.date, n: int) -> list[dt.date]:
    out, d = [], start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += dt.timedelta(days=1)
    return out


def make_dataset(
    n_days: int = 2520,
    seed: int = 7,
    start: dt.date = dt.date(2014, 1, 2),
    news_start_day: int = 200,
) -> SyntheticDataset:
    rng = np.random.default_rng(seed)
    dates = weekdays(start, n_days)
    cal = TradingCalendar(dates)

    regime = np.zeros(n_days, dtype=int)
    for t in range(1, n_days):
        p_switch = 0.008 if regime[t - 1] == 0 else 0.03
        regime[t] = 1 - regime[t - 1] if rng.random() < p_switch else regime[t - 1]
    # slow-moving stress intensity in [0, 1]
    intensity = np.zeros(n_days)
    for t in range(1, n_days):
        intensity[t] = 0.95 * intensity[t - 1] + 0.05 * regime[t]

    mu = np.where(regime == 1, -0.0012, 0.0005)
    sig = np.where(regime == 1, 0.018, 0.0075)
    common = mu + sig * rng.standard_normal(n_days)

    prices = {}
    for mid, (beta, idio, level0) in MARKETS.items():
        r = beta * common + idio * rng.standard_normal(n_days)
        r[0] = 0.0
        levels = level0 * np.cumprod(1.0 + r)
        prices[mid] = DailySeries(cal, np.round(levels, 6), mid)

    factors = {}
    for k, cat in enumerate(CATEGORIES):
        for j in range(2):
            fid = f"{cat}_{j + 1}"
            base, scale = 1.0 + k, 0.5 + 0.25 * j + 0.1 * k
            noise = np.zeros(n_days)
            for t in range(1, n_days):
                noise[t] = 0.9 * noise[t - 1] + 0.15 * rng.standard_normal()
            vals = base + scale * (3.0 * intensity + 0.05 * noise)
            keep = np.ones(n_days, dtype=bool)
            if j == 1:
                # sparse one-day publication gaps, bridged by the ingestion forward fill
                holes = rng.choice(np.arange(5, n_days - 5), size=n_days // 100, replace=False)
                keep[holes] = False
            fcal = TradingCalendar(np.asarray(dates, dtype="datetime64[D]")[keep])
            factors[fid] = RiskFactor(fid, cat, DailySeries(fcal, np.round(vals[keep], 8), fid))
    vix = np.maximum(9.0, 13.0 + 22.0 * intensity + 2.0 * rng.standard_normal(n_days))
    factors["VIX"] = RiskFactor("VIX", "equities", DailySeries(cal, np.round(vix, 4), "VIX"))

    sp = prices["SP500"].values
    headlines = []
    for t in range(news_start_day, n_days):
        past = sp[t - 1] / sp[max(t - 6, 0)] - 1.0
        p_good = np.clip(0.42 - 0.25 * intensity[t] + 4.0 * past, 0.05, 0.85)
        p_bad = np.clip(0.25 + 0.35 * intensity[t] - 4.0 * past, 0.05, 0.85)
        p = np.array([p_good, p_bad, max(0.1, 1.0 - p_good - p_bad)])
        p = p / p.sum()
        n_h = int(rng.integers(8, 16))
        kinds = rng.choice(3, size=n_h, p=p)
        for kind in kinds:
            phrases = (GOOD, BAD, FLAT)[kind]
            text = f"{SUBJECTS[rng.integers(len(SUBJECTS))]} {phrases[rng.integers(len(phrases))]}"
            headlines.append(HeadlineRecord(dates[t], text, None))

    return SyntheticDataset(PriceTable(prices), RiskFactorTable(factors), headlines)


def write_dataset(out_dir, n_days: int = 2520, seed: int = 7) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ds = make_dataset(n_days=n_days, seed=seed)
    write_price_csv(ds.prices, out / "prices.csv")
    write_risk_csv(ds.risks, out / "risk.csv")
    write_headlines_csv(ds.headlines, out / "headlines.csv")
    return out
