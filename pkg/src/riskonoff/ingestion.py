"""Flat-file loaders, writers and the headline-scoring seam.

This is the only layer that drops or fills dates.  Everything downstream
receives calendar-aligned series or raises.

CSV schemas (UTF-8, header row, ISO-8601 dates)::

    prices               date,market_id,level
    risk factors         date,factor_id,category,value
    sentiment counts     date,n_pos,n_neg,n_neutral
    sentiment headlines  date,headline_text,label      (label may be blank)
"""
from __future__ import annotations

import csv
import datetime as dt
import logging
import math
import re
from collections import defaultdict
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .errors import ValidationError
from .ts_core import DailySeries, TradingCalendar, asof_reindex

log = logging.getLogger(__name__)

CATEGORIES = (
    "equities",
    "emerging_bonds",
    "government_bonds",
    "financial_stocks",
    "fx",
    "commodities",
    "interest_rates",
    "corporate_credit",
)

POSITIVE, NEGATIVE, INDECISIVE = "positive", "negative", "indecisive"
LABELS = (POSITIVE, NEGATIVE, INDECISIVE)
_LABEL_ALIASES = {
    "positive": POSITIVE, "pos": POSITIVE,
    "negative": NEGATIVE, "neg": NEGATIVE,
    "indecisive": INDECISIVE, "ind": INDECISIVE, "neutral": INDECISIVE,
}

DEFAULT_HEADLINE_BUDGET = 15

PRICE_HEADER = ["date", "market_id", "level"]
RISK_HEADER = ["date", "factor_id", "category", "value"]
COUNTS_HEADER = ["date", "n_pos", "n_neg", "n_neutral"]
HEADLINES_HEADER = ["date", "headline_text", "label"]


# ----------------------------------------------------------------------------
# Domain types
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PriceTable:
    """Index levels per market id."""

    series: Mapping[str, DailySeries]

    @property
    def markets(self) -> list[str]:
        return sorted(self.series)

    def __getitem__(self, market_id: str) -> DailySeries:
        try:
            return self.series[market_id]
        except KeyError:
            raise ValidationError(f"unknown market {market_id!r}; have {self.markets}") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PriceTable):
            return NotImplemented
        return self.markets == other.markets and all(
            self.series[m] == other.series[m] for m in self.markets
        )


@dataclass(frozen=True, eq=False)
class RiskFactor:
    factor_id: str
    category: str
    series: DailySeries

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RiskFactor):
            return NotImplemented
        return (self.factor_id, self.category) == (other.factor_id, other.category) and (
            self.series == other.series
        )


@dataclass(frozen=True)
class RiskFactorTable:
    """Risk-price series, each tagged with one of the eight stress categories."""

    factors: Mapping[str, RiskFactor]

    def __post_init__(self) -> None:
        if not self.factors:
            raise ValidationError("risk table has no factors")
        for f in self.factors.values():
            if f.category not in CATEGORIES:
                raise ValidationError(f"factor {f.factor_id!r}: unknown category {f.category!r}")

    @property
    def categories(self) -> list[str]:
        present = {f.category for f in self.factors.values()}
        return [c for c in CATEGORIES if c in present]

    def by_category(self) -> dict[str, list[RiskFactor]]:
        out: dict[str, list[RiskFactor]] = {c: [] for c in self.categories}
        for fid in sorted(self.factors):
            f = self.factors[fid]
            out[f.category].append(f)
        return out

    def __getitem__(self, factor_id: str) -> RiskFactor:
        try:
            return self.factors[factor_id]
        except KeyError:
            raise ValidationError(f"unknown risk factor {factor_id!r}") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RiskFactorTable):
            return NotImplemented
        return sorted(self.factors) == sorted(other.factors) and all(
            self.factors[k] == other.factors[k] for k in self.factors
        )

    def reindexed(self, calendar: TradingCalendar, ffill_limit: int) -> "RiskFactorTable":
        """Every factor carried onto ``calendar`` with a bounded forward fill."""
        return RiskFactorTable({
            fid: replace(f, series=asof_reindex(f.series, calendar, ffill_limit))
            for fid, f in self.factors.items()
        })


@dataclass(frozen=True)
class SentimentDay:
    date: dt.date
    n_pos: int
    n_neg: int
    n_neutral: int

    def __post_init__(self) -> None:
        if min(self.n_pos, self.n_neg, self.n_neutral) < 0:
            raise ValidationError(f"{self.date}: negative headline count")
        if self.n_pos + self.n_neg + self.n_neutral == 0:
            raise ValidationError(f"{self.date}: no headlines counted")

    @property
    def total(self) -> int:
        return self.n_pos + self.n_neg + self.n_neutral


@dataclass(frozen=True)
class HeadlineRecord:
    date: dt.date
    headline_text: str
    label: str | None = None


class HeadlineScorer(Protocol):
    def score(self, headlines: Sequence[HeadlineRecord]) -> list[HeadlineRecord]:
        """Return the same records, in order, with ``label`` filled."""
        ...


# ----------------------------------------------------------------------------
# Mock scorer
# ----------------------------------------------------------------------------

POSITIVE_WORDS = frozenset("""
    rally rallies rallied surge surges surged gain gains gained climb climbs climbed
    jump jumps jumped rise rises rebound rebounds recover recovers recovery boost boosts
    strong stronger record optimism optimistic upbeat beat beats growth expand expands
    expansion easing ease eases soar soars soared advance advances bullish robust
    improve improves improved improvement upgrade upgrades calm stabilize stabilizes
""".split())

NEGATIVE_WORDS = frozenset("""
    slump slumps slumped tumble tumbles tumbled fall falls fell plunge plunges plunged
    drop drops dropped slide slides slid sink sinks sank decline declines declined
    weak weaker fear fears worry worries concern concerns selloff crisis crash crashes
    recession slowdown contraction default defaults downgrade downgrades bearish
    turmoil panic stress losses loss miss misses warning warns tighten tightening
    volatile volatility contagion
""".split())

_TOKEN = re.compile(r"[a-z]+")


@dataclass(frozen=True)
class LexiconScorer:
    """Deterministic stand-in for an LLM: signed keyword counts.

    A headline scores +1 per word in ``positive`` and -1 per word in
    ``negative``; the sign of the total gives the label, zero is indecisive.
    """

    positive: frozenset = POSITIVE_WORDS
    negative: frozenset = NEGATIVE_WORDS

    def label(self, text: str) -> str:
        score = 0
        for tok in _TOKEN.findall(text.lower()):
            if tok in self.positive:
                score += 1
            elif tok in self.negative:
                score -= 1
        if score > 0:
            return POSITIVE
        if score < 0:
            return NEGATIVE
        return INDECISIVE

    def score(self, headlines: Sequence[HeadlineRecord]) -> list[HeadlineRecord]:
        return [replace(h, label=self.label(h.headline_text)) for h in headlines]


def score_headlines(
    scorer: HeadlineScorer,
    records: Iterable[HeadlineRecord],
    dates: Iterable[dt.date] | None = None,
) -> list[HeadlineRecord]:
    """Label every record, one scorer call per date.

    Existing labels are kept.  A date whose call fails, returns malformed
    output, or has no headlines at all (when listed in ``dates``) is dropped
    with a warning; it is never zero-filled.
    """
    grouped: dict[dt.date, list[HeadlineRecord]] = defaultdict(list)
    for r in records:
        grouped[r.date].append(r)
    for d in dates or ():
        if d not in grouped:
            grouped[d] = []

    out: list[HeadlineRecord] = []
    for day in sorted(grouped):
        batch = grouped[day]
        if not batch:
            log.warning("no headlines on %s; date excluded", day)
            continue
        try:
            scored = list(scorer.score(batch))
            if len(scored) != len(batch):
                raise ValueError(f"scorer returned {len(scored)} records for {len(batch)}")
            labels = [_canonical_label(s.label) for s in scored]
        except Exception as exc:  # any scorer failure excludes only this date
            log.warning("headline scoring failed on %s (%s); date excluded", day, exc)
            continue
        out.extend(
            replace(orig, label=orig.label or lab) for orig, lab in zip(batch, labels)
        )
    return out


def sentiment_from_headlines(records: Iterable[HeadlineRecord]) -> list[SentimentDay]:
    counts: dict[dt.date, list[int]] = defaultdict(lambda: [0, 0, 0])
    slot = {POSITIVE: 0, NEGATIVE: 1, INDECISIVE: 2}
    for r in records:
        if r.label is None:
            raise ValidationError(f"{r.date}: unlabeled headline {r.headline_text!r}")
        counts[r.date][slot[_canonical_label(r.label)]] += 1
    return [SentimentDay(d, *counts[d]) for d in sorted(counts)]


def sentiment_calendar(days: Sequence[SentimentDay]) -> TradingCalendar:
    return TradingCalendar(d.date for d in days)


# ----------------------------------------------------------------------------
# CSV plumbing
# ----------------------------------------------------------------------------

def _canonical_label(raw: str | None) -> str:
    if raw is None:
        raise ValueError("missing label")
    try:
        return _LABEL_ALIASES[raw.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown label {raw!r}") from None


def _rows(path: Path, header: list[str]):
    """Yield ``(line_number, row_dict)`` after checking the header."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file (header required)") from None
        got = [h.strip() for h in got]
        if got != header:
            raise ValidationError(f"{path}:1: expected header {','.join(header)}, got {','.join(got)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValidationError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
            yield line, dict(zip(header, row))


def _header(path: Path) -> list[str]:
    with open(path, newline="", encoding="utf-8") as fh:
        first = next(csv.reader(fh), None)
    if first is None:
        raise ValidationError(f"{path}: empty file (header required)")
    return [h.strip() for h in first]


def _date(path: Path, line: int, raw: str) -> dt.date:
    try:
        return dt.date.fromisoformat(raw.strip())
    except ValueError:
        raise ValidationError(f"{path}:{line}: bad date {raw!r}") from None


def _float(path: Path, line: int, raw: str, what: str) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise ValidationError(f"{path}:{line}: bad {what} {raw!r}") from None
    if not math.isfinite(v):
        raise ValidationError(f"{path}:{line}: non-finite {what} {raw!r}")
    return v


def _int(path: Path, line: int, raw: str, what: str) -> int:
    try:
        v = int(raw)
    except ValueError:
        raise ValidationError(f"{path}:{line}: bad {what} {raw!r}") from None
    if v < 0:
        raise ValidationError(f"{path}:{line}: negative {what} {v}")
    return v


def _id(path: Path, line: int, raw: str, what: str) -> str:
    v = raw.strip()
    if not v:
        raise ValidationError(f"{path}:{line}: empty {what}")
    return v


def _to_series(points: dict[dt.date, float], name: str) -> DailySeries:
    dates = sorted(points)
    return DailySeries.from_pairs(dates, [points[d] for d in dates], name)


def _fmt(v: float) -> str:
    return repr(float(v))


def load_price_csv(path) -> PriceTable:
    path = Path(path)
    data: dict[str, dict[dt.date, float]] = defaultdict(dict)
    for line, row in _rows(path, PRICE_HEADER):
        d = _date(path, line, row["date"])
        m = _id(path, line, row["market_id"], "market_id")
        level = _float(path, line, row["level"], "level")
        if level <= 0:
            raise ValidationError(f"{path}:{line}: level must be positive, got {level}")
        if d in data[m]:
            raise ValidationError(f"{path}:{line}: duplicate row for ({d}, {m})")
        data[m][d] = level
    if not data:
        raise ValidationError(f"{path}: no price rows")
    return PriceTable({m: _to_series(pts, m) for m, pts in sorted(data.items())})


def write_price_csv(table: PriceTable, path) -> None:
    rows = [
        (d, m, v)
        for m in table.markets
        for d, v in zip(table[m].dates, table[m].values)
    ]
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PRICE_HEADER)
        for d, m, v in rows:
            w.writerow([str(d), m, _fmt(v)])


def load_risk_csv(path) -> RiskFactorTable:
    path = Path(path)
    data: dict[str, dict[dt.date, float]] = defaultdict(dict)
    cats: dict[str, str] = {}
    for line, row in _rows(path, RISK_HEADER):
        d = _date(path, line, row["date"])
        fid = _id(path, line, row["factor_id"], "factor_id")
        cat = row["category"].strip()
        if cat not in CATEGORIES:
            raise ValidationError(
                f"{path}:{line}: unknown category {cat!r} (expected one of {', '.join(CATEGORIES)})"
            )
        if cats.setdefault(fid, cat) != cat:
            raise ValidationError(f"{path}:{line}: factor {fid!r} tagged both {cats[fid]!r} and {cat!r}")
        if d in data[fid]:
            raise ValidationError(f"{path}:{line}: duplicate row for ({d}, {fid})")
        data[fid][d] = _float(path, line, row["value"], "value")
    if not data:
        raise ValidationError(f"{path}: empty category set (no risk rows)")
    return RiskFactorTable({
        fid: RiskFactor(fid, cats[fid], _to_series(pts, fid)) for fid, pts in sorted(data.items())
    })


def write_risk_csv(table: RiskFactorTable, path) -> None:
    rows = []
    for f in table.factors.values():
        rows.extend((d, f.factor_id, f.category, v) for d, v in zip(f.series.dates, f.series.values))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RISK_HEADER)
        for d, fid, cat, v in rows:
            w.writerow([str(d), fid, cat, _fmt(v)])


def load_headlines_csv(path, budget: int | None = DEFAULT_HEADLINE_BUDGET) -> list[HeadlineRecord]:
    """Per-headline rows; blank labels stay ``None`` for a scorer to fill."""
    path = Path(path)
    out: list[HeadlineRecord] = []
    per_day: dict[dt.date, int] = defaultdict(int)
    for line, row in _rows(path, HEADLINES_HEADER):
        d = _date(path, line, row["date"])
        raw = row["label"].strip()
        try:
            label = _canonical_label(raw) if raw else None
        except ValueError as exc:
            raise ValidationError(f"{path}:{line}: {exc}") from None
        per_day[d] += 1
        if budget is not None and per_day[d] > budget:
            raise ValidationError(f"{path}:{line}: more than {budget} headlines on {d}")
        out.append(HeadlineRecord(d, row["headline_text"], label))
    out.sort(key=lambda r: r.date)
    return out


def write_headlines_csv(records: Iterable[HeadlineRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADLINES_HEADER)
        for r in sorted(records, key=lambda r: r.date):
            w.writerow([r.date.isoformat(), r.headline_text, r.label or ""])


def load_sentiment_csv(
    path,
    scorer: HeadlineScorer | None = None,
    budget: int | None = DEFAULT_HEADLINE_BUDGET,
) -> list[SentimentDay]:
    """Daily sentiment counts from either schema, picked by the header.

    Per-headline files are reduced to counts; unlabeled headlines need a
    ``scorer``.
    """
    path = Path(path)
    header = _header(path)
    if header == HEADLINES_HEADER:
        records = load_headlines_csv(path, budget)
        if any(r.label is None for r in records):
            if scorer is None:
                raise ValidationError(f"{path}: unlabeled headlines and no scorer supplied")
            records = score_headlines(scorer, records)
        return sentiment_from_headlines(records)
    if header != COUNTS_HEADER:
        raise ValidationError(
            f"{path}:1: header matches neither {','.join(COUNTS_HEADER)} nor {','.join(HEADLINES_HEADER)}"
        )
    days: dict[dt.date, SentimentDay] = {}
    for line, row in _rows(path, COUNTS_HEADER):
        d = _date(path, line, row["date"])
        if d in days:
            raise ValidationError(f"{path}:{line}: duplicate date {d}")
        counts = [_int(path, line, row[k], k) for k in COUNTS_HEADER[1:]]
        if sum(counts) == 0:
            raise ValidationError(f"{path}:{line}: no headlines counted on {d}")
        if budget is not None and sum(counts) > budget:
            raise ValidationError(f"{path}:{line}: {sum(counts)} headlines exceed budget {budget}")
        days[d] = SentimentDay(d, *counts)
    return [days[d] for d in sorted(days)]


def write_sentiment_csv(days: Iterable[SentimentDay], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COUNTS_HEADER)
        for s in sorted(days, key=lambda s: s.date):
            w.writerow([s.date.isoformat(), s.n_pos, s.n_neg, s.n_neutral])


def market_calendar(prices: PriceTable, markets: Sequence[str]) -> TradingCalendar:
    """Dates on which every listed market has a level."""
    if not markets:
        raise ValidationError("no markets requested")
    common = prices[markets[0]].dates
    for m in markets[1:]:
        common = np.intersect1d(common, prices[m].dates, assume_unique=True)
    if common.size == 0:
        raise ValidationError(f"markets {list(markets)} share no trading dates")
    return TradingCalendar._trusted(common)
