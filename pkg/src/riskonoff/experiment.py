"""Run the universe x strategy matrix and emit tables, backtests and plot data.

Everything is computed in memory first and written only once the whole
matrix has succeeded, so a failed run never leaves a partial directory.
Outputs are a pure function of (config, input files): no timestamps, no
absolute paths, floats written with ``repr``.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .backtest import BacktestResult, CostModel, WeightSeries, rescale_to_target_vol, run_backtest
from .config import ExperimentConfig, StrategyId, Universe
from .errors import ComputationError, ValidationError
from .ingestion import (
    LexiconScorer,
    PriceTable,
    RiskFactorTable,
    SentimentDay,
    load_price_csv,
    load_risk_csv,
    load_sentiment_csv,
    market_calendar,
)
from .metrics import _num as _fmt
from .metrics import _pct, annualized_vol, perf_table, render_markdown, table_csv_rows, table_markdown
from .signals import (
    NewsSignalParams,
    SignalSeries,
    StressIndexParams,
    news_signal_pipeline,
    si_risk_appetite,
    stress_index_pipeline,
    vix_signal,
)
from .strategies import (
    SelectionLog,
    dynamic_selector,
    equal_weight_basket_returns,
    long_only_weights,
    si_news_weights,
    weights_from_signal,
)
from .ts_core import DailySeries, TradingCalendar, asof_reindex, simple_returns, to_date64

log = logging.getLogger(__name__)


# ----------------------------------------------------------------------------
# Inputs
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Dataset:
    prices: PriceTable
    risks: RiskFactorTable
    sentiment: list[SentimentDay]


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def input_paths(config: ExperimentConfig, data_dir) -> dict[str, Path]:
    base = Path(data_dir)
    paths = {
        "prices": base / config.files.prices,
        "risk": base / config.files.risk,
        "sentiment": base / config.files.sentiment,
    }
    for name, p in paths.items():
        if not p.is_file():
            raise ValidationError(f"{name} file not found: {p}")
    return paths


def load_dataset(config: ExperimentConfig, data_dir) -> Dataset:
    paths = input_paths(config, data_dir)
    return Dataset(
        prices=load_price_csv(paths["prices"]),
        risks=load_risk_csv(paths["risk"]),
        sentiment=load_sentiment_csv(paths["sentiment"], LexiconScorer(), config.headline_budget),
    )


# ----------------------------------------------------------------------------
# One universe
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class UniverseSignals:
    calendar: TradingCalendar
    asset_returns: DailySeries
    news: DailySeries
    stress: SignalSeries
    si_appetite: SignalSeries
    vix: SignalSeries


def universe_signals(ds: Dataset, universe: Universe, config: ExperimentConfig) -> UniverseSignals:
    """Signals and asset returns on the universe's trading calendar."""
    markets = list(config.markets[universe.value])
    cal = market_calendar(ds.prices, markets)
    if universe is Universe.WORLD6:
        rets = equal_weight_basket_returns(ds.prices, markets)
    else:
        if len(markets) != 1:
            raise ValidationError(f"{universe.value} must list exactly one market")
        rets = simple_returns(ds.prices[markets[0]].restrict(cal))

    risks = ds.risks.reindexed(cal, config.ffill_limit)
    sp = StressIndexParams(config.stress.z_window, config.stress.z_min_obs, tuple(config.stress.categories))
    stress = stress_index_pipeline(risks, sp)
    appetite = si_risk_appetite(stress, config.si.mode, config.si.threshold)
    vix = vix_signal(risks[config.vix.factor_id].series, config.vix.quantile, config.vix.min_obs)

    n = config.news
    news_raw = news_signal_pipeline(ds.sentiment, NewsSignalParams(n.agg_window, n.smooth_window, n.z_window, n.z_min_obs, n.threshold))
    news = asof_reindex(news_raw, cal, config.ffill_limit)
    return UniverseSignals(cal, rets, news, stress, appetite, vix)


def strategy_weights(sig: UniverseSignals, lag: int) -> dict[StrategyId, WeightSeries]:
    """Full-calendar weights of the five directly computed strategies."""
    return {
        StrategyId.LongOnly: long_only_weights(sig.calendar),
        StrategyId.VIX: weights_from_signal(sig.vix, lag),
        StrategyId.SI: weights_from_signal(sig.si_appetite, lag),
        StrategyId.News: weights_from_signal(sig.news, lag),
        StrategyId.SINews: si_news_weights(sig.si_appetite, sig.news, lag),
    }


def _first_defined(w: WeightSeries) -> int:
    ok = w.defined()
    if not ok.any():
        raise ValidationError(f"weights never defined for {w.columns}")
    return int(np.argmax(ok))


@dataclass
class UniverseRun:
    universe: Universe
    signals: UniverseSignals
    results: dict[StrategyId, BacktestResult]
    selection: SelectionLog | None
    benchmark: dict[StrategyId, DailySeries]   # asset returns on each strategy's window


def _start_index(cal: TradingCalendar, date, floor: int, sid: StrategyId) -> int:
    i = int(np.searchsorted(cal.dates, to_date64(date)))
    if i >= len(cal):
        raise ValidationError(f"{sid.value}: start date {date} is after the data ends")
    if i < floor:
        raise ValidationError(
            f"{sid.value}: start date {date} precedes the first date with a defined signal "
            f"({cal.dates[floor]}); signals are never extrapolated backwards"
        )
    return i


def run_universe(ds: Dataset, universe: Universe, strategies: Sequence[StrategyId], config: ExperimentConfig) -> UniverseRun:
    sig = universe_signals(ds, universe, config)
    cal = sig.calendar
    weights = strategy_weights(sig, config.signal_lag)
    stop = len(cal) if config.end_date is None else int(np.searchsorted(cal.dates, to_date64(config.end_date), side="right"))

    # returns exist from the second date; every non-trivial signal must be live
    floors = {sid: max(1, _first_defined(w)) for sid, w in weights.items()}
    floors[StrategyId.LongOnly] = 1
    floors[StrategyId.DynamicSINews] = max(floors[StrategyId.SI], floors[StrategyId.SINews])
    common = max(floors.values())

    cost = CostModel(config.cost_rate)

    def window(sid: StrategyId) -> tuple[int, int]:
        date = config.strategy_start_dates.get(sid.value) or config.start_date
        i = common if date is None else _start_index(cal, date, floors[sid], sid)
        if stop - i < 2:
            raise ValidationError(f"{universe.value}/{sid.value}: fewer than 2 dates to backtest")
        return i, stop

    def backtest(w: WeightSeries, lo: int, hi: int) -> BacktestResult:
        sub = cal[lo:hi]
        return run_backtest(
            w.restrict(sub), sig.asset_returns.restrict(sub), cost,
            charge_entry=config.charge_entry_cost, origin=cal.dates[lo - 1],
            annualization=config.annualization,
        )

    results: dict[StrategyId, BacktestResult] = {}
    bench: dict[StrategyId, DailySeries] = {}
    selection = None
    for sid in strategies:
        lo, hi = window(sid)
        if sid is StrategyId.DynamicSINews:
            bt_si = backtest(weights[StrategyId.SI], lo, hi)
            bt_nw = backtest(weights[StrategyId.SINews], lo, hi)
            dyn_w, selection = dynamic_selector(
                bt_si, bt_nw, config.selector.window,
                lookback=config.selector.lookback,
                initial=StrategyId(config.selector.initial),
                rf_daily=config.rf_daily, factor=config.annualization,
            )
            results[sid] = run_backtest(
                dyn_w, sig.asset_returns.restrict(cal[lo:hi]), cost,
                charge_entry=config.charge_entry_cost, origin=cal.dates[lo - 1],
                annualization=config.annualization,
            )
        else:
            results[sid] = backtest(weights[sid], lo, hi)
        bench[sid] = sig.asset_returns.restrict(cal[lo:hi])
    return UniverseRun(universe, sig, results, selection, bench)


# ----------------------------------------------------------------------------
# Serialization
# ----------------------------------------------------------------------------

def _cell(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def _csv_text(rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def backtest_csv(bt: BacktestResult) -> str:
    """``date,value,weight,cost,ret``; the first row is the origin (S_0 = 1)."""
    alloc = bt.weights_applied.values.sum(axis=1)
    rows = [["date", "value", "weight", "cost", "ret"]]
    rows.append([str(bt.values.dates[0]), _cell(bt.values.values[0]), _cell(float(bt.initial_weights.sum())), _cell(0.0), ""])
    for i, d in enumerate(bt.weights_applied.dates):
        rows.append([
            str(d), _cell(bt.values.values[i + 1]), _cell(alloc[i]),
            _cell(bt.cost_paid.values[i]), _cell(bt.daily_returns.values[i]),
        ])
    return _csv_text(rows)


def signal_csv(s: DailySeries) -> str:
    rows = [["date", "value"]] + [[str(d), _cell(v)] for d, v in zip(s.dates, s.values)]
    return _csv_text(rows)


def selection_log_csv(sel: SelectionLog) -> str:
    rows = [["month", "sharpe_si", "sharpe_si_news", "selected"]]
    rows += [[e.month, _cell(e.sharpe_si), _cell(e.sharpe_si_news), e.selected.value] for e in sel]
    return _csv_text(rows)


def benchmark_comparison(bt: BacktestResult, benchmark_returns: DailySeries, factor: int = 252) -> list[list[str]]:
    """Strategy path against a benchmark rescaled to the strategy's realized vol.

    Both value paths start at 1 on the origin date; ``allocation`` is the
    strategy's total weight.
    """
    if len(benchmark_returns) == 0 or len(bt.daily_returns) == 0:
        raise ValidationError("empty series for benchmark comparison")
    if benchmark_returns.calendar != bt.calendar:
        benchmark_returns = benchmark_returns.restrict(bt.calendar)
    target = annualized_vol(bt.daily_returns.values, factor)
    if not target > 0:
        raise ComputationError("strategy has zero realized volatility; nothing to match the benchmark to")
    scaled = rescale_to_target_vol(benchmark_returns, target, factor)
    bench_path = np.cumprod(np.concatenate([[1.0], 1.0 + scaled.values]))
    alloc = np.concatenate([[bt.initial_weights.sum()], bt.weights_applied.values.sum(axis=1)])
    rows = [["date", "strategy_value", "benchmark_value", "allocation"]]
    for d, s, b, a in zip(bt.values.dates, bt.values.values, bench_path, alloc):
        rows.append([str(d), _cell(s), _cell(b), _cell(a)])
    return rows


def emit_benchmark_comparison(bt: BacktestResult, benchmark_returns: DailySeries, path=None, factor: int = 252) -> str:
    """CSV text of :func:`benchmark_comparison`, also written to ``path`` if given."""
    text = _csv_text(benchmark_comparison(bt, benchmark_returns, factor))
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# ----------------------------------------------------------------------------
# Matrix
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentMatrix:
    universes: tuple[Universe, ...]
    strategies: tuple[StrategyId, ...]
    config: ExperimentConfig

    def __post_init__(self) -> None:
        if not self.universes or not self.strategies:
            raise ValidationError("experiment matrix needs at least one universe and one strategy")

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "ExperimentMatrix":
        return cls(tuple(config.universes), tuple(config.strategies), config)

    def cells(self) -> list[tuple[Universe, StrategyId]]:
        return [(u, s) for u in self.universes for s in self.strategies]


@dataclass
class RunManifest:
    artifact_version: str
    config: dict
    inputs: dict[str, dict[str, str]]
    experiments: list[dict] = field(default_factory=list)
    tables: dict[str, dict[str, str]] = field(default_factory=dict)
    selection_logs: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "artifact_version": self.artifact_version,
                "config": self.config,
                "inputs": self.inputs,
                "experiments": self.experiments,
                "tables": self.tables,
                "selection_logs": self.selection_logs,
            },
            indent=2, sort_keys=True,
        ) + "\n"


def _config_snapshot(config: ExperimentConfig) -> dict:
    snap = config.to_dict()
    # run locations are not parameters of the result
    snap.pop("data_dir", None)
    snap.pop("output_dir", None)
    return snap


def compute_matrix(matrix: ExperimentMatrix, data_dir) -> tuple[RunManifest, dict[str, str]]:
    """All outputs as ``{relative path: text}`` plus the manifest, nothing written."""
    cfg = matrix.config
    paths = input_paths(cfg, data_dir)
    manifest = RunManifest(
        artifact_version=__version__,
        config=_config_snapshot(cfg),
        inputs={k: {"file": p.name, "sha256": sha256_file(p)} for k, p in paths.items()},
    )
    ds = load_dataset(cfg, data_dir)
    files: dict[str, str] = {}
    for u in matrix.universes:
        run = run_universe(ds, u, matrix.strategies, cfg)
        rows = perf_table([(s, run.results[s]) for s in matrix.strategies], cfg.annualization, cfg.rf_daily)
        for s in matrix.strategies:
            bt = run.results[s]
            bt_path = f"{u.value}/{s.value}/backtest.csv"
            cmp_path = f"{u.value}/{s.value}/benchmark_comparison.csv"
            files[bt_path] = backtest_csv(bt)
            files[cmp_path] = _csv_text(benchmark_comparison(bt, run.benchmark[s], cfg.annualization))
            manifest.experiments.append({
                "universe": u.value,
                "strategy": s.value,
                "start": str(bt.calendar.dates[0]),
                "end": str(bt.calendar.dates[-1]),
                "backtest": bt_path,
                "benchmark_comparison": cmp_path,
            })
        files[f"{u.value}/perf_table.csv"] = _csv_text(table_csv_rows(rows))
        files[f"{u.value}/perf_table.md"] = table_markdown(rows, f"Comparative analysis of investment strategies: {u.value}")
        manifest.tables[u.value] = {"csv": f"{u.value}/perf_table.csv", "md": f"{u.value}/perf_table.md"}
        if run.selection is not None:
            files[f"{u.value}/selection_log.csv"] = selection_log_csv(run.selection)
            manifest.selection_logs[u.value] = f"{u.value}/selection_log.csv"
    return manifest, files


def write_outputs(out_dir, files: dict[str, str], manifest: RunManifest | None = None) -> None:
    out = Path(out_dir)
    for rel in sorted(files):
        p = out / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(files[rel], encoding="utf-8")
    if manifest is not None:
        (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")


def run_matrix(matrix: ExperimentMatrix, data_dir, out_dir) -> RunManifest:
    """Compute every (universe, strategy) cell, then write all outputs and the manifest."""
    manifest, files = compute_matrix(matrix, data_dir)
    write_outputs(out_dir, files, manifest)
    return manifest


def export_signals(config: ExperimentConfig, data_dir, out_dir) -> dict[str, str]:
    """Raw signals per universe as ``date,value`` CSVs."""
    ds = load_dataset(config, data_dir)
    files = {}
    for u in config.universes:
        sig = universe_signals(ds, u, config)
        for name, s in (("news", sig.news), ("stress", sig.stress), ("si_appetite", sig.si_appetite), ("vix", sig.vix)):
            files[f"signals/{u.value}/{name}.csv"] = signal_csv(s)
    write_outputs(out_dir, files)
    return files


# ----------------------------------------------------------------------------
# Readers for emitted files
# ----------------------------------------------------------------------------

def _read(path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def _num(s: str) -> float:
    return float("nan") if s == "" else float(s)


def load_signal_csv(path, name: str = "") -> DailySeries:
    rows = _read(path)
    if rows[0] != ["date", "value"]:
        raise ValidationError(f"{path}: not a signal file")
    return DailySeries.from_pairs([r[0] for r in rows[1:]], [_num(r[1]) for r in rows[1:]], name)


def load_backtest_csv(path) -> dict[str, np.ndarray]:
    rows = _read(path)
    header = ["date", "value", "weight", "cost", "ret"]
    if rows[0] != header:
        raise ValidationError(f"{path}: not a backtest file")
    cols = list(zip(*rows[1:]))
    out = {"date": np.asarray(cols[0], dtype="datetime64[D]")}
    for k, c in zip(header[1:], cols[1:]):
        out[k] = np.array([_num(x) for x in c])
    return out


def load_selection_log_csv(path) -> SelectionLog:
    from .strategies import SelectionEntry

    rows = _read(path)
    if rows[0] != ["month", "sharpe_si", "sharpe_si_news", "selected"]:
        raise ValidationError(f"{path}: not a selection log")
    return SelectionLog(tuple(
        SelectionEntry(r[0], _num(r[1]), _num(r[2]), StrategyId(r[3])) for r in rows[1:]
    ))


def load_perf_table_csv(path) -> list[list[str]]:
    rows = _read(path)
    if tuple(rows[0]) != ("Strategy", "Sharpe", "Calmar", "Vol", "Max DD", "Turnover"):
        raise ValidationError(f"{path}: not a performance table")
    return rows


def perf_table_markdown_from_csv(path, title: str | None = None) -> str:
    rows = load_perf_table_csv(path)
    cells = [rows[0]]
    for r in rows[1:]:
        sharpe_, calmar_, vol, mdd = (_num(x) for x in r[1:5])
        turn = r[5] if r[5] == "n.a." else _fmt(_num(r[5]), ".1f")
        cells.append([
            r[0], _fmt(sharpe_, ".2f"), _fmt(calmar_, ".2f"),
            _pct(vol, 1), _pct(mdd, 0), turn,
        ])
    return render_markdown(cells, title)
