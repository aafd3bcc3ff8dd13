"""Experiment configuration, loaded from JSON.

Every field has a default, so ``{}`` is a valid config.  Unknown keys are
rejected at every nesting level.
"""
from __future__ import annotations

import dataclasses
import datetime as dt
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from .errors import ValidationError


class Universe(str, Enum):
    SP500 = "SP500"
    NASDAQ = "NASDAQ"
    WORLD6 = "WORLD6"


class StrategyId(str, Enum):
    """The six strategies, in the order used to break ties in tables."""

    LongOnly = "LongOnly"
    VIX = "VIX"
    SI = "SI"
    News = "News"
    SINews = "SINews"
    DynamicSINews = "DynamicSINews"

    @property
    def label(self) -> str:
        return _LABELS[self]

    @property
    def rank(self) -> int:
        return list(StrategyId).index(self)


_LABELS = {
    StrategyId.LongOnly: "Long Only",
    StrategyId.VIX: "VIX",
    StrategyId.SI: "SI",
    StrategyId.News: "News",
    StrategyId.SINews: "SI+News",
    StrategyId.DynamicSINews: "Dynamic SI+News",
}


@dataclass(frozen=True)
class NewsConfig:
    agg_window: int = 10
    smooth_window: int = 10
    z_window: int | None = None  # None: expanding
    z_min_obs: int = 60
    threshold: float = 0.0


@dataclass(frozen=True)
class StressConfig:
    z_window: int | None = 500
    z_min_obs: int = 250
    categories: tuple[str, ...] = (
        "equities",
        "emerging_bonds",
        "government_bonds",
        "financial_stocks",
        "fx",
        "commodities",
        "interest_rates",
        "corporate_credit",
    )


@dataclass(frozen=True)
class VixConfig:
    factor_id: str = "VIX"
    quantile: float = 0.8
    min_obs: int = 250


@dataclass(frozen=True)
class SIConfig:
    mode: str = "proportional"  # or "threshold"
    threshold: float = 0.5


@dataclass(frozen=True)
class SelectorConfig:
    window: int = 250
    lookback: str = "window"  # or "month": Sharpe over the decision month only
    initial: str = "SI"


@dataclass(frozen=True)
class DataFiles:
    prices: str = "prices.csv"
    risk: str = "risk.csv"
    sentiment: str = "headlines.csv"


@dataclass(frozen=True)
class ExperimentConfig:
    universes: tuple[Universe, ...] = tuple(Universe)
    strategies: tuple[StrategyId, ...] = tuple(StrategyId)
    markets: dict[str, tuple[str, ...]] = field(default_factory=lambda: {
        "SP500": ("SP500",),
        "NASDAQ": ("NASDAQ",),
        "WORLD6": ("SP500", "NASDAQ", "NIKKEI", "EUROSTOXX", "EM", "FTSE"),
    })
    cost_rate: float = 0.0002
    charge_entry_cost: bool = True
    signal_lag: int = 1
    annualization: int = 252
    rf_daily: float = 0.0
    ffill_limit: int = 5
    headline_budget: int = 15
    news: NewsConfig = NewsConfig()
    stress: StressConfig = StressConfig()
    vix: VixConfig = VixConfig()
    si: SIConfig = SIConfig()
    selector: SelectorConfig = SelectorConfig()
    start_date: dt.date | None = None
    strategy_start_dates: dict[str, dt.date] = field(default_factory=dict)
    end_date: dt.date | None = None
    files: DataFiles = DataFiles()
    data_dir: str | None = None
    output_dir: str | None = None

    def __post_init__(self) -> None:
        if self.cost_rate < 0:
            raise ValidationError("cost_rate must be >= 0")
        if self.signal_lag < 1:
            raise ValidationError("signal_lag must be >= 1")
        for name, w in [
            ("news.agg_window", self.news.agg_window),
            ("news.smooth_window", self.news.smooth_window),
            ("news.z_window", self.news.z_window),
            ("stress.z_window", self.stress.z_window),
            ("selector.window", self.selector.window),
            ("annualization", self.annualization),
            ("ffill_limit", self.ffill_limit),
            ("headline_budget", self.headline_budget),
        ]:
            if w is not None and w < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.news.z_min_obs < 2 or self.stress.z_min_obs < 2:
            raise ValidationError("z-score min_obs must be >= 2")
        if self.stress.z_window is not None and self.stress.z_window < self.stress.z_min_obs:
            raise ValidationError("stress.z_window must be >= stress.z_min_obs")
        if self.news.z_window is not None and self.news.z_window < self.news.z_min_obs:
            raise ValidationError("news.z_window must be >= news.z_min_obs")
        if not 0 < self.vix.quantile < 1:
            raise ValidationError("vix.quantile must lie in (0, 1)")
        if self.vix.min_obs < 2:
            raise ValidationError("vix.min_obs must be >= 2")
        if self.si.mode not in ("proportional", "threshold"):
            raise ValidationError(f"si.mode must be 'proportional' or 'threshold', got {self.si.mode!r}")
        if self.selector.lookback not in ("window", "month"):
            raise ValidationError(f"selector.lookback must be 'window' or 'month', got {self.selector.lookback!r}")
        if self.selector.initial not in ("SI", "SINews"):
            raise ValidationError("selector.initial must be 'SI' or 'SINews'")
        if not self.universes or not self.strategies:
            raise ValidationError("universes and strategies must be non-empty")
        for u in self.universes:
            if u.value not in self.markets:
                raise ValidationError(f"no market list configured for universe {u.value}")
        if self.markets.get("WORLD6") is not None and len(self.markets["WORLD6"]) < 2:
            raise ValidationError("WORLD6 needs at least 2 markets")
        for k in self.strategy_start_dates:
            if k not in StrategyId.__members__:
                raise ValidationError(f"strategy_start_dates: unknown strategy {k!r}")

    def with_overrides(self, **changes: Any) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return _dump(self)


def _dump(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj):
        return {f.name: _dump(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dt.date):
        return obj.isoformat()
    if isinstance(obj, dict):
        return {k: _dump(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_dump(v) for v in obj]
    return obj


_NESTED = {
    "news": NewsConfig,
    "stress": StressConfig,
    "vix": VixConfig,
    "si": SIConfig,
    "selector": SelectorConfig,
    "files": DataFiles,
}


def _build(cls, data: dict[str, Any], where: str):
    if not isinstance(data, dict):
        raise ValidationError(f"{where or 'config'}: expected a JSON object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValidationError(f"{where or 'config'}: unknown keys {unknown}")
    kwargs: dict[str, Any] = {}
    for key, val in data.items():
        path = f"{where}.{key}" if where else key
        try:
            kwargs[key] = _coerce(cls, key, val, path)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"{path}: {exc}") from None
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValidationError(f"{where or 'config'}: {exc}") from None


def _date_or_none(v):
    return None if v is None else dt.date.fromisoformat(v)


def _coerce(cls, key: str, val: Any, path: str) -> Any:
    if cls is ExperimentConfig:
        if key in _NESTED:
            return _build(_NESTED[key], val, path)
        if key == "universes":
            return tuple(Universe(v) for v in val)
        if key == "strategies":
            return tuple(StrategyId(v) for v in val)
        if key == "markets":
            return {k: tuple(v) for k, v in val.items()}
        if key in ("start_date", "end_date"):
            return _date_or_none(val)
        if key == "strategy_start_dates":
            return {k: dt.date.fromisoformat(v) for k, v in val.items()}
        if key in ("charge_entry_cost",):
            if not isinstance(val, bool):
                raise ValidationError(f"{path}: expected true/false")
            return val
    if cls is StressConfig and key == "categories":
        return tuple(val)
    return val


def config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "")


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(data)
