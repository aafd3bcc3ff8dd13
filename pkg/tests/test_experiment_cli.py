import json
import math

import numpy as np
import pytest

from conftest import series
from riskonoff.backtest import run_backtest
from riskonoff.cli import main
from riskonoff.config import ExperimentConfig, StrategyId, Universe, load_config
from riskonoff.errors import ComputationError, ValidationError
from riskonoff.experiment import (
    ExperimentMatrix,
    benchmark_comparison,
    compute_matrix,
    emit_benchmark_comparison,
    load_backtest_csv,
    load_perf_table_csv,
    load_selection_log_csv,
    load_signal_csv,
    run_matrix,
)
from riskonoff.metrics import annualized_vol


def one_cell(universe=Universe.SP500, strategy=StrategyId.SI, **kw):
    cfg = ExperimentConfig(universes=(universe,), strategies=(strategy,), **kw)
    return ExperimentMatrix.from_config(cfg)


class TestMatrix:
    def test_single_cell(self, small_fixture_dir, tmp_path):
        manifest = run_matrix(one_cell(), small_fixture_dir, tmp_path)
        assert len(manifest.experiments) == 1
        bt = load_backtest_csv(tmp_path / "SP500/SI/backtest.csv")
        assert bt["value"][0] == 1.0 and math.isnan(bt["ret"][0])
        assert np.all(bt["value"] > 0)
        np.testing.assert_allclose(bt["ret"][1:], bt["value"][1:] / bt["value"][:-1] - 1, rtol=1e-12)

    def test_dynamic_writes_selection_log(self, small_fixture_dir, tmp_path):
        run_matrix(one_cell(strategy=StrategyId.DynamicSINews), small_fixture_dir, tmp_path)
        log = load_selection_log_csv(tmp_path / "SP500/selection_log.csv")
        assert len(log) > 10
        assert {e.selected for e in log} <= {StrategyId.SI, StrategyId.SINews}

    def test_manifest_is_location_free(self, small_fixture_dir, tmp_path):
        run_matrix(one_cell(), small_fixture_dir, tmp_path)
        text = (tmp_path / "manifest.json").read_text()
        assert str(small_fixture_dir) not in text and str(tmp_path) not in text
        m = json.loads(text)
        assert set(m["inputs"]) == {"prices", "risk", "sentiment"}
        assert all(len(v["sha256"]) == 64 for v in m["inputs"].values())

    def test_rerun_is_byte_identical(self, small_fixture_dir):
        m = one_cell(universe=Universe.WORLD6, strategy=StrategyId.SINews)
        a = compute_matrix(m, small_fixture_dir)
        b = compute_matrix(m, small_fixture_dir)
        assert a[1] == b[1] and a[0].to_json() == b[0].to_json()

    def test_start_before_signal_rejected(self, small_fixture_dir):
        import datetime as dt

        m = one_cell(start_date=dt.date(2014, 1, 10))
        with pytest.raises(ValidationError, match="extrapolated"):
            compute_matrix(m, small_fixture_dir)

    def test_missing_input_fails_before_writing(self, tmp_path):
        with pytest.raises(ValidationError):
            run_matrix(one_cell(), tmp_path / "nowhere", tmp_path / "out")
        assert not (tmp_path / "out").exists()


class TestBenchmarkComparison:
    def test_vol_matched(self, rng):
        r = series(rng.normal(0.0003, 0.012, 300))
        w = series(rng.uniform(0, 1, 300))
        bt = run_backtest(w, r)
        rows = benchmark_comparison(bt, r)
        assert rows[0] == ["date", "strategy_value", "benchmark_value", "allocation"]
        bench = np.array([float(x[2]) for x in rows[1:]])
        assert bench[0] == 1.0
        assert annualized_vol(bench[1:] / bench[:-1] - 1) == pytest.approx(annualized_vol(bt.daily_returns.values), abs=1e-10)

    def test_writes_file(self, rng, tmp_path):
        r = series(rng.normal(0, 0.01, 50))
        bt = run_backtest(series(np.full(50, 0.5)), r)
        text = emit_benchmark_comparison(bt, r, tmp_path / "cmp.csv")
        assert (tmp_path / "cmp.csv").read_text() == text

    def test_flat_strategy(self, rng):
        r = series(rng.normal(0, 0.01, 50))
        bt = run_backtest(series(np.zeros(50)), r)
        with pytest.raises(ComputationError):
            benchmark_comparison(bt, r)


class TestConfig:
    def test_unknown_key(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"news": {"agg_window": 5, "bogus": 1}}))
        with pytest.raises(ValidationError, match="bogus"):
            load_config(p)

    def test_round_trip(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"universes": ["NASDAQ"], "cost_rate": 0.001, "selector": {"window": 120}}))
        cfg = load_config(p)
        assert cfg.universes == (Universe.NASDAQ,) and cfg.selector.window == 120
        assert cfg.to_dict()["cost_rate"] == 0.001


class TestCli:
    def test_run_and_table(self, small_fixture_dir, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(["run", "--universe", "NASDAQ", "--strategy", "LongOnly", "--strategy", "News",
                     "--data-dir", str(small_fixture_dir), "--out", str(out)])
        assert code == 0
        rows = load_perf_table_csv(out / "NASDAQ/perf_table.csv")
        assert {r[0] for r in rows[1:]} == {"Long Only", "News"}
        capsys.readouterr()
        assert main(["table", "--run-dir", str(out), "--out-format", "md"]) == 0
        md = capsys.readouterr().out
        assert "| Strategy" in md and "n.a." in md
        assert main(["table", "--run-dir", str(out), "--out-format", "csv"]) == 0
        assert capsys.readouterr().out == (out / "NASDAQ/perf_table.csv").read_text()

    def test_signals(self, small_fixture_dir, tmp_path):
        assert main(["signals", "--universe", "SP500", "--data-dir", str(small_fixture_dir), "--out", str(tmp_path)]) == 0
        news = load_signal_csv(tmp_path / "signals/SP500/news.csv")
        v = news.values[~np.isnan(news.values)]
        assert v.size and set(np.unique(v)) <= {0.0, 1.0}

    def test_validation_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"unexpected": True}))
        assert main(["run", "--config", str(cfg), "--data-dir", str(tmp_path), "--out", str(tmp_path / "o")]) == 2
        assert "unexpected" in capsys.readouterr().err

    def test_missing_table_exit_code(self, tmp_path):
        assert main(["table", "--run-dir", str(tmp_path)]) == 2

    def test_computation_exit_code(self, tmp_path):
        # a cost rate of 2 wipes out the entry trade
        from riskonoff.synthetic import write_dataset

        data = write_dataset(tmp_path / "d", n_days=400, seed=1)
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"cost_rate": 2.0, "universes": ["SP500"], "strategies": ["LongOnly"]}))
        assert main(["run", "--config", str(cfg), "--data-dir", str(data), "--out", str(tmp_path / "o")]) == 3
        assert not (tmp_path / "o").exists()

    def test_make_fixtures(self, tmp_path):
        assert main(["make-fixtures", "--out", str(tmp_path), "--days", "60", "--seed", "2"]) == 0
        assert {p.name for p in tmp_path.iterdir()} == {"prices.csv", "risk.csv", "headlines.csv"}
