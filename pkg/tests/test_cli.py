import csv
import os
from pathlib import Path

import numpy as np
import pytest

from adaptive_colloc.cli import main
from adaptive_colloc.fieldio import read_field
from adaptive_colloc.runio import read_metrics

# tiny-but-real settings shared by the CLI tests
TINY = [
    "mesh.n = 16",
    "net.hidden_layers = 2",
    "net.hidden_units = 12",
    "sampler.n_c = 40",
    "sampler.period = 20",
    "sampler.resample_every = 5",
    "train.max_epochs = 12",
    "train.n_val = 100",
]


def write_tiny_config(path: Path, extra=()):
    path.write_text("\n".join([*TINY, *extra]) + "\n")
    return path


class TestSolveReference:
    def test_writes_fields_and_prints_stats(self, tmp_path, capsys):
        rc = main(["solve-reference", "--case", "tc1", "--n", "64", "--out", str(tmp_path / "ref")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "solution mean" in out
        mean = float(out.split("solution mean =")[1].split()[0])
        assert abs(mean) < 1e-12
        sol, name = read_field(tmp_path / "ref" / "solution")
        assert name == "solution"
        assert sol.n == 64

    def test_source_independent_of_operator(self, tmp_path):
        main(["solve-reference", "--case", "tc1", "--n", "32", "--out", str(tmp_path / "a")])
        main(["solve-reference", "--case", "tc3", "--n", "32", "--amplitude", "214.0",
              "--out", str(tmp_path / "b")])
        fa, _ = read_field(tmp_path / "a" / "source")
        fb, _ = read_field(tmp_path / "b" / "source")
        np.testing.assert_array_equal(fa.data, fb.data)

    def test_unknown_case_exits_2(self):
        with pytest.raises(SystemExit) as err:
            main(["solve-reference", "--case", "tc9"])
        assert err.value.code == 2


class TestTrain:
    def test_run_directory_layout(self, tmp_path):
        cfg = write_tiny_config(tmp_path / "cfg.txt")
        out = tmp_path / "run"
        rc = main(["train", "--config", str(cfg), "--case", "tc1",
                   "--scheme", "adaptive-g", "--seed", "3", "--out", str(out)])
        assert rc == 0
        assert (out / "config.txt").exists()
        assert (out / "checkpoint.bin").exists()
        assert (out / "fields" / "u_pred.f64").exists()
        assert (out / "colloc" / "epoch00000.csv").exists()
        with (out / "trace.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 12
        metrics = read_metrics(out / "metrics.txt")
        assert "mu1" in metrics and metrics["mu1"] > 0

    def test_override_reflected_in_snapshot(self, tmp_path):
        cfg = write_tiny_config(tmp_path / "cfg.txt")
        out = tmp_path / "run"
        main(["train", "--config", str(cfg), "--case", "tc1", "--n-c", "37", "--out", str(out)])
        snapshot = (out / "config.txt").read_text()
        assert "sampler.n_c = 37" in snapshot

    def test_rerun_from_snapshot_is_byte_identical(self, tmp_path):
        cfg = write_tiny_config(tmp_path / "cfg.txt")
        a = tmp_path / "a"
        main(["train", "--config", str(cfg), "--case", "tc2", "--scheme", "resampling",
              "--seed", "7", "--out", str(a)])
        b = tmp_path / "b"
        main(["train", "--config", str(a / "config.txt"), "--out", str(b)])
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
        assert (a / "metrics.txt").read_bytes() == (b / "metrics.txt").read_bytes()

    def test_malformed_config_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "bad.txt"
        cfg.write_text("sampler.bogus_key = 3\n")
        rc = main(["train", "--config", str(cfg)])
        assert rc == 2
        assert "sampler.bogus_key" in capsys.readouterr().err

    def test_default_out_root_from_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ADAPTIVE_COLLOC_OUT", str(tmp_path / "root"))
        cfg = write_tiny_config(tmp_path / "cfg.txt")
        rc = main(["train", "--config", str(cfg), "--case", "tc1"])
        assert rc == 0
        assert (tmp_path / "root" / "run" / "metrics.txt").exists()


class TestSweep:
    def test_small_matrix(self, tmp_path):
        matrix = tmp_path / "matrix.txt"
        matrix.write_text(
            "cases = tc1\nschemes = baseline\nn_c = 40\nseeds = 0,1,2\n"
            + "\n".join(TINY) + "\n"
        )
        out = tmp_path / "sweep"
        rc = main(["sweep", "--config", str(matrix), "--out", str(out)])
        assert rc == 0
        with (out / "aggregate.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3
        assert all(r["status"] == "ok" for r in rows)
        assert {r["seed"] for r in rows} == {"0", "1", "2"}
        with (out / "summary.csv").open() as fh:
            summary = list(csv.DictReader(fh))
        assert len(summary) == 1
        assert summary[0]["n"] == "3"
        assert (out / "runs" / "tc1-baseline-nc40-s0" / "metrics.txt").exists()

    def test_matrix_cardinality(self, tmp_path):
        matrix = tmp_path / "matrix.txt"
        matrix.write_text(
            "cases = tc1,tc2\nschemes = baseline,adaptive-g\nn_c = 40\nseeds = 0\n"
            "train.max_epochs = 3\n" + "\n".join(t for t in TINY if "max_epochs" not in t) + "\n"
        )
        out = tmp_path / "sweep"
        rc = main(["sweep", "--config", str(matrix), "--out", str(out)])
        assert rc == 0
        with (out / "aggregate.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 4

    def test_unknown_case_exits_2(self, tmp_path):
        matrix = tmp_path / "matrix.txt"
        matrix.write_text("cases = tc9\n")
        assert main(["sweep", "--config", str(matrix), "--out", str(tmp_path / "s")]) == 2


class TestReport:
    @pytest.fixture()
    def aggregate(self, tmp_path):
        path = tmp_path / "aggregate.csv"
        rows = [
            "case,scheme,n_c,seed,status,mu1,mu2,best_epoch,stalls,wall_s",
            "tc1,baseline,1000,0,ok,0.5,1.0,10,0,1.0",
            "tc1,baseline,1000,1,ok,0.7,1.2,11,0,1.0",
            "tc1,adaptive-g,1000,0,ok,0.02,0.1,12,1,1.0",
            "tc1,adaptive-g,1000,1,ok,0.04,0.2,13,2,1.0",
            "tc1,adaptive-g,2000,0,ok,0.03,0.15,14,0,1.0",
            "tc1,baseline,2000,0,error:NumericalError,,,,,",
        ]
        path.write_text("\n".join(rows) + "\n")
        return path

    def test_table2_shape(self, aggregate, tmp_path):
        out = tmp_path / "table2.csv"
        rc = main(["report", "--what", "table2", "--aggregate", str(aggregate), "--out", str(out)])
        assert rc == 0
        with out.open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["case", "scheme", "n_c=1000", "n_c=2000"]
        body = {(r[0], r[1]): r[2:] for r in rows[1:]}
        assert body[("tc1", "adaptive-g")] == ["0.03", "0.03"]
        assert body[("tc1", "baseline")][0] == str(np.median([0.5, 0.7]))
        assert body[("tc1", "baseline")][1] == ""  # failed cell excluded

    def test_errorbars(self, aggregate, tmp_path):
        out = tmp_path / "eb.csv"
        rc = main(["report", "--what", "errorbars", "--aggregate", str(aggregate), "--out", str(out)])
        assert rc == 0
        with out.open() as fh:
            rows = list(csv.DictReader(fh))
        row = next(r for r in rows if r["scheme"] == "adaptive-g" and r["n_c"] == "1000")
        assert row["n"] == "2"
        assert float(row["mu1_median"]) == pytest.approx(0.03)

    def test_missing_columns_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("case,scheme\n")
        rc = main(["report", "--what", "table2", "--aggregate", str(bad)])
        assert rc == 2
        assert "n_c" in capsys.readouterr().err

    def test_schedule_trace(self, tmp_path):
        cfg = write_tiny_config(tmp_path / "cfg.txt")
        run = tmp_path / "run"
        main(["train", "--config", str(cfg), "--case", "tc1", "--scheme", "adaptive-g",
              "--out", str(run)])
        out = tmp_path / "sched.csv"
        rc = main(["report", "--what", "schedule-trace", "--run", str(run), "--out", str(out)])
        assert rc == 0
        with out.open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 12
        assert float(rows[0]["eta"]) == 1.0
