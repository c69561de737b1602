import json

import pytest

from aoikit import Trace, write_trace_csv
from aoikit.cli import main

GOLDEN = Trace.from_seconds(
    [(0, 1), (2, 3)], initial_age=1.0, observe_start=0, observe_end=4
)


@pytest.fixture
def golden_csv(tmp_path):
    path = tmp_path / "golden.csv"
    with open(path, "w") as fp:
        write_trace_csv(GOLDEN, fp)
    return str(path)


class TestAnalyze:
    def test_golden_outputs(self, golden_csv, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["--mode", "analyze", "--trace", golden_csv, "--out", str(out)])
        assert rc == 0
        stats = json.loads((out / "stats.json").read_text())
        assert stats["avg_age_s"] == pytest.approx(1.75)
        assert stats["peak_age_s"] == pytest.approx(2.5)
        assert stats["n_effective"] == 2
        # sample path CSV has header plus one row per breakpoint
        lines = (out / "samplepath.csv").read_text().splitlines()
        assert lines[0] == "t_ns,age_ns"
        assert len(lines) == 7
        assert (out / "regions.csv").exists()
        assert (out / "manifest.json").exists()
        printed = json.loads(capsys.readouterr().out)
        assert printed["avg_age_s"] == pytest.approx(1.75)

    def test_penalty_selection(self, golden_csv, tmp_path):
        out = tmp_path / "out"
        rc = main(["--mode", "analyze", "--trace", golden_csv, "--out", str(out),
                   "--penalty", "exp", "--alpha", "0.5"])
        assert rc == 0
        stats = json.loads((out / "stats.json").read_text())
        assert stats["avg_penalty"] > 0

    def test_missing_trace_flag_usage_error(self, tmp_path, capsys):
        assert main(["--mode", "analyze", "--out", str(tmp_path)]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_missing_file_runtime_error(self, tmp_path, capsys):
        rc = main(["--mode", "analyze", "--trace", str(tmp_path / "nope.csv"),
                   "--out", str(tmp_path)])
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_empty_trace_runtime_error(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("seq,gen_ns,recv_ns\n")
        rc = main(["--mode", "analyze", "--trace", str(path), "--out", str(tmp_path)])
        assert rc == 2

    def test_corrupt_trace_runtime_error(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("seq,gen_ns,recv_ns\n0,10,xyz\n")
        rc = main(["--mode", "analyze", "--trace", str(path), "--out", str(tmp_path)])
        assert rc == 2
        assert "line" in capsys.readouterr().err

    def test_loss_runs_reported(self, tmp_path):
        tr = Trace.from_seconds(
            [(0, 1), (1, 2), (5, 6)], initial_age=1.0, observe_start=0,
            seqs=[0, 1, 5],
        )
        path = tmp_path / "gappy.csv"
        with open(path, "w") as fp:
            write_trace_csv(tr, fp)
        out = tmp_path / "out"
        assert main(["--mode", "analyze", "--trace", str(path), "--out", str(out)]) == 0
        stats = json.loads((out / "stats.json").read_text())
        assert stats["loss_runs"] == {"3": 1}


class TestSimulate:
    def test_writes_trace_and_summary(self, tmp_path, capsys):
        out = tmp_path / "sim"
        rc = main(["--mode", "simulate", "--lambda", "0.5", "--events", "2000",
                   "--out", str(out)])
        assert rc == 0
        assert (out / "trace.csv").exists()
        summary = json.loads(capsys.readouterr().out)
        assert summary["load"] == pytest.approx(0.5)
        assert not summary["unstable"]

    def test_requires_lambda(self, tmp_path):
        assert main(["--mode", "simulate", "--out", str(tmp_path)]) == 1

    def test_bad_lambda_runtime_error(self, tmp_path):
        rc = main(["--mode", "simulate", "--lambda", "-1", "--out", str(tmp_path)])
        assert rc == 2


class TestSweep:
    def test_sim_sweep_csv(self, tmp_path, capsys):
        out = tmp_path / "sweep"
        rc = main(["--mode", "sweep", "--rates", "0.3,0.6", "--events", "2000",
                   "--seeds", "2", "--out", str(out)])
        assert rc == 0
        rows = json.loads(capsys.readouterr().out)
        assert [r["lambda"] for r in rows] == [0.3, 0.6]
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 3  # header + 2 points

    def test_sim_sweep_requires_rates(self, tmp_path):
        assert main(["--mode", "sweep", "--out", str(tmp_path)]) == 1

    def test_net_sweep_requires_plan(self, tmp_path):
        assert main(["--mode", "sweep", "--sweep-kind", "net",
                     "--out", str(tmp_path)]) == 1


class TestBiasExperiment:
    def test_linear_difference_rows(self, tmp_path, capsys):
        out = tmp_path / "bias"
        rc = main(["--mode", "bias-experiment", "--lambda", "0.5",
                   "--events", "2000", "--seeds", "3",
                   "--bias-ns", str(2 * 10**9), "--out", str(out)])
        assert rc == 0
        rows = json.loads(capsys.readouterr().out)
        assert len(rows) == 3
        for row in rows:
            assert row["difference"] == pytest.approx(2.0, abs=1e-6)
        assert (out / "bias.csv").exists()

    def test_requires_lambda(self, tmp_path):
        assert main(["--mode", "bias-experiment", "--out", str(tmp_path)]) == 1


class TestManifest:
    def test_rerun_is_bit_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["--mode", "simulate", "--lambda", "0.7", "--events", "3000",
                "--seed", "42"]
        assert main([*args, "--out", str(a)]) == 0
        assert main(["--from-manifest", str(a / "manifest.json"),
                     "--out", str(b)]) == 0
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()

    def test_manifest_records_argv(self, tmp_path):
        out = tmp_path / "m"
        args = ["--mode", "simulate", "--lambda", "0.5", "--events", "1000",
                "--out", str(out)]
        assert main(args) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["tool"] == "aoikit"
        assert manifest["argv"] == args


class TestUsage:
    def test_no_mode(self, tmp_path):
        assert main([]) == 1

    def test_unknown_mode(self):
        assert main(["--mode", "frobnicate"]) == 1

    def test_bad_addr(self):
        assert main(["--mode", "measure", "--role", "probe",
                     "--addr", "notanaddr"]) == 1

    def test_measure_requires_role(self, tmp_path):
        assert main(["--mode", "measure", "--out", str(tmp_path)]) == 1
