import json
import math
import subprocess
import sys

import numpy as np
import pytest

from levy_lda.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, Table, main
from levy_lda.compound import cdf, value_at_risk

from conftest import BENCH_DIR, bench_model

LOW = BENCH_DIR / "low_poisson.json"
BIVARIATE = BENCH_DIR.parent / "bivariate_poisson.json"


def model(kind="poisson", **params):
    return {"frequency": {"kind": kind, **params}, "severity": {"gamma": 0.01, "delta": 0.0}}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def tables(text):
    return [Table.from_csv(chunk) for chunk in text.split("\n\n")]


class TestEval:
    def test_header_reports_n_upper(self, capsys):
        code, out, _ = run(capsys, "eval", "--config", LOW)
        assert code == EXIT_OK
        (t,) = tables(out)
        assert t.meta["n_upper"] == 11 and t.meta["n_lower"] == 1
        assert t.columns == ["z", "pdf", "cdf"] and len(t.rows) == 200

    def test_values_match_library(self, capsys):
        _, out, _ = run(capsys, "eval", "--config", LOW)
        (t,) = tables(out)
        z = np.array([r[0] for r in t.rows], dtype=float)
        np.testing.assert_array_equal([r[2] for r in t.rows], cdf(bench_model("low_poisson"), z))

    def test_single_zero_point(self, capsys, write_config):
        path = write_config({"model": model(**{"lambda": 0.1}), "grid": [0.0]})
        _, out, _ = run(capsys, "eval", "--config", path)
        (t,) = tables(out)
        assert len(t.rows) == 1 and t.rows[0][2] == t.meta["zero_prob"]
        assert t.rows[0][1] == 0.0
        assert t.meta["zero_prob"] == math.exp(-0.1)

    def test_csv_round_trip(self, capsys):
        _, out, _ = run(capsys, "eval", "--config", BENCH_DIR / "high_negative_binomial.json")
        (t,) = tables(out)
        assert t.to_csv() == out

    def test_json(self, capsys, tmp_path):
        dest = tmp_path / "eval.json"
        code, out, _ = run(capsys, "eval", "--config", LOW, "--format", "json", "--out", dest)
        assert code == EXIT_OK and out == ""
        data = json.loads(dest.read_text())
        assert data["meta"]["n_upper"] == 11 and len(data["rows"]) == 200

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "levy_lda.cli", "truncate", "--config", str(LOW)],
            capture_output=True,
            text=True,
            check=False,
        )
        assert proc.returncode == EXIT_OK
        assert Table.from_csv(proc.stdout).rows[0][2] == 11


class TestTruncate:
    @pytest.mark.parametrize(
        "name,upper",
        [("low_poisson", 11), ("high_poisson", 49), ("low_negative_binomial", 19),
         ("high_negative_binomial", 120), ("high_binomial", 12)],
    )
    def test_targets(self, capsys, name, upper):
        _, out, _ = run(capsys, "truncate", "--config", BENCH_DIR / f"{name}.json")
        (t,) = tables(out)
        row = dict(zip(t.columns, t.rows[0]))
        assert row["n_upper"] == upper
        assert row["mass_dropped"] <= 1e-10
        assert row["threshold_log"] == -37

    def test_json_record(self, capsys):
        _, out, _ = run(capsys, "truncate", "--config", LOW, "--format", "json")
        rec = json.loads(out)["rows"][0]
        assert rec["n_upper"] == 11 and rec["n_mode"] == 1


class TestVar:
    def test_rows(self, capsys):
        code, out, _ = run(capsys, "var", "--config", LOW)
        assert code == EXIT_OK
        (t,) = tables(out)
        assert t.meta["expected_shortfall"] == "divergent"
        qs = [r[0] for r in t.rows]
        var = [r[1] for r in t.rows]
        assert qs == [0.9, 0.99, 0.995, 0.999]
        assert var == sorted(var)
        m = bench_model("low_poisson")
        for q, v in zip(qs, var):
            assert v == value_at_risk(m, q)

    def test_unresolvable_quantile_is_check_failure(self, capsys, write_config):
        path = write_config(
            {"model": model(**{"lambda": 10}), "q": [0.5, 0.999999999999], "mass_tol": 1e-3,
             "threshold_log": -3}
        )
        code, _, err = run(capsys, "var", "--config", path)
        assert code == EXIT_CHECK and "check failed" in err


class TestAggregate:
    def test_tables(self, capsys):
        code, out, _ = run(capsys, "aggregate", "--config", BIVARIATE)
        assert code == EXIT_OK
        dist, var = tables(out)
        assert dist.meta["zero_prob"] == pytest.approx(math.exp(-10.1), rel=1e-14)
        assert dist.meta["retained_mass"] >= 1 - 2e-9
        assert var.columns == ["q", "var"] and [r[1] for r in var.rows] == sorted(r[1] for r in var.rows)
        for t in (dist, var):
            assert t.to_csv() in out

    def test_needs_cells(self, capsys):
        code, _, err = run(capsys, "aggregate", "--config", LOW)
        assert code == EXIT_CONFIG and "cells" in err

    def test_single_command_rejects_cells(self, capsys):
        code, _, err = run(capsys, "eval", "--config", BIVARIATE)
        assert code == EXIT_CONFIG and "model" in err

    def test_budget_is_runtime_error(self, capsys, write_config):
        cells = [model(**{"lambda": 10})] * 3
        path = write_config({"cells": cells, "budget": 100})
        code, _, err = run(capsys, "aggregate", "--config", path)
        assert code == EXIT_RUNTIME and "budget" in err


class TestSimulate:
    def test_same_seed_identical(self, capsys, write_config, tmp_path):
        path = write_config(
            {"model": model(**{"lambda": 10}), "years": 20000, "block_size": 5000, "seed": 9}
        )
        outs = []
        for threads in (1, 3):
            code, out, _ = run(capsys, "simulate", "--config", path, "--threads", threads)
            assert code == EXIT_OK
            outs.append(out)
        assert outs[0] == outs[1]
        _, other, _ = run(capsys, "simulate", "--config", path, "--seed", 10)
        assert other != outs[0]
        (t,) = tables(outs[0])
        assert t.meta["seed"] == 9 and t.columns == ["z", "closed_form", "empirical", "std_error"]
        assert t.to_csv() == outs[0]


class TestStudy:
    def test_truncation(self, capsys, write_config):
        path = write_config({"model": model(**{"lambda": 10}), "caps": [10, 20, 49, 1000]})
        _, out, _ = run(capsys, "study", "--config", path)
        (t,) = tables(out)
        mse = [r[1] for r in t.rows]
        assert mse == sorted(mse, reverse=True) and mse[-1] == 0.0 and mse[2] <= 1e-12

    def test_timing(self, capsys, write_config):
        path = write_config(
            {"model": model(**{"lambda": 10}), "study": "timing", "years": 2000, "block_size": 500}
        )
        code, out, _ = run(capsys, "study", "--config", path)
        (t,) = tables(out)
        assert code == EXIT_OK and t.rows[0][0] > 0 and t.rows[0][1] > 0


class TestExitCodes:
    def test_config_error_names_line(self, capsys, write_config):
        path = write_config('{\n  "model": {\n    "frequency": {"kind": "poisson", "lambda": -1},\n'
                            '    "severity": {"gamma": 0.01}\n  }\n}\n')
        code, out, err = run(capsys, "eval", "--config", path)
        assert code == EXIT_CONFIG and out == ""
        assert f"{path}:3: model.frequency.lambda:" in err

    def test_missing_config(self, capsys, tmp_path):
        code, _, _ = run(capsys, "eval", "--config", tmp_path / "none.json")
        assert code == EXIT_CONFIG

    @pytest.mark.parametrize(
        "argv",
        [["bogus", "--config", "x"], ["eval"], ["eval", "--config", "x", "--seed", "-1"],
         ["eval", "--config", "x", "--threads", "0"]],
    )
    def test_usage_errors(self, capsys, argv):
        assert run(capsys, *argv)[0] == EXIT_CONFIG

    def test_help(self, capsys):
        code, out, _ = run(capsys, "--help")
        assert code == EXIT_OK and "eval" in out

    def test_mass_check_fails(self, capsys, write_config):
        path = write_config(
            {"model": model(**{"lambda": 10}), "mass_tol": 1e-3, "threshold_log": -3, "grid": [5]}
        )
        code, out, err = run(capsys, "eval", "--config", path)
        assert code == EXIT_CHECK and "retained probability mass" in err
        # the table is still written
        assert tables(out)[0].rows

    def test_unwritable_output(self, capsys, tmp_path):
        code, _, err = run(capsys, "eval", "--config", LOW, "--out", tmp_path / "no" / "x.csv")
        assert code == EXIT_RUNTIME and "cannot write" in err
