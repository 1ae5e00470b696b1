import json

import numpy as np
import pandas as pd
import pytest

from prosgpv.cli import (
    EXIT_OK,
    EXIT_USAGE,
    load_csv,
    load_spine,
    main,
    save_csv,
    spine_path,
    spine_study,
)
from prosgpv.simulate import get_preset, make_data, make_true_beta


@pytest.fixture
def noise_csv(tmp_path, rng):
    X = rng.standard_normal((200, 6))
    y = rng.integers(0, 2, 200)
    df = pd.DataFrame(X, columns=[f"x{i}" for i in range(6)])
    df["outcome"] = y
    path = tmp_path / "noise.csv"
    df.to_csv(path, index=False)
    return path


class TestLoadCsv:
    def test_bundled_spine_shape(self):
        data = load_spine()
        assert (data.n, data.p) == (310, 12)
        # "abnormal" is the lexicographically smaller level, mapped to 0
        assert int(data.y.sum()) == 100
        assert "pelvic_radius" in data.column_names()

    def test_empty_file(self, tmp_path):
        f = tmp_path / "empty.csv"
        f.write_text("")
        rc = main(["select", "--family", "logistic", "--input", str(f), "--response", "y"])
        assert rc == EXIT_USAGE

    def test_missing_file(self, tmp_path):
        rc = main(["select", "--family", "logistic",
                   "--input", str(tmp_path / "nope.csv"), "--response", "y"])
        assert rc == EXIT_USAGE

    def test_constant_column_named(self, tmp_path, rng):
        df = pd.DataFrame({"a": rng.standard_normal(20), "b": 1.0,
                           "y": rng.integers(0, 2, 20)})
        f = tmp_path / "const.csv"
        df.to_csv(f, index=False)
        with pytest.raises(Exception, match="constant"):
            load_csv(f, "logistic", response="y")

    def test_missing_values_reported_with_rows(self, tmp_path, rng):
        df = pd.DataFrame({"a": rng.standard_normal(10), "y": rng.integers(0, 2, 10)})
        df.loc[4, "a"] = np.nan
        f = tmp_path / "na.csv"
        df.to_csv(f, index=False)
        with pytest.raises(Exception, match="5"):
            load_csv(f, "logistic", response="y")

    def test_two_level_string_response(self, tmp_path, rng):
        df = pd.DataFrame({"a": rng.standard_normal(20),
                           "y": ["yes", "no"] * 10})
        f = tmp_path / "str.csv"
        df.to_csv(f, index=False)
        data = load_csv(f, "logistic", response="y")
        # "no" < "yes" lexicographically, so "no" -> 0
        assert data.y[0] == 1.0 and data.y[1] == 0.0

    def test_cox_status_validation(self, tmp_path, rng):
        df = pd.DataFrame({"a": rng.standard_normal(10),
                           "t": rng.uniform(0.1, 2, 10),
                           "d": [2] * 10})
        f = tmp_path / "cox.csv"
        df.to_csv(f, index=False)
        rc = main(["select", "--family", "cox", "--input", str(f),
                   "--time", "t", "--status", "d"])
        assert rc == EXIT_USAGE


class TestRoundTrip:
    def test_dataset_roundtrip_exact(self, tmp_path, rng):
        sc = get_preset("cox-low-s", n=40, p=5, s=2)
        beta = make_true_beta(5, 2, sc.beta_l, sc.beta_u, rng)
        data = make_data(sc, beta, rng)
        f = tmp_path / "rt.csv"
        save_csv(data, f)
        back = load_csv(f, "cox", time="time", status="status")
        np.testing.assert_array_equal(back.X, data.X)
        np.testing.assert_array_equal(back.time, data.time)
        np.testing.assert_array_equal(back.status, data.status)
        assert back.column_names() == data.column_names()


class TestSelectCommand:
    def test_spine_select_json_report(self, tmp_path):
        out = tmp_path / "report.json"
        rc = main(["select", "--family", "logistic", "--input", str(spine_path()),
                   "--response", "class", "--out", str(out), "--format", "json"])
        assert rc == EXIT_OK
        payload = json.loads(out.read_text())
        assert payload["schema_version"] == 1
        assert set(payload) >= {"family", "candidate_set", "final_set",
                                "coefficients", "null_bound", "lambda_gic"}
        assert "degree_spondylolisthesis" in payload["final_set"]

    def test_pure_noise_empty_selection_exit_zero(self, noise_csv, tmp_path):
        out = tmp_path / "noise.json"
        rc = main(["select", "--family", "logistic", "--input", str(noise_csv),
                   "--response", "outcome", "--out", str(out)])
        assert rc == EXIT_OK
        payload = json.loads(out.read_text())
        assert isinstance(payload["final_set"], list)


class TestSimulateCommand:
    def test_deterministic_outputs(self, tmp_path):
        args = ["simulate", "--preset", "poisson-low-s", "--n", "60", "--p", "6",
                "--s", "2", "--reps", "3", "--seed", "7"]
        rc = main(args + ["--out", str(tmp_path / "a")])
        assert rc == EXIT_OK
        rc = main(args + ["--out", str(tmp_path / "b")])
        assert rc == EXIT_OK
        for suffix in ("_replications.csv", "_aggregate.csv"):
            assert (tmp_path / f"a{suffix}").read_bytes() == (tmp_path / f"b{suffix}").read_bytes()

    def test_parallel_matches_serial(self, tmp_path):
        args = ["simulate", "--preset", "poisson-low-s", "--n", "60", "--p", "6",
                "--s", "2", "--reps", "4", "--seed", "3"]
        main(args + ["--jobs", "1", "--out", str(tmp_path / "s")])
        main(args + ["--jobs", "4", "--out", str(tmp_path / "p")])
        assert (tmp_path / "s_replications.csv").read_bytes() == \
            (tmp_path / "p_replications.csv").read_bytes()

    def test_replication_csv_columns(self, tmp_path):
        main(["simulate", "--preset", "poisson-low-s", "--n", "60", "--p", "6",
              "--s", "2", "--reps", "2", "--seed", "1", "--out", str(tmp_path / "c")])
        df = pd.read_csv(tmp_path / "c_replications.csv")
        assert list(df.columns) == ["scenario", "method", "seed", "exact_capture",
                                    "power", "type1", "pfdr", "pfndr", "mae",
                                    "score", "runtime_s"]

    def test_unknown_preset_lists_names(self, capsys):
        rc = main(["simulate", "--preset", "bogus"])
        assert rc == EXIT_USAGE
        assert "logistic-low-s" in capsys.readouterr().err

    def test_preset_listing(self, capsys):
        rc = main(["simulate", "--list-presets"])
        assert rc == EXIT_OK
        out = capsys.readouterr().out
        assert out.count("\n") == 9

    def test_custom_scenario_needs_full_spec(self):
        rc = main(["simulate", "--family", "logistic", "--n", "50"])
        assert rc == EXIT_USAGE


class TestSpineCommand:
    def test_single_split_deterministic(self, tmp_path):
        rc = main(["spine", "--reps", "1", "--seed", "11", "--out", str(tmp_path / "x")])
        assert rc == EXIT_OK
        rc = main(["spine", "--reps", "1", "--seed", "11", "--out", str(tmp_path / "y")])
        assert rc == EXIT_OK
        assert (tmp_path / "x_splits.csv").read_bytes() == \
            (tmp_path / "y_splits.csv").read_bytes()
        df = pd.read_csv(tmp_path / "x_splits.csv")
        assert set(df["method"]) == {"prosgpv", "lasso_min"}

    def test_study_summary_fields(self):
        df, summary = spine_study(splits=3, seed=0)
        assert set(summary) == {"prosgpv", "lasso_min"}
        for s in summary.values():
            assert {"median_size", "most_frequent_model", "mean_auc",
                    "median_auc"} <= set(s)
