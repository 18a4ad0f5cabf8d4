import csv
import json

import numpy as np
import pytest

from jsrec.analysis import face_count
from jsrec.bpsolve import solve_bp
from jsrec.combinatorics import cnd
from jsrec.core import gaussian_matrix, is_recovered, make_rng, random_support
from jsrec.errors import ConfigError
from jsrec.experiments import (ExperimentConfig, barycentric_grid, ci_halfwidth, run_experiment, run_triangles,
                               survivor_vectors, thread_count)


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_defaults_and_round_trip(self):
        cfg = ExperimentConfig.from_dict({"schema_version": 1, "kind": "cnd_table"})
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    @pytest.mark.parametrize("data", [
        {"kind": "cnd_table"},
        {"schema_version": 2, "kind": "cnd_table"},
        {"schema_version": 1},
        {"schema_version": 1, "kind": "nope"},
        {"schema_version": 1, "kind": "cnd_table", "extra": 1},
        {"schema_version": 1, "kind": "smv_sweep", "trials": 0},
        {"schema_version": 1, "kind": "smv_sweep", "n": 10, "s_values": [11]},
        {"schema_version": 1, "kind": "smv_sweep", "r_values": [0]},
        {"schema_version": 1, "kind": "smv_sweep", "r_values": []},
        {"schema_version": 1, "kind": "smv_sweep", "trials": True},
        {"schema_version": 1, "kind": "smv_sweep", "seed": -1},
        {"schema_version": 1, "kind": "smv_sweep", "tolerances": {"bogus": 1}},
        {"schema_version": 1, "kind": "smv_sweep", "tolerances": {"feas_tol": -1}},
        {"schema_version": 1, "kind": "boosted", "s_values": [23], "n": 40},
    ])
    def test_rejected(self, data):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(data)

    def test_load_errors(self, tmp_path):
        (tmp_path / "bad.json").write_text("{not json")
        with pytest.raises(ConfigError):
            ExperimentConfig.load(tmp_path / "bad.json")
        with pytest.raises(ConfigError):
            ExperimentConfig.load(tmp_path / "missing.json")

    def test_threads_env(self, monkeypatch):
        monkeypatch.setenv("JSREC_THREADS", "3")
        assert thread_count() == 3
        monkeypatch.setenv("JSREC_THREADS", "x")
        with pytest.raises(ConfigError):
            thread_count()


def test_ci_halfwidth():
    assert ci_halfwidth(0.5, 100) == pytest.approx(1.96 * 0.05, rel=1e-3)
    assert ci_halfwidth(0.0, 10) == 0.0


def test_cnd_table(tmp_path):
    cfg = ExperimentConfig(kind="cnd_table", output_dir=str(tmp_path))
    rows = run_experiment(cfg)
    assert len(rows) == 144
    table = _read(tmp_path / "results.csv")
    assert len(table) == 144
    assert all(int(r["cnd"]) == cnd(int(r["n"]), int(r["d"])) for r in table)
    assert (tmp_path / "plot.svg").exists()
    echo = json.loads((tmp_path / "config.echo.json").read_text())
    assert echo["kind"] == "cnd_table" and echo["schema_version"] == 1


def test_echo_reproduces_results(tmp_path):
    cfg = ExperimentConfig(kind="boosted", m=12, n=30, s_values=[4], r_values=[1, 2], trials=20, seed=5,
                           output_dir=str(tmp_path / "a"))
    run_experiment(cfg)
    echo = json.loads((tmp_path / "a" / "config.echo.json").read_text())
    echo["output_dir"] = str(tmp_path / "b")
    run_experiment(ExperimentConfig.from_dict(echo))
    first = (tmp_path / "a" / "results.csv").read_bytes()
    assert first == (tmp_path / "b" / "results.csv").read_bytes()
    assert b"\r" not in first
    for row in _read(tmp_path / "a" / "results.csv"):
        assert row["trials"] == "20" and row["ci_halfwidth"] != ""
        assert 0.0 <= float(row["empirical_rate"]) <= 1.0


def test_threads_do_not_change_results():
    cfg = ExperimentConfig(kind="smv_sweep", m=8, n=20, s_values=[2, 4], trials=12, seed=3)
    assert run_experiment(cfg, threads=1) == run_experiment(cfg, threads=2)


def test_cache_matches_solver():
    base = dict(kind="boosted", m=12, n=30, s_values=[5], r_values=[1, 3], trials=25, seed=8)
    fast = run_experiment(ExperimentConfig(**base))
    slow = run_experiment(ExperimentConfig(**base, use_face_cache=False))
    assert [r["recovered"] for r in fast] == [r["recovered"] for r in slow]


def test_rembo_rows():
    cfg = ExperimentConfig(kind="rembo", m=12, n=30, s_values=[5], r_values=[1, 2, 3], trials=30, seed=9,
                           max_iterations=5)
    rows = run_experiment(cfg)
    assert [r["r"] for r in rows] == [1, 2, 3]
    for r in rows:
        assert 0.0 <= r["model_rate"] <= 1.0
    # r = 1: every weight gives the same pattern, so the model is p itself
    assert rows[0]["model_rate"] == pytest.approx(rows[0]["p_l1"])


def test_pattern_sampling(tmp_path):
    cfg = ExperimentConfig(kind="pattern_sampling", s_values=[4], r_values=[2], trials=5000,
                           output_dir=str(tmp_path))
    rows = run_experiment(cfg)
    assert rows[-1]["trial"] == 5000 and rows[-1]["unique_pairs"] == 4 == rows[-1]["bound"]
    assert (tmp_path / "patterns.csv").read_text().startswith("pattern,count,first_seen\n")


def test_l11_vs_l12_rows():
    cfg = ExperimentConfig(kind="l11_vs_l12", m=10, n=30, s_values=[2], r_values=[1], trials=5, seed=1)
    rows = run_experiment(cfg)
    assert [r["method"] for r in rows] == ["l11", "l12"]
    # a single column makes both programs identical
    assert rows[0]["recovered"] == rows[1]["recovered"]


@pytest.fixture(scope="module")
def triangle_setup():
    rng = make_rng(5)
    A = gaussian_matrix(10, 30, rng)
    I = random_support(30, 4, rng)
    fc = face_count(A, I)
    svec = survivor_vectors(A, I, fc, 3, make_rng(12), True)
    fvec = survivor_vectors(A, I, fc, 2, make_rng(13), False)
    assert len(svec) == 3 and len(fvec) == 2
    return A, svec, fvec, run_triangles(A, I, svec, fvec, 5)


class TestTriangles:
    def test_grid(self):
        g = barycentric_grid(4)
        assert len(g) == 15
        assert all(abs(sum(w) - 1) < 1e-12 and min(w) >= 0 for w in g)
        with pytest.raises(ValueError):
            barycentric_grid(1)

    def test_corner_matches_single_vector(self, triangle_setup):
        A, svec, _, rows = triangle_setup
        corner = [r for r in rows if r["triangle"] == "s1/f1/f2" and r["w1"] == 1.0][0]
        single = is_recovered(solve_bp(A, A @ svec[0]).x, svec[0])
        assert corner["l12"] == corner["l11"] == int(single) == 1

    def test_all_s_triangle_recovered_by_l11(self, triangle_setup):
        rows = [r for r in triangle_setup[3] if r["triangle"] == "s1/s2/s3"]
        assert rows and all(r["l11"] for r in rows)

    def test_f_weight_defeats_l11(self, triangle_setup):
        for r in triangle_setup[3]:
            labels = r["triangle"].split("/")
            weights = (r["w1"], r["w2"], r["w3"])
            if any(lbl.startswith("f") and w > 0 for lbl, w in zip(labels, weights)):
                assert r["l11"] == 0

    def test_vectors_must_share_support(self):
        A = gaussian_matrix(4, 8, make_rng(0))
        with pytest.raises(ValueError):
            run_triangles(A, [0, 1], [np.eye(8)[0], np.eye(8)[5]], [np.eye(8)[1]], 3)

    def test_experiment_kind(self, tmp_path):
        cfg = ExperimentConfig(kind="triangles", m=10, n=30, s_values=[4], grid_density=3, seed=2,
                               output_dir=str(tmp_path))
        rows = run_experiment(cfg)
        assert len(rows) == 10 * len(barycentric_grid(3))
        assert _read(tmp_path / "results.csv")[0].keys() == {"triangle", "w1", "w2", "w3", "l11", "l12"}
