import csv
import json
import os
import warnings

import numpy as np
import pytest

from probmax.cli import main
from probmax.harness.config import PRESETS, ConfigError, load_config, parse_config
from probmax.harness.examples import EXAMPLE1_A, EXAMPLE1_B, builtin_examples, example1, example2
from probmax.harness.experiment import (MetricOracle, ReformulationError, cross_oracle_gate,
                                        run_experiment)
from probmax.harness.reference import (ReferenceWarning, cached_reference, compute_reference,
                                       load_reference)
from probmax.harness.report import SUMMARY_COLUMNS, emit_report, fmt, read_summary
from probmax.integrand import ProblemSpec
from probmax.geometry import Ball, BallSet, PolytopeSet
from probmax.oracle import hit_or_miss_probability, make_stream


# built-in problems

def test_builtin_examples():
    names = [n for n, _ in builtin_examples()]
    assert names == ["example1"] + [f"example2_n{n}" for n in range(4, 9)]
    X = example1().feasible
    assert X.A_raw.shape == (6, 3)
    np.testing.assert_array_equal(X.b_raw, [3, -0.1, 2, -0.2, 1, -0.1])
    assert X.contains([0.5, 0.5, 0.5])
    assert np.all(EXAMPLE1_A @ [0.5, 0.5, 0.5] <= EXAMPLE1_B)
    e2 = example2(4).feasible
    np.testing.assert_array_equal(e2.center, [1.2] * 4)
    assert e2.radius == 1.0


# configuration

def test_config_presets():
    cfg = load_config("table1")
    assert [s.label for s in cfg.schedules] == ["m-ac-VSSA"] * 5 + ["m-SA"]
    assert cfg.replications == 20
    cfg = load_config("table2")
    assert [n for n, _ in cfg.problems] == [f"example2_n{n}" for n in range(4, 9)]
    assert load_config("example1").problems[0][1].n == 3


def test_config_inline_problem(small_dict):
    small_dict["problem"] = {
        "name": "disk",
        "body": {"type": "ball", "n": 2},
        "feasible": {"type": "polytope", "A": [[1, 0], [0, 1], [-1, 0], [0, -1]],
                     "b": [2, 2, -0.5, -0.5]},
        "m": 2, "s": 0.05, "eps": 0.2,
    }
    cfg = parse_config(small_dict)
    name, spec = cfg.problems[0]
    assert name == "disk" and spec.n == 2 and spec.s == 0.05 and spec.eps == 0.2


@pytest.mark.parametrize("patch, field", [
    ({"schedules": [{"scheme": "ac_vssa", "a": 3}]}, "schedules[0].a"),
    ({"replications": 0}, "replications"),
    ({"problem": {"builtin": "example1", "eps": 1.5}}, "problem"),
    ({"schedules": [{"scheme": "sgd"}]}, "schedules[0].scheme"),
    ({"problem": {"body": {"type": "ball", "n": 2},
                  "feasible": {"type": "ball", "center": [0, 0, 0], "radius": 1}}}, "problem"),
    ({"reference": {"mode": "guess"}}, "reference.mode"),
    ({"base_seed": "zero"}, "base_seed"),
])
def test_config_validation_names_field(small_dict, patch, field):
    small_dict.update(patch)
    with pytest.raises(ConfigError) as exc:
        parse_config(small_dict)
    assert str(exc.value).startswith(field)


def test_config_a_error_mentions_constraint(small_dict):
    small_dict["schedules"] = [{"scheme": "ac_vssa", "a": 3}]
    with pytest.raises(ConfigError, match="a > 3"):
        parse_config(small_dict)


def test_config_parse_error_location(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "problem": "example1",\n  "schedules": [,]\n}\n')
    with pytest.raises(ConfigError, match=r"bad.json:3:\d+"):
        load_config(str(p))
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "missing.json"))


# reference

def test_reference_trivial_optimum():
    spec = ProblemSpec(Ball(3), BallSet([0.5, 0.0, 0.0], 1.0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReferenceWarning)
        ref = compute_reference(spec, seed=1, batch=5000, max_steps=20, eval_samples=100_000,
                                lipschitz=1.0)
    assert abs(ref.f_star - 1.0) <= 3.0 * ref.f_star_se + 1e-12


def test_reference_is_reproducible_and_cached(tmp_path):
    spec = example1()
    kw = dict(seed=2, batch=5000, max_steps=30, eval_samples=50_000, lipschitz_pairs=20,
              lipschitz_batch=1000)
    with pytest.warns(ReferenceWarning):
        a = compute_reference(spec, **kw)
    with pytest.warns(ReferenceWarning):
        b = compute_reference(spec, **kw)
    assert a.x_star == b.x_star and a.lipschitz == b.lipschitz
    with pytest.warns(ReferenceWarning):
        c = cached_reference(spec, str(tmp_path), **kw)
    files = os.listdir(tmp_path)
    assert len(files) == 1 and spec.fingerprint() in files[0]
    d = cached_reference(spec, str(tmp_path), **kw)
    assert d == c
    with pytest.raises(ValueError, match="belongs to problem"):
        load_reference(str(tmp_path / files[0]), example1(s=0.2))


@pytest.mark.slow
def test_reference_beats_random_feasible_points():
    spec = example1()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReferenceWarning)
        ref = compute_reference(spec, seed=3, batch=100_000, max_steps=100,
                                eval_samples=1_000_000, lipschitz_pairs=100)
    pts = spec.feasible.sample(make_stream(4), 100)
    for i, x in enumerate(pts):
        p, se = hit_or_miss_probability(x, 100_000, make_stream(5, i), spec)
        assert ref.f_star >= p - 3.0 * np.hypot(se, ref.f_star_se)


# metric and gate

def test_metric_oracle_common_numbers():
    spec = example2(4)
    x_star = spec.feasible.project(np.zeros(4))
    metric = MetricOracle(spec, x_star, 20_000, make_stream(1))
    errs, ses = metric.gap(np.vstack([x_star, spec.feasible.center]))
    assert errs[0] == 0.0 and ses[0] == 0.0
    assert errs[1] > 0 and ses[1] > 0


def test_gate_passes_and_fails():
    spec = example1()
    x = spec.feasible.start_point()
    assert cross_oracle_gate(spec, x, 20_000, seed=1)["z"] < 4.0
    # a volume override that is off by half breaks the reformulation
    broken = ProblemSpec(Ball(3, volume=Ball(3).volume() * 0.5),
                         PolytopeSet(EXAMPLE1_A, EXAMPLE1_B), name="broken")
    with pytest.raises(ReformulationError, match="normalization"):
        cross_oracle_gate(broken, x, 20_000, seed=1)


# experiment and report

@pytest.fixture(scope="module")
def small_report():
    import copy
    from conftest import SMALL
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReferenceWarning)
        return run_experiment(parse_config(copy.deepcopy(SMALL)))


def test_experiment_counts(small_report):
    assert len(small_report.rows) == 2 * 3
    assert len(small_report.aggregates) == 2
    assert all(r["status"] == "ok" for r in small_report.rows)
    K = {a["scheme"]: a["K_projections"] for a in small_report.aggregates}
    assert K == {"m-ac-VSSA": 4, "m-SA": 2000}


def test_aggregates_recompute_from_rows(small_report):
    for agg in small_report.aggregates:
        errs = [r["error"] for r in small_report.rows if r["scheme"] == agg["scheme"]]
        assert agg["median_error"] == float(np.median(errs))
        assert agg["mean_error"] == pytest.approx(float(np.mean(errs)), rel=1e-15)


def test_errors_not_below_noise(small_report):
    for r in small_report.rows:
        assert r["error"] >= -3.0 * r["error_se"]


def test_final_points_feasible(small_report):
    X = example1().feasible
    for r in small_report.rows:
        assert X.contains(r["final_point"], tol=1e-9)


def test_solver_errors_are_recorded(small_dict, monkeypatch):
    import probmax.harness.experiment as exp

    def boom(spec, sched, seed):
        if seed[-1] == 1:
            raise RuntimeError("synthetic failure")
        return real(spec, sched, seed)

    real = exp.run
    monkeypatch.setattr(exp, "run", boom)
    small_dict["replications"] = 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReferenceWarning)
        rep = run_experiment(parse_config(small_dict))
    bad = [r for r in rep.rows if r["status"] != "ok"]
    assert len(bad) == 2 and "synthetic failure" in bad[0]["status"]
    assert all(a["failed_runs"] == 1 for a in rep.aggregates)


def test_emit_report_files(small_report, tmp_path):
    paths = emit_report(small_report, str(tmp_path))
    rows = read_summary(paths["summary"])
    assert tuple(rows[0].keys()) == SUMMARY_COLUMNS
    assert len(rows) == 2
    raw = open(paths["summary"], "rb").read()
    assert b"\r\n" not in raw
    traj = list(csv.DictReader(open(paths["trajectories"], encoding="utf-8")))
    assert {"scheme", "replication", "iteration", "samples_so_far", "error"} <= set(traj[0])
    rep = json.load(open(paths["report"], encoding="utf-8"))
    assert rep["config"]["base_seed"] == 7
    assert "x_star" in rep["problems"][0]["reference"]
    med = float(rows[0]["median_error"])
    assert med == small_report.aggregates[0]["median_error"]


def test_single_iteration_gives_header_only_trajectory(small_dict, tmp_path):
    small_dict["schedules"] = [{"scheme": "ac_vssa", "a": 5, "budget": 20}]
    small_dict["replications"] = 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReferenceWarning)
        rep = run_experiment(parse_config(small_dict))
    assert rep.aggregates[0]["K_projections"] == 1
    paths = emit_report(rep, str(tmp_path))
    lines = open(paths["trajectories"], encoding="utf-8").read().splitlines()
    assert lines == ["scheme,a,n,replication,iteration,samples_so_far,error"]


def test_format_shortest_round_trip():
    assert fmt(0.1) == "0.1"
    assert fmt(1e-5) == "1e-05"
    assert float(fmt(2.0 / 3.0)) == 2.0 / 3.0
    assert fmt(None) == "" and fmt(3) == "3"


# command line

def _write(tmp_path, d):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(d))
    return str(p)


def test_cli_solve_and_bench(small_dict, tmp_path, capsys):
    cfg = _write(tmp_path, small_dict)
    out = tmp_path / "solve"
    assert main(["solve", "--config", cfg, "--schedule", "1", "--out", str(out),
                 "--replications", "2", "--quiet"]) == 0
    rows = read_summary(str(out / "summary.csv"))
    assert [r["scheme"] for r in rows] == ["m-SA"]
    out2 = tmp_path / "bench"
    assert main(["bench", "--config", cfg, "--out", str(out2), "--seed", "3", "--quiet"]) == 0
    rep = json.load(open(out2 / "report.json"))
    assert rep["config"]["base_seed"] == 3
    assert "m-ac-VSSA" in capsys.readouterr().out


def test_cli_exit_codes(small_dict, tmp_path, capsys):
    assert main(["bench", "--config", str(tmp_path / "nope.json")]) == 1
    small_dict["schedules"] = [{"scheme": "ac_vssa", "a": 2}]
    assert main(["bench", "--config", _write(tmp_path, small_dict)]) == 1
    assert main(["solve", "--config", "table1", "--schedule", "9"]) == 1
    assert main(["bench", "--config", "table1", "--replications", "0"]) == 1
    assert "error:" in capsys.readouterr().err


def test_cli_runtime_error_exit_code(small_dict, tmp_path):
    small_dict["problem"] = {"body": {"type": "ball", "n": 3, "volume": 2.0},
                             "feasible": {"type": "polytope", "A": EXAMPLE1_A.tolist(),
                                          "b": EXAMPLE1_B.tolist()}}
    assert main(["bench", "--config", _write(tmp_path, small_dict), "--quiet",
                 "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o" / "summary.csv").exists()


def test_cli_reference(small_dict, tmp_path, capsys):
    small_dict["reference"]["cache_dir"] = str(tmp_path / "cache")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReferenceWarning)
        assert main(["reference", "--config", _write(tmp_path, small_dict)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out[0]["problem"] == "example1"
    assert len(os.listdir(tmp_path / "cache")) == 1


def test_presets_are_valid_json():
    for d in PRESETS.values():
        json.dumps(d)
