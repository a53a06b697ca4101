"""Exit criteria, each reported as one PASS/FAIL line in the terminal summary.

Run alone with ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``.
"""

import copy
import json
import math
import os
import sys
import time
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from probmax.cli import main
from probmax.harness.config import PRESETS, parse_config
from probmax.harness.examples import example1
from probmax.harness.experiment import TAG_CELL, run_experiment
from probmax.harness.reference import ReferenceWarning
from probmax.harness.verify import (check_batch_gradient, check_cap, check_cross_oracle,
                                    check_origin, check_pointwise_gradient, check_reciprocal_argmax,
                                    check_sandwich, check_unit_region, check_volume_identity)
from probmax.solvers import budget_iterations, resolve_schedule, run

pytestmark = pytest.mark.acceptance


def record(num, passed, detail):
    line = f"CRITERION {num}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def brute_force_iterations(a, M):
    total, K = 0, 0
    while True:
        nxt = math.floor((K + 1) ** a)
        if total + nxt > M:
            return K
        total += nxt
        K += 1


def _bench(out_dir, cfg_dict, tmp):
    path = os.path.join(tmp, "config.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg_dict, fh)
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReferenceWarning)
        code = main(["bench", "--config", path, "--out", out_dir, "--quiet"])
    return code, time.perf_counter() - t0


@pytest.fixture(scope="session")
def table1_run(tmp_path_factory):
    tmp = str(tmp_path_factory.mktemp("table1"))
    out = os.path.join(tmp, "out")
    code, elapsed = _bench(out, copy.deepcopy(PRESETS["table1"]), tmp)
    return {"code": code, "elapsed": elapsed, "out": out, "tmp": tmp}


def test_criterion_1_reformulation_identity():
    t0 = time.perf_counter()
    res = check_cross_oracle(seed=0, count=30, required=28)
    elapsed = time.perf_counter() - t0
    ok = res.passed and elapsed < 30.0
    assert record(1, ok, f"{res.detail}; {elapsed:.1f} s (limit 30 s)")


def test_criterion_2_analytic_anchors():
    checks = [check_origin(N=100_000), check_cap(N=1_000_000), check_unit_region()]
    ok = all(c.passed for c in checks)
    assert record(2, ok, "; ".join(f"{c.name}: {c.detail}" for c in checks))


def test_criterion_3_volume_identity():
    res = check_volume_identity(N=1_000_000)
    assert record(3, res.passed, res.detail)


def test_criterion_4_smoothing_sandwich():
    res = check_sandwich(pairs=10_000, scales=(1e-3, 1e-1, 1.0))
    assert record(4, res.passed, res.detail)


def test_criterion_5_gradients():
    point = check_pointwise_gradient(count=20, step=1e-6)
    batch = check_batch_gradient(N=100_000)
    ok = point.passed and batch.passed
    assert record(5, ok, f"pointwise {point.value:.2e} (limit 1e-5); "
                         f"batch {batch.value:.2e} (limit 1e-3)")


def test_criterion_6_budget_rule_and_ordering(table1_run):
    exact = all(budget_iterations(a, M) == brute_force_iterations(a, M)
                for a in range(4, 9) for M in (1_000, 10_000, 100_000))
    assert table1_run["code"] == 0
    with open(os.path.join(table1_run["out"], "report.json"), encoding="utf-8") as fh:
        rep = json.load(fh)
    agg = rep["aggregates"]
    ac = [a for a in agg if a["scheme"] == "m-ac-VSSA"]
    msa = next(a for a in agg if a["scheme"] == "m-SA")
    counts_ok = all(a["K_projections"] <= 10 for a in ac) and msa["K_projections"] == 10_000
    order_ok = all(a["median_error"] <= msa["median_error"] for a in ac)
    bound_ok = all(a["median_error"] <= 2e-2 for a in agg)
    time_ok = table1_run["elapsed"] < 300.0
    ok = exact and counts_ok and order_ok and bound_ok and time_ok and len(agg) == 6
    meds = ", ".join(f"a={a['a']}:{a['median_error']:.2e}(K={a['K_projections']})" for a in ac)
    assert record(6, ok,
                  f"budget rule exact={exact}; ac-VSSA {meds}; m-SA {msa['median_error']:.2e} "
                  f"(K={msa['K_projections']}); {table1_run['elapsed']:.0f} s (limit 300 s)")


@pytest.fixture(scope="session")
def msa_budget_report(table1_run):
    with open(os.path.join(table1_run["out"], "report.json"), encoding="utf-8") as fh:
        ref = json.load(fh)["problems"][0]["reference"]
    ref_path = os.path.join(table1_run["tmp"], "reference.json")
    with open(ref_path, "w", encoding="utf-8") as fh:
        json.dump(ref, fh)
    cfg = parse_config({
        "problem": "example1",
        "schedules": [{"scheme": "msa", "budget": M} for M in (1_000, 10_000, 100_000)]
        + [{"scheme": "ac_vssa", "a": 5, "budget": M} for M in (1_000, 10_000, 100_000)],
        "replications": 20,
        "base_seed": 0,
        "reference": {"mode": "load", "path": ref_path},
    })
    return run_experiment(cfg)


def test_criterion_7_msa_convergence_trend(msa_budget_report):
    msa = [a for a in msa_budget_report.aggregates if a["scheme"] == "m-SA"]
    meds = [a["median_error"] for a in msa]
    ok = all(b <= a for a, b in zip(meds, meds[1:]))
    assert record(7, ok, "m-SA median error at M=1e3,1e4,1e5: "
                         + ", ".join(f"{m:.3e}" for m in meds))


def test_smoothed_gap_descends_with_budget(msa_budget_report):
    # not a numbered criterion: median smoothed-objective gap falls with M for both schemes
    for scheme in ("m-SA", "m-ac-VSSA"):
        meds = [float(np.median([r["smoothed_gap"] for r in msa_budget_report.rows
                                 if r["scheme"] == scheme and r["budget"] == M]))
                for M in (1_000, 10_000, 100_000)]
        assert meds[0] > meds[1] > meds[2], (scheme, meds)


def test_criterion_8_dimension_sweep(tmp_path):
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReferenceWarning)
        cfg = parse_config(copy.deepcopy(PRESETS["table2"]))
        rep = run_experiment(cfg)
    meds = [a["median_error"] for a in rep.aggregates]
    ns = [a["n"] for a in rep.aggregates]
    no_crash = all(r["status"] == "ok" for r in rep.rows)
    feasible = True
    for pi, (name, spec) in enumerate(cfg.problems):
        sched = resolve_schedule(cfg.schedules[0], spec,
                                 rep.problems[pi]["reference"]["lipschitz"])
        for r in range(cfg.replications):
            trace = run(spec, sched, (TAG_CELL, cfg.base_seed, pi, 0, r))
            feasible &= bool(np.all(spec.feasible.contains(trace.y, tol=1e-9)))
    slope = np.polyfit(ns, meds, 1)[0]
    ok = no_crash and feasible and all(m <= 2e-2 for m in meds) and slope >= 0
    detail = ", ".join(f"n={n}:{m:.2e}" for n, m in zip(ns, meds))
    assert record(8, ok, f"{detail}; trend slope {slope:.2e}; feasible={feasible}; "
                         f"{time.perf_counter() - t0:.0f} s")


def test_criterion_9_reciprocal_argmax():
    res = check_reciprocal_argmax(per_axis=20, N=10_000)
    assert record(9, res.passed, res.detail)


def _strip_wall(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if path.endswith("report.json"):
        return b"\n".join(l for l in data.split(b"\n") if b'"wall_ms"' not in l)
    lines = data.split(b"\n")
    if path.endswith("summary.csv"):
        return b"\n".join(l.rsplit(b",", 1)[0] for l in lines)
    return data


def test_criterion_10_determinism(table1_run, tmp_path):
    out = str(tmp_path / "again")
    code, _ = _bench(out, copy.deepcopy(PRESETS["table1"]), str(tmp_path))
    same = code == 0
    for name in ("summary.csv", "trajectories.csv", "report.json"):
        same &= _strip_wall(os.path.join(table1_run["out"], name)) == \
            _strip_wall(os.path.join(out, name))
    assert record(10, same, "two table1 bench runs byte-identical apart from wall_ms"
                  if same else "outputs differ between identical runs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
