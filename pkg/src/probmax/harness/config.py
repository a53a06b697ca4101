"""Experiment configuration: JSON text, validated into plain dataclasses."""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field

import numpy as np

from ..geometry import Ball, BallSet, Box, Ellipsoid, GeometryError, PolytopeSet, SymPolytope
from ..integrand import ProblemSpec
from ..solvers import AC_VSSA, MSA, ScheduleError, SolverSchedule
from .examples import EXAMPLE2_DIMS, example1, example2


class ConfigError(ValueError):
    """Malformed or invalid experiment configuration."""


@dataclass(frozen=True)
class ReferenceConfig:
    mode: str = "compute"
    batch: int = 1_000_000
    max_steps: int = 500
    tol: float = 1e-6
    eval_samples: int = 10_000_000
    path: str | None = None
    cache_dir: str | None = None


@dataclass
class ExperimentConfig:
    problems: list
    schedules: list
    replications: int = 20
    base_seed: int = 0
    reference: ReferenceConfig = field(default_factory=ReferenceConfig)
    metric_samples: int = 1_000_000
    lipschitz_pairs: int = 1000
    lipschitz_batch: int = 10_000
    gate_samples: int = 100_000
    gate: bool = True
    workers: int = 1
    output: str = "out"
    source: dict = field(default_factory=dict)

    def echo(self):
        """The configuration as parsed, with the effective seed and replication count.

        The output directory is left as written in the source so that moving
        a run elsewhere does not change its report.
        """
        d = copy.deepcopy(self.source)
        d["replications"] = self.replications
        d["base_seed"] = self.base_seed
        return d


PRESETS = {
    "table1": {
        "problem": "example1",
        "schedules": [
            {"scheme": "ac_vssa", "a": [4, 5, 6, 7, 8], "budget": 10000},
            {"scheme": "msa", "budget": 10000, "gamma0": 0.5},
        ],
        "replications": 20,
        "base_seed": 0,
    },
    "table2": {
        "problem": {"builtin": "example2", "n": list(EXAMPLE2_DIMS)},
        "schedules": [{"scheme": "ac_vssa", "a": 7, "budget": 10000}],
        "replications": 20,
        "base_seed": 0,
    },
}


def _fail(where, msg):
    raise ConfigError(f"{where}: {msg}")


def _body(d, where):
    if not isinstance(d, dict) or "type" not in d:
        _fail(where, "expected an object with a 'type' field")
    kind = d["type"]
    vol = d.get("volume")
    try:
        if kind == "ball":
            return Ball(int(d["n"]), float(d.get("radius", 1.0)), volume=vol)
        if kind == "box":
            return Box(d["half_widths"], volume=vol)
        if kind == "ellipsoid":
            return Ellipsoid(d["shape"], volume=vol)
        if kind == "sym_polytope":
            return SymPolytope(d["rows"], volume=vol)
    except KeyError as exc:
        _fail(where, f"missing field {exc}")
    except (GeometryError, TypeError, ValueError) as exc:
        _fail(where, str(exc))
    _fail(f"{where}.type", f"unknown body type {kind!r}")


def _feasible(d, where):
    if not isinstance(d, dict) or "type" not in d:
        _fail(where, "expected an object with a 'type' field")
    try:
        if d["type"] == "polytope":
            return PolytopeSet(d["A"], d["b"])
        if d["type"] == "ball":
            return BallSet(d["center"], float(d["radius"]))
    except KeyError as exc:
        _fail(where, f"missing field {exc}")
    except (GeometryError, TypeError, ValueError) as exc:
        _fail(where, str(exc))
    _fail(f"{where}.type", f"unknown feasible-set type {d['type']!r}")


def _problem_params(d, where):
    out = {}
    for key in ("m", "s", "eps"):
        if key in d:
            try:
                out[key] = float(d[key])
            except (TypeError, ValueError):
                _fail(f"{where}.{key}", "expected a number")
    return out


def _problems(entry, where):
    """Expand one problem entry into ``[(name, spec)]``."""
    if isinstance(entry, str):
        entry = {"builtin": entry}
    if not isinstance(entry, dict):
        _fail(where, "expected a built-in name or an object")
    params = _problem_params(entry, where)
    try:
        builtin = entry.get("builtin")
        if builtin == "example1":
            return [("example1", example1(**params))]
        if builtin == "example2":
            dims = entry.get("n", list(EXAMPLE2_DIMS))
            dims = dims if isinstance(dims, list) else [dims]
            return [(f"example2_n{int(n)}", example2(int(n), **params)) for n in dims]
        if builtin is not None:
            _fail(f"{where}.builtin", f"unknown built-in problem {builtin!r}")
        body = _body(entry.get("body"), f"{where}.body")
        feas = _feasible(entry.get("feasible"), f"{where}.feasible")
        name = str(entry.get("name", "custom"))
        return [(name, ProblemSpec(body, feas, name=name, **params))]
    except (GeometryError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        _fail(where, str(exc))


def _schedules(entries, where):
    if not isinstance(entries, list) or not entries:
        _fail(where, "expected a non-empty list of schedules")
    out = []
    for i, d in enumerate(entries):
        w = f"{where}[{i}]"
        if not isinstance(d, dict):
            _fail(w, "expected an object")
        scheme = d.get("scheme")
        if scheme not in (MSA, AC_VSSA):
            _fail(f"{w}.scheme", f"expected 'msa' or 'ac_vssa', got {scheme!r}")
        a_vals = d.get("a")
        a_list = a_vals if isinstance(a_vals, list) else [a_vals]
        for a in a_list:
            kw = {k: d[k] for k in ("budget", "gamma0", "beta", "eta", "lipschitz",
                                    "random_start") if k in d}
            if a is not None:
                kw["a"] = float(a)
            try:
                out.append(SolverSchedule(scheme, **kw))
            except ScheduleError as exc:
                field_name = ".a" if "a >" in str(exc) else ""
                _fail(f"{w}{field_name}", str(exc))
            except TypeError as exc:
                _fail(w, str(exc))
    return out


def _int_field(d, key, default, where, minimum=None):
    val = d.get(key, default)
    if isinstance(val, bool) or not isinstance(val, int):
        _fail(f"{where}{key}", f"expected an integer, got {val!r}")
    if minimum is not None and val < minimum:
        _fail(f"{where}{key}", f"must be >= {minimum}, got {val}")
    return val


def parse_config(d):
    """Validate a configuration mapping and build an :class:`ExperimentConfig`."""
    if not isinstance(d, dict):
        raise ConfigError("config: expected a JSON object at top level")
    if "problem" in d and "problems" in d:
        _fail("config", "give either 'problem' or 'problems', not both")
    entries = d.get("problems", [d.get("problem", "example1")])
    if not isinstance(entries, list) or not entries:
        _fail("problems", "expected a non-empty list")
    problems = []
    for i, e in enumerate(entries):
        problems += _problems(e, f"problems[{i}]" if "problems" in d else "problem")
    schedules = _schedules(d.get("schedules"), "schedules")

    ref = d.get("reference", {})
    if not isinstance(ref, dict):
        _fail("reference", "expected an object")
    mode = ref.get("mode", "compute")
    if mode not in ("compute", "load"):
        _fail("reference.mode", f"expected 'compute' or 'load', got {mode!r}")
    reference = ReferenceConfig(
        mode=mode,
        batch=_int_field(ref, "batch", 1_000_000, "reference.", 1),
        max_steps=_int_field(ref, "max_steps", 500, "reference.", 1),
        tol=float(ref.get("tol", 1e-6)),
        eval_samples=_int_field(ref, "eval_samples", 10_000_000, "reference.", 1),
        path=ref.get("path"),
        cache_dir=ref.get("cache_dir"),
    )
    if mode == "load" and not (reference.path or reference.cache_dir):
        _fail("reference.path", "mode 'load' needs a path or cache_dir")

    cfg = ExperimentConfig(
        problems=problems,
        schedules=schedules,
        replications=_int_field(d, "replications", 20, "", 1),
        base_seed=_int_field(d, "base_seed", 0, "", 0),
        reference=reference,
        metric_samples=_int_field(d, "metric_samples", 1_000_000, "", 1),
        lipschitz_pairs=_int_field(d, "lipschitz_pairs", 1000, "", 1),
        lipschitz_batch=_int_field(d, "lipschitz_batch", 10_000, "", 1),
        gate_samples=_int_field(d, "gate_samples", 100_000, "", 2),
        gate=bool(d.get("gate", True)),
        workers=_int_field(d, "workers", 1, "", 1),
        output=str(d.get("output", "out")),
        source=copy.deepcopy(d),
    )
    return cfg


def load_config(path):
    """Read a JSON config file (or a preset name such as ``"table1"``)."""
    if not os.path.exists(path) and path in PRESETS:
        return parse_config(copy.deepcopy(PRESETS[path]))
    if not os.path.exists(path) and path in ("example1", "example2"):
        return parse_config({"problem": path, "schedules": PRESETS["table1"]["schedules"]})
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_config(d)
