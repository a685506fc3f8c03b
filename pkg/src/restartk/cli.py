"""Config-driven experiment runner.

    restartk run <config.json> [--threads N] [--out DIR] [--verbose]

A config is a single JSON object selecting a process, a restart
specification and one task; see the schema below.  The same config and seed
produce byte-identical report files.  RESTARTK_SEED overrides the config
seed (environment beats file).  Exit codes: 0 success, 2 validation error,
3 numerical failure, 4 property-check failure, 1 unexpected crash.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import jsonschema

from . import analysis, simulation
from .distributions import FiniteSupport, PointMass, exponential, gaussian, lognormal
from .errors import (
    ConfigError,
    DomainError,
    EtaNotLessThanLambda,
    QuadratureFailure,
    RestartkError,
    SingularityAtOrigin,
    TailBoundViolated,
    UnsupportedTarget,
)
from .kernels import RestartedProcess, RestartSpec
from .processes import BrownianWithDrift, GeometricBrownian, ctmc_from_dict, ctmc_from_json
from .reporting import table_payload, write_csv, write_json
from .spaces import FiniteSet, Interval, Subset

_NUMBER_OR_INF = {"oneOf": [{"type": "number"}, {"enum": ["inf", "-inf"]}]}

_DISTRIBUTION = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"type": {"const": "point"}, "x": {"type": "number"}},
            "required": ["type", "x"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "finite"},
                "points": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "items": {"type": "number"},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                    "minItems": 1,
                },
            },
            "required": ["type", "points"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "gaussian"},
                "mean": {"type": "number"},
                "std": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["type", "mean", "std"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "exponential"},
                "rate": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["type", "rate"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "lognormal"},
                "log_mean": {"type": "number"},
                "log_std": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["type", "log_mean", "log_std"],
            "additionalProperties": False,
        },
    ]
}

_TARGETS = {
    "type": "array",
    "items": {"type": "array", "items": _NUMBER_OR_INF, "minItems": 1},
    "minItems": 1,
}

_TASKS = [
    {
        "type": "object",
        "properties": {
            "name": {"const": "kernel-eval"},
            "t": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
            "x": {"type": "number"},
            "targets": _TARGETS,
            "density_points": {"type": "array", "items": {"type": "number"}},
        },
        "required": ["name", "t", "x", "targets"],
        "additionalProperties": False,
    },
    {
        "type": "object",
        "properties": {
            "name": {"const": "stationary"},
            "targets": _TARGETS,
            "density_points": {"type": "array", "items": {"type": "number"}},
            "moments": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        },
        "required": ["name", "targets"],
        "additionalProperties": False,
    },
    {
        "type": "object",
        "properties": {
            "name": {"const": "simulate"},
            "horizon": {"type": "number", "exclusiveMinimum": 0},
            "record_grid": {"type": "array", "items": {"type": "number"}, "minItems": 1},
            "n_paths": {"type": "integer", "minimum": 1},
            "initial": _DISTRIBUTION,
        },
        "required": ["name", "horizon", "record_grid", "n_paths", "initial"],
        "additionalProperties": False,
    },
    {
        "type": "object",
        "properties": {
            "name": {"const": "moments"},
            "k": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            "x": {"type": "number"},
            "t": {
                "type": "array",
                "items": {"type": "number", "exclusiveMinimum": 0},
                "minItems": 1,
            },
            "n_paths": {"type": "integer", "minimum": 2, "default": 10000},
            "monte_carlo": {"type": "boolean", "default": True},
        },
        "required": ["name", "k", "x", "t"],
        "additionalProperties": False,
    },
    {
        "type": "object",
        "properties": {
            "name": {"const": "ergodicity"},
            "x": {"type": "number"},
            "t_grid": {
                "type": "array",
                "items": {"type": "number", "minimum": 0},
                "minItems": 1,
            },
            "targets": _TARGETS,
        },
        "required": ["name", "x", "t_grid", "targets"],
        "additionalProperties": False,
    },
    {
        "type": "object",
        "properties": {
            "name": {"const": "sweep-lambda"},
            "lambdas": {
                "type": "array",
                "items": {"type": "number", "exclusiveMinimum": 0},
                "minItems": 1,
            },
            "targets": _TARGETS,
        },
        "required": ["name", "lambdas", "targets"],
        "additionalProperties": False,
    },
]

SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": 1},
        "seed": {"type": "integer", "minimum": 0},
        "process": {
            "oneOf": [
                {
                    "type": "object",
                    "properties": {
                        "type": {"const": "bm"},
                        "mu": {"type": "number"},
                        "sigma": {"type": "number", "exclusiveMinimum": 0},
                    },
                    "required": ["type", "mu", "sigma"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {
                        "type": {"const": "gbm"},
                        "mu": {"type": "number"},
                        "sigma": {"type": "number", "exclusiveMinimum": 0},
                    },
                    "required": ["type", "mu", "sigma"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {
                        "type": {"const": "ctmc"},
                        "Q": {
                            "type": "array",
                            "items": {"type": "array", "items": {"type": "number"}},
                        },
                        "values": {"type": "array", "items": {"type": "number"}},
                        "file": {"type": "string"},
                    },
                    "required": ["type"],
                    "additionalProperties": False,
                },
            ]
        },
        "restart": {
            "type": "object",
            "properties": {
                "rate": {"type": "number", "exclusiveMinimum": 0},
                "nu": _DISTRIBUTION,
            },
            "required": ["rate", "nu"],
            "additionalProperties": False,
        },
        "task": {"oneOf": _TASKS},
        "output": {
            "type": "object",
            "properties": {
                "format": {"enum": ["csv", "json"]},
                "path": {"type": "string"},
            },
            "required": ["format", "path"],
            "additionalProperties": False,
        },
        "tolerances": {
            "type": "object",
            "properties": {
                "quad_rel_tol": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "required": ["schema_version", "process", "restart", "task", "output"],
    "additionalProperties": False,
}


def exit_code_for(exc):
    """Map an exception to the documented process exit code."""
    numerical = (TailBoundViolated, SingularityAtOrigin, EtaNotLessThanLambda, ArithmeticError)
    if isinstance(exc, numerical):
        return 3
    if isinstance(exc, (ConfigError, DomainError, UnsupportedTarget, jsonschema.ValidationError)):
        return 2
    if isinstance(exc, (OSError, ValueError)):
        return 2
    return 1


def _schema_error_message(err):
    path = ".".join(str(p) for p in err.absolute_path) or "(top level)"
    return f"config error at {path}: {err.message}"


def build_process(spec, config_dir):
    kind = spec["type"]
    if kind == "bm":
        return BrownianWithDrift(spec["mu"], spec["sigma"])
    if kind == "gbm":
        return GeometricBrownian(spec["mu"], spec["sigma"])
    if "file" in spec:
        if "Q" in spec or "values" in spec:
            raise ConfigError("ctmc process: give either 'file' or inline 'Q', not both")
        return ctmc_from_json(os.path.join(config_dir, spec["file"]))
    if "Q" not in spec:
        raise ConfigError("ctmc process needs 'Q' (inline) or 'file'")
    data = {"Q": spec["Q"]}
    if "values" in spec:
        data["values"] = spec["values"]
    return ctmc_from_dict(data)


def build_distribution(spec, space):
    kind = spec["type"]
    finite = isinstance(space, FiniteSet)
    if kind == "point":
        x = spec["x"]
        if finite:
            if x != int(x):
                raise ConfigError(f"point distribution on a finite space needs an integer index, got {x}")
            x = int(x)
        dist = PointMass(x)
    elif kind == "finite":
        pts = []
        for s, w in spec["points"]:
            if finite:
                if s != int(s):
                    raise ConfigError(f"finite-space states are integer indices, got {s}")
                s = int(s)
            pts.append((s, w))
        dist = FiniteSupport(tuple(pts))
    elif kind == "gaussian":
        dist = gaussian(spec["mean"], spec["std"])
    elif kind == "exponential":
        dist = exponential(spec["rate"])
    else:
        dist = lognormal(spec["log_mean"], spec["log_std"])
    if not dist.supported_in(space):
        raise ConfigError(f"distribution {dist!r} is not supported in {space!r}")
    return dist


def _parse_bound(v):
    if v == "inf":
        return math.inf
    if v == "-inf":
        return -math.inf
    return float(v)


def build_targets(specs, space):
    targets = []
    for raw in specs:
        if isinstance(space, FiniteSet):
            idx = []
            for v in raw:
                if isinstance(v, str) or v != int(v):
                    raise ConfigError(f"finite-space targets are integer index lists, got {raw}")
                idx.append(int(v))
            targets.append(Subset(idx))
        else:
            if len(raw) != 2:
                raise ConfigError(f"interval target needs [lower, upper], got {raw}")
            targets.append(Interval(_parse_bound(raw[0]), _parse_bound(raw[1])))
    return targets


def _describe(target):
    # comma-free so the descriptor stays one CSV cell
    if isinstance(target, Subset):
        return "{" + " ".join(str(i) for i in sorted(target.indices)) + "}"
    return f"[{target.lower} .. {target.upper}]"


def _state_for(space, x):
    if isinstance(space, FiniteSet):
        if x != int(x):
            raise ConfigError(f"finite-space states are integer indices, got {x}")
        return int(x)
    return float(x)


class _Runner:
    def __init__(self, config, config_dir, threads, verbose):
        self.config = config
        self.threads = threads
        self.verbose = verbose
        self.base = build_process(config["process"], config_dir)
        restart = config["restart"]
        nu = build_distribution(restart["nu"], self.base.space)
        self.proc = RestartedProcess(self.base, RestartSpec(restart["rate"], nu))
        self.seed = self._resolve_seed()
        self.rel_tol = config.get("tolerances", {}).get("quad_rel_tol", 1e-9)

    def _resolve_seed(self):
        env = os.environ.get("RESTARTK_SEED")
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise ConfigError(f"RESTARTK_SEED must be an integer, got {env!r}") from None
            if seed < 0:
                raise ConfigError(f"RESTARTK_SEED must be nonnegative, got {seed}")
            return seed
        return self.config.get("seed", 0)

    def _log(self, msg):
        if self.verbose:
            print(msg, file=sys.stderr)

    def run_task(self, out_path, fmt):
        task = self.config["task"]
        name = task["name"]
        self._log(f"task {name} -> {out_path}")
        handler = {
            "kernel-eval": self.task_kernel_eval,
            "stationary": self.task_stationary,
            "simulate": self.task_simulate,
            "moments": self.task_moments,
            "ergodicity": self.task_ergodicity,
            "sweep-lambda": self.task_sweep,
        }[name]
        return handler(task, out_path, fmt)

    def _emit(self, name, columns, rows, out_path, fmt, extra=None):
        if fmt == "csv":
            write_csv(out_path, columns, rows)
        else:
            payload = table_payload(name, columns, rows)
            if extra:
                payload.update(extra)
            write_json(out_path, payload)

    def task_kernel_eval(self, task, out_path, fmt):
        space = self.proc.space
        x = _state_for(space, task["x"])
        targets = build_targets(task["targets"], space)
        rows = []
        for t in task["t"]:
            for g in targets:
                v = self.proc.transition_probability(t, x, g, rel_tol=self.rel_tol)
                rows.append(("probability", t, _describe(g), v))
            for z in task.get("density_points", []):
                v = self.proc.transition_density(t, x, z, rel_tol=self.rel_tol)
                rows.append(("density", t, str(z), v))
        self._emit("kernel-eval", ["kind", "t", "where", "value"], rows, out_path, fmt)
        return 0

    def task_stationary(self, task, out_path, fmt):
        space = self.proc.space
        targets = build_targets(task["targets"], space)
        rows = []
        for g in targets:
            rows.append(("measure", _describe(g), self.proc.invariant_measure(g, rel_tol=self.rel_tol)))
        for z in task.get("density_points", []):
            rows.append(("density", str(z), self.proc.invariant_density(z, rel_tol=self.rel_tol)))
        for k in task.get("moments", []):
            rows.append((f"moment_{k}", "stationary", self._stationary_moment(k)))
        self._emit("stationary", ["kind", "where", "value"], rows, out_path, fmt)
        return 0

    def _stationary_moment(self, k):
        if isinstance(self.base, BrownianWithDrift):
            if k == 1:
                return analysis.bm_stationary_moments(self.base, self.proc.restart)[0]
            if k == 2:
                return analysis.bm_stationary_moments(self.base, self.proc.restart)[1]
            return analysis.bm_modified_moment(self.base, self.proc.restart, k, math.inf, 0.0)
        if isinstance(self.base, GeometricBrownian):
            v = analysis.gbm_stationary_moment(self.base, self.proc.restart, k)
            return v.description if isinstance(v, analysis.Divergent) else v
        return analysis.ctmc_modified_moment(self.base, self.proc.restart, k, math.inf, 0)

    def task_simulate(self, task, out_path, fmt):
        if fmt != "csv":
            raise ConfigError("simulate writes path logs; output.format must be 'csv'")
        cfg = simulation.PathConfig(
            seed=self.seed,
            horizon=task["horizon"],
            record_grid=tuple(task["record_grid"]),
            n_paths=task["n_paths"],
            initial=build_distribution(task["initial"], self.proc.space),
        )
        simulation.write_path_csv(self.proc, cfg, out_path)
        return 0

    def task_moments(self, task, out_path, fmt):
        space = self.proc.space
        x = _state_for(space, task["x"])
        times = sorted(set(float(t) for t in task["t"]))
        use_mc = task.get("monte_carlo", True)
        ensemble = None
        cfg = None
        if use_mc:
            cfg = simulation.PathConfig(
                seed=self.seed,
                horizon=max(times),
                record_grid=tuple(times),
                n_paths=task.get("n_paths", 10000),
                initial=PointMass(x),
            )
            self._log(f"simulating {cfg.n_paths} paths to t={cfg.horizon}")
            ensemble = simulation.run_ensemble(self.proc, cfg, workers=self.threads)
        columns = ["k", "t", "analytic", "empirical", "std_error", "n", "threshold", "consistent"]
        rows = []
        for k in task["k"]:
            for t in times:
                emp = None
                if use_mc:
                    emp = simulation.monte_carlo_moment(self.proc, cfg, k, t, ensemble=ensemble)
                rep = analysis.modified_moment(self.proc, k, t, x, empirical=emp, rel_tol=self.rel_tol)
                an = rep.analytic
                rows.append(
                    (
                        k,
                        t,
                        an.description if isinstance(an, analysis.Divergent) else an,
                        emp.estimate if emp else None,
                        emp.std_error if emp else None,
                        emp.n if emp else None,
                        rep.finiteness_threshold,
                        rep.consistent(),
                    )
                )
        self._emit("moments", columns, rows, out_path, fmt)
        return 0

    def task_ergodicity(self, task, out_path, fmt):
        space = self.proc.space
        x = _state_for(space, task["x"])
        targets = build_targets(task["targets"], space)
        report = analysis.ergodicity_check(self.proc, x, task["t_grid"], targets, rel_tol=self.rel_tol)
        cols, rows = report.table()
        self._emit("ergodicity", cols, rows, out_path, fmt, extra={"passed": report.passed})
        if not report.passed:
            print("ergodicity bound violated; see report", file=sys.stderr)
            return 4
        return 0

    def task_sweep(self, task, out_path, fmt):
        space = self.proc.space
        targets = build_targets(task["targets"], space)
        lams = sorted(set(float(l) for l in task["lambdas"]), reverse=True)
        report = analysis.small_lambda_sweep(
            self.base, self.proc.restart.nu, targets, lams, rel_tol=self.rel_tol
        )
        cols, rows = report.table()
        extra = {}
        if report.comparison is not None:
            extra["comparison"] = list(report.comparison)
            extra["fitted_order"] = report.fitted_order
        self._emit("sweep-lambda", cols, rows, out_path, fmt, extra=extra)
        return 0


def run(config_path, threads=None, out_dir=None, verbose=False):
    """Execute one experiment config; returns the process exit code."""
    try:
        with open(config_path) as fh:
            try:
                config = json.load(fh)
            except json.JSONDecodeError as exc:
                print(f"{config_path} is not valid JSON: {exc}", file=sys.stderr)
                return 2
        try:
            jsonschema.validate(config, SCHEMA)
        except jsonschema.ValidationError as exc:
            print(_schema_error_message(exc), file=sys.stderr)
            return 2
        out_path = config["output"]["path"]
        if out_dir is not None and not os.path.isabs(out_path):
            os.makedirs(out_dir, exist_ok=True)
            out_path = os.path.join(out_dir, out_path)
        workers = threads if threads else (os.cpu_count() or 1)
        runner = _Runner(config, os.path.dirname(os.path.abspath(config_path)), workers, verbose)
        return runner.run_task(out_path, config["output"]["format"])
    except Exception as exc:  # map every failure to its documented code
        code = exit_code_for(exc)
        kind = {2: "validation error", 3: "numerical failure", 4: "property-check failure"}.get(
            code, "unexpected error"
        )
        print(f"{kind}: {exc}", file=sys.stderr)
        if code == 1 and not isinstance(exc, RestartkError):
            import traceback

            traceback.print_exc()
        return code


def main(argv=None):
    parser = argparse.ArgumentParser(prog="restartk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="execute an experiment config")
    runp.add_argument("config", help="path to the JSON experiment config")
    runp.add_argument("--threads", type=int, default=None, help="worker cap (default: all cores)")
    runp.add_argument("--out", default=None, help="directory for relative output paths")
    runp.add_argument("--verbose", action="store_true", help="progress to stderr")
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        print("--threads must be at least 1", file=sys.stderr)
        return 2
    return run(args.config, threads=args.threads, out_dir=args.out, verbose=args.verbose)


if __name__ == "__main__":
    sys.exit(main())
