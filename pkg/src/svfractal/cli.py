"""Batch front end: ``svfractal <command> --config <path> [--out <dir>] [--seed <int>]``.

Commands are build, dimension, approx, ifs and check. The config is one
YAML or JSON document with ``schema: 1``. Every run writes its CSV tables and
a ``report.json`` into the output directory, atomically, and prints a short
summary to stdout.

Exit codes: 0 success, 2 invalid config or inputs, 3 numerical failure,
4 capacity budget exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from . import approx, graph_dim, rb_fractal, sampling
from .compact_set import (
    CompactSet,
    format_set,
    hausdorff,
    minkowski_add,
    norm,
    product,
    scale,
)
from .errors import (
    CapacityExceeded,
    ConvexityRequired,
    DegenerateFit,
    DegreeCapExceeded,
    DomainError,
    EndpointNotSingleton,
    IncompatibleBase,
    NoConvergence,
    OrderViolated,
    PointNotOnGrid,
)
from .sv_map import ScalarFn, SetValuedMap, envelope, singleton

log = logging.getLogger("svfractal")

COMMANDS = ("build", "dimension", "approx", "ifs", "check")
SUITES = ("hausdorff_axioms", "note2", "lemma513", "perturbation", "constrained", "operator_lipschitz")
EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_CAPACITY = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


# --------------------------------------------------------------------------
# config

@dataclass
class ExperimentConfig:
    command: str
    raw: dict
    F: SetValuedMap | None = None
    base: rb_fractal.BaseFunctionSpec | None = None
    partition: rb_fractal.Partition | None = None
    alpha: float = 0.0
    depth: int = 6
    tol: float = rb_fractal.DEFAULT_TOL
    tol_compat: float = rb_fractal.DEFAULT_TOL_COMPAT
    max_points: int = rb_fractal.DEFAULT_MAX_POINTS
    section: dict = field(default_factory=dict)

    def system(self, F: SetValuedMap | None = None, base=None) -> rb_fractal.FractalSystem:
        F = F or self.F
        if F is None:
            raise ConfigError("config needs a 'map' section")
        S = rb_fractal.build_base(F, base or self.base or rb_fractal.BaseFunctionSpec("I"), self.tol_compat)
        partition = self.partition or rb_fractal.Partition.uniform(3, *F.domain)
        return rb_fractal.FractalSystem(F, S, partition, self.alpha)


def _need(d: dict, key: str, kind=None):
    if key not in d:
        raise ConfigError(f"missing config key {key!r}")
    return d[key] if kind is None else kind(d[key])


def _map(obj, what="map") -> SetValuedMap:
    if not isinstance(obj, dict) or "family" not in obj:
        raise ConfigError(f"{what} must be a mapping with a 'family' key")
    try:
        return SetValuedMap.from_dict(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad {what} descriptor: {exc}") from exc


def _partition(obj, domain) -> rb_fractal.Partition:
    if isinstance(obj, dict):
        return rb_fractal.Partition.uniform(int(_need(obj, "uniform")), *domain)
    return rb_fractal.Partition(tuple(float(x) for x in obj))


def load_config(path: str | Path, command: str) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    return parse_config(raw, command)


def parse_config(raw: Any, command: str) -> ExperimentConfig:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    if raw.get("schema") != 1:
        raise ConfigError("config must declare schema: 1")
    if raw.get("command", command) != command:
        raise ConfigError(f"config is for {raw['command']!r}, not {command!r}")
    cfg = ExperimentConfig(command, raw, section=dict(raw.get(command) or {}))
    try:
        if "map" in raw:
            cfg.F = _map(raw["map"])
        if "base" in raw:
            cfg.base = rb_fractal.BaseFunctionSpec.from_dict(raw["base"])
        if "partition" in raw:
            domain = cfg.F.domain if cfg.F else (0.0, 1.0)
            cfg.partition = _partition(raw["partition"], domain)
        cfg.alpha = float(raw.get("alpha", 0.0))
        cfg.depth = int(raw.get("depth", 6))
        cfg.tol = float(raw.get("tol", rb_fractal.DEFAULT_TOL))
        cfg.tol_compat = float(raw.get("tol_compat", rb_fractal.DEFAULT_TOL_COMPAT))
        cfg.max_points = int(float(raw.get("max_points", rb_fractal.DEFAULT_MAX_POINTS)))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if not abs(cfg.alpha) < 1:
        raise ConfigError(f"|alpha| must be < 1, got {cfg.alpha}")
    if cfg.depth < 0:
        raise ConfigError("depth must be >= 0")
    if not cfg.tol > 0:
        raise ConfigError("tol must be > 0")
    return cfg


# --------------------------------------------------------------------------
# output

@dataclass
class RunReport:
    command: str
    config: dict
    seed: int
    status: str = "ok"
    exit_code: int = EXIT_OK
    wall_time: float = 0.0
    results: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    manifest: list[str] = field(default_factory=list)
    error: str | None = None

    def to_dict(self) -> dict:
        return {"command": self.command, "status": self.status, "exit_code": self.exit_code,
                "seed": self.seed, "wall_time": self.wall_time, "results": self.results,
                "warnings": self.warnings, "manifest": self.manifest, "error": self.error,
                "config": self.config}


class Output:
    """Atomic writer for one run directory; records every file it writes."""

    def __init__(self, out_dir: str | Path, report: RunReport):
        self.dir = Path(out_dir)
        self.report = report

    def _write(self, name: str, text: str):
        self.dir.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, self.dir / name)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        if name not in self.report.manifest and name != "report.json":
            self.report.manifest.append(name)

    def csv(self, name: str, header: tuple, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])
        self._write(name, buf.getvalue())

    def json(self, name: str, obj):
        self._write(name, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _cell(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, CompactSet):
        return format_set(obj)
    return obj


# --------------------------------------------------------------------------
# commands

def run_build(cfg: ExperimentConfig, out: Output, seed: int):
    sec = cfg.section
    system = cfg.system()
    t0 = time.perf_counter()
    grid = rb_fractal.evaluate_fractal(system, cfg.depth, cfg.tol, cfg.tol_compat, cfg.max_points)
    res = rb_fractal.residual(system, grid)
    results = {"points": len(grid), "depth": cfg.depth, "alpha": system.alpha, "tol": cfg.tol,
               "residual": res, "residual_limit": 4 * cfg.tol,
               "compatibility_gap": rb_fractal.check_compatibility(system),
               "endpoint_first": grid.sets[0], "endpoint_last": grid.sets[-1],
               "build_seconds": time.perf_counter() - t0}
    if sec.get("verify_oracle", False):
        oracle = rb_fractal.picard_oracle(system, cfg.depth, cfg.tol, max_points=cfg.max_points)
        results["oracle_distance"] = grid.sup_distance(oracle)
        results["oracle_iterations"] = len(oracle.history)
    lhs, rhs = rb_fractal.perturbation_gap(system, grid)
    results["perturbation_lhs"], results["perturbation_rhs"] = lhs, rhs
    out.csv("grid.csv", ("address", "u", "part_index", "lo", "hi"), grid.csv_rows())
    out.report.warnings.append("perturbation_lhs and perturbation_rhs are grid estimates (is_lower_bound)")
    out.report.results.update(results)
    if res > 4 * cfg.tol:
        raise NumericalFailure(f"residual {res:.3g} exceeds 4*tol = {4 * cfg.tol:.3g}")


def _etas(sec: dict) -> list[float]:
    spec = sec.get("eta", {"base": 2, "j_min": 3, "j_max": 9})
    if isinstance(spec, dict):
        etas = graph_dim.eta_schedule(float(spec.get("base", 2)), int(_need(spec, "j_min")), int(_need(spec, "j_max")))
    else:
        etas = [float(e) for e in spec]
    if not etas or any(e <= 0 for e in etas):
        raise ConfigError("eta values must be positive")
    return etas


def run_dimension(cfg: ExperimentConfig, out: Output, seed: int):
    sec = cfg.section
    F = cfg.F
    if F is None:
        raise ConfigError("dimension needs a 'map' section")
    method = sec.get("method", "grid_box")
    etas = _etas(sec)
    grid_n = int(sec.get("grid_n", 513))
    res = out.report.results
    if method == "grid_box":
        spacing = float(sec.get("set_spacing", min(etas) / 2))
        cloud = graph_dim.standard_graph_cloud(F, grid_n, spacing, cfg.max_points * 5)
        table = graph_dim.box_count_table(cloud, etas)
        res["cloud_points"] = len(cloud)
    elif method == "net_cover":
        cloud = graph_dim.new_graph_cloud(F, grid_n)
        table = graph_dim.net_count_table(cloud, etas)
        res["cloud_points"] = len(cloud)
        res["lipschitz_estimate"] = graph_dim.lipschitz_estimate(F, grid_n)
        out.report.warnings.append("net_cover counts bracket covering numbers within a factor-2 scale shift")
    elif method == "range_sum":
        samples = int(sec.get("samples", 16))
        rows = []
        for eta in etas:
            lo, hi, _ = graph_dim.range_sum_bounds(F, eta, samples)
            rows.append((eta, lo, hi))
        out.csv("range_bounds.csv", ("eta", "lower", "upper"), rows)
        table = graph_dim.BoxCountTable([r[0] for r in rows], [r[2] for r in rows], "range_sum_upper")
        out.report.warnings.append("range maxima are sampled (lower estimates of the sup)")
    else:
        raise ConfigError(f"unknown dimension method {method!r}")
    out.csv("box_counts.csv", ("eta", "count", "method"), table.csv_rows())
    est = graph_dim.fit_dimension(table)
    out.json("dimension.json", est.to_dict())
    res.update({"method": method, "eta": table.eta, "count": table.count, **est.to_dict()})


def run_approx(cfg: ExperimentConfig, out: Output, seed: int):
    sec = cfg.section
    if cfg.F is None:
        raise ConfigError("approx needs a 'map' section")
    eps = float(_need(sec, "epsilon"))
    if not eps > 0:
        raise ConfigError("epsilon must be > 0")
    rep = approx.approximate_within(
        cfg.F, eps, base=cfg.base, depth=cfg.depth, partition=cfg.partition,
        grid_n=int(sec.get("grid_n", 257)), n_max=int(sec.get("n_max", 4096)),
        alpha_fraction=float(sec.get("alpha_fraction", 0.9)), tol=cfg.tol)
    d = rep.to_dict()
    out.json("approx_report.json", d)
    out.csv("approx_report.csv", ("epsilon", "n", "alpha", "achieved", "partition_points"),
            [(rep.epsilon, rep.degree, rep.alpha, rep.achieved, " ".join(map(repr, rep.partition_points)))])
    out.csv("fractal_polynomial.csv", ("address", "u", "part_index", "lo", "hi"), rep.fractal.csv_rows())
    out.report.results.update(d)
    out.report.warnings.append("achieved and bernstein_error are grid estimates (is_lower_bound)")
    if not rep.success:
        raise NumericalFailure(f"achieved {rep.achieved:.3g} >= epsilon {eps:.3g}")


def run_ifs(cfg: ExperimentConfig, out: Output, seed: int):
    sec = cfg.section
    steps = int(sec.get("steps", 20))
    if steps < 1:
        raise ConfigError("steps must be >= 1")
    system = cfg.system()
    target = rb_fractal.evaluate_fractal(system, cfg.depth, cfg.tol, cfg.tol_compat, cfg.max_points)
    ifs = graph_dim.IFSSystem(system)
    init = sec.get("init", "zero")
    stride = int(sec.get("init_stride", 1))
    us = target.u[::stride]
    if init == "target":
        cloud = graph_dim.GraphCloud(us, target.sets[::stride])
    elif init == "zero":
        cloud = graph_dim.GraphCloud(us, [CompactSet.point(0.0)] * len(us))
    elif isinstance(init, dict) and "set" in init:
        from .compact_set import set_from_obj
        cloud = graph_dim.GraphCloud(us, [set_from_obj(init["set"])] * len(us))
    else:
        raise ConfigError("ifs.init must be 'zero', 'target' or {set: ...}")
    run = graph_dim.ifs_iterate(ifs, cloud, steps, target, cfg.max_points)
    ratios = [math.nan] + run.ratios
    out.csv("ifs_distances.csv", ("step", "distance", "ratio"),
            [(k, d, r) for k, (d, r) in enumerate(zip(run.distances, ratios))])
    out.csv("ifs_cloud.csv", ("u", "part_index", "lo", "hi"), run.cloud.csv_rows())
    gap = float(np.max(np.diff(target.u)))
    out.report.results.update({
        "steps": steps, "final_distance": run.distances[-1], "delta_prune": run.delta_prune,
        "grid_gap": gap, "contraction": ifs.contraction, "cloud_size": len(run.cloud),
        "bounds": graph_dim.dim_bounds(ifs).__dict__,
    })


# -- check suites ---------------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    counterexample: dict | None = None


def _suite_hausdorff(cfg, rng, trials) -> list[Check]:
    sym = ident = True
    bad = None
    worst_tri = 0.0
    for _ in range(trials):
        A, B, C = (sampling.random_set(rng) for _ in range(3))
        ab, ba = hausdorff(A, B), hausdorff(B, A)
        sym &= ab == ba
        ident &= hausdorff(A, A) == 0.0 and ab >= 0
        excess = hausdorff(A, C) - hausdorff(A, B) - hausdorff(B, C)
        worst_tri = max(worst_tri, excess)
        if excess > 1e-10 and bad is None:
            bad = {"A": A, "B": B, "C": C, "excess": excess}
    return [Check("symmetry", sym), Check("identity", ident),
            Check("triangle", worst_tri <= 1e-10, f"worst excess {worst_tri:.3g}", bad)]


def _suite_note2(cfg, rng, trials) -> list[Check]:
    add_worst = scale_worst = 0.0
    bad = None
    for _ in range(trials):
        A, B, C, D = (sampling.random_set(rng) for _ in range(4))
        lam = float(rng.uniform(-3, 3))
        e = hausdorff(minkowski_add(A, C), minkowski_add(B, D)) - hausdorff(A, B) - hausdorff(C, D)
        add_worst = max(add_worst, e)
        if e > 1e-10 and bad is None:
            bad = {"A": A, "B": B, "C": C, "D": D, "excess": e}
        s = abs(hausdorff(scale(lam, A), scale(lam, B)) - abs(lam) * hausdorff(A, B))
        scale_worst = max(scale_worst, s)
    return [Check("sum_inequality", add_worst <= 1e-10, f"worst excess {add_worst:.3g}", bad),
            Check("scale_homogeneity", scale_worst <= 1e-10, f"worst gap {scale_worst:.3g}")]


def _suite_lemma513(cfg, rng, trials) -> list[Check]:
    worst = 0.0
    bad = None
    for _ in range(trials):
        A, B, C = (sampling.random_set(rng, span=3.0) for _ in range(3))
        e = hausdorff(product(A, B), product(C, B)) - norm(B) * hausdorff(A, C)
        worst = max(worst, e)
        if e > 1e-10 and bad is None:
            bad = {"A": A, "B": B, "C": C, "excess": e}
    return [Check("product_bound", worst <= 1e-10, f"worst excess {worst:.3g}", bad)]


def _suite_perturbation(cfg, rng, trials) -> list[Check]:
    checks = []
    systems = []
    if cfg.F is not None:
        systems.append(("config", cfg.system()))
    for k in range(min(trials, 25)):
        systems.append((f"random_{k}", sampling.random_system(rng, convex=bool(k % 2))))
    for name, s in systems:
        grid = rb_fractal.evaluate_fractal(s, min(cfg.depth, 5), cfg.tol)
        lhs, rhs = rb_fractal.perturbation_gap(s, grid)
        ok = lhs <= rhs + 4 * cfg.tol
        checks.append(Check(f"perturbation[{name}]", ok, f"lhs={lhs!r} rhs={rhs!r}",
                            None if ok else {"lhs": lhs, "rhs": rhs, "alpha": s.alpha}))
    return checks


def _suite_constrained(cfg, rng, trials) -> list[Check]:
    sec = cfg.section
    if "lower" in sec:
        F, G = _map(sec["lower"], "check.lower"), _map(sec["upper"], "check.upper")
    else:
        F = singleton(ScalarFn.const(0.0))
        G = envelope(ScalarFn.poly(0.0, -1.0, 1.0), ScalarFn.poly(0.0, 1.0, -1.0))
    alpha = cfg.alpha if "alpha" in cfg.raw else 0.4
    partition = cfg.partition or rb_fractal.Partition.uniform(3, *F.domain)
    ok = rb_fractal.constrained_check(F, G, partition, alpha, cfg.depth, float(sec.get("slack", 1e-8)), tol=cfg.tol)
    return [Check("containment", ok, f"alpha={alpha} depth={cfg.depth}")]


def _suite_operator_lipschitz(cfg, rng, trials) -> list[Check]:
    checks = []
    for k in range(min(trials, 10)):
        F, G, S, partition, alpha = sampling.random_shared_base_pair(rng)
        d_in, d_out = rb_fractal.fractal_operator_gap(F, G, partition, S, alpha, min(cfg.depth, 5), cfg.tol)
        bound = d_in / (1 - abs(alpha)) + 4 * cfg.tol
        checks.append(Check(f"lipschitz[{k}]", d_out <= bound, f"in={d_in!r} out={d_out!r} bound={bound!r}",
                            None if d_out <= bound else {"alpha": alpha, "in": d_in, "out": d_out}))
    return checks


SUITE_RUNNERS: dict[str, Callable] = {
    "hausdorff_axioms": _suite_hausdorff,
    "note2": _suite_note2,
    "lemma513": _suite_lemma513,
    "perturbation": _suite_perturbation,
    "constrained": _suite_constrained,
    "operator_lipschitz": _suite_operator_lipschitz,
}


def run_check(cfg: ExperimentConfig, out: Output, seed: int):
    sec = cfg.section
    suites = sec.get("suite", "hausdorff_axioms")
    suites = [suites] if isinstance(suites, str) else list(suites)
    for s in suites:
        if s not in SUITE_RUNNERS:
            raise ConfigError(f"unknown suite {s!r}; choose from {', '.join(SUITES)}")
    trials = int(sec.get("trials", 1000))
    rows, failures = [], []
    for s in suites:
        rng = np.random.default_rng(seed)
        for c in SUITE_RUNNERS[s](cfg, rng, trials):
            rows.append((s, c.name, "pass" if c.passed else "fail", c.detail))
            if not c.passed:
                failures.append({"suite": s, "check": c.name, "detail": c.detail,
                                 "counterexample": c.counterexample})
    out.csv("checks.csv", ("suite", "check", "result", "detail"), rows)
    if failures:
        out.json("counterexamples.json", failures)
    out.report.results.update({"suites": suites, "trials": trials, "checks": len(rows),
                               "failed": len(failures)})
    out.report.results["lines"] = [f"{s}.{n}: {r} {d}".rstrip() for s, n, r, d in rows]
    if failures:
        raise NumericalFailure(f"{len(failures)} check(s) failed")


RUNNERS = {"build": run_build, "dimension": run_dimension, "approx": run_approx,
           "ifs": run_ifs, "check": run_check}


# --------------------------------------------------------------------------
# entry point

def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, CapacityExceeded):
        return EXIT_CAPACITY
    if isinstance(exc, (NumericalFailure, NoConvergence, DegreeCapExceeded, DegenerateFit)):
        return EXIT_NUMERIC
    if isinstance(exc, (ConfigError, IncompatibleBase, EndpointNotSingleton, OrderViolated,
                        ConvexityRequired, DomainError, PointNotOnGrid, ValueError, KeyError, TypeError)):
        return EXIT_INVALID
    raise exc


def run(command: str, config_path: str | Path, out_dir: str | Path, seed: int = 0) -> RunReport:
    """Run one experiment and write its outputs; never raises for expected failures."""
    report = RunReport(command, {}, seed)
    out = Output(out_dir, report)
    t0 = time.perf_counter()
    log.info("%s: config %s, output %s, seed %d", command, config_path, out_dir, seed)
    try:
        cfg = load_config(config_path, command)
        report.config = cfg.raw
        RUNNERS[command](cfg, out, seed)
    except Exception as exc:  # mapped to exit codes below
        report.exit_code = _exit_code(exc)
        report.status = "failed"
        report.error = f"{type(exc).__name__}: {exc}"
    report.wall_time = time.perf_counter() - t0
    out.json("report.json", report.to_dict())
    return report


def _summary(report: RunReport) -> str:
    lines = [f"svfractal {report.command}: {report.status} (exit {report.exit_code}, {report.wall_time:.2f}s)"]
    if report.error:
        lines.append(f"  error: {report.error}")
    for k, v in report.results.items():
        if k == "lines":
            lines.extend(f"  {line}" for line in v)
        elif not isinstance(v, (list, dict)):
            lines.append(f"  {k}: {v}")
    for w in report.warnings:
        lines.append(f"  warning: {w}")
    if report.manifest:
        lines.append(f"  files: {', '.join(report.manifest)} (+ report.json)")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="svfractal", description="Set-valued fractal functions: build, approximate, measure.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="YAML or JSON experiment config (schema: 1)")
    p.add_argument("--out", default="svfractal-out", help="output directory (default: svfractal-out)")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized check suites")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if not Path(args.config).is_file():
        print(f"svfractal: config file not found: {args.config}", file=sys.stderr)
        return EXIT_INVALID
    report = run(args.command, args.config, args.out, args.seed)
    print(_summary(report))
    return report.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
