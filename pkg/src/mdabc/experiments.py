"""Replication harness: repeated-sampling tables and contamination sweeps.

Random streams are addressed so that every number is reproducible from
``master_seed`` alone:

* observed data of replication ``r`` come from the reserved observed-data
  stream of ``RngStream(master_seed, replication=r)``;
* method ``i`` of replication ``r`` samples with lane ``i + 1``.

In a sweep every ζ reuses the same replication indices, so the datasets
differ only through the contamination location (common random numbers).
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .distances import DistanceContext, DistanceKind
from .estimators import PosteriorSummary, summarize
from .exceptions import ConfigError, DimensionMismatch, IoFailure, MDABCError
from .measures import Dataset
from .models import ContaminationSpec, ModelSpec, ParameterVector, generate_observed
from .rng import RngStream
from .samplers import SmcConfig, smc_abc

log = logging.getLogger(__name__)

TABLE_BLOCKS = ("means", "std", "cov", "rmse")
MIN_SUCCESS_FRACTION = 0.9


@dataclass(frozen=True)
class MethodSpec:
    """One inference method of an experiment."""

    label: str
    kind: DistanceKind
    m_sim: int
    kde_method: str = "binned"
    grid_points: int = 512
    quantile_coupling: bool = False

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", DistanceKind(self.kind))
        if self.m_sim < 1:
            raise ValueError("m_sim must be positive")

    def context(self, observed: Dataset) -> DistanceContext:
        return DistanceContext.build(self.kind, observed, num_points=self.grid_points,
                                     kde_method=self.kde_method, quantile_coupling=self.quantile_coupling)


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    methods: tuple
    sampler: SmcConfig
    n_replications: int
    theta_true: ParameterVector
    master_seed: int
    zeta_grid: Optional[tuple] = None
    replicate_per_zeta: bool = False
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"method labels must be unique, got {labels}")
        if self.n_replications < 1:
            raise ConfigError("n_replications must be positive")
        if not isinstance(self.theta_true, ParameterVector):
            try:
                object.__setattr__(self, "theta_true", self.model.parameter_vector(self.theta_true))
            except DimensionMismatch as exc:
                raise ConfigError(f"theta_true: {exc}") from None
        if self.theta_true.names != self.model.param_names:
            raise ConfigError(f"theta_true must have coordinates {self.model.param_names}")
        if self.zeta_grid is not None:
            object.__setattr__(self, "zeta_grid", tuple(float(z) for z in self.zeta_grid))
            if self.model.contamination is None:
                raise ConfigError("a zeta sweep needs a contamination block in the model")

    @property
    def labels(self) -> tuple:
        return tuple(m.label for m in self.methods)

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


@dataclass
class MethodRow:
    """Aggregate of one method over the replications."""

    overall_mean: np.ndarray
    avg_posterior_std: np.ndarray
    coverage_pct: np.ndarray
    rmse: np.ndarray
    n_success: int
    valid: bool


@dataclass
class ExperimentReport:
    config: dict
    param_names: tuple
    theta_true: np.ndarray
    labels: tuple
    rows: dict
    replications: list
    runtime: dict = field(default_factory=dict)

    def block(self, name: str) -> dict:
        """``{label: array}`` for one of ``means``, ``std``, ``cov``, ``rmse``."""
        attr = {"means": "overall_mean", "std": "avg_posterior_std", "cov": "coverage_pct", "rmse": "rmse"}[name]
        return {label: getattr(self.rows[label], attr) for label in self.labels}


@dataclass
class SweepReport:
    config: dict
    param_names: tuple
    theta_true: np.ndarray
    labels: tuple
    zeta_grid: tuple
    summaries: list
    runtime: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(zip(self.zeta_grid, self.summaries))

    def curve(self, label: str, coord) -> np.ndarray:
        """Posterior mean of one coordinate across the grid (NaN where a run failed)."""
        j = coord if isinstance(coord, int) else self.param_names.index(coord)
        return np.array([np.nan if s[label] is None else s[label].mean.values[j] for s in self.summaries])


# --------------------------------------------------------------------------
# running
# --------------------------------------------------------------------------

def dataset_digest(data: Dataset) -> str:
    return hashlib.sha256(np.ascontiguousarray(data.values).tobytes()).hexdigest()


def _run_methods(cfg: ExperimentConfig, model: ModelSpec, observed: Dataset, replication: int,
                 sampler: Callable) -> dict:
    digest = dataset_digest(observed)
    out = {"digest": digest, "summaries": {}, "errors": {}, "epsilon": {}, "simulations": {}, "seconds": {}}
    for i, method in enumerate(cfg.methods):
        stream = RngStream(cfg.master_seed, replication=replication, lane=i + 1)
        t0 = time.perf_counter()
        try:
            ctx = method.context(observed)
            cloud = sampler(model.with_m_sim(method.m_sim), ctx, observed, cfg.sampler, stream)
            out["summaries"][method.label] = summarize(cloud)
            out["epsilon"][method.label] = float(cloud.epsilon)
            out["simulations"][method.label] = int(cloud.total_simulations)
        except (MDABCError, ValueError, RuntimeError, FloatingPointError) as exc:
            log.warning("replication %d, method %s failed: %s", replication, method.label, exc)
            out["summaries"][method.label] = None
            out["errors"][method.label] = f"{type(exc).__name__}: {exc}"
        out["seconds"][method.label] = time.perf_counter() - t0
        if dataset_digest(observed) != digest:
            raise AssertionError("observed data changed between methods")
    return out


def _replication_task(args):
    cfg, model, replication, sampler = args
    observed = generate_observed(model, cfg.theta_true, RngStream(cfg.master_seed, replication=replication))
    return _run_methods(cfg, model, observed, replication, sampler)


def _map(tasks, n_workers: int):
    if n_workers <= 1 or len(tasks) < 2:
        return [_replication_task(t) for t in tasks]
    with ProcessPoolExecutor(n_workers) as pool:
        return list(pool.map(_replication_task, tasks))


def aggregate(summaries: list, theta_true: np.ndarray) -> MethodRow:
    """Means/Std/Coverage/RMSE over per-replication summaries (``None`` = failed)."""
    theta_true = np.asarray(theta_true, dtype=float)
    ok = [s for s in summaries if s is not None]
    total = len(summaries)
    valid = total > 0 and len(ok) >= MIN_SUCCESS_FRACTION * total
    if not ok:
        nan = np.full(theta_true.size, np.nan)
        return MethodRow(nan, nan.copy(), nan.copy(), nan.copy(), 0, False)
    means = np.array([s.mean.values for s in ok])
    stds = np.array([s.std for s in ok])
    inside = np.array([(s.ci_low <= theta_true) & (theta_true <= s.ci_high) for s in ok])
    rmse = np.sqrt(np.mean((means - theta_true) ** 2, axis=0))
    row = MethodRow(means.mean(axis=0), stds.mean(axis=0), 100.0 * inside.mean(axis=0), rmse, len(ok), valid)
    if not valid:
        for name in ("overall_mean", "avg_posterior_std", "coverage_pct", "rmse"):
            setattr(row, name, np.full(theta_true.size, np.nan))
    return row


def run_replications(cfg: ExperimentConfig, *, n_workers: int = 1, sampler: Callable = smc_abc) -> ExperimentReport:
    """Run every method on ``cfg.n_replications`` simulated datasets.

    A method whose runs fail in more than 10% of the replications gets a
    row of NaNs with ``valid=False``.  ``sampler`` has the signature of
    :func:`mdabc.samplers.smc_abc`.
    """
    from .config import config_to_dict

    t0 = time.perf_counter()
    tasks = [(cfg, cfg.model, r, sampler) for r in range(cfg.n_replications)]
    results = _map(tasks, n_workers)
    theta = cfg.theta_true.values
    rows = {m.label: aggregate([res["summaries"][m.label] for res in results], theta) for m in cfg.methods}
    return ExperimentReport(config_to_dict(cfg), cfg.model.param_names, theta, cfg.labels, rows, results,
                            {"seconds": time.perf_counter() - t0, "n_workers": n_workers})


def _zeta_model(model: ModelSpec, zeta: float) -> ModelSpec:
    c = model.contamination
    return replace(model, contamination=ContaminationSpec(c.alpha, zeta, c.nu))


def run_zeta_sweep(cfg: ExperimentConfig, *, n_workers: int = 1, sampler: Callable = smc_abc) -> SweepReport:
    """Posterior summaries of every method at each contamination location.

    One dataset per ζ by default; with ``cfg.replicate_per_zeta`` each ζ
    gets ``cfg.n_replications`` datasets and the summary per ζ and method
    holds the across-replication averages of mean, std and the interval
    bounds.
    """
    from .config import config_to_dict

    if cfg.zeta_grid is None:
        raise ConfigError("config has no zeta_grid")
    t0 = time.perf_counter()
    reps = cfg.n_replications if cfg.replicate_per_zeta else 1
    tasks = [(cfg, _zeta_model(cfg.model, z), r, sampler) for z in cfg.zeta_grid for r in range(reps)]
    results = _map(tasks, n_workers)
    summaries = []
    for k in range(len(cfg.zeta_grid)):
        chunk = results[k * reps:(k + 1) * reps]
        per_method = {}
        for label in cfg.labels:
            got = [res["summaries"][label] for res in chunk]
            per_method[label] = got[0] if reps == 1 else _average_summaries(got, cfg.model.param_names)
        summaries.append(per_method)
    return SweepReport(config_to_dict(cfg), cfg.model.param_names, cfg.theta_true.values, cfg.labels,
                       cfg.zeta_grid, summaries, {"seconds": time.perf_counter() - t0, "n_workers": n_workers})


def _average_summaries(summaries: list, names: tuple) -> Optional[PosteriorSummary]:
    ok = [s for s in summaries if s is not None]
    if len(ok) < MIN_SUCCESS_FRACTION * len(summaries) or not ok:
        return None
    avg = lambda f: np.mean([f(s) for s in ok], axis=0)  # noqa: E731
    return PosteriorSummary(ParameterVector(avg(lambda s: s.mean.values), names), avg(lambda s: s.std),
                            avg(lambda s: s.ci_low), avg(lambda s: s.ci_high))


def run_experiment(cfg: ExperimentConfig, **kwargs):
    """:func:`run_zeta_sweep` if the config has a ζ grid, else :func:`run_replications`."""
    return run_zeta_sweep(cfg, **kwargs) if cfg.zeta_grid is not None else run_replications(cfg, **kwargs)


# --------------------------------------------------------------------------
# persistence
# --------------------------------------------------------------------------

def _fmt(x) -> str:
    return format(float(x), ".17g")


def _summary_json(s: Optional[PosteriorSummary]):
    return None if s is None else s.as_dict()


def _summary_from_json(d) -> Optional[PosteriorSummary]:
    return None if d is None else PosteriorSummary.from_dict(d)


def report_to_dict(report) -> dict:
    if isinstance(report, SweepReport):
        return {
            "kind": "sweep",
            "config": report.config,
            "param_names": list(report.param_names),
            "theta_true": np.asarray(report.theta_true).tolist(),
            "labels": list(report.labels),
            "zeta_grid": list(report.zeta_grid),
            "summaries": [{k: _summary_json(v) for k, v in s.items()} for s in report.summaries],
            "runtime": report.runtime,
        }
    rows = {
        label: {"overall_mean": r.overall_mean.tolist(), "avg_posterior_std": r.avg_posterior_std.tolist(),
                "coverage_pct": r.coverage_pct.tolist(), "rmse": r.rmse.tolist(),
                "n_success": r.n_success, "valid": r.valid}
        for label, r in report.rows.items()
    }
    reps = [{**res, "summaries": {k: _summary_json(v) for k, v in res["summaries"].items()}}
            for res in report.replications]
    return {
        "kind": "replications",
        "config": report.config,
        "param_names": list(report.param_names),
        "theta_true": np.asarray(report.theta_true).tolist(),
        "labels": list(report.labels),
        "rows": rows,
        "replications": reps,
        "runtime": report.runtime,
    }


def report_from_dict(d: dict):
    names = tuple(d["param_names"])
    theta = np.array(d["theta_true"], dtype=float)
    labels = tuple(d["labels"])
    if d["kind"] == "sweep":
        summaries = [{k: _summary_from_json(v) for k, v in s.items()} for s in d["summaries"]]
        return SweepReport(d["config"], names, theta, labels, tuple(d["zeta_grid"]), summaries, d["runtime"])
    rows = {
        label: MethodRow(np.array(r["overall_mean"], dtype=float), np.array(r["avg_posterior_std"], dtype=float),
                         np.array(r["coverage_pct"], dtype=float), np.array(r["rmse"], dtype=float),
                         r["n_success"], r["valid"])
        for label, r in d["rows"].items()
    }
    reps = [{**res, "summaries": {k: _summary_from_json(v) for k, v in res["summaries"].items()}}
            for res in d["replications"]]
    return ExperimentReport(d["config"], names, theta, labels, rows, reps, d["runtime"])


def _write_csv(path: Path, header: list, rows: list):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def emit_report(report, fmt: str, path) -> list[Path]:
    """Write ``report`` under the directory ``path``.

    ``fmt="csv"`` writes ``means.csv``, ``std.csv``, ``cov.csv`` and
    ``rmse.csv`` (one row per method, one column per coordinate) for a
    replication report, or ``sweep.csv`` (one row per ζ, method and
    coordinate) for a sweep, plus the ``report.json`` sidecar in both
    cases.  ``fmt="json"`` writes only the sidecar, which holds the config
    and seed needed for exact replay.  Floats carry 17 significant digits.

    Returns the written paths.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown report format {fmt!r}")
    out = Path(path)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            if isinstance(report, SweepReport):
                rows = []
                for zeta, per_method in report:
                    for label in report.labels:
                        s = per_method[label]
                        for j, name in enumerate(report.param_names):
                            vals = ["nan"] * 4 if s is None else [
                                _fmt(s.mean.values[j]), _fmt(s.std[j]), _fmt(s.ci_low[j]), _fmt(s.ci_high[j])]
                            rows.append([_fmt(zeta), label, name, *vals])
                p = out / "sweep.csv"
                _write_csv(p, ["zeta", "method", "parameter", "mean", "std", "ci_low", "ci_high"], rows)
                written.append(p)
            else:
                for block in TABLE_BLOCKS:
                    values = report.block(block)
                    p = out / f"{block}.csv"
                    _write_csv(p, ["method", *report.param_names],
                               [[label, *map(_fmt, values[label])] for label in report.labels])
                    written.append(p)
        d = report_to_dict(report)
        timing = _pop_timing(d)
        p = out / "report.json"
        p.write_text(json.dumps(d, indent=1, allow_nan=True) + "\n", encoding="utf-8")
        written.append(p)
        p = out / "timing.json"
        p.write_text(json.dumps(timing, indent=1) + "\n", encoding="utf-8")
        written.append(p)
    except OSError as exc:
        raise IoFailure(f"cannot write report to {out}: {exc}") from exc
    return written


def _pop_timing(d: dict) -> dict:
    """Move wall-clock and thread-count fields out of a report dict.

    What stays behind depends only on the config and the seed, so it is
    byte-identical across reruns and thread counts.
    """
    timing = {"runtime": d.pop("runtime"), "n_threads": d["config"]["sampler"].pop("n_threads", 1)}
    if d["kind"] == "replications":
        timing["seconds"] = [res.pop("seconds") for res in d["replications"]]
    return timing


def _push_timing(d: dict, timing: dict) -> dict:
    d["runtime"] = timing.get("runtime", {})
    d["config"]["sampler"]["n_threads"] = timing.get("n_threads", 1)
    if d["kind"] == "replications":
        secs = timing.get("seconds") or [{} for _ in d["replications"]]
        for res, sec in zip(d["replications"], secs):
            res["seconds"] = sec
    return d


def load_report(path):
    """Read a report written by :func:`emit_report` from its directory."""
    out = Path(path)
    try:
        d = json.loads((out / "report.json").read_text(encoding="utf-8"))
        t = out / "timing.json"
        timing = json.loads(t.read_text(encoding="utf-8")) if t.exists() else {}
    except OSError as exc:
        raise IoFailure(f"cannot read report from {out}: {exc}") from exc
    return report_from_dict(_push_timing(d, timing))
