"""Experiment plans, result tables and plot-data emitters.

A plan is a JSON file listing instance recipes and solver configurations
with every seed spelled out, so rerunning it reproduces the result CSV
except for the ``wall_time_s`` column.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .advisor import FitResult, fit_wkb
from .core import QuboInstance
from .errors import GradvarError, InsufficientData, InvalidArgument, IOFailure
from .generators import GeneratorSpec, gen_synthetic
from .landscape import gradient_variance
from .solvers import (
    BRUTE_FORCE_LIMIT,
    SqaConfig,
    make_config,
    residual_or_gap,
    run_solver,
    solve_brute_force,
    solve_sqa,
)

log = logging.getLogger(__name__)

CSV_HEADER = ("instance_id", "family", "n", "seed", "sigma_grad", "solver",
              "best_energy", "residual", "success_prob", "wall_time_s")
DESK_SCALE_LIMIT = 512
MIN_BUCKET = 3


@dataclass(frozen=True)
class SolverSpec:
    id: str
    params: dict[str, Any] = field(default_factory=dict)

    def config(self) -> Any:
        return make_config(self.id, self.params)

    def to_dict(self) -> dict:
        return {"id": self.id, "params": dict(self.params)}


def instance_id(spec: GeneratorSpec) -> str:
    base = f"{spec.family}-n{spec.n}-s{spec.seed}"
    if not spec.params:
        return base
    digest = hashlib.sha1(json.dumps(spec.params, sort_keys=True).encode()).hexdigest()[:8]
    return f"{base}-{digest}"


@dataclass
class ExperimentPlan:
    """Instances x solvers, plus the sigma estimator settings.

    In JSON, instances may be listed one by one under ``instances`` or as
    grids under ``generators`` (``family``, ``sizes``, ``seeds``,
    ``params``).  ``repetitions > 1`` reruns each solver with seeds
    ``seed, seed + 1, ...`` and aggregates into one row.
    """

    instances: list[GeneratorSpec]
    solvers: list[SolverSpec]
    repetitions: int = 1
    output_dir: str | None = None
    metrics: tuple[str, ...] = ("sigma_grad", "residual", "success_prob")
    sigma_samples: int = 1000
    sigma_seed: int = 0
    workers: int = 1
    name: str = "plan"

    def __post_init__(self) -> None:
        if not self.instances:
            raise InvalidArgument("plan needs at least one instance")
        if not self.solvers:
            raise InvalidArgument("plan needs at least one solver")
        if self.repetitions < 1 or self.workers < 1:
            raise InvalidArgument("repetitions and workers must be >= 1")
        for s in self.solvers:
            s.config()
        ids = [instance_id(s) for s in self.instances]
        if len(set(ids)) != len(ids):
            raise InvalidArgument("plan lists the same instance twice")

    def warnings(self) -> list[str]:
        big = sorted({s.n for s in self.instances if s.n > DESK_SCALE_LIMIT})
        if not big:
            return []
        return [f"sizes {big} exceed the desk-scale default of n={DESK_SCALE_LIMIT}; expect long runtimes"]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentPlan":
        try:
            specs = [GeneratorSpec(d["family"], int(d["n"]), int(d["seed"]), dict(d.get("params", {})))
                     for d in data.get("instances", [])]
            for g in data.get("generators", []):
                for n in g["sizes"]:
                    for seed in g["seeds"]:
                        specs.append(GeneratorSpec(g["family"], int(n), int(seed), dict(g.get("params", {}))))
            solvers = [SolverSpec(s, {}) if isinstance(s, str) else SolverSpec(s["id"], dict(s.get("params", {})))
                       for s in data.get("solvers", [])]
            sigma = data.get("sigma", {})
            return cls(
                instances=specs,
                solvers=solvers,
                repetitions=int(data.get("repetitions", 1)),
                output_dir=data.get("output_dir"),
                metrics=tuple(data.get("metrics", cls.metrics)),
                sigma_samples=int(sigma.get("samples", 1000)),
                sigma_seed=int(sigma.get("seed", 0)),
                workers=int(data.get("workers", 1)),
                name=str(data.get("name", "plan")),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidArgument(f"malformed plan: {exc!r}") from exc

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "instances": [s.to_dict() for s in self.instances],
            "solvers": [s.to_dict() for s in self.solvers],
            "repetitions": self.repetitions,
            "output_dir": self.output_dir,
            "metrics": list(self.metrics),
            "sigma": {"samples": self.sigma_samples, "seed": self.sigma_seed},
            "workers": self.workers,
        }

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentPlan":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise IOFailure(f"cannot read plan {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"plan {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


@dataclass(frozen=True)
class ResultRow:
    instance_id: str
    family: str
    n: int
    seed: int
    sigma_grad: float
    solver: str
    best_energy: float
    residual: float
    success_prob: float
    wall_time_s: float

    def sort_key(self) -> tuple:
        return (self.family, self.n, self.seed, self.solver, self.instance_id)

    def cells(self) -> list[str]:
        return [self.instance_id, self.family, str(self.n), str(self.seed), repr(self.sigma_grad),
                self.solver, repr(self.best_energy), repr(self.residual), repr(self.success_prob),
                repr(self.wall_time_s)]

    @classmethod
    def from_cells(cls, cells: dict[str, str]) -> "ResultRow":
        return cls(cells["instance_id"], cells["family"], int(cells["n"]), int(cells["seed"]),
                   float(cells["sigma_grad"]), cells["solver"], float(cells["best_energy"]),
                   float(cells["residual"]), float(cells["success_prob"]), float(cells["wall_time_s"]))


@dataclass
class BenchResult:
    rows: list[ResultRow]
    errors: list[dict] = field(default_factory=list)
    skips: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        by_solver: dict[str, list[ResultRow]] = {}
        for r in self.rows:
            by_solver.setdefault(r.solver, []).append(r)
        return {
            "rows": len(self.rows),
            "instances": len({r.instance_id for r in self.rows}),
            "errors": self.errors,
            "skips": self.skips,
            "warnings": self.warnings,
            "solvers": {
                k: {"mean_residual": float(np.mean([r.residual for r in v])),
                    "mean_success_prob": float(np.mean([r.success_prob for r in v]))}
                for k, v in sorted(by_solver.items())
            },
        }


def _solve_repeated(spec: SolverSpec, instance: QuboInstance, repetitions: int):
    config = spec.config()
    outcomes = []
    for r in range(repetitions):
        cfg = config
        if cfg is not None and r:
            cfg = type(cfg)(**{**cfg.__dict__, "seed": cfg.seed + r})
        outcomes.append(run_solver(spec.id, instance, cfg))
        if cfg is None:
            break
    return outcomes


def _run_instance(plan: ExperimentPlan, spec: GeneratorSpec) -> tuple[list[ResultRow], list[dict], list[dict]]:
    iid = instance_id(spec)
    try:
        inst = spec.build()
    except (GradvarError, ValueError) as exc:
        return [], [{"instance_id": iid, "stage": "generate", "error": str(exc)}], []
    sigma = gradient_variance(inst, plan.sigma_samples, plan.sigma_seed).sigma_grad
    results: dict[str, list] = {}
    errors: list[dict] = []
    skips: list[dict] = []
    for s in plan.solvers:
        if s.id == "brute_force" and inst.n > BRUTE_FORCE_LIMIT:
            skips.append({"instance_id": iid, "solver": s.id, "reason": f"n={inst.n} > {BRUTE_FORCE_LIMIT}"})
            continue
        try:
            results[s.id] = _solve_repeated(s, inst, plan.repetitions)
        except GradvarError as exc:
            errors.append({"instance_id": iid, "stage": s.id, "error": str(exc)})
    if not results:
        return [], errors, skips
    batch_best = min(o.best_energy for outs in results.values() for o in outs)
    reference = batch_best
    if inst.n <= BRUTE_FORCE_LIMIT:
        exact = results["brute_force"][0] if "brute_force" in results else solve_brute_force(inst)
        reference = min(reference, exact.best_energy)
    rows = []
    for sid, outs in results.items():
        best = min(o.best_energy for o in outs)
        success = float(np.mean([o.with_reference(reference).success_prob for o in outs]))
        wall = float(sum(o.wall_time for o in outs))
        residual = max(0.0, residual_or_gap(best, reference))
        rows.append(ResultRow(iid, spec.family, inst.n, spec.seed, sigma, sid, best, residual, success, wall))
    return rows, errors, skips


def run_plan(plan: ExperimentPlan, workers: int | None = None) -> BenchResult:
    """Run every (instance, solver) cell; rows come back in canonical order."""
    warns = plan.warnings()
    for w in warns:
        log.warning(w)
    workers = plan.workers if workers is None else workers
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda s: _run_instance(plan, s), plan.instances))
    else:
        parts = [_run_instance(plan, s) for s in plan.instances]
    rows, errors, skips = [], [], []
    for r, e, s in parts:
        rows.extend(r)
        errors.extend(e)
        skips.extend(s)
    rows.sort(key=ResultRow.sort_key)
    return BenchResult(rows, errors, skips, warns)


def write_rows(rows: Iterable[ResultRow], path: str | Path) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in rows:
                w.writerow(r.cells())
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc
    return path


def read_rows(path: str | Path) -> list[ResultRow]:
    try:
        with Path(path).open(newline="") as fh:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != CSV_HEADER:
                raise InvalidArgument(f"{path} does not have the result header")
            return [ResultRow.from_cells(c) for c in reader]
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc


def strip_timing(csv_text: str) -> str:
    """Drop the ``wall_time_s`` column so two runs can be compared byte-for-byte."""
    return "\n".join(line.rsplit(",", 1)[0] for line in csv_text.splitlines()) + "\n"


def save_result(result: BenchResult, out_dir: str | Path, plan: ExperimentPlan | None = None) -> Path:
    """Write ``results.csv`` and ``manifest.json``; on failure, try to leave a partial manifest."""
    out = Path(out_dir)
    manifest = {"status": "complete", **result.summary()}
    if plan is not None:
        manifest["plan"] = plan.to_dict()
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_rows(result.rows, out / "results.csv")
    except (OSError, IOFailure) as exc:
        manifest["status"] = "partial"
        manifest["io_error"] = str(exc)
        try:
            (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        except OSError:
            pass
        raise IOFailure(f"cannot write results to {out}: {exc}") from exc
    try:
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        raise IOFailure(f"cannot write manifest to {out}: {exc}") from exc
    return out


def _write_csv(path: str | Path | None, header: Sequence[str], table: list[list]) -> None:
    if path is None:
        return
    try:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in table:
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def emit_variance_curve(rows: Sequence[ResultRow], path: str | Path | None = None) -> list[dict]:
    """Mean and (population) std of sigma per (family, n), one instance counted once."""
    if not rows:
        raise InsufficientData("no rows to aggregate")
    seen: dict[str, ResultRow] = {}
    for r in rows:
        seen.setdefault(r.instance_id, r)
    groups: dict[tuple[str, int], list[float]] = {}
    for r in seen.values():
        groups.setdefault((r.family, r.n), []).append(r.sigma_grad)
    out = []
    for (fam, n), vals in sorted(groups.items()):
        a = np.array(vals)
        out.append({"family": fam, "n": n, "mean_sigma": float(a.mean()),
                    "std_sigma": float(a.std()), "count": len(vals)})
    _write_csv(path, ("family", "n", "mean_sigma", "std_sigma", "count"),
               [[d["family"], d["n"], d["mean_sigma"], d["std_sigma"], d["count"]] for d in out])
    return out


def emit_gap_vs_variance(rows: Sequence[ResultRow], path: str | Path | None = None,
                         num_buckets: int = 5, pair: tuple[str, str] = ("sa", "sqa")) -> list[dict]:
    """Residual gap ``first - second`` of ``pair`` per equal-width sigma bucket.

    Buckets holding fewer than three instances are flagged.  The upper edge
    of the last bucket is inclusive.
    """
    if num_buckets < 1:
        raise InvalidArgument("num_buckets must be >= 1")
    by_inst: dict[str, dict[str, ResultRow]] = {}
    for r in rows:
        by_inst.setdefault(r.instance_id, {})[r.solver] = r
    paired = [(v[pair[0]].sigma_grad, v[pair[0]].residual - v[pair[1]].residual)
              for _, v in sorted(by_inst.items()) if pair[0] in v and pair[1] in v]
    if not paired:
        raise InsufficientData(f"no instance has results for both {pair[0]} and {pair[1]}")
    sig = np.array([p[0] for p in paired])
    gap = np.array([p[1] for p in paired])
    lo, hi = float(sig.min()), float(sig.max())
    edges = np.linspace(lo, hi, num_buckets + 1) if hi > lo else np.array([lo, hi])
    nb = len(edges) - 1
    idx = np.clip(np.searchsorted(edges, sig, side="right") - 1, 0, nb - 1)
    out = []
    for b in range(nb):
        sel = idx == b
        count = int(sel.sum())
        out.append({
            "bucket": b,
            "sigma_lo": float(edges[b]),
            "sigma_hi": float(edges[b + 1]),
            "mean_sigma": float(sig[sel].mean()) if count else math.nan,
            "mean_gap": float(gap[sel].mean()) if count else math.nan,
            "count": count,
            "flagged": count < MIN_BUCKET,
        })
    _write_csv(path, ("bucket", "sigma_lo", "sigma_hi", "mean_sigma", "mean_gap", "count", "flagged"),
               [[d["bucket"], d["sigma_lo"], d["sigma_hi"], d["mean_sigma"], d["mean_gap"], d["count"],
                 int(d["flagged"])] for d in out])
    return out


def report(out_dir: str | Path) -> dict[str, Any]:
    """Regenerate plot-data files next to an existing ``results.csv``."""
    out = Path(out_dir)
    rows = read_rows(out / "results.csv")
    made: dict[str, Any] = {"rows": len(rows)}
    made["variance_curve"] = str(out / "variance_curve.csv")
    emit_variance_curve(rows, out / "variance_curve.csv")
    try:
        emit_gap_vs_variance(rows, out / "gap_vs_variance.csv")
        made["gap_vs_variance"] = str(out / "gap_vs_variance.csv")
    except InsufficientData as exc:
        made["gap_vs_variance"] = None
        made["gap_note"] = str(exc)
    return made


@dataclass
class SweepResult:
    scales: list[float]
    sigmas: list[float]
    success: list[float]
    reference: float
    fit: FitResult | None
    note: str = ""

    def to_dict(self) -> dict:
        return {"scales": self.scales, "sigmas": self.sigmas, "success": self.success,
                "reference": self.reference, "fit": None if self.fit is None else self.fit.to_dict(),
                "note": self.note}


def variance_sweep(n: int, scales: Sequence[float], seed: int = 0, config: SqaConfig = SqaConfig(),
                   sigma_samples: int = 1000, workers: int = 1) -> SweepResult:
    """SQA success rate against sigma on rescaled copies of one synthetic instance.

    Multiplying a QUBO by ``s`` multiplies sigma by ``s`` and leaves the
    minimizers unchanged, so the levels share one reference optimum (the
    best rescaled energy any run found).  Fixed annealing temperature and
    field make the rescaling a genuine change in landscape difficulty.
    """
    if len(scales) < 3 or min(scales) <= 0:
        raise InvalidArgument("need at least three positive scales")
    base = gen_synthetic(n, seed=seed)
    sig0 = gradient_variance(base, sigma_samples, seed).sigma_grad
    outs = []
    for s in scales:
        inst = base.with_changes(q=base.q * s, offset=base.offset * s, label=f"{base.label}*{s}")
        outs.append(solve_sqa(inst, config, workers=workers))
    ref = min(o.best_energy / s for o, s in zip(outs, scales))
    success = [o.with_reference(ref * s).success_prob for o, s in zip(outs, scales)]
    sigmas = [sig0 * s for s in scales]
    try:
        fit = fit_wkb(list(zip(sigmas, success)))
        note = ""
    except InsufficientData as exc:
        fit, note = None, str(exc)
    return SweepResult(list(scales), sigmas, success, float(ref), fit, note)
