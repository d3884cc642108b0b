"""Brute force, simulated annealing, steepest descent and a simulated
quantum annealing surrogate, all reporting :class:`SolverOutcome`."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import _kernels
from .core import QuboInstance, evaluate
from .errors import CapacityExceeded, DegenerateReference, InvalidArgument
from .landscape import index_to_bits, lexmin

BRUTE_FORCE_LIMIT = 24
SUCCESS_RTOL = 1e-9


def hits_reference(energy: float, reference: float) -> bool:
    """Energy counts as optimal when within 1e-9 (relative, floor 1) of the reference."""
    return energy - reference <= SUCCESS_RTOL * max(1.0, abs(reference))


@dataclass(eq=False)
class SolverOutcome:
    solver_id: str
    best_energy: float
    best_bits: np.ndarray
    mean_energy: float
    success_prob: float
    wall_time: float
    trajectories: int
    energies: np.ndarray
    reference: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def with_reference(self, reference: float) -> "SolverOutcome":
        """Recompute ``success_prob`` against an external optimum."""
        hits = sum(hits_reference(float(e), reference) for e in self.energies)
        return SolverOutcome(self.solver_id, self.best_energy, self.best_bits, self.mean_energy,
                             hits / len(self.energies), self.wall_time, self.trajectories,
                             self.energies, reference, self.diagnostics)

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "solver": self.solver_id,
            "best_energy": self.best_energy,
            "best_bits": [int(b) for b in self.best_bits],
            "mean_energy": self.mean_energy,
            "success_prob": self.success_prob,
            "trajectories": self.trajectories,
            "reference": self.reference,
            "energies": [float(e) for e in self.energies],
        }
        if timing:
            out["wall_time"] = self.wall_time
        return out


@dataclass(frozen=True)
class SaConfig:
    t0: float = 10.0
    cooling: float = 0.95
    iters_per_temp: int = 1000
    num_levels: int = 200
    trajectories: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.t0 > 0:
            raise InvalidArgument("t0 must be positive")
        if not 0 < self.cooling < 1:
            raise InvalidArgument("cooling must be in (0, 1)")
        if self.iters_per_temp < 1 or self.num_levels < 1 or self.trajectories < 1:
            raise InvalidArgument("counts must be positive")


@dataclass(frozen=True)
class SgdConfig:
    max_steps: int = 500
    no_improve_stop: int = 50
    trajectories: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.max_steps, self.no_improve_stop, self.trajectories) < 1:
            raise InvalidArgument("counts must be positive")


@dataclass(frozen=True)
class SqaConfig:
    trotter_slices: int = 32
    gamma_start: float = 3.0
    gamma_end: float = 0.01
    temperature: float = 0.05
    sweeps: int = 1000
    trajectories: int = 100
    seed: int = 0

    def __post_init__(self) -> None:
        if self.trotter_slices < 2:
            raise InvalidArgument("need at least two Trotter slices")
        if not (self.gamma_start >= self.gamma_end >= 0):
            raise InvalidArgument("transverse field schedule must be non-increasing and >= 0")
        if not self.temperature > 0:
            raise InvalidArgument("temperature must be positive")
        if self.sweeps < 1 or self.trajectories < 1:
            raise InvalidArgument("counts must be positive")

    def schedule(self) -> np.ndarray:
        g = np.linspace(self.gamma_start, self.gamma_end, self.sweeps)
        # tanh(0) would make the replica coupling infinite
        return np.maximum(g, 1e-12)


def trajectory_seeds(seed: int, count: int) -> np.ndarray:
    """One 32-bit seed per trajectory index, independent of scheduling."""
    return np.array(
        [np.random.SeedSequence(seed, spawn_key=(t,)).generate_state(1)[0] for t in range(count)],
        dtype=np.uint32,
    )


def _split(instance: QuboInstance) -> tuple[np.ndarray, np.ndarray]:
    q = instance.q
    d = np.ascontiguousarray(np.diag(q))
    off = np.ascontiguousarray(q - np.diag(d))
    return d, off


def _chunks(count: int, workers: int) -> list[slice]:
    workers = max(1, min(workers, count))
    bounds = np.linspace(0, count, workers + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _run_parallel(fn: Callable[[slice], None], count: int, workers: int) -> None:
    parts = _chunks(count, workers)
    if len(parts) == 1:
        fn(parts[0])
        return
    with ThreadPoolExecutor(len(parts)) as pool:
        for fut in [pool.submit(fn, s) for s in parts]:
            fut.result()


def _finish(solver_id: str, instance: QuboInstance, bits: np.ndarray, started: float,
            reference: float | None, diagnostics: dict | None = None) -> SolverOutcome:
    """Merge per-trajectory results; energies are recomputed from the bits."""
    e = np.array([evaluate(instance, b) for b in bits])
    best = float(e.min())
    winners = bits[e == best]
    best_bits = lexmin(winners).astype(np.int8)
    mean = max(float(e.mean()), best)
    ref = best if reference is None else reference
    success = float(np.mean([hits_reference(float(v), ref) for v in e]))
    return SolverOutcome(solver_id, best, best_bits, mean, success, time.perf_counter() - started,
                         len(e), e, reference, diagnostics or {})


def solve_brute_force(instance: QuboInstance) -> SolverOutcome:
    """Exact minimum by Gray-code enumeration (n <= 24)."""
    started = time.perf_counter()
    n = instance.n
    if n > BRUTE_FORCE_LIMIT:
        raise CapacityExceeded(f"brute force is capped at n={BRUTE_FORCE_LIMIT}, got {n}")
    d, off = _split(instance)
    ties = np.zeros(4096, dtype=np.int64)
    _, count = _kernels.gray_scan(d, off, instance.offset, np.empty(1), False, 1e-9, ties.size, ties)
    cands = np.array([index_to_bits(int(k), n) for k in ties[:count]])
    exact = np.array([evaluate(instance, b) for b in cands])
    winners = cands[exact == exact.min()]
    best_bits = lexmin(winners).astype(np.int8)
    best = evaluate(instance, best_bits)
    return SolverOutcome("brute_force", best, best_bits, best, 1.0, time.perf_counter() - started,
                         1, np.array([best]), best)


def solve_sa(instance: QuboInstance, config: SaConfig = SaConfig(), reference: float | None = None,
             workers: int = 1) -> SolverOutcome:
    """Simulated annealing: independent Metropolis single-flip chains.

    Each chain starts from a uniform random state, runs ``num_levels``
    temperature levels of ``iters_per_temp`` random single-flip proposals
    and cools geometrically.  A chain reports the best state it visited.
    ``success_prob`` is measured against ``reference`` when given, else
    against the best energy of this run.
    """
    started = time.perf_counter()
    d, off = _split(instance)
    seeds = trajectory_seeds(config.seed, config.trajectories)
    best_e = np.empty(config.trajectories)
    best_x = np.zeros((config.trajectories, instance.n), dtype=np.int8)
    parts = _chunks(config.trajectories, workers)
    up_prop = np.zeros((len(parts), config.num_levels), dtype=np.int64)
    up_acc = np.zeros_like(up_prop)

    def work(s: slice) -> None:
        slot = [p.start for p in parts].index(s.start)
        _kernels.sa_chains(d, off, instance.offset, config.t0, config.cooling, config.iters_per_temp,
                           config.num_levels, seeds[s], best_e[s], best_x[s], up_prop[slot], up_acc[slot])

    _run_parallel(work, config.trajectories, workers)
    diag = {"uphill_proposed": up_prop.sum(axis=0), "uphill_accepted": up_acc.sum(axis=0)}
    return _finish("sa", instance, best_x, started, reference, diag)


def solve_sgd(instance: QuboInstance, config: SgdConfig = SgdConfig(), reference: float | None = None,
              workers: int = 1, keep_trace: bool = False) -> SolverOutcome:
    """Steepest single-flip descent with random restarts.

    ``keep_trace`` stores per-step energies and restart flags in
    ``diagnostics``.
    """
    started = time.perf_counter()
    d, off = _split(instance)
    t = config.trajectories
    seeds = trajectory_seeds(config.seed, t)
    best_e = np.empty(t)
    best_x = np.zeros((t, instance.n), dtype=np.int8)
    trace_e = np.full((t, config.max_steps + 1), np.nan)
    trace_r = np.zeros((t, config.max_steps + 1), dtype=np.bool_)

    def work(s: slice) -> None:
        _kernels.sgd_chains(d, off, instance.offset, config.max_steps, config.no_improve_stop,
                            seeds[s], best_e[s], best_x[s], trace_e[s], trace_r[s])

    _run_parallel(work, t, workers)
    diag = {"trace_energy": trace_e, "trace_restart": trace_r} if keep_trace else {}
    return _finish("sgd", instance, best_x, started, reference, diag)


def solve_sqa(instance: QuboInstance, config: SqaConfig = SqaConfig(), reference: float | None = None,
              workers: int = 1) -> SolverOutcome:
    """Path-integral simulated quantum annealing (classical surrogate).

    The transverse field falls linearly from ``gamma_start`` to
    ``gamma_end`` over ``sweeps``; each trajectory returns the lowest-energy
    replica configuration it encountered, scored with the true QUBO energy.
    """
    started = time.perf_counter()
    d, off = _split(instance)
    t = config.trajectories
    seeds = trajectory_seeds(config.seed, t)
    gammas = config.schedule()
    best_e = np.empty(t)
    best_x = np.zeros((t, instance.n), dtype=np.int8)

    def work(s: slice) -> None:
        _kernels.sqa_chains(d, off, instance.offset, config.trotter_slices, config.temperature,
                            gammas, seeds[s], best_e[s], best_x[s])

    _run_parallel(work, t, workers)
    return _finish("sqa", instance, best_x, started, reference)


SOLVERS: dict[str, tuple[Callable[..., SolverOutcome], type | None]] = {
    "brute_force": (solve_brute_force, None),
    "sa": (solve_sa, SaConfig),
    "sgd": (solve_sgd, SgdConfig),
    "sqa": (solve_sqa, SqaConfig),
}


def make_config(solver_id: str, params: dict[str, Any] | None = None) -> Any:
    if solver_id not in SOLVERS:
        raise InvalidArgument(f"unknown solver {solver_id!r}; choose from {sorted(SOLVERS)}")
    cls = SOLVERS[solver_id][1]
    if cls is None:
        if params:
            raise InvalidArgument("brute_force takes no parameters")
        return None
    try:
        return cls(**(params or {}))
    except TypeError as exc:
        raise InvalidArgument(f"bad {solver_id} parameters: {exc}") from exc


def run_solver(solver_id: str, instance: QuboInstance, config: Any = None,
               reference: float | None = None, workers: int = 1) -> SolverOutcome:
    fn, cls = SOLVERS[solver_id] if solver_id in SOLVERS else (None, None)
    if fn is None:
        raise InvalidArgument(f"unknown solver {solver_id!r}")
    if cls is None:
        return solve_brute_force(instance)
    return fn(instance, config if config is not None else cls(), reference=reference, workers=workers)


def residual_energy(found: float, best: float) -> float:
    """``(found - best) / |best|``; raises on a zero reference."""
    if best == 0:
        raise DegenerateReference("reference energy is zero; use the absolute gap instead")
    return (found - best) / abs(best)


def residual_or_gap(found: float, best: float) -> float:
    """Relative residual, falling back to the absolute gap for a zero reference."""
    try:
        return residual_energy(found, best)
    except DegenerateReference:
        return found - best


__all__ = [
    "SolverOutcome", "SaConfig", "SgdConfig", "SqaConfig",
    "solve_brute_force", "solve_sa", "solve_sgd", "solve_sqa",
    "residual_energy", "residual_or_gap", "hits_reference", "run_solver", "make_config",
    "trajectory_seeds", "BRUTE_FORCE_LIMIT",
]

