"""Semantics-preserving QUBO reformulation that raises gradient variance.

The driver (:func:`reformulate`) repeatedly builds one candidate per
enabled strategy, keeps the candidates that pass the semantic check against
the *original* instance, and accepts the one with the largest sampled
gradient deviation if it beats the current value.  It stops when the target
is reached, after ``max_iter`` accepted steps, or when nothing improves.

Strategies, in evaluation order:

``substitution``
    ``x_i -> 1 - x_i'`` on a mask of variables.
``scaling``
    ``Q' = Q_obj + gamma * Q_constraint`` (tagged instances only).
``auxiliary``
    Replace ``b_ij x_i x_j`` by ``b_ij z + lam * (3z + x_i x_j - 2 z x_i - 2 z x_j)``
    with a new variable ``z``; the penalty vanishes iff ``z == x_i x_j``.
``relaxation``
    Re-tune the weight of a declared cardinality penalty
    ``w * (sum x - k)**2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .core import Cardinality, QuadForm, QuboInstance, energies, substitute
from .errors import IntegrityError, InvalidArgument, StrategyInapplicable
from .landscape import (
    all_configurations,
    exact_sigma,
    gradient_variance_from_samples,
    sample_configurations,
    tolerance,
)
from .solvers import SaConfig, solve_sa

STRATEGIES = ("substitution", "scaling", "auxiliary", "relaxation")
EXHAUSTIVE_LIMIT = 16
AUX_BRUTE_LIMIT = 12
IMPROVE_RTOL = 1e-9
_AUX_STREAM = 0x5A17


@dataclass(frozen=True)
class StrategyParams:
    """Knobs for the four strategies.

    ``aux_lambda`` is the consistency margin: a replaced pair with objective
    and constraint coefficients ``b_obj``, ``b_con`` gets the penalty weight
    ``(1 + aux_lambda) * (|b_obj| + |b_con|)``, which always clears the
    bound needed for consistent minimizers.
    """

    penalty_scale: float = 1.5
    substitution_policy: str = "positive_diagonal"
    aux_lambda: float = 0.8
    aux_pairs: int = 1
    relax_factors: tuple[float, ...] = (0.5, 0.75, 1.25, 1.5, 2.0)
    relax_max_weight: float | None = None

    def __post_init__(self) -> None:
        if not self.penalty_scale > 1:
            raise InvalidArgument("penalty_scale must exceed 1")
        if not self.aux_lambda > 0:
            raise InvalidArgument("aux_lambda must be positive")
        if self.aux_pairs < 1:
            raise InvalidArgument("aux_pairs must be >= 1")
        if self.substitution_policy not in ("positive_diagonal", "negative_diagonal", "all"):
            raise InvalidArgument(f"unknown substitution policy {self.substitution_policy!r}")


# ---------------------------------------------------------------------------
# Variable maps


@dataclass(frozen=True)
class VariableMap:
    """How candidate variables derive from the original ones.

    Candidate variable ``v`` equals ``polarity[v] XOR base_v`` where
    ``base_v = x_v`` for ``v < n_original`` and, for auxiliary variables,
    ``base_v = (c_a XOR na) AND (c_b XOR nb)`` with ``products[v] =
    (a, na, b, nb)`` referring to earlier candidate variables.  The map is a
    bijection from original assignments onto the consistent slice.
    """

    n_original: int
    polarity: tuple[bool, ...]
    products: tuple[tuple[int, bool, int, bool] | None, ...]

    @classmethod
    def identity(cls, n: int) -> "VariableMap":
        return cls(n, (False,) * n, (None,) * n)

    def __post_init__(self) -> None:
        if len(self.polarity) != len(self.products) or len(self.polarity) < self.n_original:
            raise IntegrityError("variable map arrays disagree in length")
        for v, prod in enumerate(self.products):
            if (v < self.n_original) != (prod is None):
                raise IntegrityError(f"variable {v} has the wrong kind of definition")
            if prod is not None and not (prod[0] < v and prod[2] < v):
                raise IntegrityError(f"auxiliary {v} references a later variable")

    @property
    def size(self) -> int:
        return len(self.polarity)

    @property
    def aux_indices(self) -> list[int]:
        return list(range(self.n_original, self.size))

    def replaced_pairs(self) -> set[tuple[int, int]]:
        return {(min(p[0], p[2]), max(p[0], p[2])) for p in self.products if p is not None}

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Map original assignments (rows) onto candidate assignments."""
        x = np.atleast_2d(np.asarray(x, dtype=np.int8))
        c = np.zeros((x.shape[0], self.size), dtype=np.int8)
        pol = np.array(self.polarity, dtype=np.int8)
        c[:, : self.n_original] = x ^ pol[: self.n_original]
        for v in self.aux_indices:
            a, na, b, nb = self.products[v]
            c[:, v] = ((c[:, a] ^ na) & (c[:, b] ^ nb)) ^ pol[v]
        return c

    def project(self, c: np.ndarray) -> np.ndarray:
        c = np.atleast_2d(np.asarray(c, dtype=np.int8))
        pol = np.array(self.polarity[: self.n_original], dtype=np.int8)
        return c[:, : self.n_original] ^ pol

    def flipped(self, mask: Sequence[bool]) -> "VariableMap":
        m = [bool(v) for v in mask]
        if len(m) != self.size:
            raise InvalidArgument("mask length does not match the candidate size")
        pol = tuple(p ^ f for p, f in zip(self.polarity, m))
        prods = tuple(
            None if p is None else (p[0], p[1] ^ m[p[0]], p[2], p[3] ^ m[p[2]]) for p in self.products
        )
        return VariableMap(self.n_original, pol, prods)

    def with_products(self, pairs: Sequence[tuple[int, int]]) -> "VariableMap":
        pol = self.polarity + (False,) * len(pairs)
        prods = self.products + tuple((i, False, j, False) for i, j in pairs)
        return VariableMap(self.n_original, pol, prods)

    def compose(self, fragment: "MapFragment") -> "VariableMap":
        out = self
        if fragment.flips is not None:
            out = out.flipped(fragment.flips)
        if fragment.products:
            out = out.with_products(fragment.products)
        return out

    def to_dict(self) -> dict:
        return {
            "n_original": self.n_original,
            "polarity": [int(p) for p in self.polarity],
            "auxiliary": [
                {"var": v, "a": p[0], "neg_a": int(p[1]), "b": p[2], "neg_b": int(p[3])}
                for v, p in enumerate(self.products) if p is not None
            ],
        }


@dataclass(frozen=True)
class MapFragment:
    """Change to the variable map made by one strategy application."""

    flips: tuple[bool, ...] | None = None
    products: tuple[tuple[int, int], ...] = ()

    @property
    def is_identity(self) -> bool:
        return (self.flips is None or not any(self.flips)) and not self.products


# ---------------------------------------------------------------------------
# Layer-wise linear transforms


def _map_layers(instance: QuboInstance, fn: Callable[[np.ndarray, float], tuple[np.ndarray, float]],
                **changes: Any) -> QuboInstance:
    q, off = fn(instance.q, instance.offset)
    con = None
    if instance.constraint is not None:
        con = QuadForm(*fn(instance.constraint.q, instance.constraint.offset))
    card = None
    if instance.cardinality is not None:
        c = instance.cardinality
        card = Cardinality(QuadForm(*fn(c.form.q, c.form.offset)), c.weight, c.k)
    kwargs = {"q": q, "offset": off, "constraint": con, "cardinality": card}
    kwargs.update(changes)
    return instance.with_changes(**kwargs)


def substitution_mask(instance: QuboInstance, policy: str = "positive_diagonal") -> np.ndarray:
    d = np.diag(instance.q)
    if policy == "positive_diagonal":
        return d > 0
    if policy == "negative_diagonal":
        return d < 0
    return np.ones(instance.n, dtype=bool)


def strat_variable_substitution(instance: QuboInstance, mask: Sequence[bool] | None = None,
                                params: StrategyParams = StrategyParams()) -> tuple[QuboInstance, MapFragment]:
    """Complement the masked variables; energies match exactly under the flipped bits."""
    m = substitution_mask(instance, params.substitution_policy) if mask is None else np.asarray(mask, dtype=bool)
    if m.shape != (instance.n,):
        raise InvalidArgument("mask length does not match instance")
    cand = _map_layers(instance, lambda q, o: substitute(q, o, m))
    return cand, MapFragment(flips=tuple(bool(v) for v in m))


def strat_penalty_scaling(instance: QuboInstance, gamma: float = 1.5) -> tuple[QuboInstance, MapFragment]:
    """Multiply the constraint layer by ``gamma``; the objective is untouched."""
    if instance.constraint is None:
        raise StrategyInapplicable("instance carries no constraint/objective split")
    if not gamma > 0:
        raise InvalidArgument("gamma must be positive")
    con = instance.constraint
    extra = gamma - 1.0
    q = instance.q + extra * con.q
    # keep exact symmetry after the floating-point update
    q = np.triu(q) + np.triu(q, 1).T
    new_con = QuadForm(gamma * con.q, gamma * con.offset)
    card = instance.cardinality
    if card is not None:
        card = Cardinality(card.form, card.weight * gamma, card.k)
    cand = instance.with_changes(q=q, offset=instance.offset + extra * con.offset,
                                 constraint=new_con, cardinality=card)
    return cand, MapFragment()


def _symmetrize(q: np.ndarray) -> np.ndarray:
    return np.triu(q) + np.triu(q, 1).T


def eligible_pairs(instance: QuboInstance, vmap: VariableMap | None = None) -> list[tuple[int, int]]:
    """Original-variable pairs with non-zero coupling, strongest first."""
    vmap = vmap or VariableMap.identity(instance.n)
    done = vmap.replaced_pairs()
    n0 = vmap.n_original
    iu, ju = np.triu_indices(n0, k=1)
    w = np.abs(instance.q[iu, ju])
    order = np.lexsort((ju, iu, -w))
    return [(int(iu[k]), int(ju[k])) for k in order if w[k] > 0 and (int(iu[k]), int(ju[k])) not in done]


def strat_auxiliary_variables(instance: QuboInstance, pairs: Sequence[tuple[int, int]] | None = None,
                              lam: float | None = None, params: StrategyParams = StrategyParams(),
                              vmap: VariableMap | None = None) -> tuple[QuboInstance, MapFragment]:
    """Re-encode pair couplings through product variables ``z = x_i x_j``.

    With an explicit ``lam`` every selected pair must satisfy
    ``lam > |b_obj| + |b_con|``; otherwise the weight comes from
    ``params.aux_lambda`` (see :class:`StrategyParams`).  New variables are
    appended after the existing ones and the consistency penalties join the
    constraint layer.
    """
    if pairs is None:
        pairs = eligible_pairs(instance, vmap)[: params.aux_pairs]
        if not pairs:
            raise StrategyInapplicable("no coupled pair left to re-encode")
    pairs = [(min(i, j), max(i, j)) for i, j in pairs]
    if not pairs:
        return instance, MapFragment()
    n = instance.n
    k = len(pairs)
    con_q = instance.constraint.q if instance.constraint is not None else np.zeros((n, n))
    weights = []
    for i, j in pairs:
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise InvalidArgument(f"invalid pair ({i}, {j})")
        b_con = 2.0 * con_q[i, j]
        b_obj = 2.0 * instance.q[i, j] - b_con
        bound = abs(b_obj) + abs(b_con)
        w = (1.0 + params.aux_lambda) * bound if lam is None else float(lam)
        if not w > bound:
            raise InvalidArgument(f"lambda={w} does not exceed the consistency bound {bound} for pair ({i}, {j})")
        weights.append(w)

    def grow(q: np.ndarray, off: float) -> tuple[np.ndarray, float]:
        big = np.zeros((n + k, n + k))
        big[:n, :n] = q
        for t, (i, j) in enumerate(pairs):
            z = n + t
            big[z, z] += 2.0 * big[i, j]
            big[i, j] = big[j, i] = 0.0
        return big, off

    def penalize(q: np.ndarray) -> np.ndarray:
        q = q.copy()
        for t, ((i, j), w) in enumerate(zip(pairs, weights)):
            z = n + t
            q[z, z] += 3.0 * w
            q[i, j] += w / 2.0
            q[j, i] += w / 2.0
            q[z, i] -= w
            q[i, z] -= w
            q[z, j] -= w
            q[j, z] -= w
        return q

    cand = _map_layers(instance, grow)
    con = cand.constraint if cand.constraint is not None else QuadForm(np.zeros((n + k, n + k)))
    cand = cand.with_changes(q=penalize(cand.q), constraint=QuadForm(penalize(con.q), con.offset))
    return cand, MapFragment(products=tuple(pairs))


def _retune(instance: QuboInstance, weight: float) -> QuboInstance:
    card = instance.cardinality
    delta = weight - card.weight
    q = _symmetrize(instance.q + delta * card.form.q)
    con = instance.constraint
    con_q = _symmetrize(con.q + delta * card.form.q)
    return instance.with_changes(
        q=q,
        offset=instance.offset + delta * card.form.offset,
        constraint=QuadForm(con_q, con.offset + delta * card.form.offset),
        cardinality=Cardinality(card.form, weight, card.k),
    )


def strat_constraint_relaxation(instance: QuboInstance, params: StrategyParams = StrategyParams(),
                                score: Callable[[QuboInstance], float] | None = None,
                                verify: Callable[[QuboInstance], bool] | None = None,
                                ) -> tuple[QuboInstance, MapFragment]:
    """Relax the declared cardinality penalty and re-tighten at the best weight.

    Tries ``weight * f`` for each relaxation factor (capped by
    ``relax_max_weight``), and returns the highest-scoring candidate that
    passes ``verify``.  When no candidate scores above the current weight,
    the instance is returned unchanged.
    """
    card = instance.cardinality
    if card is None or instance.constraint is None:
        raise StrategyInapplicable("instance declares no cardinality constraint")
    score = score or (lambda inst: exact_sigma(inst))
    if verify is None:
        ident = VariableMap.identity(instance.n)
        verify = lambda cand: preserves_semantics(cand, instance, ident).passed  # noqa: E731
    base = score(instance)
    weights = []
    for f in params.relax_factors:
        w = card.weight * f
        if f == 1.0 or not w > 0:
            continue
        if params.relax_max_weight is not None and w > params.relax_max_weight:
            continue
        weights.append(w)
    scored = sorted(((score(c), -i, c) for i, c in enumerate(_retune(instance, w) for w in weights)),
                    key=lambda t: (t[0], t[1]), reverse=True)
    for s, _, cand in scored:
        if s <= base:
            break
        if verify(cand):
            return cand, MapFragment()
    return instance, MapFragment()


# ---------------------------------------------------------------------------
# Semantic checks


@dataclass
class SemanticEvidence:
    passed: bool
    mode: str
    checks: dict[str, bool] = field(default_factory=dict)
    counterexample: dict | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {"passed": self.passed, "mode": self.mode, "checks": dict(self.checks),
                "counterexample": self.counterexample, "detail": self.detail}


def _order_violation(e: np.ndarray, ec: np.ndarray, tol: float) -> tuple[int, int] | None:
    """First pair with ``e[a] < e[b] - tol`` but ``ec[a] >= ec[b]``, or ``None``.

    Original energies are grouped by chaining values closer than ``tol``;
    the check then needs, for each group, the maximum candidate energy of
    all lower groups to stay strictly below the group's minimum.
    """
    order = np.argsort(e, kind="stable")
    es = e[order]
    cs = ec[order]
    starts = np.concatenate([[0], np.flatnonzero(np.diff(es) > tol) + 1, [es.size]])
    run_max = -np.inf
    run_arg = -1
    for g in range(len(starts) - 1):
        lo, hi = starts[g], starts[g + 1]
        block = cs[lo:hi]
        k = int(np.argmin(block))
        if run_arg >= 0 and not run_max < block[k]:
            return int(order[run_arg]), int(order[lo + k])
        kmax = int(np.argmax(block))
        if block[kmax] > run_max:
            run_max = float(block[kmax])
            run_arg = lo + kmax
    return None


def _min_over_aux(candidate: QuboInstance, c: np.ndarray, aux: list[int], tol: float
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Minimum candidate energy over the auxiliary bits for each row, and whether
    the mapped (consistent) auxiliary bits are the unique minimizer."""
    if not aux:
        e = energies(candidate, c)
        return e, np.ones(c.shape[0], dtype=bool)
    q = candidate.q
    block = q[np.ix_(aux, aux)]
    base = c.copy()
    base[:, aux] = 0
    e0 = energies(candidate, base)
    if not np.any(block - np.diag(np.diag(block))):
        # no aux-aux couplings: each auxiliary bit minimizes independently
        coef = np.diag(q)[aux] + 2.0 * (base.astype(np.float64) @ q[:, aux])
        m = e0 + np.minimum(coef, 0.0).sum(axis=1)
        choice = (coef < 0).astype(np.int8)
        unique = (np.abs(coef) > tol).all(axis=1) & (choice == c[:, aux]).all(axis=1)
        return m, unique
    if len(aux) > AUX_BRUTE_LIMIT:
        raise InvalidArgument("too many coupled auxiliary variables for an exhaustive check")
    combos = all_configurations(len(aux))
    best = np.full(c.shape[0], np.inf)
    count = np.zeros(c.shape[0], dtype=int)
    consistent_e = energies(candidate, c)
    trial = c.copy()
    for combo in combos:
        trial[:, aux] = combo
        e = energies(candidate, trial)
        better = e < best - tol
        close = np.abs(e - best) <= tol
        count = np.where(better, 1, np.where(close, count + 1, count))
        best = np.where(better, e, np.minimum(best, e))
    unique = (count == 1) & (consistent_e <= best + tol)
    return best, unique


def _bits(row: np.ndarray) -> list[int]:
    return [int(b) for b in row]


def preserves_semantics(candidate: QuboInstance, original: QuboInstance, vmap: VariableMap,
                        mode: str = "auto", num_pairs: int = 1000, seed: int = 0) -> SemanticEvidence:
    """Check energy-order preservation and global-optimum correspondence.

    Energy order is compared on the image of the variable map (original
    assignments and their candidate encodings).  The optimum check minimizes
    over auxiliary bits, so an inconsistent auxiliary assignment that ties or
    beats the encoded optimum is a failure.

    ``exhaustive`` enumerates all original assignments (``n <= 16``).
    ``sampled`` compares ``num_pairs`` random pairs and cross-checks short
    annealing runs on both instances.  ``auto`` picks by size.
    """
    if vmap.n_original != original.n or vmap.size != candidate.n:
        return SemanticEvidence(False, mode, detail="variable map does not fit the instances")
    if mode == "auto":
        mode = "exhaustive" if original.n <= EXHAUSTIVE_LIMIT else "sampled"
    if mode == "exhaustive":
        return _exhaustive_check(candidate, original, vmap)
    if mode == "sampled":
        return _sampled_check(candidate, original, vmap, num_pairs, seed)
    raise InvalidArgument(f"unknown check mode {mode!r}")


def _exhaustive_check(candidate: QuboInstance, original: QuboInstance, vmap: VariableMap) -> SemanticEvidence:
    if original.n > EXHAUSTIVE_LIMIT:
        raise InvalidArgument(f"exhaustive check is limited to n <= {EXHAUSTIVE_LIMIT}")
    x = all_configurations(original.n)
    e = energies(original, x)
    c = vmap.forward(x)
    ec = energies(candidate, c)
    tol = tolerance(float(np.abs(e).max()))
    tol_c = tolerance(float(np.abs(ec).max()))
    ev = SemanticEvidence(True, "exhaustive")
    bad = _order_violation(e, ec, tol)
    ev.checks["energy_order"] = bad is None
    if bad is not None:
        a, b = bad
        ev.counterexample = {"kind": "energy_order", "x_a": _bits(x[a]), "x_b": _bits(x[b]),
                             "original": [float(e[a]), float(e[b])], "candidate": [float(ec[a]), float(ec[b])]}
    m, unique = _min_over_aux(candidate, c, vmap.aux_indices, tol_c)
    orig_set = e <= e.min() + tol
    cand_set = m <= m.min() + tol_c
    same = bool(np.array_equal(orig_set, cand_set))
    consistent = bool(unique[cand_set].all())
    ev.checks["optimum_correspondence"] = same
    ev.checks["consistent_minimizers"] = consistent
    if ev.counterexample is None and not same:
        k = int(np.flatnonzero(orig_set != cand_set)[0])
        ev.counterexample = {"kind": "optimum_correspondence", "x": _bits(x[k]),
                             "original_minimizer": bool(orig_set[k]), "candidate_minimizer": bool(cand_set[k])}
    if ev.counterexample is None and not consistent:
        k = int(np.flatnonzero(cand_set & ~unique)[0])
        ev.counterexample = {"kind": "inconsistent_minimizer", "x": _bits(x[k])}
    ev.passed = all(ev.checks.values())
    ev.detail = f"{x.shape[0]} assignments"
    return ev


def _sampled_check(candidate: QuboInstance, original: QuboInstance, vmap: VariableMap,
                   num_pairs: int, seed: int) -> SemanticEvidence:
    rng = np.random.default_rng(seed)
    xa = rng.integers(0, 2, (num_pairs, original.n), dtype=np.int8)
    xb = rng.integers(0, 2, (num_pairs, original.n), dtype=np.int8)
    ea, eb = energies(original, xa), energies(original, xb)
    ca, cb = energies(candidate, vmap.forward(xa)), energies(candidate, vmap.forward(xb))
    tol = tolerance(float(max(np.abs(ea).max(), np.abs(eb).max())))
    viol = ((ea < eb - tol) & ~(ca < cb)) | ((eb < ea - tol) & ~(cb < ca))
    ev = SemanticEvidence(True, "sampled")
    ev.checks["energy_order"] = not viol.any()
    if viol.any():
        k = int(np.flatnonzero(viol)[0])
        ev.counterexample = {"kind": "energy_order", "x_a": _bits(xa[k]), "x_b": _bits(xb[k]),
                             "original": [float(ea[k]), float(eb[k])], "candidate": [float(ca[k]), float(cb[k])]}

    def quick(inst: QuboInstance) -> np.ndarray:
        cfg = SaConfig(t0=max(exact_sigma(inst), 1e-9), iters_per_temp=max(100, 10 * inst.n),
                       num_levels=100, trajectories=8, seed=seed)
        return solve_sa(inst, cfg).best_bits

    x_star = quick(original)
    c_star = quick(candidate)
    e_orig_best = energies(original, x_star[None])[0]
    e_cand_best = energies(candidate, c_star[None])[0]
    mapped = energies(candidate, vmap.forward(x_star))[0]
    projected = energies(original, vmap.project(c_star))[0]
    tol_c = tolerance(float(max(abs(e_cand_best), abs(mapped))))
    ok = bool(mapped <= e_cand_best + tol_c and projected <= e_orig_best + tol)
    ev.checks["optimum_correspondence"] = ok
    if ev.counterexample is None and not ok:
        ev.counterexample = {"kind": "optimum_correspondence", "x": _bits(x_star), "c": _bits(c_star)}
    ev.passed = all(ev.checks.values())
    ev.detail = f"{num_pairs} pairs, annealing cross-check"
    return ev


# ---------------------------------------------------------------------------
# Driver


@dataclass
class StepRecord:
    iteration: int
    strategy: str
    sigma_before: float
    sigma_after: float | None
    accepted: bool
    semantic_mode: str | None = None
    semantic_passed: bool | None = None
    n_after: int | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ReformulationTrace:
    initial: QuboInstance
    final: QuboInstance
    variable_map: VariableMap
    steps: list[StepRecord] = field(default_factory=list)
    semantic_evidence: list[dict] = field(default_factory=list)
    sigma_initial: float = 0.0
    sigma_final: float = 0.0
    iterations: int = 0
    stop_reason: str = ""

    @property
    def accepted(self) -> list[StepRecord]:
        return [s for s in self.steps if s.accepted]

    def to_dict(self) -> dict:
        return {
            "sigma_initial": self.sigma_initial,
            "sigma_final": self.sigma_final,
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
            "n_initial": self.initial.n,
            "n_final": self.final.n,
            "variable_map": self.variable_map.to_dict(),
            "steps": [s.to_dict() for s in self.steps],
            "semantic_evidence": self.semantic_evidence,
        }


def candidate_samples(vmap: VariableMap, base: np.ndarray, seed: int) -> np.ndarray:
    """Uniform samples of a candidate's variables that track the original stream.

    Original-position columns reuse ``base`` (polarity applied); auxiliary
    column ``k`` has its own stream, so candidates that differ only by a
    relabeling are scored on corresponding configurations.
    """
    m = base.shape[0]
    c = np.zeros((m, vmap.size), dtype=np.int8)
    pol = np.array(vmap.polarity, dtype=np.int8)
    c[:, : vmap.n_original] = base ^ pol[: vmap.n_original]
    for k, v in enumerate(vmap.aux_indices):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_AUX_STREAM, k)))
        c[:, v] = rng.integers(0, 2, m, dtype=np.int8) ^ pol[v]
    return c


def reformulate(instance: QuboInstance, target_sigma: float = 0.35, max_iter: int = 15,
                strategies: Sequence[str] = STRATEGIES, params: StrategyParams = StrategyParams(),
                num_samples: int = 1000, seed: int = 0, check_mode: str = "auto",
                ) -> tuple[QuboInstance, ReformulationTrace]:
    """Raise the sampled gradient deviation without changing the optimum.

    Returns the reformulated instance (the original object when nothing was
    accepted) and its trace.
    """
    if not target_sigma > 0:
        raise InvalidArgument("target_sigma must be positive")
    strategies = [s for s in STRATEGIES if s in set(strategies)]
    if not strategies:
        raise InvalidArgument(f"enable at least one of {STRATEGIES}")
    if max_iter < 0:
        raise InvalidArgument("max_iter must be >= 0")
    base = sample_configurations(instance.n, num_samples, seed)

    def sigma_of(inst: QuboInstance, vm: VariableMap) -> float:
        return gradient_variance_from_samples(inst, candidate_samples(vm, base, seed)).sigma_grad

    current = instance
    vmap = VariableMap.identity(instance.n)
    sigma = sigma_of(current, vmap)
    trace = ReformulationTrace(instance, instance, vmap, sigma_initial=sigma)
    iteration = 0
    stop = "target reached" if sigma >= target_sigma else "max_iter"
    while sigma < target_sigma and iteration < max_iter:
        best: tuple[QuboInstance, VariableMap, float, str] | None = None
        best_sigma = sigma
        records: list[StepRecord] = []
        for name in strategies:
            rec = StepRecord(iteration, name, sigma, None, False)
            records.append(rec)
            try:
                cand, frag = _apply(name, current, vmap, params, instance, check_mode, seed, sigma_of)
            except StrategyInapplicable as exc:
                rec.note = f"skipped: {exc}"
                continue
            cand_map = vmap.compose(frag)
            if cand is current:
                rec.note = "no change"
                continue
            ev = preserves_semantics(cand, instance, cand_map, check_mode, seed=seed)
            trace.semantic_evidence.append({"iteration": iteration, "strategy": name, **ev.to_dict()})
            rec.semantic_mode, rec.semantic_passed, rec.n_after = ev.mode, ev.passed, cand.n
            if not ev.passed:
                rec.note = "semantic check failed"
                continue
            s = sigma_of(cand, cand_map)
            rec.sigma_after = s
            if s > best_sigma * (1.0 + IMPROVE_RTOL) and s > best_sigma:
                best, best_sigma = (cand, cand_map, s, name), s
        trace.steps.extend(records)
        if best is None:
            stop = "no improvement"
            break
        cand, cand_map, s, name = best
        if not s > sigma or cand_map.size != cand.n:
            raise IntegrityError("accepted candidate failed its own acceptance invariants")
        for rec in records:
            if rec.strategy == name:
                rec.accepted = True
        current, vmap, sigma = cand, cand_map, s
        iteration += 1
        stop = "target reached" if sigma >= target_sigma else "max_iter"
    if current is not instance:
        current = current.with_changes(provenance={
            **current.provenance, "size_growth": current.n - instance.n,
            "accepted": [s.strategy for s in trace.steps if s.accepted],
        })
    trace.final = current
    trace.variable_map = vmap
    trace.sigma_final = sigma
    trace.iterations = iteration
    trace.stop_reason = stop
    return current, trace


def _apply(name: str, current: QuboInstance, vmap: VariableMap, params: StrategyParams,
           original: QuboInstance, check_mode: str, seed: int,
           sigma_of: Callable[[QuboInstance, VariableMap], float]) -> tuple[QuboInstance, MapFragment]:
    if name == "substitution":
        return strat_variable_substitution(current, params=params)
    if name == "scaling":
        return strat_penalty_scaling(current, params.penalty_scale)
    if name == "auxiliary":
        return strat_auxiliary_variables(current, params=params, vmap=vmap)
    if name == "relaxation":
        return strat_constraint_relaxation(
            current, params,
            score=lambda c: sigma_of(c, vmap),
            verify=lambda c: preserves_semantics(c, original, vmap, check_mode, seed=seed).passed,
        )
    raise InvalidArgument(f"unknown strategy {name!r}")
