"""Instance generators: Gaussian synthetic QUBOs and four NP-hard reductions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .core import Cardinality, QuadForm, QuboInstance
from .errors import InvalidArgument

FAMILIES = ("synthetic", "maxcut", "graph_partition", "number_partition", "set_cover")


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph; edges are ``(u, v, w)`` with ``u < v``."""

    num_vertices: int
    edges: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self) -> None:
        if self.num_vertices < 1:
            raise InvalidArgument("graph needs at least one vertex")
        seen = set()
        clean = []
        for u, v, w in self.edges:
            u, v, w = int(u), int(v), float(w)
            if u == v:
                raise InvalidArgument(f"self-loop on vertex {u}")
            if not u < v:
                raise InvalidArgument(f"edge ({u}, {v}) must satisfy u < v")
            if v >= self.num_vertices:
                raise InvalidArgument(f"edge ({u}, {v}) out of range")
            if w < 0:
                raise InvalidArgument("edge weights must be non-negative")
            if (u, v) in seen:
                raise InvalidArgument(f"duplicate edge ({u}, {v})")
            seen.add((u, v))
            clean.append((u, v, w))
        object.__setattr__(self, "edges", tuple(clean))

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def cut_weight(self, bits: Sequence[int]) -> float:
        return float(sum(w for u, v, w in self.edges if bits[u] != bits[v]))

    def to_dict(self) -> dict:
        return {"num_vertices": self.num_vertices, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        return cls(int(data["num_vertices"]), tuple(tuple(e) for e in data["edges"]))


@dataclass(frozen=True)
class SetCoverInput:
    num_elements: int
    sets: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        sets = tuple(tuple(sorted({int(e) for e in s})) for s in self.sets)
        object.__setattr__(self, "sets", sets)
        if self.num_elements < 1 or not sets:
            raise InvalidArgument("set cover needs at least one element and one set")
        covered = set()
        for s in sets:
            for e in s:
                if not 0 <= e < self.num_elements:
                    raise InvalidArgument(f"element {e} out of range")
                covered.add(e)
        if len(covered) != self.num_elements:
            raise InvalidArgument("the union of the sets does not cover every element")

    @property
    def num_sets(self) -> int:
        return len(self.sets)

    def covering(self, element: int) -> list[int]:
        return [k for k, s in enumerate(self.sets) if element in s]

    def uncovered(self, selection: Sequence[int]) -> int:
        chosen = set()
        for k, s in enumerate(self.sets):
            if selection[k]:
                chosen.update(s)
        return self.num_elements - len(chosen)

    def to_dict(self) -> dict:
        return {"num_elements": self.num_elements, "sets": [list(s) for s in self.sets]}

    @classmethod
    def from_dict(cls, data: dict) -> "SetCoverInput":
        return cls(int(data["num_elements"]), tuple(tuple(s) for s in data["sets"]))


def _pair_matrix(n: int, pairs: dict[tuple[int, int], float], linear: np.ndarray) -> np.ndarray:
    upper = np.zeros((n, n))
    for (i, j), b in pairs.items():
        upper[i, j] += b / 2.0
    q = upper + upper.T
    q[np.diag_indices(n)] = linear
    return q


# ---------------------------------------------------------------------------
# Synthetic


def gen_synthetic(n: int, mu: float = 0.0, sigma2: float = 2.0, seed: int | None = 0) -> QuboInstance:
    """Gaussian QUBO with i.i.d. ``N(mu, sigma2)`` linear and pair coefficients.

    The diagonal and the strict upper triangle are drawn independently (row
    major order); the pair coefficient is then split over both triangles.
    """
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    if not sigma2 > 0:
        raise InvalidArgument("sigma2 must be positive")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n)
    draws = mu + math.sqrt(sigma2) * rng.standard_normal(iu[0].size)
    upper = np.zeros((n, n))
    upper[iu] = draws
    diag = np.diag(upper).copy()
    np.fill_diagonal(upper, 0.0)
    half = upper / 2.0
    q = half + half.T
    q[np.diag_indices(n)] = diag
    return QuboInstance(
        q,
        label=f"synthetic(n={n}, mu={mu}, sigma2={sigma2})",
        seed=seed,
        provenance={"family": "synthetic", "mu": mu, "sigma2": sigma2},
    )


# ---------------------------------------------------------------------------
# Graph problems


def gen_erdos_renyi(n: int, p: float, weight_range: tuple[float, float] = (1.0, 10.0), seed: int | None = 0) -> Graph:
    """G(n, p) with i.i.d. uniform edge weights.

    One inclusion draw and one weight draw are consumed for every vertex
    pair (row-major order) whether or not the edge is kept, so the stream is
    stable under changes of ``p``.
    """
    lo, hi = weight_range
    if not 0.0 < p <= 1.0:
        raise InvalidArgument("edge probability must be in (0, 1]")
    if lo > hi:
        raise InvalidArgument("weight range must satisfy lo <= hi")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    weights = rng.uniform(lo, hi, iu.size) if hi > lo else np.full(iu.size, float(lo))
    edges = tuple((int(u), int(v), float(w)) for u, v, w, k in zip(iu, ju, weights, keep) if k)
    return Graph(n, edges)


def gen_maxcut(graph: Graph) -> QuboInstance:
    """``sum_{(i,j)} w_ij (-x_i - x_j + 2 x_i x_j)``; energy is minus the cut weight."""
    n = graph.num_vertices
    linear = np.zeros(n)
    pairs: dict[tuple[int, int], float] = {}
    for u, v, w in graph.edges:
        linear[u] -= w
        linear[v] -= w
        pairs[(u, v)] = pairs.get((u, v), 0.0) + 2.0 * w
    return QuboInstance(
        _pair_matrix(n, pairs, linear),
        label=f"maxcut(n={n}, m={len(graph.edges)})",
        provenance={"family": "maxcut", "graph": graph.to_dict()},
    )


def gen_graph_partition(graph: Graph, gamma: float = 5.0) -> QuboInstance:
    """Balanced two-way partition: cut weight plus ``gamma`` times the balance term.

    Balance term: ``sum_i (1 - |V|) x_i + sum_{i<j} 2 x_i x_j``, which is
    ``(sum_i x_i - |V|/2)**2`` without its constant.  The penalty part is
    tagged as a constraint layer and declared as a cardinality constraint.
    """
    if not gamma > 0:
        raise InvalidArgument("gamma must be positive")
    n = graph.num_vertices
    obj_lin = np.zeros(n)
    obj_pairs: dict[tuple[int, int], float] = {}
    for u, v, w in graph.edges:
        obj_lin[u] += w
        obj_lin[v] += w
        obj_pairs[(u, v)] = obj_pairs.get((u, v), 0.0) - 2.0 * w
    objective = _pair_matrix(n, obj_pairs, obj_lin)
    unit = np.ones((n, n))
    np.fill_diagonal(unit, 1.0 - n)
    penalty = gamma * unit
    q = objective + penalty
    return QuboInstance(
        q,
        label=f"graph_partition(n={n}, m={len(graph.edges)}, gamma={gamma})",
        constraint=QuadForm(penalty),
        cardinality=Cardinality(QuadForm(unit), float(gamma), n / 2.0),
        provenance={"family": "graph_partition", "gamma": gamma, "graph": graph.to_dict()},
    )


# ---------------------------------------------------------------------------
# Number partitioning


def random_values(n: int, value_range: tuple[int, int] = (1, 100), seed: int | None = 0,
                  make_even: bool = False) -> list[int]:
    """Uniform integers; ``make_even`` bumps the last value when the total is odd."""
    lo, hi = value_range
    if n < 1 or lo < 1 or hi < lo:
        raise InvalidArgument("need n >= 1 and 1 <= lo <= hi")
    rng = np.random.default_rng(seed)
    values = [int(v) for v in rng.integers(lo, hi + 1, n)]
    if make_even and sum(values) % 2:
        values[-1] += 1
    return values


def gen_number_partition(values: Sequence[int]) -> QuboInstance:
    """``q_ii = a_i (a_i - S)`` and ``q_ij = q_ji = a_i a_j``.

    With ``S = sum(a)`` every assignment satisfies
    ``4 H(x) + S**2 == (sum_i a_i (2 x_i - 1))**2``.
    """
    if len(values) == 0:
        raise InvalidArgument("values must be non-empty")
    a = np.asarray(values, dtype=np.float64)
    if np.any(a < 1) or np.any(a != np.round(a)):
        raise InvalidArgument("values must be positive integers")
    total = a.sum()
    q = np.outer(a, a)
    q[np.diag_indices_from(q)] = a * (a - total)
    return QuboInstance(
        q,
        label=f"number_partition(n={a.size})",
        provenance={"family": "number_partition", "values": [int(v) for v in values]},
    )


# ---------------------------------------------------------------------------
# Set cover


def random_set_cover(num_elements: int, num_sets: int | None = None, p: float = 0.3,
                     seed: int | None = 0, max_tries: int = 1000) -> SetCoverInput:
    """Each set contains each element independently with probability ``p``.

    Draws are repeated from the same generator until the union covers every
    element.
    """
    if num_sets is None:
        num_sets = 2 * num_elements
    if num_elements < 1 or num_sets < 1 or not 0 < p <= 1:
        raise InvalidArgument("invalid set cover parameters")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        member = rng.random((num_sets, num_elements)) < p
        if member.any(axis=0).all():
            sets = tuple(tuple(int(e) for e in np.flatnonzero(row)) for row in member)
            return SetCoverInput(num_elements, sets)
    raise InvalidArgument("could not draw a covering set system; raise p or num_sets")


def set_cover_layout(data: SetCoverInput) -> list[tuple[int, list[int], list[int]]]:
    """Per element: ``(element, covering set indices, slack variable indices)``.

    Slack bits for element ``e`` encode ``count - 1`` in binary, where
    ``count`` is the number of selected sets covering ``e``; elements covered
    by a single set need none.  Slack variables follow the set variables.
    """
    layout = []
    nxt = data.num_sets
    for e in range(data.num_elements):
        cov = data.covering(e)
        bits = max(0, math.ceil(math.log2(len(cov)))) if len(cov) > 1 else 0
        layout.append((e, cov, list(range(nxt, nxt + bits))))
        nxt += bits
    return layout


def gen_set_cover(data: SetCoverInput, penalty: float | None = None) -> QuboInstance:
    """Penalty-form set cover.

    Energy is ``sum_k x_k + penalty * sum_e (sum_{k covers e} x_k - 1 - slack_e)**2``.
    Minimizing over the slack bits leaves exactly ``penalty`` per uncovered
    element and nothing per covered one, so the global minimizers are the
    minimum covers whenever ``penalty`` exceeds the number of sets.
    """
    m = data.num_sets
    if penalty is None:
        penalty = m + 1.0
    if not penalty > m:
        raise InvalidArgument(f"penalty must exceed the number of sets ({m})")
    layout = set_cover_layout(data)
    n = m + sum(len(s) for _, _, s in layout)
    lin = np.zeros(n)
    pen = np.zeros((n, n))
    const = 0.0
    for _, cov, slack in layout:
        # (sum c_v x_v - 1)**2 with c = +1 on covering sets, -2**b on slack bits
        coeff = np.zeros(n)
        coeff[cov] = 1.0
        for b, v in enumerate(slack):
            coeff[v] = -float(2**b)
        pen += np.outer(coeff, coeff)
        pen[np.diag_indices(n)] -= 2.0 * coeff
        const += 1.0
    # x_v**2 == x_v folds the squared terms into the diagonal already
    penalty_q = penalty * pen
    lin[:m] = 1.0
    q = penalty_q.copy()
    q[np.diag_indices(n)] += lin
    return QuboInstance(
        q,
        label=f"set_cover(elements={data.num_elements}, sets={m}, penalty={penalty})",
        offset=penalty * const,
        constraint=QuadForm(penalty_q, penalty * const),
        provenance={"family": "set_cover", "penalty": penalty, "num_set_vars": m,
                    "set_system": data.to_dict()},
    )


# ---------------------------------------------------------------------------
# Declarative spec (used by the benchmark plan format and the CLI)


@dataclass
class GeneratorSpec:
    """One instance recipe.

    ``params`` keys by family: synthetic ``mu``, ``sigma2``; maxcut and
    graph_partition ``p``, ``weight_range``, ``gamma``; number_partition
    ``value_range``, ``make_even``; set_cover ``num_sets``, ``p``,
    ``penalty``.
    """

    family: str
    n: int
    seed: int = 0
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise InvalidArgument(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n < 1:
            raise InvalidArgument("n must be >= 1")

    def build(self) -> QuboInstance:
        p = self.params
        fam = self.family
        if fam == "synthetic":
            inst = gen_synthetic(self.n, p.get("mu", 0.0), p.get("sigma2", 2.0), self.seed)
        elif fam in ("maxcut", "graph_partition"):
            graph = gen_erdos_renyi(self.n, p.get("p", 0.2), tuple(p.get("weight_range", (1.0, 10.0))), self.seed)
            inst = gen_maxcut(graph) if fam == "maxcut" else gen_graph_partition(graph, p.get("gamma", 5.0))
        elif fam == "number_partition":
            values = random_values(self.n, tuple(p.get("value_range", (1, 100))), self.seed,
                                   p.get("make_even", False))
            inst = gen_number_partition(values)
        else:
            data = random_set_cover(self.n, p.get("num_sets"), p.get("p", 0.3), self.seed)
            inst = gen_set_cover(data, p.get("penalty"))
        return inst.with_changes(seed=self.seed)

    def to_dict(self) -> dict:
        return {"family": self.family, "n": self.n, "seed": self.seed, "params": dict(self.params)}
