import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradvar.core import energies, evaluate
from gradvar.errors import InvalidArgument
from gradvar.generators import (
    GeneratorSpec,
    Graph,
    SetCoverInput,
    gen_erdos_renyi,
    gen_graph_partition,
    gen_maxcut,
    gen_number_partition,
    gen_set_cover,
    gen_synthetic,
    random_set_cover,
    random_values,
    set_cover_layout,
)
from gradvar.landscape import all_configurations, landscape_scan

from conftest import close


def test_synthetic_is_seeded():
    a = gen_synthetic(12, seed=5)
    b = gen_synthetic(12, seed=5)
    c = gen_synthetic(12, seed=6)
    assert np.array_equal(a.q, b.q)
    assert not np.array_equal(a.q, c.q)


def test_synthetic_coefficient_moments():
    inst = gen_synthetic(200, mu=0.5, sigma2=2.0, seed=1)
    coef = inst.coefficients()
    assert coef.size == 200 * 201 // 2
    assert abs(coef.mean() - 0.5) < 0.02
    assert abs(coef.var() - 2.0) < 0.05


def test_synthetic_rejects_bad_parameters():
    with pytest.raises(InvalidArgument):
        gen_synthetic(0)
    with pytest.raises(InvalidArgument):
        gen_synthetic(3, sigma2=0.0)


def test_graph_validation():
    with pytest.raises(InvalidArgument):
        Graph(3, ((0, 0, 1.0),))
    with pytest.raises(InvalidArgument):
        Graph(3, ((1, 0, 1.0),))
    with pytest.raises(InvalidArgument):
        Graph(3, ((0, 3, 1.0),))
    with pytest.raises(InvalidArgument):
        Graph(3, ((0, 1, -1.0),))
    with pytest.raises(InvalidArgument):
        Graph(3, ((0, 1, 1.0), (0, 1, 2.0)))
    g = Graph(3, ((0, 1, 2.0), (1, 2, 3.0)))
    assert Graph.from_dict(g.to_dict()) == g
    assert g.cut_weight([0, 1, 0]) == 5.0


def test_erdos_renyi_stream_stable_in_p():
    sparse = gen_erdos_renyi(10, 0.2, seed=3)
    dense = gen_erdos_renyi(10, 0.9, seed=3)
    weights = {(u, v): w for u, v, w in dense.edges}
    for u, v, w in sparse.edges:
        assert weights[(u, v)] == w


@pytest.mark.parametrize("seed", range(5))
def test_maxcut_energy_is_minus_cut(seed):
    g = gen_erdos_renyi(10, 0.5, seed=seed)
    inst = gen_maxcut(g)
    xs = all_configurations(10)
    e = energies(inst, xs)
    for x, ex in zip(xs, e):
        assert close(ex, -g.cut_weight(x))


def test_maxcut_triangle():
    g = Graph(3, ((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)))
    scan = landscape_scan(gen_maxcut(g))
    assert scan.global_min == -2.0
    assert len(scan.minimizers) == 6


@pytest.mark.parametrize("seed", range(5))
def test_graph_partition_minimizers_balanced(seed):
    g = gen_erdos_renyi(10, 0.5, seed=seed)
    inst = gen_graph_partition(g, gamma=g.total_weight + 1.0)
    scan = landscape_scan(inst)
    assert all(m.sum() == 5 for m in scan.minimizers)
    # among balanced assignments the energy is the cut plus a constant
    balanced = [x for x in all_configurations(10) if x.sum() == 5]
    best_cut = min(g.cut_weight(x) for x in balanced)
    assert min(g.cut_weight(m) for m in scan.minimizers) == pytest.approx(best_cut)


def test_graph_partition_penalty_is_balance_square():
    g = gen_erdos_renyi(6, 0.5, seed=0)
    inst = gen_graph_partition(g, gamma=2.0)
    for x in all_configurations(6):
        pen = inst.constraint.value(x)
        assert close(pen, 2.0 * ((x.sum() - 3) ** 2 - 9))
        assert close(inst.cardinality.form.value(x), (x.sum() - 3) ** 2 - 9)


@settings(max_examples=25)
@given(st.lists(st.integers(1, 50), min_size=1, max_size=9))
def test_number_partition_identity(values):
    inst = gen_number_partition(values)
    a = np.array(values, dtype=float)
    s = a.sum()
    for x in all_configurations(len(values)):
        lhs = 4.0 * evaluate(inst, x) + s * s
        rhs = float(a @ (2 * x - 1)) ** 2
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-9)


def test_number_partition_known_perfect_split():
    inst = gen_number_partition([3, 1, 1, 2, 2, 1])
    scan = landscape_scan(inst)
    assert scan.global_min == -(10.0**2) / 4
    with pytest.raises(InvalidArgument):
        gen_number_partition([1, 2.5])


def test_random_values_make_even():
    for seed in range(20):
        assert sum(random_values(7, seed=seed, make_even=True)) % 2 == 0


def test_set_cover_input_validation():
    with pytest.raises(InvalidArgument):
        SetCoverInput(3, ((0, 1),))
    with pytest.raises(InvalidArgument):
        SetCoverInput(2, ((0, 2),))
    data = SetCoverInput(3, ((0, 1), (1, 2), (2,)))
    assert data.covering(1) == [0, 1]
    assert data.uncovered([0, 0, 1]) == 2
    assert SetCoverInput.from_dict(data.to_dict()) == data


def _min_cover_size(data: SetCoverInput) -> int:
    for k in range(1, data.num_sets + 1):
        for combo in itertools.combinations(range(data.num_sets), k):
            sel = [1 if i in combo else 0 for i in range(data.num_sets)]
            if data.uncovered(sel) == 0:
                return k
    raise AssertionError("input always has a cover")


@pytest.mark.parametrize("seed", range(6))
def test_set_cover_minimizers_are_minimum_covers(seed):
    data = random_set_cover(4, num_sets=6, p=0.4, seed=seed)
    inst = gen_set_cover(data)
    assert inst.n <= 20
    scan = landscape_scan(inst)
    m = data.num_sets
    best = _min_cover_size(data)
    assert scan.global_min == pytest.approx(best)
    for bits in scan.minimizers:
        assert data.uncovered(bits[:m]) == 0
        assert bits[:m].sum() == best


def test_set_cover_penalty_per_uncovered_element():
    data = SetCoverInput(3, ((0, 1), (1, 2), (0, 2)))
    inst = gen_set_cover(data, penalty=10.0)
    layout = set_cover_layout(data)
    slack = [v for _, _, s in layout for v in s]
    for sel in itertools.product((0, 1), repeat=3):
        # minimize over the slack bits
        best = min(
            evaluate(inst, np.array(sel + tuple(extra)))
            for extra in itertools.product((0, 1), repeat=len(slack))
        )
        assert best == pytest.approx(sum(sel) + 10.0 * data.uncovered(sel))


def test_set_cover_penalty_bound():
    data = SetCoverInput(2, ((0,), (1,), (0, 1)))
    with pytest.raises(InvalidArgument):
        gen_set_cover(data, penalty=3.0)
    inst = gen_set_cover(data)
    assert inst.provenance["num_set_vars"] == 3
    assert inst.tagged


@pytest.mark.parametrize("family", ["synthetic", "maxcut", "graph_partition", "number_partition", "set_cover"])
def test_generator_spec_builds_every_family(family):
    spec = GeneratorSpec(family, 5, seed=2)
    a, b = spec.build(), spec.build()
    assert np.array_equal(a.q, b.q)
    assert a.seed == 2
    assert GeneratorSpec(**spec.to_dict()).build().q.tolist() == a.q.tolist()


def test_generator_spec_rejects_unknown_family():
    with pytest.raises(InvalidArgument):
        GeneratorSpec("tsp", 5)
