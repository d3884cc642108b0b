import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gradvar.core import (
    Assignment,
    IsingInstance,
    QuboInstance,
    energies,
    evaluate,
    flip,
    flip_delta,
    instance_from_dict,
    instance_to_dict,
    ising_to_qubo,
    load_instance,
    qubo_to_ising,
    save_instance,
    substitute,
    symmetric_from_entries,
)
from gradvar.errors import InvalidArgument
from gradvar.generators import gen_graph_partition, gen_erdos_renyi, gen_synthetic

from conftest import close, instance_and_bits, naive_energy, qubo_instances


def test_evaluate_hand_values(tiny):
    assert evaluate(tiny, [0, 0]) == 0.5
    assert evaluate(tiny, [1, 0]) == 1.5
    assert evaluate(tiny, [0, 1]) == -1.5
    assert evaluate(tiny, [1, 1]) == 2.5


def test_from_entries_matches_pair_convention():
    inst = QuboInstance.from_entries(3, [(0, 0, 1.0), (2, 0, 4.0), (1, 2, -2.0), (1, 2, -1.0)])
    assert inst.q[0, 2] == inst.q[2, 0] == 2.0
    assert inst.q[1, 2] == -1.5
    assert inst.entries() == [[0, 0, 1.0], [0, 2, 4.0], [1, 2, -3.0]]
    assert evaluate(inst, [1, 1, 1]) == 1.0 + 4.0 - 3.0


def test_rejects_asymmetric_and_bad_shapes():
    with pytest.raises(InvalidArgument):
        QuboInstance(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(InvalidArgument):
        QuboInstance(np.zeros((2, 3)))
    with pytest.raises(InvalidArgument):
        QuboInstance(np.array([[np.nan]]))
    with pytest.raises(InvalidArgument):
        symmetric_from_entries(2, [(0, 5, 1.0)])


def test_instance_is_immutable(tiny):
    with pytest.raises(ValueError):
        tiny.q[0, 0] = 3.0


def test_evaluate_checks_length(tiny):
    with pytest.raises(InvalidArgument):
        evaluate(tiny, [1, 0, 1])
    with pytest.raises(InvalidArgument):
        flip_delta(tiny, [1, 0], 2)


@given(instance_and_bits(max_n=7))
def test_evaluate_matches_loops(case):
    inst, x = case
    assert close(evaluate(inst, x), naive_energy(inst, x))


@given(instance_and_bits(max_n=7), st.data())
def test_flip_delta_is_energy_difference(case, data):
    inst, x = case
    i = data.draw(st.integers(0, inst.n - 1))
    assert close(flip_delta(inst, x, i), evaluate(inst, flip(x, i)) - evaluate(inst, x))


@given(qubo_instances(max_n=6))
def test_batch_energies_match_single(inst):
    xs = np.array(list(itertools.product((0, 1), repeat=inst.n)), dtype=np.int8)
    batch = energies(inst, xs)
    for x, e in zip(xs, batch):
        assert close(e, evaluate(inst, x))


@given(qubo_instances(max_n=6))
def test_ising_round_trip_preserves_energies(inst):
    ising, const = qubo_to_ising(inst)
    back = ising_to_qubo(ising)
    for bits in itertools.product((0, 1), repeat=inst.n):
        x = np.array(bits)
        s = 2 * x - 1
        e = evaluate(inst, x)
        assert close(ising.energy(s) + const, e)
        assert close(evaluate(back, x) + const, e)


def test_ising_sign_convention():
    # one ferromagnetic bond: aligned spins are lower
    ising = IsingInstance(np.array([[0.0, 1.0], [1.0, 0.0]]), np.zeros(2))
    assert ising.energy(np.array([1, 1])) == -1.0
    assert ising.energy(np.array([1, -1])) == 1.0
    with pytest.raises(InvalidArgument):
        IsingInstance(np.eye(2), np.zeros(2))


def test_substitution_exhaustive_n10():
    inst = gen_synthetic(10, seed=4)
    rng = np.random.default_rng(11)
    mask = rng.random(10) < 0.5
    q2, off2 = substitute(inst.q, inst.offset, mask)
    sub = QuboInstance(q2, offset=off2)
    xs = np.array(list(itertools.product((0, 1), repeat=10)), dtype=np.int8)
    e = energies(inst, xs)
    e2 = energies(sub, xs ^ mask.astype(np.int8))
    assert np.allclose(e, e2, rtol=0, atol=1e-9)


def test_substitution_empty_mask_is_identity(tiny):
    q, off = substitute(tiny.q, tiny.offset, [False, False])
    assert np.array_equal(q, tiny.q)
    assert off == tiny.offset


@given(qubo_instances(max_n=6, integer=True), st.data())
def test_substitution_is_an_involution_on_integer_data(inst, data):
    mask = np.array(data.draw(st.lists(st.booleans(), min_size=inst.n, max_size=inst.n)))
    q1, o1 = substitute(inst.q, inst.offset, mask)
    q2, o2 = substitute(q1, o1, mask)
    assert np.array_equal(q2, inst.q)
    assert o2 == inst.offset


@given(instance_and_bits(max_n=6), st.data())
def test_substitution_preserves_energy(case, data):
    inst, x = case
    mask = np.array(data.draw(st.lists(st.booleans(), min_size=inst.n, max_size=inst.n)))
    q, off = substitute(inst.q, inst.offset, mask)
    sub = QuboInstance(q, offset=off)
    assert close(evaluate(sub, x ^ mask), evaluate(inst, x), rel=1e-9)


def test_json_round_trip_is_exact(tmp_path):
    inst = gen_graph_partition(gen_erdos_renyi(6, 0.5, seed=2), gamma=3.0).with_changes(seed=2)
    path = tmp_path / "gp.json"
    save_instance(inst, path)
    back = load_instance(path)
    assert np.array_equal(back.q, inst.q)
    assert np.array_equal(back.constraint.q, inst.constraint.q)
    assert back.cardinality.weight == 3.0 and back.cardinality.k == 3.0
    assert back.seed == 2 and back.label == inst.label
    assert instance_to_dict(back) == json.loads(path.read_text())


@given(qubo_instances(max_n=5))
def test_dict_round_trip_hypothesis(inst):
    back = instance_from_dict(json.loads(json.dumps(instance_to_dict(inst))))
    assert np.array_equal(back.q, inst.q)
    assert back.offset == inst.offset


def test_malformed_records_are_invalid(tmp_path):
    with pytest.raises(InvalidArgument):
        instance_from_dict({"entries": []})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(InvalidArgument):
        load_instance(bad)


def test_objective_and_constraint_split():
    inst = gen_graph_partition(gen_erdos_renyi(5, 0.6, seed=0), gamma=2.0)
    obj = inst.objective()
    for bits in itertools.product((0, 1), repeat=5):
        x = np.array(bits)
        assert close(obj.value(x) + inst.constraint.value(x), evaluate(inst, x))


def test_assignment_caches_energy(tiny):
    a = Assignment.of(tiny, [1, 1])
    assert a.energy == 2.5
    assert a.bits.dtype == np.int8


@settings(max_examples=30)
@given(qubo_instances(max_n=5), st.floats(-3, 3, allow_nan=False))
def test_energy_scales_linearly(inst, c):
    scaled = inst.with_changes(q=inst.q * c, offset=inst.offset * c)
    for bits in itertools.product((0, 1), repeat=inst.n):
        assert close(evaluate(scaled, bits), c * evaluate(inst, bits), rel=1e-9)
