"""Shared oracles and hypothesis strategies.

The naive helpers deliberately avoid the package's matrix code: they work
from the upper-triangular coefficient form ``E = offset + sum_i a_i x_i +
sum_{i<j} b_ij x_i x_j`` with plain loops.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from gradvar.core import QuboInstance


def naive_energy(instance: QuboInstance, bits) -> float:
    q = instance.q
    n = instance.n
    e = instance.offset
    for i in range(n):
        if bits[i]:
            e += q[i][i]
            for j in range(i + 1, n):
                if bits[j]:
                    e += 2.0 * q[i][j]
    return e


def naive_landscape(instance: QuboInstance):
    """All ``(bits, energy)`` pairs in lexicographic order (bit 0 first)."""
    return [(bits, naive_energy(instance, bits)) for bits in itertools.product((0, 1), repeat=instance.n)]


def naive_minimum(instance: QuboInstance):
    table = naive_landscape(instance)
    best = min(e for _, e in table)
    tol = 1e-9 * max(1.0, abs(best))
    return best, sorted(b for b, e in table if e <= best + tol)


def close(a: float, b: float, rel: float = 1e-9) -> bool:
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


@st.composite
def qubo_instances(draw, min_n: int = 1, max_n: int = 6, integer: bool = False, with_offset: bool = True):
    n = draw(st.integers(min_n, max_n))
    if integer:
        vals = st.integers(-20, 20).map(float)
    else:
        vals = st.floats(-10, 10, allow_nan=False, allow_infinity=False, width=64)
    upper = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            upper[i, j] = draw(vals)
    q = np.triu(upper) + np.triu(upper, 1).T
    offset = draw(vals) if with_offset else 0.0
    return QuboInstance(q, label="hyp", offset=offset)


@st.composite
def instance_and_bits(draw, **kw):
    inst = draw(qubo_instances(**kw))
    bits = draw(st.lists(st.integers(0, 1), min_size=inst.n, max_size=inst.n))
    return inst, np.array(bits, dtype=np.int8)


@pytest.fixture
def tiny() -> QuboInstance:
    # E = x0 - 2 x1 + 3 x0 x1 + 0.5
    return QuboInstance(np.array([[1.0, 1.5], [1.5, -2.0]]), label="tiny", offset=0.5)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(results[num])
