"""QUBO and Ising energy models.

Storage convention: ``q`` is a dense, exactly symmetric matrix and the
energy of a binary vector ``x`` is ``x @ q @ x + offset``.  A linear
coefficient ``a_i`` lives on the diagonal; an upper-triangular pair
coefficient ``b_ij`` (the usual ``sum_{i<j} b_ij x_i x_j`` form) is split
as ``q[i, j] = q[j, i] = b_ij / 2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import InvalidArgument

__all__ = [
    "QuadForm",
    "Cardinality",
    "QuboInstance",
    "IsingInstance",
    "Assignment",
    "symmetric_from_entries",
    "evaluate",
    "energies",
    "flip",
    "flip_delta",
    "substitute",
    "qubo_to_ising",
    "ising_to_qubo",
    "instance_to_dict",
    "instance_from_dict",
    "save_instance",
    "load_instance",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def _check_symmetric(q: np.ndarray, what: str = "q") -> None:
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise InvalidArgument(f"{what} must be square, got shape {q.shape}")
    if q.shape[0] < 1:
        raise InvalidArgument(f"{what} must have at least one variable")
    if not np.all(np.isfinite(q)):
        raise InvalidArgument(f"{what} contains non-finite values")
    if not np.array_equal(q, q.T):
        raise InvalidArgument(f"{what} is not exactly symmetric")


def symmetric_from_entries(n: int, entries: Iterable[Sequence[float]]) -> np.ndarray:
    """Build the symmetric matrix for a list of ``(i, j, coeff)`` terms.

    ``i == j`` entries are linear terms; ``i != j`` entries are pair
    coefficients in either orientation.  Repeated entries accumulate.
    """
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    diag = np.zeros(n)
    upper = np.zeros((n, n))
    for entry in entries:
        i, j, c = int(entry[0]), int(entry[1]), float(entry[2])
        if not (0 <= i < n and 0 <= j < n):
            raise InvalidArgument(f"entry index ({i}, {j}) out of range for n={n}")
        if i == j:
            diag[i] += c
        else:
            a, b = min(i, j), max(i, j)
            upper[a, b] += c / 2.0
    q = upper + upper.T
    q[np.diag_indices(n)] = diag
    return q


def _upper_entries(q: np.ndarray) -> list[list[float]]:
    n = q.shape[0]
    out: list[list[float]] = []
    for i in range(n):
        if q[i, i] != 0.0:
            out.append([i, i, float(q[i, i])])
        for j in range(i + 1, n):
            if q[i, j] != 0.0:
                out.append([i, j, float(2.0 * q[i, j])])
    return out


@dataclass(frozen=True, eq=False)
class QuadForm:
    """A symmetric quadratic form plus constant, ``x @ q @ x + offset``."""

    q: np.ndarray
    offset: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", _frozen(self.q))
        _check_symmetric(self.q)
        object.__setattr__(self, "offset", float(self.offset))

    def value(self, bits: np.ndarray) -> float:
        x = np.asarray(bits, dtype=np.float64)
        return float(x @ self.q @ x) + self.offset


@dataclass(frozen=True, eq=False)
class Cardinality:
    """A declared ``weight * (sum_i lit_i - k)**2`` penalty.

    ``form`` is the unit-weight expansion written in the instance's current
    variables (after any polarity substitutions), minus the constant
    ``k**2`` so that it matches the usual expanded penalty.  The weighted
    form is already contained in the instance matrix and its constraint
    layer; this record only makes the penalty re-tunable.
    """

    form: QuadForm
    weight: float
    k: float


@dataclass(frozen=True, eq=False)
class QuboInstance:
    """Immutable QUBO instance.

    Parameters
    ----------
    q : ndarray, shape (n, n)
        Exactly symmetric coefficient matrix.
    label : str
        Free-text provenance.
    seed : int, optional
        Seed used to build the instance.
    offset : float
        Constant energy term (non-zero only after substitutions or for
        penalty forms that carry a constant).
    constraint : QuadForm, optional
        The penalty (constraint) part of ``q``.  ``q - constraint.q`` is the
        objective part.  Untagged instances leave this as ``None``.
    cardinality : Cardinality, optional
        Declared cardinality penalty, when the instance has one.
    provenance : dict
        JSON-serializable generator inputs (graph, values, set system).
    """

    q: np.ndarray
    label: str = ""
    seed: int | None = None
    offset: float = 0.0
    constraint: QuadForm | None = None
    cardinality: Cardinality | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", _frozen(self.q))
        _check_symmetric(self.q)
        object.__setattr__(self, "offset", float(self.offset))
        n = self.q.shape[0]
        for part in (self.constraint, None if self.cardinality is None else self.cardinality.form):
            if part is not None and part.q.shape != (n, n):
                raise InvalidArgument("penalty layer shape does not match instance")

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def tagged(self) -> bool:
        return self.constraint is not None

    @classmethod
    def from_entries(cls, n: int, entries: Iterable[Sequence[float]], **kwargs: Any) -> "QuboInstance":
        return cls(symmetric_from_entries(n, entries), **kwargs)

    def entries(self) -> list[list[float]]:
        """Upper-triangular ``[i, j, coeff]`` list in the linear/pair convention."""
        return _upper_entries(self.q)

    def coefficients(self) -> np.ndarray:
        """Linear and pair coefficients (diagonal plus upper triangle), flattened."""
        iu = np.triu_indices(self.n, k=1)
        return np.concatenate([np.diag(self.q), 2.0 * self.q[iu]])

    def objective(self) -> QuadForm:
        if self.constraint is None:
            return QuadForm(self.q, self.offset)
        return QuadForm(self.q - self.constraint.q, self.offset - self.constraint.offset)

    def with_changes(self, **kwargs: Any) -> "QuboInstance":
        return replace(self, **kwargs)


@dataclass(frozen=True, eq=False)
class IsingInstance:
    """Spin model ``E(s) = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i``.

    ``j`` is symmetric with zero diagonal, so the pair sum equals
    ``0.5 * s @ j @ s``.  Spins map to bits as ``s = 2x - 1``.
    """

    j: np.ndarray
    h: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "j", _frozen(self.j))
        object.__setattr__(self, "h", _frozen(np.ravel(self.h)))
        _check_symmetric(self.j, "j")
        if np.any(np.diag(self.j) != 0.0):
            raise InvalidArgument("Ising coupling matrix must have zero diagonal")
        if self.h.shape != (self.j.shape[0],):
            raise InvalidArgument("field vector length does not match couplings")

    @property
    def n(self) -> int:
        return self.j.shape[0]

    def energy(self, spins: np.ndarray) -> float:
        s = np.asarray(spins, dtype=np.float64)
        if s.shape != (self.n,):
            raise InvalidArgument(f"expected {self.n} spins, got shape {s.shape}")
        return float(-0.5 * (s @ self.j @ s) - self.h @ s)


def _as_bits(instance: QuboInstance, bits: Any) -> np.ndarray:
    x = np.asarray(bits)
    if x.shape != (instance.n,):
        raise InvalidArgument(f"expected {instance.n} bits, got shape {x.shape}")
    return x.astype(np.float64)


def evaluate(instance: QuboInstance, bits: Any) -> float:
    """Energy ``x @ q @ x + offset`` of one binary vector."""
    x = _as_bits(instance, bits)
    return float(x @ instance.q @ x) + instance.offset


def energies(instance: QuboInstance, batch: np.ndarray) -> np.ndarray:
    """Energies of every row of a ``(m, n)`` binary batch."""
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != instance.n:
        raise InvalidArgument(f"batch must have shape (m, {instance.n})")
    return np.einsum("ki,ij,kj->k", x, instance.q, x, optimize=True) + instance.offset


def flip(bits: Any, i: int) -> np.ndarray:
    x = np.array(bits, copy=True)
    x[i] = 1 - x[i]
    return x


def flip_delta(instance: QuboInstance, bits: Any, i: int) -> float:
    """Energy change from flipping bit ``i``.

    ``(1 - 2 x_i) * (q_ii + 2 * sum_{j != i} q_ij x_j)``
    """
    x = _as_bits(instance, bits)
    if not 0 <= i < instance.n:
        raise InvalidArgument(f"index {i} out of range for n={instance.n}")
    row = instance.q[i]
    field_ = row[i] + 2.0 * (row @ x - row[i] * x[i])
    return float((1.0 - 2.0 * x[i]) * field_)


def substitute(q: np.ndarray, offset: float, mask: Any) -> tuple[np.ndarray, float]:
    """Apply ``x_i -> 1 - x_i`` to every masked variable.

    Returns the matrix and constant of the substituted form.  Energies match
    exactly (up to rounding) under the complemented bits.
    """
    q = np.asarray(q, dtype=np.float64)
    m = np.asarray(mask, dtype=bool)
    if m.shape != (q.shape[0],):
        raise InvalidArgument("mask length does not match matrix")
    if not m.any():
        return q.copy(), float(offset)
    s = np.where(m, -1.0, 1.0)
    off = q.copy()
    np.fill_diagonal(off, 0.0)
    # linear shift picked up from pair terms with masked partners
    shift = off[:, m].sum(axis=1)
    new_diag = s * (np.diag(q) + 2.0 * shift)
    new_q = off * np.outer(s, s)
    new_q[np.diag_indices_from(new_q)] = new_diag
    sub = q[np.ix_(m, m)]
    const = float(offset) + float(sub.sum())
    return new_q, const


def qubo_to_ising(instance: QuboInstance) -> tuple[IsingInstance, float]:
    """Convert to spin form; returns ``(ising, offset)``.

    For every bit vector ``x`` with ``s = 2x - 1``:
    ``ising.energy(s) + offset == evaluate(instance, x)``.
    """
    q = instance.q
    d = np.diag(q).copy()
    off = q.copy()
    np.fill_diagonal(off, 0.0)
    row = off.sum(axis=1)
    j = -0.5 * off
    h = -0.5 * (d + row)
    const = 0.5 * d.sum() + 0.25 * off.sum() + instance.offset
    return IsingInstance(j, h), float(const)


def ising_to_qubo(ising: IsingInstance, label: str = "ising") -> QuboInstance:
    """Convert spin form to a QUBO whose ``offset`` absorbs the constant."""
    j = ising.j
    q = -2.0 * j
    np.fill_diagonal(q, 2.0 * j.sum(axis=1) - 2.0 * ising.h)
    const = -0.5 * j.sum() + ising.h.sum()
    return QuboInstance(q, label=label, offset=float(const))


@dataclass
class Assignment:
    """Binary configuration with its cached energy."""

    bits: np.ndarray
    energy: float

    @classmethod
    def of(cls, instance: QuboInstance, bits: Any) -> "Assignment":
        x = np.asarray(bits, dtype=np.int8).copy()
        return cls(x, evaluate(instance, x))


# ---------------------------------------------------------------------------
# JSON persistence


def _form_to_dict(form: QuadForm) -> dict:
    return {"entries": _upper_entries(form.q), "offset": form.offset}


def _form_from_dict(n: int, data: dict) -> QuadForm:
    return QuadForm(symmetric_from_entries(n, data.get("entries", [])), data.get("offset", 0.0))


def instance_to_dict(instance: QuboInstance) -> dict:
    data: dict[str, Any] = {
        "n": instance.n,
        "label": instance.label,
        "entries": instance.entries(),
    }
    if instance.offset != 0.0:
        data["offset"] = instance.offset
    if instance.seed is not None:
        data["seed"] = instance.seed
    if instance.constraint is not None:
        data["constraint"] = _form_to_dict(instance.constraint)
    if instance.cardinality is not None:
        card = instance.cardinality
        data["cardinality"] = {**_form_to_dict(card.form), "weight": card.weight, "k": card.k}
    if instance.provenance:
        data["provenance"] = instance.provenance
    return data


def instance_from_dict(data: dict) -> QuboInstance:
    try:
        n = int(data["n"])
        entries = data["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgument(f"malformed instance record: {exc}") from exc
    constraint = _form_from_dict(n, data["constraint"]) if "constraint" in data else None
    cardinality = None
    if "cardinality" in data:
        c = data["cardinality"]
        cardinality = Cardinality(_form_from_dict(n, c), float(c["weight"]), float(c["k"]))
    return QuboInstance(
        symmetric_from_entries(n, entries),
        label=str(data.get("label", "")),
        seed=data.get("seed"),
        offset=float(data.get("offset", 0.0)),
        constraint=constraint,
        cardinality=cardinality,
        provenance=dict(data.get("provenance", {})),
    )


def save_instance(instance: QuboInstance, path: str | Path) -> None:
    # repr-exact floats: json writes shortest round-trip representations
    Path(path).write_text(json.dumps(instance_to_dict(instance), indent=1))


def load_instance(path: str | Path) -> QuboInstance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidArgument(f"{path}: not valid JSON ({exc})") from exc
    return instance_from_dict(data)

