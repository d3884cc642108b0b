"""Gradient-variance ruggedness metric and exhaustive landscape scans.

The gradient of variable ``i`` at a configuration is the single-flip energy
change.  The ruggedness metric samples uniform random configurations,
takes the (unbiased) variance of each variable's gradient over the sample,
and averages those variances over variables::

    sigma2 = (1/n) * sum_i Var(grad_i)      sigma_grad = sqrt(sigma2)

No further size normalization is applied.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import _kernels
from .core import QuboInstance, flip_delta
from .errors import CapacityExceeded, InvalidArgument

SCAN_LIMIT = 20
BLOCK = 256
DEFAULT_SAMPLES = 1000


@dataclass(frozen=True, eq=False)
class LandscapeReport:
    sigma_grad: float
    sigma2_per_var: np.ndarray
    num_samples: int
    seed: int | None
    normalization: str = "per_variable"

    @property
    def sigma2(self) -> float:
        return self.sigma_grad**2

    def to_dict(self) -> dict:
        return {
            "sigma_grad": self.sigma_grad,
            "sigma2": self.sigma2,
            "per_var": [float(v) for v in self.sigma2_per_var],
            "samples": self.num_samples,
            "seed": self.seed,
            "normalization": self.normalization,
        }


def gradient_at(instance: QuboInstance, bits: Any, i: int) -> float:
    """Single-flip energy change of variable ``i`` (the canonical gradient)."""
    return flip_delta(instance, bits, i)


def analytic_gradient_at(instance: QuboInstance, bits: Any, i: int) -> float:
    """Sign-free partial derivative ``a_i + sum_{j != i} b_ij x_j``.

    Differs from :func:`gradient_at` by the factor ``(1 - 2 x_i)``.
    """
    x = np.asarray(bits, dtype=np.float64)
    if not 0 <= i < instance.n:
        raise InvalidArgument(f"index {i} out of range for n={instance.n}")
    row = instance.q[i]
    return float(row[i] + 2.0 * (row @ x - row[i] * x[i]))


def _block_seed(seed: int | None, block: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(block,))


def sample_configurations(n: int, num_samples: int, seed: int | None, workers: int = 1) -> np.ndarray:
    """Uniform ``(num_samples, n)`` bit matrix, drawn in fixed-size blocks.

    Block ``b`` uses its own stream derived from ``(seed, b)``, so the result
    does not depend on ``workers``.
    """
    if seed is None:
        raise InvalidArgument("an explicit seed is required for reproducible sampling")
    nblocks = -(-num_samples // BLOCK)

    def draw(b: int) -> np.ndarray:
        size = min(BLOCK, num_samples - b * BLOCK)
        rng = np.random.default_rng(_block_seed(seed, b))
        return rng.integers(0, 2, size=(size, n), dtype=np.int8)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(draw, range(nblocks)))
    else:
        parts = [draw(b) for b in range(nblocks)]
    return np.concatenate(parts, axis=0)


def gradients(instance: QuboInstance, samples: np.ndarray) -> np.ndarray:
    """Single-flip gradients for every sample row and variable, shape ``(m, n)``."""
    x = np.asarray(samples, dtype=np.float64)
    q = instance.q
    d = np.diag(q)
    off = q - np.diag(d)
    return (1.0 - 2.0 * x) * (d + 2.0 * (x @ off))


def gradient_variance_from_samples(instance: QuboInstance, samples: np.ndarray,
                                   seed: int | None = None) -> LandscapeReport:
    m = samples.shape[0]
    if m < 2:
        raise InvalidArgument("need at least two samples")
    g = gradients(instance, samples)
    per_var = g.var(axis=0, ddof=1)
    sigma = math.sqrt(float(per_var.mean()))
    return LandscapeReport(sigma, per_var, m, seed)


def gradient_variance(instance: QuboInstance, num_samples: int = DEFAULT_SAMPLES,
                      seed: int | None = 0, workers: int = 1) -> LandscapeReport:
    """Sampled gradient-variance report (uniform configurations)."""
    if num_samples < 2:
        raise InvalidArgument("num_samples must be >= 2")
    samples = sample_configurations(instance.n, num_samples, seed, workers)
    return gradient_variance_from_samples(instance, samples, seed)


def exact_gradient_variance(instance: QuboInstance) -> np.ndarray:
    """Per-variable gradient variance under the uniform distribution, in closed form.

    The flip sign ``(1 - 2 x_i)`` is independent of the field
    ``h_i = q_ii + 2 sum_j q_ij x_j`` and has mean zero, hence
    ``Var = E[h_i**2] = sum_{j != i} q_ij**2 + (q_ii + sum_{j != i} q_ij)**2``.
    This is the population variance; the sampled estimate converges to it.
    """
    q = instance.q
    d = np.diag(q)
    off = q - np.diag(d)
    return (off**2).sum(axis=1) + (d + off.sum(axis=1)) ** 2


def exact_sigma(instance: QuboInstance) -> float:
    return math.sqrt(float(exact_gradient_variance(instance).mean()))


def all_configurations(n: int) -> np.ndarray:
    """Rows ``k = 0 .. 2**n - 1`` with bit ``i`` of row ``k`` equal to ``(k >> i) & 1``."""
    k = np.arange(1 << n, dtype=np.int64)
    return ((k[:, None] >> np.arange(n)) & 1).astype(np.int8)


def index_to_bits(k: int, n: int) -> np.ndarray:
    return np.array([(k >> i) & 1 for i in range(n)], dtype=np.int8)


def lexmin(rows: np.ndarray) -> np.ndarray:
    """Lexicographically smallest row (bit 0 most significant)."""
    order = np.lexsort(rows.T[::-1])
    return rows[order[0]]


@dataclass(frozen=True, eq=False)
class ScanResult:
    energies: np.ndarray
    global_min: float
    minimizers: np.ndarray
    local_minima: int
    n: int = field(default=0)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "global_min": self.global_min,
            "minimizers": self.minimizers.tolist(),
            "local_minima": self.local_minima,
        }


def tolerance(scale: float, rel: float = 1e-9) -> float:
    return rel * max(1.0, abs(scale))


def landscape_scan(instance: QuboInstance) -> ScanResult:
    """Enumerate every configuration (n <= 20).

    A local minimum is a configuration none of whose single flips lowers
    the energy by more than the tolerance; minimizers are the
    configurations within the tolerance of the global minimum.
    """
    n = instance.n
    if n > SCAN_LIMIT:
        raise CapacityExceeded(f"landscape_scan is capped at n={SCAN_LIMIT}, got {n}")
    q = instance.q
    d = np.ascontiguousarray(np.diag(q))
    off = np.ascontiguousarray(q - np.diag(d))
    e = np.empty(1 << n)
    ties = np.zeros(1, dtype=np.int64)
    _kernels.gray_scan(d, off, instance.offset, e, True, 1e-9, 1, ties)
    emin = float(e.min())
    tol = tolerance(emin)
    idx = np.arange(1 << n, dtype=np.int64)
    is_min = np.ones(1 << n, dtype=bool)
    for i in range(n):
        is_min &= e <= e[idx ^ (1 << i)] + tolerance(emin)
    winners = np.flatnonzero(e <= emin + tol)
    mins = ((winners[:, None] >> np.arange(n)) & 1).astype(np.int8)
    mins = mins[np.lexsort(mins.T[::-1])]
    return ScanResult(e, emin, mins, int(is_min.sum()), n)
