"""Compiled inner loops.

All kernels work on the split form ``diag`` (linear terms) and ``off``
(symmetric pair matrix with zero diagonal).  The local field of bit ``i``
is ``h_i = diag_i + 2 * sum_j off_ij x_j`` and flipping it changes the
energy by ``(1 - 2 x_i) * h_i``.

Stochastic kernels reseed numba's thread-local generator at the start of
every trajectory, so a trajectory's result depends only on its own seed.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def accept_move(delta, temperature, u):
    """Metropolis rule ``u < min(1, exp(-delta / T))`` with ``u`` in [0, 1)."""
    if delta <= 0.0:
        return True
    return u < math.exp(-delta / temperature)


@njit(cache=True)
def _init_fields(diag, off, x, h):
    n = x.shape[0]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            if x[j]:
                acc += off[i, j]
        h[i] = diag[i] + 2.0 * acc


@njit(cache=True)
def _apply_flip(off, x, h, k):
    # x[k] toggles; every field picks up +-2 off[:, k]
    d = 1.0 - 2.0 * x[k]
    x[k] = 1 - x[k]
    n = x.shape[0]
    for i in range(n):
        h[i] += 2.0 * d * off[i, k]


@njit(cache=True)
def gray_scan(diag, off, offset, energies_out, store, tol_rel, tie_cap, ties_out):
    """Enumerate all ``2**n`` states in Gray-code order.

    Config index ``k`` has bit ``i`` equal to ``(k >> i) & 1``.  When
    ``store`` is set, ``energies_out[k]`` receives every energy.  Returns
    ``(min_energy, n_ties)`` where ``ties_out[:n_ties]`` lists the indices
    within the tolerance of the running minimum (capped at ``tie_cap``).
    """
    n = diag.shape[0]
    x = np.zeros(n, dtype=np.int8)
    h = diag.copy()
    e = offset
    best = e
    idx = 0
    if store:
        energies_out[0] = e
    n_ties = 1
    ties_out[0] = 0
    total = 1 << n
    for t in range(1, total):
        # lowest set bit of t selects the bit to flip
        k = 0
        while ((t >> k) & 1) == 0:
            k += 1
        e += (1.0 - 2.0 * x[k]) * h[k]
        _apply_flip(off, x, h, k)
        idx ^= 1 << k
        if store:
            energies_out[idx] = e
        tol = tol_rel * max(1.0, abs(best))
        if e < best - tol:
            best = e
            n_ties = 1
            ties_out[0] = idx
        else:
            if e < best:
                best = e
            if e <= best + tol and n_ties < tie_cap:
                ties_out[n_ties] = idx
                n_ties += 1
    return best, n_ties


@njit(cache=True, nogil=True)
def sa_chains(diag, off, offset, t0, cooling, iters, levels, seeds,
              best_e, best_x, up_prop, up_acc):
    """Geometric-cooling single-flip Metropolis chains, one per seed."""
    n = diag.shape[0]
    x = np.zeros(n, dtype=np.int8)
    h = np.zeros(n)
    for t in range(seeds.shape[0]):
        np.random.seed(seeds[t])
        for i in range(n):
            x[i] = 1 if np.random.random() < 0.5 else 0
        _init_fields(diag, off, x, h)
        e = offset
        for i in range(n):
            if x[i]:
                e += diag[i]
                for j in range(i + 1, n):
                    if x[j]:
                        e += 2.0 * off[i, j]
        best = e
        best_x[t, :] = x
        temp = t0
        for lv in range(levels):
            for _ in range(iters):
                k = np.random.randint(0, n)
                delta = (1.0 - 2.0 * x[k]) * h[k]
                u = np.random.random()
                uphill = delta > 0.0
                if uphill:
                    up_prop[lv] += 1
                if accept_move(delta, temp, u):
                    if uphill:
                        up_acc[lv] += 1
                    e += delta
                    _apply_flip(off, x, h, k)
                    if e < best:
                        best = e
                        best_x[t, :] = x
            temp *= cooling
        best_e[t] = best


@njit(cache=True, nogil=True)
def sgd_chains(diag, off, offset, max_steps, patience, seeds,
               best_e, best_x, trace_e, trace_restart):
    """Steepest single-flip descent with random restarts at local minima.

    A step is either one improving flip (largest decrease, lowest index on
    ties) or one restart.  A chain stops after ``max_steps`` steps or after
    ``patience`` consecutive steps without improving its best energy.
    ``trace_e[t, s]`` holds the energy after step ``s`` (NaN past the end)
    and ``trace_restart[t, s]`` marks restart steps.
    """
    n = diag.shape[0]
    x = np.zeros(n, dtype=np.int8)
    h = np.zeros(n)
    for t in range(seeds.shape[0]):
        np.random.seed(seeds[t])
        for i in range(n):
            x[i] = 1 if np.random.random() < 0.5 else 0
        _init_fields(diag, off, x, h)
        e = offset
        for i in range(n):
            if x[i]:
                e += diag[i]
                for j in range(i + 1, n):
                    if x[j]:
                        e += 2.0 * off[i, j]
        best = e
        best_x[t, :] = x
        trace_e[t, 0] = e
        stale = 0
        for s in range(1, max_steps + 1):
            kbest = -1
            dbest = 0.0
            for i in range(n):
                d = (1.0 - 2.0 * x[i]) * h[i]
                if d < dbest:
                    dbest = d
                    kbest = i
            if kbest >= 0:
                e += dbest
                _apply_flip(off, x, h, kbest)
            else:
                for i in range(n):
                    x[i] = 1 if np.random.random() < 0.5 else 0
                _init_fields(diag, off, x, h)
                e = offset
                for i in range(n):
                    if x[i]:
                        e += diag[i]
                        for j in range(i + 1, n):
                            if x[j]:
                                e += 2.0 * off[i, j]
                trace_restart[t, s] = True
            trace_e[t, s] = e
            if e < best:
                best = e
                best_x[t, :] = x
                stale = 0
            else:
                stale += 1
                if stale >= patience:
                    break
        best_e[t] = best


@njit(cache=True, nogil=True)
def sqa_chains(diag, off, offset, slices, temperature, gammas, seeds,
               best_e, best_x):
    """Path-integral Monte Carlo over ``slices`` coupled replicas.

    Replica ``k`` carries the classical energy ``E(x_k) / slices``; adjacent
    replicas (periodic in imaginary time) couple through
    ``-J_perp * s_ik * s_i(k+1)`` with ``s = 2x - 1`` and
    ``J_perp = -(T / 2) * ln(tanh(Gamma / (slices * T)))``.  ``gammas``
    gives the transverse field for each sweep.  A sweep is one local move
    per (replica, spin) followed by one global move per spin that flips it
    in every replica.
    """
    n = diag.shape[0]
    p = slices
    x = np.zeros((p, n), dtype=np.int8)
    h = np.zeros((p, n))
    e = np.zeros(p)
    inv_p = 1.0 / p
    beta = 1.0 / temperature
    for t in range(seeds.shape[0]):
        np.random.seed(seeds[t])
        for k in range(p):
            for i in range(n):
                x[k, i] = 1 if np.random.random() < 0.5 else 0
            _init_fields(diag, off, x[k], h[k])
            acc = offset
            for i in range(n):
                if x[k, i]:
                    acc += diag[i]
                    for j in range(i + 1, n):
                        if x[k, j]:
                            acc += 2.0 * off[i, j]
            e[k] = acc
        best = e[0]
        best_x[t, :] = x[0]
        for k in range(1, p):
            if e[k] < best:
                best = e[k]
                best_x[t, :] = x[k]
        for sweep in range(gammas.shape[0]):
            g = gammas[sweep]
            j_perp = -0.5 * temperature * math.log(math.tanh(g / (p * temperature)))
            for k in range(p):
                kp = k - 1 if k > 0 else p - 1
                kn = k + 1 if k < p - 1 else 0
                for i in range(n):
                    s = 2.0 * x[k, i] - 1.0
                    nb = (2.0 * x[kp, i] - 1.0) + (2.0 * x[kn, i] - 1.0)
                    d_cl = (1.0 - 2.0 * x[k, i]) * h[k, i]
                    delta = d_cl * inv_p + 2.0 * j_perp * s * nb
                    if delta <= 0.0 or np.random.random() < math.exp(-delta * beta):
                        e[k] += d_cl
                        _apply_flip(off, x[k], h[k], i)
            for i in range(n):
                d_tot = 0.0
                for k in range(p):
                    d_tot += (1.0 - 2.0 * x[k, i]) * h[k, i]
                delta = d_tot * inv_p
                if delta <= 0.0 or np.random.random() < math.exp(-delta * beta):
                    for k in range(p):
                        e[k] += (1.0 - 2.0 * x[k, i]) * h[k, i]
                        _apply_flip(off, x[k], h[k], i)
            for k in range(p):
                if e[k] < best:
                    best = e[k]
                    best_x[t, :] = x[k]
        best_e[t] = best
