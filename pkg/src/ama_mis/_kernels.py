"""Numba kernels for whole-circuit evolution.

A circuit is lowered to four parallel arrays (op kind, parameter index, target
qubit, open-control mask). Kind 0 is a phase layer, kind 1 one mixer gate.
These kernels are the hot path for optimization; the per-gate functions in
``statevector`` are the readable reference they are tested against.
"""

import math

import numba
import numpy as np

PHASE = 0
MIXER = 1


@numba.njit(cache=True)
def evolve(state, popcount, kinds, pidx, targets, masks, theta, exact_phase):
    dim = state.shape[0]
    n = 0
    while (1 << n) < dim:
        n += 1
    phases = np.empty(n + 1, dtype=np.complex128)
    for k in range(kinds.shape[0]):
        angle = theta[pidx[k]]
        if kinds[k] == PHASE:
            for w in range(n + 1):
                phases[w] = complex(math.cos(angle * w), math.sin(angle * w))
            for i in range(dim):
                state[i] *= phases[popcount[i]]
        else:
            tbit = np.int64(1) << targets[k]
            mask = masks[k]
            c = math.cos(angle)
            ms = complex(0.0, -math.sin(angle))
            blocked = complex(c, -math.sin(angle))
            for i in range(dim):
                if i & mask:
                    if exact_phase:
                        state[i] *= blocked
                elif (i & tbit) == 0:
                    j = i | tbit
                    a0 = state[i]
                    a1 = state[j]
                    state[i] = c * a0 + ms * a1
                    state[j] = ms * a0 + c * a1
    return state


@numba.njit(cache=True)
def expectation(state, popcount):
    acc = 0.0
    for i in range(state.shape[0]):
        a = state[i]
        acc += (a.real * a.real + a.imag * a.imag) * popcount[i]
    return -acc


@numba.njit(cache=True)
def energy(state0, popcount, kinds, pidx, targets, masks, theta, exact_phase):
    state = state0.copy()
    evolve(state, popcount, kinds, pidx, targets, masks, theta, exact_phase)
    return expectation(state, popcount)


@numba.njit(cache=True)
def central_gradient(state0, popcount, kinds, pidx, targets, masks, theta, indices, h, exact_phase):
    out = np.empty(indices.shape[0], dtype=np.float64)
    shifted = theta.copy()
    for a in range(indices.shape[0]):
        j = indices[a]
        shifted[j] = theta[j] + h
        fp = energy(state0, popcount, kinds, pidx, targets, masks, shifted, exact_phase)
        shifted[j] = theta[j] - h
        fm = energy(state0, popcount, kinds, pidx, targets, masks, shifted, exact_phase)
        shifted[j] = theta[j]
        out[a] = (fp - fm) / (2.0 * h)
    return out
