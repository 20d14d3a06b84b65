import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ama_mis.graphs import brute_force_mis, generate_er
from ama_mis.statevector import (
    MixerGate,
    StateError,
    StateVector,
    apply_mixer,
    apply_phase_layer,
    basis_probabilities,
    dumps_state,
    expectation_hc,
    init_zero_state,
    loads_state,
    product_state,
    support_is_feasible,
)

from conftest import dense_mixer_unitary

SQ2 = 1 / math.sqrt(2)


def state(*amps):
    n = int(math.log2(len(amps)))
    return StateVector(n, np.array(amps, dtype=complex))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_zero_state(n):
    s = init_zero_state(n)
    expected = np.zeros(1 << n)
    expected[0] = 1
    np.testing.assert_array_equal(s.amplitudes, expected)


def test_zero_state_guard():
    with pytest.raises(StateError):
        init_zero_state(27)
    with pytest.raises(StateError):
        init_zero_state(0)


def test_phase_layer_examples():
    s = apply_phase_layer(init_zero_state(3), 1.234)
    np.testing.assert_array_equal(s.amplitudes, init_zero_state(3).amplitudes)
    s = apply_phase_layer(product_state([1, 1]), math.pi)
    np.testing.assert_allclose(s.amplitudes, product_state([1, 1]).amplitudes, atol=1e-15)
    # (|00> + |01>)/sqrt2 with qubit 0 set in the second term
    s = apply_phase_layer(state(SQ2, SQ2, 0, 0), math.pi / 2)
    np.testing.assert_allclose(s.amplitudes, [SQ2, 1j * SQ2, 0, 0], atol=1e-15)


def test_mixer_uncontrolled_pi_half():
    s = apply_mixer(init_zero_state(1), MixerGate(0, (), math.pi / 2))
    np.testing.assert_allclose(s.amplitudes, [0, -1j], atol=1e-15)


def test_mixer_open_control_fires(k2):
    beta = 0.37
    s = apply_mixer(init_zero_state(2), MixerGate.for_vertex(k2, 0, beta))
    np.testing.assert_allclose(s.amplitudes, [math.cos(beta), -1j * math.sin(beta), 0, 0], atol=1e-15)


def test_mixer_open_control_blocked(k2):
    s0 = product_state([0, 1])  # qubit 1 set
    s = apply_mixer(s0.copy(), MixerGate.for_vertex(k2, 0, 0.9))
    np.testing.assert_array_equal(s.amplitudes, s0.amplitudes)


def test_mixer_index_errors():
    with pytest.raises(StateError):
        apply_mixer(init_zero_state(2), MixerGate(2, (), 0.1))
    with pytest.raises(StateError):
        MixerGate(1, (1,), 0.1)


@pytest.mark.parametrize("exact", [False, True])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_mixer_matches_dense_matrix(n, exact):
    rng = np.random.default_rng(n)
    for target in range(n):
        others = [q for q in range(n) if q != target]
        for k in range(len(others) + 1):
            controls = tuple(sorted(rng.choice(others, size=k, replace=False))) if k else ()
            beta = rng.uniform(-math.pi, math.pi)
            amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
            amps /= np.linalg.norm(amps)
            got = apply_mixer(StateVector(n, amps.copy()), MixerGate(target, controls, beta), exact)
            want = dense_mixer_unitary(n, target, set(controls), beta, exact) @ amps
            np.testing.assert_allclose(got.amplitudes, want, atol=1e-12)


def test_expectation_examples():
    assert expectation_hc(init_zero_state(2)) == 0
    assert expectation_hc(product_state([1, 1])) == -2
    assert expectation_hc(state(SQ2, SQ2)) == pytest.approx(-0.5, abs=1e-15)


def test_support_feasible_examples(k2):
    assert support_is_feasible(init_zero_state(2), k2, 1e-12)
    assert not support_is_feasible(product_state([1, 1]), k2, 1e-12)


def test_basis_probabilities_examples():
    out = basis_probabilities(product_state([0, 1]))
    assert out == [((0, 1), 1.0)]
    out = basis_probabilities(state(SQ2, 0, SQ2, 0))
    assert [p for _, p in out] == pytest.approx([0.5, 0.5])
    out = basis_probabilities(apply_mixer(init_zero_state(1), MixerGate(0, (), math.pi / 4)))
    assert out[0][0] == (0,) and out[1][0] == (1,)
    assert [p for _, p in out] == pytest.approx([0.5, 0.5], abs=1e-15)


def test_basis_probabilities_sorted_and_normalized():
    rng = np.random.default_rng(0)
    amps = rng.normal(size=16) + 1j * rng.normal(size=16)
    s = StateVector(4, amps / np.linalg.norm(amps))
    probs = [p for _, p in basis_probabilities(s)]
    assert probs == sorted(probs, reverse=True)
    assert math.fsum(probs) == pytest.approx(1.0, abs=1e-10)


def test_state_dump_roundtrip():
    s = apply_mixer(init_zero_state(3), MixerGate(1, (0,), 0.3))
    text = dumps_state(s)
    assert text.splitlines()[2].startswith("010 ")
    np.testing.assert_array_equal(loads_state(text).amplitudes, s.amplitudes)


gate_strategy = st.tuples(
    st.integers(0, 4),
    st.sets(st.integers(0, 4), max_size=3),
    st.floats(-10, 10, allow_nan=False),
)


@settings(max_examples=60, deadline=None)
@given(gates=st.lists(gate_strategy, min_size=1, max_size=8), exact=st.booleans())
def test_unitarity_and_inverse(gates, exact):
    n = 5
    rng = np.random.default_rng(len(gates))
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    s = StateVector(n, amps / np.linalg.norm(amps))
    start = s.amplitudes.copy()
    ms = [MixerGate(t, tuple(c - {t}), b) for t, c, b in gates]
    for m in ms:
        apply_mixer(s, m, exact)
        assert s.norm() == pytest.approx(1.0, abs=1e-10)
    for m in reversed(ms):
        apply_mixer(s, MixerGate(m.target, m.open_controls, -m.beta), exact)
    np.testing.assert_allclose(s.amplitudes, start, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(gamma=st.floats(-10, 10, allow_nan=False))
def test_phase_inverse(gamma):
    rng = np.random.default_rng(1)
    amps = rng.normal(size=8) + 1j * rng.normal(size=8)
    s = StateVector(3, amps / np.linalg.norm(amps))
    start = s.amplitudes.copy()
    apply_phase_layer(s, gamma)
    assert s.norm() == pytest.approx(1.0, abs=1e-10)
    apply_phase_layer(s, -gamma)
    np.testing.assert_allclose(s.amplitudes, start, atol=1e-10)


def test_zero_angles_are_identities(c5):
    rng = np.random.default_rng(2)
    amps = rng.normal(size=32) + 0j
    s = StateVector(5, amps / np.linalg.norm(amps))
    start = s.amplitudes.copy()
    apply_phase_layer(s, 0.0)
    for v in range(5):
        apply_mixer(s, MixerGate.for_vertex(c5, v, 0.0))
    np.testing.assert_array_equal(s.amplitudes, start)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 8),
       betas=st.lists(st.floats(-4, 4, allow_nan=False), min_size=1, max_size=12))
def test_mixers_preserve_feasible_support(seed, n, betas):
    g = generate_er(n, 0.5, seed)
    rng = np.random.default_rng(seed)
    s = init_zero_state(n)
    for b in betas:
        apply_phase_layer(s, float(rng.uniform(-3, 3)))
        apply_mixer(s, MixerGate.for_vertex(g, int(rng.integers(n)), b))
    assert support_is_feasible(s, g, 1e-12)
    assert -brute_force_mis(g).alpha - 1e-12 <= expectation_hc(s) <= 1e-12
