import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density
from magnonic.entanglement import (
    BipartiteState,
    entanglement_trace_from_values,
    logarithmic_negativity,
    partial_trace_qubit,
    partial_transpose,
    trace_norm_log,
    two_mode_squeezed_vacuum,
)
from magnonic.errors import InvalidArgumentError
from magnonic.operators import DensityState, make_layout


def tmsv_by_hand(n, r):
    """Independent TMSV: psi_n = tanh(r)^n / cosh(r) on |n, n>, column by column."""
    psi = np.zeros(n * n, dtype=complex)
    for k in range(n):
        psi[k * n + k] = math.tanh(r) ** k / math.cosh(r)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


@pytest.mark.parametrize("r", [0.1, 0.3, 0.5])
def test_tmsv_negativity_is_2r(r):
    n = 12 if r < 0.4 else 20
    state = BipartiteState(n, tmsv_by_hand(n, r))
    assert logarithmic_negativity(state) == pytest.approx(2 * r, abs=1e-4)
    np.testing.assert_allclose(two_mode_squeezed_vacuum(n, r).matrix, state.matrix, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_product_states_are_separable(seed, n):
    rng = np.random.default_rng(seed)
    state = BipartiteState.product(random_density(rng, n), random_density(rng, n))
    assert logarithmic_negativity(state) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_negativity_same_on_either_mode(seed):
    rng = np.random.default_rng(seed)
    state = BipartiteState(3, random_density(rng, 9, rank=2))
    assert logarithmic_negativity(state, 1) == pytest.approx(logarithmic_negativity(state, 2), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_negativity_invariant_under_local_unitaries(seed):
    rng = np.random.default_rng(seed)
    state = BipartiteState(3, random_density(rng, 9, rank=1))
    u1 = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0]
    u2 = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0]
    u = np.kron(u1, u2)
    rotated = BipartiteState(3, u @ state.matrix @ u.conj().T)
    assert logarithmic_negativity(rotated) == pytest.approx(logarithmic_negativity(state), abs=1e-10)


def test_bell_state():
    psi = np.zeros(4, dtype=complex)
    psi[0] = psi[3] = 1 / math.sqrt(2)
    assert logarithmic_negativity(BipartiteState(2, np.outer(psi, psi))) == pytest.approx(math.log(2))


def test_partial_transpose_involution(rng):
    state = BipartiteState(3, random_density(rng, 9))
    twice = partial_transpose(BipartiteState(3, partial_transpose(state)))
    np.testing.assert_allclose(twice, state.matrix)
    full_t = partial_transpose(BipartiteState(3, partial_transpose(state, 1)), 2)
    np.testing.assert_allclose(full_t, state.matrix.T)


def test_partial_trace_qubit(rng):
    layout = make_layout(3)
    rq, rm = random_density(rng, 2), random_density(rng, 9)
    state = DensityState(layout, np.kron(rq, rm))
    np.testing.assert_allclose(partial_trace_qubit(state).matrix, rm, atol=1e-14)


def test_trace_norm_log_zero_for_product():
    assert trace_norm_log(BipartiteState.product(np.diag([1.0, 0]), np.diag([0.3, 0.7]))) == pytest.approx(0, abs=1e-14)


def test_bipartite_validation():
    with pytest.raises(InvalidArgumentError):
        BipartiteState(3, np.eye(4))
    with pytest.raises(InvalidArgumentError):
        BipartiteState(2, np.eye(4)).validate()
    with pytest.raises(InvalidArgumentError):
        partial_transpose(BipartiteState(2, np.eye(4) / 4), 3)


def test_padding_preserves_negativity():
    state = two_mode_squeezed_vacuum(8, 0.3)
    big = state.padded(12)
    assert big.fock_cutoff == 12
    assert logarithmic_negativity(big) == pytest.approx(logarithmic_negativity(state), abs=1e-12)
    with pytest.raises(InvalidArgumentError):
        state.padded(4)


def test_entanglement_trace_first_maximum():
    tr = entanglement_trace_from_values([0, 1, 2, 3], [0.1, 0.5, 0.5, 0.2])
    assert tr.max_value == 0.5 and tr.optimal_time == 1
