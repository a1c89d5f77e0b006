import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magnonic.errors import InvalidArgumentError
from magnonic.operators import (
    DensityState,
    annihilation,
    commutator,
    creation,
    dagger,
    hermitian_eigenvalues,
    lowering_matrix,
    make_layout,
    matrix_exponential,
    number,
    qubit_op,
)


@pytest.mark.parametrize("n, dim", [(2, 8), (3, 18), (10, 200)])
def test_layout_dimension(n, dim):
    layout = make_layout(n)
    assert layout.dim == dim
    assert layout.dims == (2, n, n)


@pytest.mark.parametrize("bad", [1, 0, -3, 2.5, "4"])
def test_layout_rejects_bad_cutoff(bad):
    with pytest.raises(InvalidArgumentError):
        make_layout(bad)


def test_basis_index_ordering():
    layout = make_layout(3)
    assert layout.basis_index(0, 0, 0) == 0
    assert layout.basis_index(0, 0, 1) == 1
    assert layout.basis_index(0, 1, 0) == 3
    assert layout.basis_index(1, 0, 0) == 9


def test_lowering_superdiagonal():
    a = lowering_matrix(3)
    expected = np.zeros((3, 3))
    expected[0, 1], expected[1, 2] = 1.0, math.sqrt(2)
    np.testing.assert_array_equal(a, expected)


@pytest.mark.parametrize("mode", [1, 2])
def test_canonical_commutator_below_cutoff(mode):
    layout = make_layout(5)
    m = annihilation(layout, mode)
    comm = commutator(m, creation(layout, mode))
    idx = np.arange(layout.dim).reshape(2, 5, 5)
    top = idx[:, 4, :] if mode == 1 else idx[:, :, 4]
    safe = np.setdiff1d(np.arange(layout.dim), top.ravel())
    np.testing.assert_allclose(comm[np.ix_(safe, safe)], np.eye(len(safe)), atol=1e-14)
    # only the top level breaks the algebra
    assert not np.allclose(np.diag(comm)[top.ravel()], 1)


def test_distinct_modes_commute_exactly(layout4):
    a1, a2 = annihilation(layout4, 1), annihilation(layout4, 2)
    assert np.max(np.abs(commutator(a1, a2))) == 0
    assert np.max(np.abs(commutator(a1, creation(layout4, 2)))) == 0
    assert np.max(np.abs(commutator(a1, qubit_op(layout4, "sigma_z")))) == 0


@pytest.mark.parametrize("mode", [0, 3, "1"])
def test_bad_mode_index(layout4, mode):
    with pytest.raises(InvalidArgumentError):
        annihilation(layout4, mode)


def test_number_operator(layout4):
    np.testing.assert_allclose(number(layout4, 1), creation(layout4, 1) @ annihilation(layout4, 1))


def test_pauli_algebra(layout4):
    sp, sm, sz = (qubit_op(layout4, w) for w in ("sigma_plus", "sigma_minus", "sigma_z"))
    np.testing.assert_allclose(sp @ sm + sm @ sp, layout4.identity())
    np.testing.assert_allclose(commutator(sz, sp), 2 * sp)
    np.testing.assert_allclose(commutator(sz, sm), -2 * sm)
    np.testing.assert_allclose(qubit_op(layout4, "sigma_x"), sp + sm)
    g = layout4.basis_ket(0, 1, 2)
    np.testing.assert_allclose(sz @ g, -g)


def test_unknown_qubit_op(layout4):
    with pytest.raises(InvalidArgumentError):
        qubit_op(layout4, "sigma_q")


def test_operators_are_immutable(layout4):
    m = annihilation(layout4, 1)
    with pytest.raises(ValueError):
        m[0, 0] = 1


def test_expm_zero_is_identity():
    np.testing.assert_allclose(matrix_exponential(np.zeros((6, 6))), np.eye(6))


def test_expm_pauli(layout4):
    u = matrix_exponential(1j * math.pi / 2 * qubit_op(layout4, "sigma_z"))
    expected = layout4.embed(qubit=np.diag([-1j, 1j]))  # basis order (g, e)
    np.testing.assert_allclose(u, expected, atol=1e-12)


def test_expm_coherent_state_amplitudes():
    # oracle: analytic coherent-state expansion
    n, alpha = 30, 0.7 - 0.4j
    a = lowering_matrix(n)
    d = matrix_exponential(alpha * a.T - np.conj(alpha) * a)
    ks = np.arange(8)
    expected = np.exp(-abs(alpha) ** 2 / 2) * alpha**ks / np.sqrt([math.factorial(k) for k in ks])
    np.testing.assert_allclose(d[:8, 0], expected, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_expm_anti_hermitian_is_unitary(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    u = matrix_exponential(x - x.conj().T)
    assert np.max(np.abs(u.conj().T @ u - np.eye(12))) < 1e-10


def test_expm_general_matches_scipy():
    from scipy.linalg import expm

    x = np.triu(np.arange(16.0).reshape(4, 4)) / 10
    np.testing.assert_allclose(matrix_exponential(x), expm(x))


def test_expm_rejects_nonfinite():
    with pytest.raises(InvalidArgumentError):
        matrix_exponential(np.array([[np.nan, 0], [0, 1]]))


def test_eigenvalues_identity_and_sigma_z():
    np.testing.assert_allclose(hermitian_eigenvalues(np.eye(5)), np.ones(5))
    layout = make_layout(2)
    lam = hermitian_eigenvalues(qubit_op(layout, "sigma_z"))
    np.testing.assert_allclose(lam, [-1] * 4 + [1] * 4)


def test_eigenvalue_sum_equals_trace(rng):
    x = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = x + x.conj().T
    lam = hermitian_eigenvalues(h)
    assert np.all(np.diff(lam) >= 0)
    assert abs(lam.sum() - np.trace(h).real) < 1e-10


def test_eigenvalues_reject_non_hermitian():
    with pytest.raises(InvalidArgumentError):
        hermitian_eigenvalues(np.array([[0, 1], [0, 0]], dtype=complex))


def test_embedding_preserves_spectrum(rng):
    layout = make_layout(3)
    x = rng.normal(size=(3, 3))
    a = x + x.T
    lam = hermitian_eigenvalues(layout.embed(mode2=a))
    single = np.linalg.eigvalsh(a)
    np.testing.assert_allclose(lam, np.sort(np.repeat(single, 2 * 3)), atol=1e-12)


def test_density_state_validation(layout4):
    DensityState.ground(layout4).validate()
    bad = np.zeros((layout4.dim, layout4.dim), dtype=complex)
    bad[0, 0] = 1.1
    with pytest.raises(InvalidArgumentError):
        DensityState(layout4, bad).validate()
    neg = np.diag([1.5, -0.5] + [0] * (layout4.dim - 2)).astype(complex)
    with pytest.raises(InvalidArgumentError):
        DensityState(layout4, neg).validate()


def test_density_state_expectation(layout4):
    ket = layout4.basis_ket(1, 2, 0)
    s = DensityState.pure(layout4, ket)
    assert s.expect(number(layout4, 1)) == pytest.approx(2)
    assert s.expect(qubit_op(layout4, "sigma_z")) == pytest.approx(1)
    assert dagger(s.matrix).shape == s.matrix.shape
