import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density
from magnonic.entanglement import BipartiteState, two_mode_squeezed_vacuum
from magnonic.errors import InvalidArgumentError, SingularParameterError, TruncationError
from magnonic.model import MHZ, reference_params
from magnonic.operators import make_layout
from magnonic.tomography import (
    WIGNER_PREFACTOR,
    default_axis,
    dispersive_shift,
    dispersive_shifts,
    displacement,
    joint_number_distribution,
    joint_parity,
    joint_wigner,
    joint_wigner_points,
    max_safe_alpha,
    parity_from_distribution,
    single_mode_displacement,
)


def fock(n, k1, k2):
    rho = np.zeros((n * n, n * n), dtype=complex)
    rho[k1 * n + k2, k1 * n + k2] = 1
    return BipartiteState(n, rho)


def test_displacement_identity_and_inverse():
    layout = make_layout(8)
    np.testing.assert_allclose(displacement(layout, 1, 0), layout.identity(), atol=1e-14)
    a = 0.8 + 0.5j
    for mode in (1, 2):
        prod = displacement(layout, mode, a) @ displacement(layout, mode, -a)
        assert np.max(np.abs(prod - layout.identity())) < 1e-8


def test_displacement_unitary_within_bound():
    d = single_mode_displacement(16, max_safe_alpha(16) * np.exp(0.3j))
    assert np.max(np.abs(d.conj().T @ d - np.eye(16))) < 1e-8


@pytest.mark.parametrize("alpha", [0.3, 0.5 - 0.5j, 1.1j])
def test_displacement_coherent_amplitudes(alpha):
    # oracle: analytic coherent-state expansion
    col = single_mode_displacement(30, alpha)[:, 0]
    ks = np.arange(10)
    expected = np.exp(-abs(alpha) ** 2 / 2) * alpha**ks / np.sqrt([math.factorial(k) for k in ks])
    np.testing.assert_allclose(col[:10], expected, atol=1e-10)


def test_displacement_beyond_bound():
    with pytest.raises(TruncationError):
        single_mode_displacement(4, 1.2)
    with pytest.raises(InvalidArgumentError):
        displacement(make_layout(4), 3, 0.1)


def test_joint_parity():
    layout = make_layout(4)
    p = joint_parity(layout)
    assert p[layout.basis_index(0, 0, 0), layout.basis_index(0, 0, 0)] == 1
    assert p[layout.basis_index(0, 1, 0), layout.basis_index(0, 1, 0)] == -1
    assert p[layout.basis_index(1, 1, 1), layout.basis_index(1, 1, 1)] == 1
    np.testing.assert_array_equal(p @ p, layout.identity())


def test_vacuum_wigner_peak_and_gaussian():
    n = 24
    vac = fock(n, 0, 0)
    axis = np.linspace(-2, 2, 9)
    grid = joint_wigner(vac, axis)
    centre = grid.values[4, 4]
    assert abs(centre - 4 / math.pi**2) < 1e-8
    # along X1X2: alpha = X / sqrt(2), so W = (4/pi^2) exp(-X1^2 - X2^2)
    x1, x2 = np.meshgrid(axis, axis, indexing="ij")
    np.testing.assert_allclose(grid.values, WIGNER_PREFACTOR * np.exp(-(x1**2) - x2**2), atol=1e-8)
    p_grid = joint_wigner(vac, axis, plane="P1P2")
    np.testing.assert_allclose(p_grid.values, grid.values, atol=1e-8)


def test_fock_one_zero_is_negative_at_origin():
    w = joint_wigner_points(fock(10, 1, 0), [0], [0])
    assert w[0, 0].real == pytest.approx(-4 / math.pi**2, abs=1e-12)


def test_conventions_differ_by_inversion(rng):
    rho = BipartiteState(12, np.kron(random_density(rng, 12, 2), random_density(rng, 12, 1)))
    a1, a2 = np.array([0.3 + 0.2j, -0.5j]), np.array([0.4, 0.1 - 0.6j])
    w_printed = joint_wigner_points(rho, a1, a2, "as_printed")
    w_standard = joint_wigner_points(rho, -a1, -a2, "standard")
    np.testing.assert_allclose(w_printed, w_standard, atol=1e-12)
    with pytest.raises(InvalidArgumentError):
        joint_wigner_points(rho, a1, a2, "mirror")


def test_displaced_coherent_state_peak():
    # D(+beta) on a coherent state |beta> returns |2 beta>; "standard" peaks at beta
    n, beta = 30, 0.6
    col = single_mode_displacement(n, beta)[:, 0]
    rho = BipartiteState(n, np.kron(np.outer(col, col.conj()), np.diag([1.0] + [0] * (n - 1))))
    assert joint_wigner_points(rho, [beta], [0], "standard")[0, 0].real == pytest.approx(4 / math.pi**2, abs=1e-8)
    assert joint_wigner_points(rho, [-beta], [0], "as_printed")[0, 0].real == pytest.approx(4 / math.pi**2, abs=1e-8)


def test_wigner_normalization_low_occupation():
    # alpha-measure integral is 1; in X, P coordinates the Jacobian gives 4
    n = 28
    state = two_mode_squeezed_vacuum(n, 0.2)
    re = np.linspace(-1.8, 1.8, 19)
    step = re[1] - re[0]
    alphas = (re[:, None] + 1j * re[None, :]).ravel()
    w = joint_wigner_points(state, alphas, alphas).real
    total_alpha = w.sum() * step**4
    assert total_alpha == pytest.approx(1.0, rel=0.02)
    dx = step * math.sqrt(2)
    assert w.sum() * dx**4 == pytest.approx(4.0, rel=0.02)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_wigner_bounded_and_real(seed):
    rng = np.random.default_rng(seed)
    rho = BipartiteState(8, random_density(rng, 64, rank=3))
    grid = joint_wigner(rho, default_axis(9, 2.0))
    assert np.max(np.abs(grid.values)) <= 4 / math.pi**2 + 1e-6
    assert grid.convention["displacement"] == "as_printed"


def test_unsafe_grid_message():
    with pytest.raises(TruncationError, match="max usable"):
        joint_wigner(fock(10, 0, 0), default_axis())


def test_bad_plane():
    with pytest.raises(InvalidArgumentError):
        joint_wigner(fock(10, 0, 0), [0.0], plane="X1P2")


def test_number_distribution_vacuum():
    dist = joint_number_distribution(fock(8, 0, 0), 0, 0)
    assert dist[0, 0] == pytest.approx(1)
    assert dist.sum() == pytest.approx(1)


def test_number_distribution_poisson_marginal():
    # oracle: coherent-state statistics
    n, beta = 24, 0.9 + 0.4j
    dist = joint_number_distribution(fock(n, 0, 0), beta, 0)
    mu = abs(beta) ** 2
    ks = np.arange(10)
    poisson = np.exp(-mu) * mu**ks / np.array([math.factorial(k) for k in ks])
    np.testing.assert_allclose(dist.sum(axis=1)[:10], poisson, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.complex_numbers(max_magnitude=1.2), st.complex_numbers(max_magnitude=1.2))
def test_parity_identity(seed, a1, a2):
    rng = np.random.default_rng(seed)
    rho = BipartiteState(8, random_density(rng, 64, rank=2))
    dist = joint_number_distribution(rho, a1, a2)
    assert np.all(dist > -1e-12)
    assert dist.sum() == pytest.approx(1, abs=1e-6)
    w = joint_wigner_points(rho, [a1], [a2])[0, 0].real
    assert abs(parity_from_distribution(dist) - math.pi**2 / 4 * w) < 1e-8


def test_dispersive_shifts_reference():
    rep = dispersive_shifts(reference_params(), 5961 * MHZ)
    assert rep.chi_1 / MHZ == pytest.approx(0.92, abs=0.02)
    assert rep.chi_2 / MHZ == pytest.approx(0.44, abs=0.02)
    assert rep.distinguishability_ratio > 2


def test_dispersive_shifts_without_coupling():
    rep = dispersive_shifts(reference_params(g_cq=0.0), 5961 * MHZ)
    assert rep.chi_1 == 0 and rep.chi_2 == 0


def test_dispersive_shift_monotone_and_singular():
    g = 7 * MHZ
    shifts = [dispersive_shift(g, x * MHZ) for x in (50, 100, 200)]
    assert shifts[0] > shifts[1] > shifts[2]
    with pytest.raises(SingularParameterError):
        dispersive_shift(g, 0.0)
