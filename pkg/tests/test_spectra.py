import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trapkink.model import SimParams
from trapkink.spectra import (chi1_frequency, extract_chi1, kink_spectrum, l2_inner,
                              linearization_spectrum, stationary_kak_spectrum)
from trapkink.stationary import solve_ground_state, solve_kink

UNTRAPPED = SimParams(omega=0.0, x_max=20.0, dx=0.02)


@pytest.fixture(scope="module")
def kink015(p015):
    return kink_spectrum(p015)


@pytest.fixture(scope="module")
def untrapped():
    return linearization_spectrum(solve_kink(UNTRAPPED), 0.04)


def test_poschl_teller_bound_states(untrapped, oracles):
    mu_ref = oracles["poschl_teller_mu"]
    assert untrapped.mu[0] == pytest.approx(mu_ref[0], abs=1e-6)
    assert untrapped.mu[1] == pytest.approx(mu_ref[1], abs=1e-5)
    assert untrapped.mu[1] == pytest.approx(-3.0, abs=1e-5)
    # continuum starts at -4
    assert untrapped.mu[2] < -4 + 0.02
    assert untrapped.parity[0] == 1 and untrapped.parity[1] == -1


def test_eigenvectors_orthonormal(kink015):
    s = kink015
    V = s.eigenvectors[:, :12]
    G = np.array([[l2_inner(a, b, s.grid) for b in V.T] for a in V.T])
    assert np.max(np.abs(G - np.eye(12))) < 1e-10


def test_eigen_residual(kink015):
    from trapkink.spectra import linearization_matrix
    s = kink015
    L = linearization_matrix(s.profile, s.grid, s.omega)
    for j in range(4):
        v = s.eigenvectors[:, j]
        r = L @ v - s.mu[j] * v
        assert np.max(np.abs(r)) < 1e-8 * max(1, abs(s.mu[j])) * np.max(np.abs(v)) * 1e3


def test_counts_per_state(p015, kink015):
    g = linearization_spectrum(solve_ground_state(p015), 0.04)
    assert g.n_unstable == 0
    assert kink015.n_unstable == 1
    assert stationary_kak_spectrum(p015).n_unstable == 2


def test_lambda_pairs_and_plane(kink015):
    s = kink015
    lam = s.lambda_pairs
    assert np.allclose(lam[:, 0], -lam[:, 1])
    plane = s.spectral_plane()
    assert plane.shape == (2 * s.mu.size, 2)
    # a linearised Hamiltonian spectrum is symmetric under lambda -> -lambda
    assert np.allclose(np.sort(plane[:, 0]), np.sort(-plane[:, 0]))
    assert s.max_real_lambda == pytest.approx(s.unstable_rates()[0])


def test_parities_are_definite(kink015):
    s = kink015
    for j in range(6):
        v = s.eigenvectors[:, j]
        assert np.allclose(v[::-1], s.parity[j] * v, atol=1e-12)


def test_chi1_is_odd_normalised_and_localised(kink015):
    s = kink015
    chi = extract_chi1(s)
    x = s.grid.nodes
    assert l2_inner(chi, chi, s.grid) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(chi[::-1], -chi, atol=1e-12)
    k = np.argmin(np.abs(x - 40 / 3))
    assert chi[k] > 0
    near = (np.abs(x) > 0.6 * 40 / 3) & (np.abs(x) < 1.1 * 40 / 3)
    assert l2_inner(chi * near, chi, s.grid) > 0.5
    assert 0 < chi1_frequency(s) < 2


def test_chi1_errors(kink015):
    with pytest.raises(ValueError):
        extract_chi1(kink015, mode_index=10_000)


@settings(max_examples=5, deadline=None)
@given(om=st.sampled_from([0.15, 0.2, 0.3]))
def test_kink_rate_increases_with_trap(om):
    a = kink_spectrum(SimParams(omega=om)).unstable_rates()
    assert a.size == 1 and a[0] > 0
    if om > 0.15:
        assert a[0] > kink_spectrum(SimParams(omega=0.15)).unstable_rates()[0]


def test_spectral_dx_validation(p015):
    g = solve_ground_state(p015)
    with pytest.raises(ValueError):
        linearization_spectrum(g, 0.01)
    with pytest.raises(ValueError):
        linearization_spectrum(g, 0.07)


def test_dx_refinement_stable(p015):
    a = kink_spectrum(p015, 0.04).unstable_rates()[0]
    b = kink_spectrum(p015, 0.02).unstable_rates()[0]
    assert abs(a - b) < 1e-4
