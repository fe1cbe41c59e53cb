import numpy as np
import pytest

import stringflow as sf
from stringflow.errors import HypothesisError
from stringflow.fields import pullback_density
from stringflow.targets import tangent_project


@pytest.fixture
def sphere():
    return sf.make_target("sphere", 4)


def tangent_pair(sphere, n=100, seed=0):
    rng = np.random.default_rng(seed)
    u = sphere.project(rng.standard_normal((n, 4)))
    xi1 = tangent_project(sphere, u, rng.standard_normal((n, 4)))
    xi2 = tangent_project(sphere, u, rng.standard_normal((n, 4)))
    eta = tangent_project(sphere, u, rng.standard_normal((n, 4)))
    return u, xi1, xi2, eta


def test_omega_fully_antisymmetric():
    b = sf.make_two_form("y4", 4, beta=0.3)
    rng = np.random.default_rng(1)
    y = rng.standard_normal((30, 4))
    om = b.omega(y)
    assert np.max(np.abs(om + np.swapaxes(om, -1, -2))) < 1e-14
    assert np.max(np.abs(om + np.swapaxes(om, -2, -3))) < 1e-14


def test_dcoeff_fd_oracle_matches_analytic():
    b = sf.make_two_form("y4", 4, beta=0.3)
    rng = np.random.default_rng(2)
    y = rng.standard_normal((20, 4))
    assert np.max(np.abs(b.dcoeff(y) - b.dcoeff_fd(y))) < 1e-8


def test_z_operator_pairing_and_annihilation(sphere):
    b = sf.make_two_form("y4", 4, beta=0.25)
    u, xi1, xi2, eta = tangent_pair(sphere)
    z = sf.z_operator(u, xi1, xi2, b, sphere)
    om = b.omega(u)
    pairing = np.einsum("...kij,...k,...i,...j->...", om, eta, xi1, xi2)
    assert np.max(np.abs(np.sum(z * eta, axis=-1) - pairing)) < 1e-12
    z_swap = sf.z_operator(u, xi2, xi1, b, sphere)
    assert np.max(np.abs(z + z_swap)) < 1e-13
    assert np.max(np.abs(sf.z_operator(u, xi1, xi1, b, sphere))) < 1e-13


def test_z_operator_closed_form(sphere):
    beta = 0.4
    b = sf.make_two_form("y4", 4, beta=beta)
    u, xi1, xi2, _ = tangent_pair(sphere, seed=3)
    # Omega = beta (dy4 ^ dy1 ^ dy2 antisymmetrized); w_k = Omega_kij xi1^i xi2^j
    def wedge(i, j):
        return xi1[:, i] * xi2[:, j] - xi1[:, j] * xi2[:, i]
    w = np.zeros_like(u)
    w[:, 3] = beta * wedge(0, 1)
    w[:, 0] = beta * wedge(1, 3)
    w[:, 1] = beta * wedge(3, 0)
    expected = tangent_project(sphere, u, w)
    z = sf.z_operator(u, xi1, xi2, b, sphere)
    assert np.max(np.abs(z - expected)) < 1e-12


def test_pullback_integral_conformally_invariant(sphere):
    g = sf.build_grid(24, 24)
    u = sf.random_smooth_map(g, sphere, seed=4, amplitude=0.3)
    b = sf.make_two_form("y4", 4, beta=0.2)
    v1 = sf.pullback_integral(u.values, b, g)
    v2 = sf.pullback_integral(u.values, b, sf.conformal_rescale(g, 4.0))
    assert v1 == v2  # no metric weight appears at all


def test_potential_shift_nonnegative(sphere):
    V = sf.make_potential("height", 4, epsilon=0.2)
    rng = np.random.default_rng(5)
    u = sphere.project(rng.standard_normal((50, 4)))
    assert np.min(V.shifted(u)) >= 0.0
    assert np.max(np.abs(V.grad_fd(u) - V.grad(u))) < 1e-8


def test_delta_constants_values_and_hypothesis_error():
    d2, d3 = sf.delta_constants(0.0)
    assert d2 == pytest.approx(2.0) and d3 == pytest.approx(1.0)
    d2, d3 = sf.delta_constants(0.25)
    assert d2 == pytest.approx(4.0) and d3 == pytest.approx(3.0)
    with pytest.raises(HypothesisError):
        sf.delta_constants(0.5)


def test_sup_norms_bounded_by_coefficient(sphere):
    b = sf.make_two_form("y4", 4, beta=0.2)
    V = sf.zero_potential(4)
    norms = sf.sup_norms(b, V, sphere)
    # |b12| = 0.2 |y4| <= 0.2 on the sphere, and the comass cannot exceed it
    assert 0.0 < norms.B_inf <= 0.2 + 1e-12
    assert norms.Z_inf <= 3 * 0.2 + 1e-9
    assert norms.hessV_inf == 0.0


def test_pullback_density_antisymmetry_zero_for_rank_one(sphere):
    # maps depending on x only pull back any two-form to zero
    g = sf.build_grid(24, 24)
    u = sf.geodesic_wrap(g, sphere, m=2, n=0)
    b = sf.make_two_form("y4", 4, beta=0.3)
    assert np.max(np.abs(pullback_density(u.values, b, g))) < 1e-13


def test_smallness_report(sphere):
    g = sf.build_grid(24, 24)
    fields = sf.FieldBackground(b=sf.make_two_form("y4", 4, beta=0.1),
                                V=sf.make_potential("height", 4, epsilon=1e-4))
    u = sf.small_energy_map(g, sphere, energy=0.01, seed=6)
    rep = sf.smallness_report(u.values, g, fields, 0.5, 0.1)
    assert rep.passes
    # shrinking delta1 makes the shifted-potential budget fail
    rep2 = sf.smallness_report(u.values, g, fields, 1e-6, 0.1)
    assert not rep2.passes
    # |B| >= 1/2 fails outright
    rep3 = sf.smallness_report(u.values, g, fields, 0.5, 0.6)
    assert not rep3.passes
