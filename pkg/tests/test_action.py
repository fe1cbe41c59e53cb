import numpy as np
import pytest

import stringflow as sf
from stringflow.errors import GridError


@pytest.fixture
def sphere():
    return sf.make_target("sphere", 4)


@pytest.fixture
def grid():
    return sf.build_grid(32, 32)


def test_dirichlet_energy_of_wrap_matches_closed_form(grid, sphere):
    # forward differences of (cos x, sin x): |D+ u|^2 = (2 - 2 cos dx)/dx^2
    u = sf.geodesic_wrap(grid, sphere, m=1, n=0)
    c = (2.0 - 2.0 * np.cos(grid.dx)) / grid.dx ** 2
    expected = c * grid.Lx * grid.Ly
    assert sf.dirichlet_energy(u.values, grid) == pytest.approx(expected, rel=1e-12)


def test_energies_terms_consistent(grid, sphere):
    fields = sf.FieldBackground(b=sf.make_two_form("y4", 4, beta=0.2),
                                V=sf.make_potential("height", 4, epsilon=0.1))
    u = sf.random_smooth_map(grid, sphere, seed=0, amplitude=0.3)
    terms = sf.energies(u, grid, fields)
    assert terms.dirichlet == pytest.approx(terms.E / 2.0, rel=1e-14)
    assert terms.S_tilde == pytest.approx(
        terms.dirichlet + terms.B_term + terms.V_term, rel=1e-12)
    assert terms.V_term >= 0.0  # shifted potential is nonnegative


def test_mapfield_constraint_enforced(grid, sphere):
    vals = np.ones((32, 32, 4))
    with pytest.raises(sf.OffManifoldError):
        sf.MapField(vals, sphere).check()


def test_flow_rhs_is_tangent_up_to_truncation(grid, sphere):
    fields = sf.FieldBackground(b=sf.make_two_form("y4", 4, beta=0.2),
                                V=sf.make_potential("height", 4, epsilon=0.1))
    u = sf.random_smooth_map(grid, sphere, seed=1, amplitude=0.3)
    rhs = sf.flow_rhs(u, grid, sphere, fields)
    normal = np.sum(rhs * u.values, axis=-1)
    # the B and V forces are projected; the remaining normal part is the
    # O(dx^2)-consistent radial residue of the discrete tension field
    assert np.max(np.abs(normal)) < 0.5


def test_gradient_consistency_all_terms(grid, sphere):
    fields = sf.FieldBackground(b=sf.make_two_form("y4", 4, beta=0.2),
                                V=sf.make_potential("height", 4, epsilon=0.1))
    u = sf.random_smooth_map(grid, sphere, seed=2, amplitude=0.3)
    v = np.random.default_rng(3).standard_normal(u.values.shape)
    out = sf.gradient_consistency_check(u, v, grid, sphere, fields)
    assert out["min_rel_err"] < 1e-6


def test_el_residual_small_on_wrap(grid, sphere):
    u = sf.geodesic_wrap(grid, sphere, m=1, n=0)
    _, l2, linf = sf.el_residual(u, grid, sphere, sf.zero_background(4))
    assert linf <= 5.0 * grid.dx ** 2


def test_flow_conserves_constraint_and_decreases_action(grid, sphere):
    fields = sf.FieldBackground(b=sf.make_two_form("y4", 4, beta=0.2),
                                V=sf.zero_potential(4))
    u0 = sf.random_smooth_map(grid, sphere, seed=4, amplitude=0.3)
    st = sf.run(u0, grid, sphere, fields, sf.FlowConfig(t_end=0.05, record_every=10))
    assert st.u.constraint_defect() < 1e-12
    s = st.ledger.column("S_tilde")
    assert np.all(np.diff(s) <= 1e-10 * (1 + abs(st.S0)))
    assert st.cum_dissipation > 0.0


def test_ledger_columns_and_monotonicity_check(grid, sphere):
    u0 = sf.random_smooth_map(grid, sphere, seed=5, amplitude=0.2)
    st = sf.run(u0, grid, sphere, sf.zero_background(4),
                sf.FlowConfig(t_end=0.02, record_every=5))
    arr = st.ledger.as_array()
    assert arr.shape[1] == len(sf.LEDGER_COLUMNS)
    assert list(sf.LEDGER_COLUMNS[:3]) == ["t", "E", "dirichlet"]
    mono = sf.monotonicity_check(st.ledger, 2.0, st.S0)
    assert mono["monotone_ok"] and mono["energy_bound_ok"]


def test_flow_config_validation(grid):
    with pytest.raises(GridError):
        sf.FlowConfig(cfl=2.0).validate(grid)
    with pytest.raises(GridError):
        sf.FlowConfig(dt_init=1.0).validate(grid)
    with pytest.raises(GridError):
        sf.FlowConfig(ball_radius=10.0).validate(grid)


def test_cfl_bound_scales_with_grid():
    g1, g2 = sf.build_grid(32, 32), sf.build_grid(64, 64)
    assert sf.cfl_bound(g1, 0.2) == pytest.approx(4 * sf.cfl_bound(g2, 0.2), rel=1e-12)


def test_local_energy_map_matches_direct(grid, sphere):
    u = sf.bump_map(grid, sphere, scale=0.4)
    R = 0.6
    m = sf.local_energy_map(u, grid, R)
    direct = sf.local_energy(u, grid, (16, 16), R)
    assert m[16, 16] == pytest.approx(direct, rel=1e-10, abs=1e-12)


def test_run_convergence_probe_stops_early(grid, sphere):
    u0 = sf.small_energy_map(grid, sphere, energy=1e-4, seed=6)
    cfg = sf.FlowConfig(t_end=50.0, record_every=20, conv_tol=1e-8)
    st = sf.run(u0, grid, sphere, sf.zero_background(4), cfg)
    assert st.converged and st.t < 50.0
