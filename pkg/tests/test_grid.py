import numpy as np
import pytest

import stringflow as sf
from stringflow.errors import GridError, ShapeError, UnsupportedConfigurationError
from stringflow.grid import ball_mask, ball_sum_map, d0x, dxx


def test_build_grid_basic():
    g = sf.build_grid(32, 16, Lx=2 * np.pi, Ly=np.pi)
    assert g.x.shape == (32,) and g.y.shape == (16,)
    assert np.isclose(g.dx, 2 * np.pi / 32)
    assert np.isclose(g.total_volume, 2 * np.pi ** 2)
    assert g.is_flat


def test_build_grid_rejects_small_and_bad_lambda():
    with pytest.raises(GridError):
        sf.build_grid(4, 32)
    with pytest.raises(GridError):
        sf.build_grid(32, 32, lam=np.inf)


def test_laplacian_spectral_accuracy():
    # Delta sin(x) = -sin(x); the 5-point stencil is second order
    errs = []
    for n in (32, 64):
        g = sf.build_grid(n, n)
        v = np.sin(g.x)[:, None] + 0.0 * g.y[None, :]
        lap = sf.laplace_beltrami(v, g)
        errs.append(np.max(np.abs(lap + v)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_laplacian_self_adjoint_in_weighted_inner_product():
    rng = np.random.default_rng(0)
    g = sf.build_grid(16, 16, lam=lambda x, y: 0.1 * np.sin(x) * np.cos(y))
    f = rng.standard_normal((16, 16))
    h = rng.standard_normal((16, 16))
    a = sf.l2_inner(sf.laplace_beltrami(f, g), h, g)
    b = sf.l2_inner(f, sf.laplace_beltrami(h, g), g)
    assert a == pytest.approx(b, rel=1e-12)


def test_dirichlet_energy_is_minus_laplacian_gradient():
    # d/de E(f + e h)/2 at e=0 equals -<lap f, h> in the weighted product
    rng = np.random.default_rng(1)
    g = sf.build_grid(16, 16)
    f = rng.standard_normal((16, 16))
    h = rng.standard_normal((16, 16))
    eps = 1e-6
    ep = sf.dirichlet_energy(f[..., None] + eps * h[..., None], g)
    em = sf.dirichlet_energy(f[..., None] - eps * h[..., None], g)
    fd = (ep - em) / (2 * eps) / 2.0
    assert fd == pytest.approx(-sf.l2_inner(sf.laplace_beltrami(f, g), h, g),
                               rel=1e-6)


def test_conformal_rescale_shifts_lambda():
    g = sf.build_grid(16, 16)
    g4 = sf.conformal_rescale(g, 4.0)
    assert np.allclose(g4.lam, 0.5 * np.log(4.0))
    assert g4.total_volume == pytest.approx(4.0 * g.total_volume, rel=1e-14)


def test_ball_sum_map_matches_direct_sum():
    rng = np.random.default_rng(2)
    g = sf.build_grid(24, 24)
    dens = rng.random((24, 24))
    R = 0.7
    m = ball_sum_map(dens, g, R)
    for ix, iy in [(0, 0), (5, 17), (23, 1)]:
        direct = float(np.sum(dens[ball_mask(g, (ix, iy), R)]))
        assert m[ix, iy] == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_ball_mask_radius_bounds():
    g = sf.build_grid(16, 16)
    with pytest.raises(GridError):
        ball_mask(g, (0, 0), g.inj_radius * 1.5)
    with pytest.raises(GridError):
        ball_mask(g, (0, 0), 0.0)


def test_ricci_identity_flat_only():
    g = sf.build_grid(32, 32)
    v = np.sin(g.x)[:, None] * np.sin(g.y)[None, :]
    lap2, hess2 = sf.ricci_identity_check(v, g)
    assert lap2 == pytest.approx(hess2, rel=0.05)
    gc = sf.build_grid(16, 16, lam=0.3)
    with pytest.raises(UnsupportedConfigurationError):
        sf.ricci_identity_check(v[:16, :16], gc)


def test_l2_inner_shape_mismatch():
    g = sf.build_grid(16, 16)
    with pytest.raises(ShapeError):
        sf.l2_inner(np.zeros((16, 16)), np.zeros((16, 15)), g)


def test_stencils_second_order_on_mixed_mode():
    g = sf.build_grid(64, 64)
    v = np.sin(g.x)[:, None] * np.cos(g.y)[None, :]
    assert np.max(np.abs(d0x(v, g) - np.cos(g.x)[:, None] * np.cos(g.y)[None, :])) < 2e-3
    assert np.max(np.abs(dxx(v, g) + v)) < 2e-3
