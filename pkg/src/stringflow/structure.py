"""The antisymmetric-potential rewriting of the Euler-Lagrange equation and
the gap / triviality / Bochner diagnostics.

The critical-point equation Delta u = II(du, du) + Z(du_x ^ du_y) + P grad V
can be rewritten as -Delta u = A . grad u - P grad V with A = (F, G) built
from normal-frame derivatives and the dB coefficients; F and G are skew by
construction.  This module assembles A, measures the residual of the
rewritten equation, and evaluates the pointwise triviality condition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedConfigurationError
from .fields import FieldBackground, tangential_grad_V
from .grid import (SurfaceGrid, d0x, d0y, grad_sq_density,
                   hessian_sq_density, l2_norm, laplace_beltrami)
from .targets import TargetManifold


@dataclass
class AntisymmetricPotential:
    """Per-node pair (F, G) of q x q skew matrices, the two slots of A."""

    F: np.ndarray     # (nx, ny, q, q)
    G: np.ndarray

    def skew_defect(self) -> float:
        return max(float(np.max(np.abs(self.F + np.swapaxes(self.F, -1, -2)))),
                   float(np.max(np.abs(self.G + np.swapaxes(self.G, -1, -2)))))


def assemble_A(u_values: np.ndarray, grid: SurfaceGrid, target: TargetManifold,
               fields: FieldBackground) -> AntisymmetricPotential:
    """Assemble the antisymmetric potential at u.

    F^m_i = K^m_i(u_x) - 1/2 Omega_mij u_y^j,
    G^m_i = K^m_i(u_y) + 1/2 Omega_mij u_x^j,
    with K^m_i(X) = sum_{l,j} (dnu_l^i/dy^j nu_l^m - dnu_l^m/dy^j nu_l^i) X^j.
    Then A . grad u = -II(du, du) - Omega(., du_x, du_y), each term skew.
    """
    if not grid.is_flat:
        raise UnsupportedConfigurationError("assemble_A requires a flat grid")
    ux = d0x(u_values, grid)
    uy = d0y(u_values, grid)
    nu = target.normal_frame(u_values)          # (..., L, q)
    dnu = target.frame_jacobian(u_values)       # (..., L, q, q) [l, i, j]
    # C[m, i, j] = sum_l dnu[l, i, j] nu[l, m] - dnu[l, m, j] nu[l, i]
    t1 = np.einsum("...lij,...lm->...mij", dnu, nu)
    C = t1 - np.swapaxes(t1, -3, -2)  # second term is t1 with (m, i) swapped
    F = np.einsum("...mij,...j->...mi", C, ux)
    G = np.einsum("...mij,...j->...mi", C, uy)
    if not fields.b.is_zero:
        om = fields.b.omega(u_values)           # (..., m, i, j)
        F = F - 0.5 * np.einsum("...mij,...j->...mi", om, uy)
        G = G + 0.5 * np.einsum("...mij,...j->...mi", om, ux)
    return AntisymmetricPotential(F=F, G=G)


def rewrite_residual(u_values: np.ndarray, A: AntisymmetricPotential,
                     grid: SurfaceGrid, target: TargetManifold,
                     fields: FieldBackground,
                     drop_F: bool = False) -> float:
    """L2 norm of Delta u + F . u_x + G . u_y - P grad V(u).

    Vanishes to O(dx^2) for smooth critical points; `drop_F` ablates the F
    term (negative control).
    """
    ux = d0x(u_values, grid)
    uy = d0y(u_values, grid)
    res = laplace_beltrami(u_values, grid)
    if not drop_F:
        res = res + np.einsum("...mi,...i->...m", A.F, ux)
    res = res + np.einsum("...mi,...i->...m", A.G, uy)
    if not fields.V.is_zero:
        res = res - tangential_grad_V(u_values, fields.V, target)
    return l2_norm(res, grid)


# -- gap / triviality ---------------------------------------------------------------

def _lp_norm(density: np.ndarray, grid: SurfaceGrid, p: float) -> float:
    return float(np.sum(density ** p * grid.w)) ** (1.0 / p)


def w2_43_seminorm(u_values: np.ndarray, grid: SurfaceGrid) -> float:
    """Discrete W^{2,4/3} seminorm: (sum |second differences|^{4/3} w)^{3/4}."""
    h = np.sqrt(hessian_sq_density(u_values, grid))
    return _lp_norm(h, grid, 4.0 / 3.0)


def gap_check(u_values: np.ndarray, grid: SurfaceGrid, target: TargetManifold,
              fields: FieldBackground, eps_energy: float) -> dict:
    """Small-energy gap diagnostics.

    Reports ||du||_L2, the W^{2,4/3} seminorm of u - mean(u), and
    ||P grad V(u)||_{L^{4/3}}; when grad V vanishes and the energy is below
    eps_energy the map is expected to be constant (small-energy triviality).
    """
    du_l2 = float(np.sqrt(np.sum(grad_sq_density(u_values, grid) * grid.w)))
    centered = u_values - np.mean(u_values, axis=(0, 1))
    semi = w2_43_seminorm(centered, grid)
    gv = tangential_grad_V(u_values, fields.V, target)
    gv_norm = _lp_norm(np.linalg.norm(gv, axis=-1), grid, 4.0 / 3.0)
    small = du_l2 < eps_energy
    ratio = 0.0 if semi == 0.0 else (gv_norm / semi if gv_norm > 0 else 0.0)
    return {
        "du_l2": du_l2,
        "w2_43_seminorm": semi,
        "gradV_l43": gv_norm,
        "ratio": ratio,
        "small_energy": small,
        "gap_applicable": small,
        "expect_constant": bool(small and fields.V.is_zero),
    }


def scalar_curvature(grid: SurfaceGrid) -> np.ndarray:
    """Scal = -2 e^{-2 lam} Delta_flat lam = -2 Delta_h lam."""
    return -2.0 * laplace_beltrami(grid.lam, grid)


def triviality_condition(u_values: np.ndarray, grid: SurfaceGrid,
                         fields: FieldBackground, kappa_N: float,
                         Z_inf: float, hessV_inf: float,
                         tol: float = 1e-6) -> dict:
    """Pointwise margin Scal/2 - (|Z|^2 + kappa) |du|^2 - |Hess V|.

    The condition holds iff the margin is nonnegative everywhere; when it
    holds, |du|^2 is subharmonic hence expected constant for critical maps.
    """
    g2 = grad_sq_density(u_values, grid)
    margin = 0.5 * scalar_curvature(grid) - (Z_inf ** 2 + kappa_N) * g2 - hessV_inf
    holds = bool(np.all(margin >= -tol))
    spread = float(np.max(g2) - np.min(g2))
    return {
        "condition_holds_everywhere": holds,
        "margin_field": margin,
        "min_margin": float(np.min(margin)),
        "grad_sq_spread": spread,
        "grad_sq_constant": bool(spread <= tol * max(1.0, float(np.max(g2)))),
    }


def bochner_density(u_values: np.ndarray, grid: SurfaceGrid,
                    target: TargetManifold, fields: FieldBackground,
                    kappa_N: float, Z_inf: float,
                    hessV_inf: float) -> np.ndarray:
    """Pointwise Bochner diagnostic, nonnegative up to O(dx^2) truncation:

        Delta(|du|^2 / 2) - [ |Hess u|^2 + (Scal/2)|du|^2 - kappa |du|^4
                              - |Z| |du|^2 |tau| - |Hess V| |du|^2 ].
    """
    if not grid.is_flat:
        raise UnsupportedConfigurationError("bochner_density needs a flat grid")
    from .action import MapField, flow_rhs
    g2 = grad_sq_density(u_values, grid)
    lap_half = laplace_beltrami(0.5 * g2, grid)
    hess2 = hessian_sq_density(u_values, grid)
    tau = flow_rhs(MapField(u_values, target), grid, target, fields)
    tau_norm = np.linalg.norm(tau, axis=-1)
    bracket = (hess2 - kappa_N * g2 ** 2 - Z_inf * g2 * tau_norm
               - hessV_inf * g2)
    return lap_half - bracket
