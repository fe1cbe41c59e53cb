"""Discrete geometry of the domain: the conformal 2-torus, its stencils and quadrature.

The metric is h = e^{2*lam} (dx^2 + dy^2) on a periodic rectangle of size
Lx x Ly.  Fields live on an nx x ny node grid; axis 0 is x, axis 1 is y.
Vector fields carry a trailing component axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridError, ShapeError, UnsupportedConfigurationError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SurfaceGrid:
    """Periodic rectangular grid carrying a conformal factor and quadrature weights.

    Immutable after construction; the held arrays are marked read-only.
    """

    nx: int
    ny: int
    Lx: float
    Ly: float
    lam: np.ndarray      # (nx, ny) conformal exponent
    dx: float
    dy: float
    x: np.ndarray        # (nx,) node coordinates
    y: np.ndarray        # (ny,)
    e2l: np.ndarray      # e^{2 lam}
    em2l: np.ndarray     # e^{-2 lam}
    eml: np.ndarray      # e^{-lam}
    w: np.ndarray        # quadrature weights e^{2 lam} dx dy

    @property
    def is_flat(self) -> bool:
        return bool(np.all(self.lam == 0.0))

    @property
    def total_volume(self) -> float:
        return float(np.sum(self.w))

    @property
    def inj_radius(self) -> float:
        # flat-torus value; only used to bound admissible ball radii
        return 0.5 * min(self.Lx, self.Ly)

    def meshgrid(self):
        return np.meshgrid(self.x, self.y, indexing="ij")


def build_grid(nx: int, ny: int, Lx: float = TWO_PI, Ly: float = TWO_PI,
               lam=None) -> SurfaceGrid:
    """Build a SurfaceGrid.

    `lam` may be None (flat), a scalar, an (nx, ny) array, or a callable
    lam(X, Y) evaluated on the node mesh.
    """
    if nx < 8 or ny < 8:
        raise GridError(f"grid must be at least 8x8, got {nx}x{ny}")
    if Lx <= 0 or Ly <= 0:
        raise GridError(f"periods must be positive, got Lx={Lx}, Ly={Ly}")
    dx = Lx / nx
    dy = Ly / ny
    x = np.arange(nx) * dx
    y = np.arange(ny) * dy
    if lam is None:
        lam_arr = np.zeros((nx, ny))
    elif callable(lam):
        X, Y = np.meshgrid(x, y, indexing="ij")
        lam_arr = np.asarray(lam(X, Y), dtype=float)
        lam_arr = np.broadcast_to(lam_arr, (nx, ny)).copy()
    elif np.isscalar(lam):
        lam_arr = np.full((nx, ny), float(lam))
    else:
        lam_arr = np.asarray(lam, dtype=float)
        if lam_arr.shape != (nx, ny):
            raise GridError(f"lambda array shape {lam_arr.shape} != {(nx, ny)}")
        lam_arr = lam_arr.copy()
    if not np.all(np.isfinite(lam_arr)):
        raise GridError("conformal exponent contains non-finite values")
    e2l = np.exp(2.0 * lam_arr)
    em2l = np.exp(-2.0 * lam_arr)
    eml = np.exp(-lam_arr)
    w = e2l * (dx * dy)
    for a in (lam_arr, x, y, e2l, em2l, eml, w):
        a.setflags(write=False)
    return SurfaceGrid(nx=nx, ny=ny, Lx=float(Lx), Ly=float(Ly), lam=lam_arr,
                       dx=dx, dy=dy, x=x, y=y, e2l=e2l, em2l=em2l, eml=eml, w=w)


def conformal_rescale(grid: SurfaceGrid, a: float) -> SurfaceGrid:
    """Grid with metric a*h, i.e. lam -> lam + ln(a)/2.  Volume scales by a."""
    if a <= 0:
        raise GridError(f"conformal factor must be positive, got {a}")
    return build_grid(grid.nx, grid.ny, grid.Lx, grid.Ly,
                      lam=grid.lam + 0.5 * math.log(a))


# -- stencils -----------------------------------------------------------------
# np.roll(f, -1, axis) brings f[i+1] to slot i; all stencils are exactly periodic.

def d0x(f: np.ndarray, grid: SurfaceGrid) -> np.ndarray:
    """Centered x-derivative (coordinate, not frame)."""
    return (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) / (2.0 * grid.dx)


def d0y(f: np.ndarray, grid: SurfaceGrid) -> np.ndarray:
    return (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2.0 * grid.dy)


def dpx(f: np.ndarray, grid: SurfaceGrid) -> np.ndarray:
    """Forward x-difference."""
    return (np.roll(f, -1, axis=0) - f) / grid.dx


def dpy(f: np.ndarray, grid: SurfaceGrid) -> np.ndarray:
    return (np.roll(f, -1, axis=1) - f) / grid.dy


def dxx(f: np.ndarray, grid: SurfaceGrid) -> np.ndarray:
    return (np.roll(f, -1, axis=0) + np.roll(f, 1, axis=0) - 2.0 * f) / grid.dx**2


def dyy(f: np.ndarray, grid: SurfaceGrid) -> np.ndarray:
    return (np.roll(f, -1, axis=1) + np.roll(f, 1, axis=1) - 2.0 * f) / grid.dy**2


def dxy(f: np.ndarray, grid: SurfaceGrid) -> np.ndarray:
    """Centered cross derivative."""
    fpp = np.roll(np.roll(f, -1, axis=0), -1, axis=1)
    fpm = np.roll(np.roll(f, -1, axis=0), 1, axis=1)
    fmp = np.roll(np.roll(f, 1, axis=0), -1, axis=1)
    fmm = np.roll(np.roll(f, 1, axis=0), 1, axis=1)
    return (fpp - fpm - fmp + fmm) / (4.0 * grid.dx * grid.dy)


def _comp_weight(a: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Broadcast a node-scalar over an optional trailing component axis."""
    return a if f.ndim == 2 else a[..., None]


def laplace_beltrami(f: np.ndarray, grid: SurfaceGrid) -> np.ndarray:
    """e^{-2 lam} (f_xx + f_yy) with the 5-point periodic stencil.

    Self-adjoint in the e^{2 lam}-weighted inner product by construction.
    """
    return _comp_weight(grid.em2l, f) * (dxx(f, grid) + dyy(f, grid))


def frame_derivatives(u: np.ndarray, grid: SurfaceGrid):
    """Orthonormal-frame derivatives du(e1), du(e2), e_alpha = e^{-lam} d/dx_alpha."""
    s = _comp_weight(grid.eml, u)
    return s * d0x(u, grid), s * d0y(u, grid)


def grad_sq_density(u: np.ndarray, grid: SurfaceGrid) -> np.ndarray:
    """Pointwise |du|^2 = |du(e1)|^2 + |du(e2)|^2 (centered differences)."""
    du1, du2 = frame_derivatives(u, grid)
    if u.ndim == 2:
        return du1**2 + du2**2
    return np.sum(du1**2 + du2**2, axis=-1)


def second_differences(f: np.ndarray, grid: SurfaceGrid):
    """(f_xx, f_xy, f_yy) flat second-difference Hessian components."""
    return dxx(f, grid), dxy(f, grid), dyy(f, grid)


def hessian_sq_density(u: np.ndarray, grid: SurfaceGrid) -> np.ndarray:
    """Pointwise |flat Hessian|^2 = u_xx^2 + 2 u_xy^2 + u_yy^2."""
    hxx, hxy, hyy = second_differences(u, grid)
    d = hxx**2 + 2.0 * hxy**2 + hyy**2
    if u.ndim == 3:
        d = np.sum(d, axis=-1)
    return d


def l2_inner(f: np.ndarray, g: np.ndarray, grid: SurfaceGrid) -> float:
    """Discrete integral of <f, g> against dvol_h.

    Reduction order is fixed (numpy pairwise summation over the flattened
    array), so results are bit-reproducible for identical inputs.
    """
    if f.shape != g.shape:
        raise ShapeError(f"shape mismatch: {f.shape} vs {g.shape}")
    pw = f * g
    if pw.ndim == 3:
        pw = np.sum(pw, axis=-1)
    return float(np.sum(pw * grid.w))


def l2_norm(f: np.ndarray, grid: SurfaceGrid) -> float:
    return math.sqrt(max(l2_inner(f, f, grid), 0.0))


def ricci_identity_check(v: np.ndarray, grid: SurfaceGrid):
    """(lhs, rhs) = (int |Delta v|^2, int |Hess v|^2) on the flat torus.

    On the flat torus Scal = 0 and the two integrals agree up to O(dx^2);
    the conformal case needs Christoffel symbols and is not supported.
    """
    if not grid.is_flat:
        raise UnsupportedConfigurationError(
            "ricci_identity_check requires a flat grid (lam == 0)")
    lap = laplace_beltrami(v, grid)
    lhs = l2_inner(lap, lap, grid)
    rhs = float(np.sum(hessian_sq_density(v, grid) * grid.w))
    return lhs, rhs


# -- balls --------------------------------------------------------------------

def periodic_delta(coords: np.ndarray, c: float, L: float) -> np.ndarray:
    """Signed periodic displacement coords - c reduced to [-L/2, L/2)."""
    d = (coords - c) % L
    return np.where(d >= L / 2.0, d - L, d)


def ball_mask(grid: SurfaceGrid, x0, R: float) -> np.ndarray:
    """Boolean mask of nodes within flat periodic coordinate distance R of node x0.

    x0 is a node index pair (ix, iy).  Exact geodesic balls only for lam == 0;
    for lam != 0 this is a documented approximation.
    """
    if not (0.0 < R < grid.inj_radius):
        raise GridError(f"ball radius {R} outside (0, {grid.inj_radius})")
    ix, iy = x0
    ddx = periodic_delta(grid.x, grid.x[int(ix) % grid.nx], grid.Lx)
    ddy = periodic_delta(grid.y, grid.y[int(iy) % grid.ny], grid.Ly)
    return (ddx[:, None]**2 + ddy[None, :]**2) <= R * R


def ball_kernel(grid: SurfaceGrid, R: float) -> np.ndarray:
    """Ball indicator centered at node (0, 0); symmetric under index negation."""
    return ball_mask(grid, (0, 0), R).astype(float)


def ball_sum_map(density: np.ndarray, grid: SurfaceGrid, R: float) -> np.ndarray:
    """S[ix, iy] = sum of `density` over the ball of radius R around each node.

    Computed by circular FFT convolution with the (symmetric) ball indicator;
    agrees with direct masked sums to roundoff.
    """
    K = ball_kernel(grid, R)
    S = np.fft.irfft2(np.fft.rfft2(density) * np.fft.rfft2(K), s=density.shape)
    return S
