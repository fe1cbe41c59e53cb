"""Canonical initial maps: constants, geodesic wraps, stereographic bubbles,
and seeded smooth random perturbations."""

from __future__ import annotations

import numpy as np

from .action import MapField, dirichlet_energy
from .errors import GridError
from .grid import SurfaceGrid
from .targets import TargetManifold


def _basepoint(target: TargetManifold, point=None) -> np.ndarray:
    if point is None:
        p = np.zeros(target.q)
        p[0] = 1.0
        return p
    p = np.asarray(point, dtype=float)
    if p.shape != (target.q,):
        raise GridError(f"basepoint must have shape ({target.q},)")
    return target.project(p)


def constant_map(grid: SurfaceGrid, target: TargetManifold,
                 point=None) -> MapField:
    p = _basepoint(target, point)
    vals = np.broadcast_to(p, (grid.nx, grid.ny, target.q)).copy()
    return MapField(vals, target)


def geodesic_wrap(grid: SurfaceGrid, target: TargetManifold,
                  m: int = 1, n: int = 0, plane=(0, 1),
                  phase: float = 0.0) -> MapField:
    """u = (cos theta, sin theta) in coordinate plane `plane`, theta = m x + n y.

    A closed geodesic wrap of the sphere; a critical point of the Dirichlet
    energy, and of the full action whenever the background fields vanish on
    the wrapped circle.
    """
    i, j = plane
    theta = (m * 2.0 * np.pi / grid.Lx) * grid.x[:, None] \
        + (n * 2.0 * np.pi / grid.Ly) * grid.y[None, :] + phase
    vals = np.zeros((grid.nx, grid.ny, target.q))
    vals[..., i] = np.cos(theta)
    vals[..., j] = np.sin(theta)
    return MapField(vals, target)


def bump_map(grid: SurfaceGrid, target: TargetManifold,
             center=None, scale: float = 0.5,
             support: float = None) -> MapField:
    """Inverse-stereographic bubble in the first three coordinates.

    Inside radius `support` of `center` the map covers a cap of the 2-sphere
    {u4 = ... = 0}; outside it sits at the pole (0, 0, 1, 0, ...).  Smaller
    `scale` concentrates more Dirichlet energy near the center.
    """
    if target.q < 3:
        raise GridError("bump_map needs an ambient dimension of at least 3")
    x0 = (0.5 * grid.Lx, 0.5 * grid.Ly) if center is None else center
    if support is None:
        support = 0.45 * min(grid.Lx, grid.Ly)
    X = grid.x[:, None] - x0[0]
    Y = grid.y[None, :] - x0[1]
    # periodic-aware displacement
    X = (X + 0.5 * grid.Lx) % grid.Lx - 0.5 * grid.Lx
    Y = (Y + 0.5 * grid.Ly) % grid.Ly - 0.5 * grid.Ly
    r = np.sqrt(X ** 2 + Y ** 2)
    # smooth cutoff: chi = 1 near center, 0 at/after `support`
    s = np.clip(r / support, 0.0, 1.0)
    chi = np.where(s < 1.0, np.exp(1.0 - 1.0 / np.maximum(1.0 - s ** 2, 1e-300)), 0.0)
    zx, zy = X / scale, Y / scale
    rho2 = zx ** 2 + zy ** 2
    denom = rho2 + 1.0
    bubble = np.stack([2.0 * zx / denom, 2.0 * zy / denom,
                       (rho2 - 1.0) / denom], axis=-1)
    pole = np.array([0.0, 0.0, 1.0])
    blended = chi[..., None] * bubble + (1.0 - chi[..., None]) * pole
    vals = np.zeros((grid.nx, grid.ny, target.q))
    vals[..., :3] = blended
    vals = target.project(vals)
    return MapField(vals, target)


def _lowpass_noise(grid: SurfaceGrid, q: int, seed: int,
                   max_mode: int = 4) -> np.ndarray:
    """Seeded real periodic noise with Fourier support |k| <= max_mode."""
    rng = np.random.default_rng(seed)
    kx = np.fft.fftfreq(grid.nx, d=1.0 / grid.nx)
    ky = np.fft.rfftfreq(grid.ny, d=1.0 / grid.ny)
    mask = (np.abs(kx)[:, None] <= max_mode) & (np.abs(ky)[None, :] <= max_mode)
    out = np.empty((grid.nx, grid.ny, q))
    for c in range(q):
        white = rng.standard_normal((grid.nx, grid.ny))
        spec = np.fft.rfft2(white) * mask
        out[..., c] = np.fft.irfft2(spec, s=(grid.nx, grid.ny))
    m = np.max(np.abs(out))
    return out / m if m > 0 else out


def random_smooth_map(grid: SurfaceGrid, target: TargetManifold,
                      seed: int = 0, amplitude: float = 0.3,
                      max_mode: int = 4, point=None) -> MapField:
    """Projection of basepoint + amplitude * low-pass noise onto the target."""
    p = _basepoint(target, point)
    vals = target.project(p + amplitude * _lowpass_noise(grid, target.q, seed, max_mode))
    return MapField(vals, target)


def noisy_wrap(grid: SurfaceGrid, target: TargetManifold,
               m: int = 1, n: int = 0, seed: int = 0,
               amplitude: float = 1e-3, max_mode: int = 4) -> MapField:
    base = geodesic_wrap(grid, target, m=m, n=n).values
    vals = target.project(base + amplitude * _lowpass_noise(grid, target.q, seed, max_mode))
    return MapField(vals, target)


def small_energy_map(grid: SurfaceGrid, target: TargetManifold,
                     energy: float, seed: int = 0, max_mode: int = 2,
                     point=None, tol: float = 1e-12) -> MapField:
    """Perturbed constant map whose Dirichlet energy equals `energy`.

    The amplitude of a fixed low-pass perturbation is found by bisection;
    energy is monotone in the amplitude over the bracket used.
    """
    if energy <= 0:
        return constant_map(grid, target, point)
    p = _basepoint(target, point)
    noise = _lowpass_noise(grid, target.q, seed, max_mode)

    def e_of(a):
        vals = target.project(p + a * noise)
        return dirichlet_energy(vals, grid)

    lo, hi = 0.0, 1e-3
    while e_of(hi) < energy:
        hi *= 2.0
        if hi > 1e6:
            raise GridError("cannot reach requested energy with this noise")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if e_of(mid) < energy:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(1.0, hi):
            break
    a = 0.5 * (lo + hi)
    return MapField(target.project(p + a * noise), target)


MAP_BUILDERS = {
    "constant": constant_map,
    "geodesic_wrap": geodesic_wrap,
    "bump": bump_map,
    "random_smooth": random_smooth_map,
    "noisy_wrap": noisy_wrap,
    "small_energy": small_energy_map,
}
