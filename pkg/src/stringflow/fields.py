"""Background fields: the B-field two-form, its exterior derivative, the
Z-operator, the scalar potential with its nonnegative shift, and sup-norm
estimates entering the hypothesis checks.

The B-field is given by an ambient skew coefficient matrix b(y) restricted to
the target, B(xi, eta) = xi^T b(y) eta.  The three-form Omega = dB has
coefficients Omega_kij = d_k b_ij + d_i b_jk + d_j b_ki.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import HypothesisError
from .grid import SurfaceGrid, d0x, d0y
from .targets import TargetManifold, tangent_project


# -- two-form -----------------------------------------------------------------

@dataclass
class TwoFormField:
    """Skew coefficient field b(y) with ambient derivatives d_k b_ij."""

    name: str
    q: int
    coeff: Callable[[np.ndarray], np.ndarray]     # (..., q) -> (..., q, q), skew
    dcoeff: Callable[[np.ndarray], np.ndarray]    # (..., q) -> (..., q, q, q) [k,i,j]

    @property
    def is_zero(self) -> bool:
        return self.name == "zero"

    def omega(self, y: np.ndarray) -> np.ndarray:
        """Omega_kij = dB coefficients, fully antisymmetric. Shape (..., q, q, q)."""
        d = self.dcoeff(y)
        # d[k, i, j] = d_k b_ij
        return d + np.moveaxis(d, (-3, -2, -1), (-2, -1, -3)) \
                 + np.moveaxis(d, (-3, -2, -1), (-1, -3, -2))

    def dcoeff_fd(self, y: np.ndarray, step: float = 1e-6) -> np.ndarray:
        """Central-difference derivative oracle for dcoeff."""
        out = np.zeros(y.shape[:-1] + (self.q, self.q, self.q))
        for k in range(self.q):
            e = np.zeros(self.q)
            e[k] = step
            out[..., k, :, :] = (self.coeff(y + e) - self.coeff(y - e)) / (2 * step)
        return out


def zero_two_form(q: int) -> TwoFormField:
    def coeff(y):
        return np.zeros(y.shape[:-1] + (q, q))

    def dcoeff(y):
        return np.zeros(y.shape[:-1] + (q, q, q))

    return TwoFormField("zero", q, coeff, dcoeff)


def y4_two_form(beta: float, q: int = 4) -> TwoFormField:
    """b_12(y) = beta * y^4 (so Omega = beta dy^1 ^ dy^2 ^ dy^4)."""
    if q < 4:
        raise ValueError("y4 two-form needs q >= 4")

    def coeff(y):
        b = np.zeros(y.shape[:-1] + (q, q))
        b[..., 0, 1] = beta * y[..., 3]
        b[..., 1, 0] = -beta * y[..., 3]
        return b

    def dcoeff(y):
        d = np.zeros(y.shape[:-1] + (q, q, q))
        d[..., 3, 0, 1] = beta
        d[..., 3, 1, 0] = -beta
        return d

    return TwoFormField("y4", q, coeff, dcoeff)


def make_two_form(kind: str, q: int, beta: float = 0.0) -> TwoFormField:
    if kind == "zero":
        return zero_two_form(q)
    if kind == "y4":
        return y4_two_form(beta, q)
    raise ValueError(f"unknown bfield kind {kind!r}")


# -- scalar potential ----------------------------------------------------------

@dataclass
class ScalarPotential:
    """Scalar potential V on the ambient space with gradient and Hessian.

    `shift` is A1 = -min_N V >= 0, so V + shift >= 0 on N; known exactly for
    the built-in kinds, otherwise estimated by sampling.
    """

    name: str
    q: int
    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    shift: float

    @property
    def is_zero(self) -> bool:
        return self.name == "zero"

    def shifted(self, y: np.ndarray) -> np.ndarray:
        return self.value(y) + self.shift

    def grad_fd(self, y: np.ndarray, step: float = 1e-6) -> np.ndarray:
        out = np.zeros(y.shape[:-1] + (self.q,))
        for k in range(self.q):
            e = np.zeros(self.q)
            e[k] = step
            out[..., k] = (self.value(y + e) - self.value(y - e)) / (2 * step)
        return out


def zero_potential(q: int) -> ScalarPotential:
    return ScalarPotential(
        "zero", q,
        value=lambda y: np.zeros(y.shape[:-1]),
        grad=lambda y: np.zeros(y.shape[:-1] + (q,)),
        hess=lambda y: np.zeros(y.shape[:-1] + (q, q)),
        shift=0.0,
    )


def height_potential(epsilon: float, q: int = 4) -> ScalarPotential:
    """V(y) = epsilon * y^1; on the unit sphere min V = -epsilon."""
    e1 = np.zeros(q)
    e1[0] = 1.0
    return ScalarPotential(
        "height", q,
        value=lambda y: epsilon * y[..., 0],
        grad=lambda y: np.broadcast_to(epsilon * e1, y.shape).copy(),
        hess=lambda y: np.zeros(y.shape[:-1] + (q, q)),
        shift=abs(epsilon),
    )


def make_potential(kind: str, q: int, epsilon: float = 0.0) -> ScalarPotential:
    if kind == "zero":
        return zero_potential(q)
    if kind == "height":
        return height_potential(epsilon, q)
    raise ValueError(f"unknown potential kind {kind!r}")


@dataclass
class FieldBackground:
    """Bundle of the B-field and scalar potential acting on one target."""

    b: TwoFormField
    V: ScalarPotential

    @property
    def trivial(self) -> bool:
        return self.b.is_zero and self.V.is_zero


def zero_background(q: int) -> FieldBackground:
    return FieldBackground(zero_two_form(q), zero_potential(q))


# -- operations ----------------------------------------------------------------

def pullback_density(u: np.ndarray, b: TwoFormField,
                     grid: SurfaceGrid) -> np.ndarray:
    """(d_x u)^T b(u) (d_y u) at each node (coordinate derivatives).

    The pullback integral is sum(density) * dx * dy, with no conformal
    weight: the B-term is conformally invariant.
    """
    ux = d0x(u, grid)
    uy = d0y(u, grid)
    return np.einsum("...i,...ij,...j->...", ux, b.coeff(u), uy)


def pullback_integral(u: np.ndarray, b: TwoFormField, grid: SurfaceGrid) -> float:
    if b.is_zero:
        return 0.0
    return float(np.sum(pullback_density(u, b, grid)) * grid.dx * grid.dy)


def z_operator(u: np.ndarray, xi1: np.ndarray, xi2: np.ndarray,
               b: TwoFormField, target: TargetManifold) -> np.ndarray:
    """Z(xi1 ^ xi2) = P(u) w with w^k = Omega_kij(u) xi1^i xi2^j.

    Defined by <Z(xi1 ^ xi2), eta> = Omega(eta, xi1, xi2) for tangent eta;
    antisymmetric in (xi1, xi2) and tangent-valued.
    """
    om = b.omega(u)
    w = np.einsum("...kij,...i,...j->...k", om, xi1, xi2)
    return tangent_project(target, u, w)


def tangential_grad_V(u: np.ndarray, V: ScalarPotential,
                      target: TargetManifold) -> np.ndarray:
    """P(u) grad V(u)."""
    return tangent_project(target, u, V.grad(u))


# -- sup norms -----------------------------------------------------------------

@dataclass
class SupNorms:
    """Sampled sup-norm estimates (lower bounds of the true sup)."""

    B_inf: float
    Z_inf: float
    gradV_inf: float
    hessV_inf: float
    A1: float
    n_samples: int


def _sample_points(target: TargetManifold, n: int, rng) -> np.ndarray:
    y = rng.standard_normal((n, target.q))
    return target.project(y)


def _orthonormal_tangent_pair(target, u, rng):
    """One orthonormal tangent pair per sampled point."""
    n = u.shape[0]
    a = tangent_project(target, u, rng.standard_normal((n, target.q)))
    a /= np.linalg.norm(a, axis=-1, keepdims=True)
    c = tangent_project(target, u, rng.standard_normal((n, target.q)))
    c -= np.sum(c * a, axis=-1, keepdims=True) * a
    c /= np.linalg.norm(c, axis=-1, keepdims=True)
    return a, c


def sup_norms(b: TwoFormField, V: ScalarPotential, target: TargetManifold,
              n_samples: int = 4096, seed: int = 0,
              pairs_per_point: int = 4) -> SupNorms:
    """Estimate |B|_inf (comass), |Z|_inf, |grad V|_inf, |Hess V|_inf and A1.

    Deterministic seeded sampling; estimates are lower bounds of the sup and
    are reported together with the sample count.
    """
    if n_samples < 1000:
        raise ValueError("need at least 1000 samples for sup-norm estimates")
    rng = np.random.default_rng(seed)
    u = _sample_points(target, n_samples, rng)

    B_inf = 0.0
    Z_inf = 0.0
    if not b.is_zero:
        # comass of b at u: spectral norm of the tangentially restricted matrix
        P = target.tangent_projector(u)
        bu = b.coeff(u)
        rest = np.einsum("...ia,...ab,...bj->...ij", P, bu, P)
        B_inf = float(np.max(np.linalg.norm(rest, ord=2, axis=(-2, -1))))
        for _ in range(pairs_per_point):
            xi1, xi2 = _orthonormal_tangent_pair(target, u, rng)
            z = z_operator(u, xi1, xi2, b, target)
            Z_inf = max(Z_inf, float(np.max(np.linalg.norm(z, axis=-1))))

    gradV_inf = 0.0
    hessV_inf = 0.0
    A1 = V.shift
    if not V.is_zero:
        gv = tangential_grad_V(u, V, target)
        gradV_inf = float(np.max(np.linalg.norm(gv, axis=-1)))
        A1 = max(A1, float(-np.min(V.value(u))))
        # intrinsic Hessian on N along tangent X:
        # X^T Hess_amb X + <grad V, II(X, X)>
        for _ in range(pairs_per_point):
            X, _ = _orthonormal_tangent_pair(target, u, rng)
            h_amb = np.einsum("...i,...ij,...j->...", X, V.hess(u), X)
            h_ii = np.sum(V.grad(u) * target.sff(u, X, X), axis=-1)
            hessV_inf = max(hessV_inf, float(np.max(np.abs(h_amb + h_ii))))

    return SupNorms(B_inf=B_inf, Z_inf=Z_inf, gradV_inf=gradV_inf,
                    hessV_inf=hessV_inf, A1=A1, n_samples=n_samples)


# -- hypothesis report -----------------------------------------------------------

def delta_constants(B_inf: float):
    """delta2 = 1/(1/2 - |B|), delta3 = (1/2 + |B|)/(1/2 - |B|); needs |B| < 1/2."""
    if not 0.0 <= B_inf < 0.5:
        raise HypothesisError(f"|B|_inf = {B_inf} outside [0, 1/2)")
    delta2 = 1.0 / (0.5 - B_inf)
    delta3 = (0.5 + B_inf) / (0.5 - B_inf)
    return delta2, delta3


@dataclass
class SmallnessReport:
    integral_tilde_V: float
    delta1: float
    delta2: float
    required_bound: float      # delta1 / delta2
    B_inf: float
    passes_bfield: bool
    passes_potential: bool

    @property
    def passes(self) -> bool:
        return self.passes_bfield and self.passes_potential

    def to_dict(self) -> dict:
        return {
            "integral_tilde_V": self.integral_tilde_V,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "required_bound": self.required_bound,
            "B_inf": self.B_inf,
            "passes_bfield": self.passes_bfield,
            "passes_potential": self.passes_potential,
            "passes": self.passes,
        }


def smallness_report(u0: np.ndarray, grid: SurfaceGrid, fields: FieldBackground,
                     delta1: float, B_inf: float) -> SmallnessReport:
    """Check the hypotheses |B|_inf < 1/2 and int tilde(V)(u0) <= d1/d2."""
    integral = float(np.sum(fields.V.shifted(u0) * grid.w))
    passes_b = B_inf < 0.5
    if passes_b:
        delta2, _ = delta_constants(B_inf)
    else:
        delta2 = math.inf
    bound = delta1 / delta2 if passes_b else 0.0
    return SmallnessReport(
        integral_tilde_V=integral,
        delta1=delta1,
        delta2=delta2,
        required_bound=bound,
        B_inf=B_inf,
        passes_bfield=passes_b,
        passes_potential=passes_b and integral <= bound,
    )
