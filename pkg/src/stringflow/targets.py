"""Embedded compact targets N in R^q: projection, tangent/normal structure.

All point operations are vectorized over arbitrary leading axes; the
component axis is last.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from .errors import OffManifoldError, ProjectionError, TangencyError

ON_MANIFOLD_TOL = 1e-8
TANGENT_TOL = 1e-6


class TargetManifold(ABC):
    """Compact N in R^q with nearest-point projection well-defined in a tube."""

    q: int                 # ambient dimension
    n: int                 # intrinsic dimension
    tubular_radius: float
    name: str = "target"

    @abstractmethod
    def project(self, y: np.ndarray) -> np.ndarray:
        """Nearest point on N; raises ProjectionError outside the tube."""

    @abstractmethod
    def distance(self, y: np.ndarray) -> np.ndarray:
        """Pointwise distance to N."""

    @abstractmethod
    def tangent_projector(self, u: np.ndarray) -> np.ndarray:
        """(..., q, q) orthogonal projector onto T_u N."""

    @abstractmethod
    def sff(self, u: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Second fundamental form II(X, Y), unchecked fast path.

        Convention: II equals the second derivative of the nearest-point
        projection on tangent vectors, so for the unit sphere
        II(X, Y) = -<X, Y> u.
        """

    @abstractmethod
    def normal_frame(self, u: np.ndarray) -> np.ndarray:
        """(..., q - n, q) orthonormal basis of the normal space at u."""

    def frame_jacobian(self, u: np.ndarray, step: float = 1e-5) -> np.ndarray:
        """(..., q - n, q, q) array J[l, i, j] = d nu_l^i / d y^j at u.

        Central differences of the frame field extended by nu(y) =
        normal_frame(project(y)); subclasses may override with a closed form.
        """
        L = self.q - self.n
        out = np.zeros(u.shape[:-1] + (L, self.q, self.q))
        for j in range(self.q):
            e = np.zeros(self.q)
            e[j] = step
            fp = self.normal_frame(self.project(u + e))
            fm = self.normal_frame(self.project(u - e))
            out[..., :, :, j] = (fp - fm) / (2.0 * step)
        return out

    # -- checked public wrappers ---------------------------------------------

    def check_on_manifold(self, u: np.ndarray, tol: float = ON_MANIFOLD_TOL):
        d = float(np.max(self.distance(u)))
        if d > tol:
            raise OffManifoldError(f"max dist to target {d:.3e} > {tol:.1e}")

    def check_tangent(self, u: np.ndarray, X: np.ndarray,
                      tol: float = TANGENT_TOL):
        P = self.tangent_projector(u)
        r = np.einsum("...ij,...j->...i", P, X) - X
        defect = float(np.max(np.linalg.norm(r, axis=-1)))
        scale = max(float(np.max(np.linalg.norm(X, axis=-1))), 1.0)
        if defect > tol * scale:
            raise TangencyError(f"normal component {defect:.3e} beyond tolerance")

    def second_fundamental_form(self, u, X, Y, check: bool = True) -> np.ndarray:
        if check:
            self.check_on_manifold(u)
            self.check_tangent(u, X)
            self.check_tangent(u, Y)
        return self.sff(u, X, Y)

    def second_fundamental_form_fd(self, u, X, Y, h: float | None = None,
                                   richardson: bool = True) -> np.ndarray:
        """Finite-difference oracle for II via second differences of project.

        II(X, X) = (pi(u + hX) + pi(u - hX) - 2u) / h^2 + O(h^2); mixed
        arguments by polarization.  Independent of the analytic sff.
        """
        if h is None:
            h = 1e-4 * self.tubular_radius

        def diag(Z):
            d2 = (self.project(u + h * Z) + self.project(u - h * Z) - 2.0 * u) / h**2
            if richardson:
                h2 = 0.5 * h
                d2h = (self.project(u + h2 * Z) + self.project(u - h2 * Z)
                       - 2.0 * u) / h2**2
                d2 = (4.0 * d2h - d2) / 3.0
            return d2

        XY_same = X is Y or (np.shape(X) == np.shape(Y) and np.array_equal(X, Y))
        if XY_same:
            return diag(X)
        return 0.25 * (diag(X + Y) - diag(X - Y))


class SphereTarget(TargetManifold):
    """Unit sphere S^{q-1} in R^q with closed-form geometry."""

    def __init__(self, q: int = 4):
        if q < 4:
            raise ValueError("sphere target needs q >= 4 (dim N >= 3)")
        self.q = q
        self.n = q - 1
        self.tubular_radius = 1.0
        self.name = "sphere"

    def project(self, y: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(y, axis=-1)
        if np.any(r < 1e-8):
            raise ProjectionError("projection undefined near the sphere center")
        return y / r[..., None]

    def distance(self, y: np.ndarray) -> np.ndarray:
        return np.abs(np.linalg.norm(y, axis=-1) - 1.0)

    def tangent_projector(self, u: np.ndarray) -> np.ndarray:
        eye = np.eye(self.q)
        return eye - u[..., :, None] * u[..., None, :]

    def sff(self, u, X, Y):
        return -np.sum(X * Y, axis=-1)[..., None] * u

    def normal_frame(self, u: np.ndarray) -> np.ndarray:
        return u[..., None, :]

    def frame_jacobian(self, u: np.ndarray, step: float = 1e-5) -> np.ndarray:
        # d(y/|y|)^i/dy^j = delta_ij - u_i u_j on the sphere
        eye = np.eye(self.q)
        J = eye - u[..., :, None] * u[..., None, :]
        return J[..., None, :, :]  # (..., 1, q, q)


def tangent_project(target: TargetManifold, u: np.ndarray,
                    X: np.ndarray) -> np.ndarray:
    """P(u) X without forming the full projector when a closed form exists."""
    if isinstance(target, SphereTarget):
        return X - np.sum(X * u, axis=-1)[..., None] * u
    P = target.tangent_projector(u)
    return np.einsum("...ij,...j->...i", P, X)


def make_target(kind: str, q: int = 4) -> TargetManifold:
    if kind == "sphere":
        return SphereTarget(q=q)
    raise ValueError(f"unknown target kind {kind!r}")
