"""The action functional, the flow right-hand side, projected time stepping,
and the energy/dissipation ledger.

Discretization notes (the choices here are load-bearing):

* The ledger Dirichlet term uses forward differences,
  E = sum(|D+x u|^2 + |D+y u|^2) dx dy, whose exact gradient in the
  e^{2 lam}-weighted inner product is -laplace_beltrami(u).  Both the
  Dirichlet and B terms carry no conformal weight (conformal invariance).
* The B-field force in flow_rhs is the exact discrete gradient of the
  discrete pullback integral; it equals the Z-operator term
  Z(du(e1) ^ du(e2)) up to O(dx^2).  This makes the discrete flow an exact
  gradient flow of the ledger action, so the dissipation identity defect is
  pure O(dt) and the gradient-consistency check is exact up to O(eps^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import GridError
from .fields import (FieldBackground, delta_constants, pullback_integral,
                     tangential_grad_V)
from .grid import (SurfaceGrid, ball_mask, ball_sum_map, d0x, d0y, dpx, dpy,
                   frame_derivatives, grad_sq_density, hessian_sq_density,
                   l2_inner, l2_norm, laplace_beltrami)
from .targets import TargetManifold, tangent_project

__all__ = [
    "MapField", "FlowConfig", "FlowState", "EnergyTerms", "EnergyRecord",
    "EnergyLedger", "energies", "action_value", "local_energy", "flow_rhs",
    "gradient_consistency_check", "step", "run", "el_residual",
    "monotonicity_check", "delta_constants", "cfl_bound",
]

CONSTRAINT_TOL = 1e-9

LEDGER_COLUMNS = ["t", "E", "dirichlet", "B_term", "V_term", "S_tilde",
                  "kinetic", "cum_dissipation", "hess_diag",
                  "sup_local_energy", "dt"]


@dataclass
class MapField:
    """Map u: grid -> R^q constrained to the embedded target."""

    values: np.ndarray          # (nx, ny, q)
    target: TargetManifold

    def __post_init__(self):
        if self.values.ndim != 3 or self.values.shape[-1] != self.target.q:
            raise GridError(f"map values shape {self.values.shape} does not "
                            f"end in q={self.target.q}")

    def constraint_defect(self) -> float:
        return float(np.max(self.target.distance(self.values)))

    def check(self, tol: float = CONSTRAINT_TOL):
        self.target.check_on_manifold(self.values, tol)

    def copy(self) -> "MapField":
        return MapField(self.values.copy(), self.target)


# -- energies -------------------------------------------------------------------

@dataclass
class EnergyTerms:
    E: float            # int |du|^2 dvol (forward differences)
    dirichlet: float    # E / 2
    B_term: float
    V_term: float       # int tilde(V)(u) dvol
    S_tilde: float
    S_raw: float        # S_tilde - A1 * vol(M)


def dirichlet_energy(u: np.ndarray, grid: SurfaceGrid) -> float:
    """int |du|^2 dvol with forward differences; conformally invariant."""
    gx = dpx(u, grid)
    gy = dpy(u, grid)
    return float(np.sum(gx * gx + gy * gy) * (grid.dx * grid.dy))


def energies(u: MapField, grid: SurfaceGrid, fields: FieldBackground) -> EnergyTerms:
    vals = u.values
    E = dirichlet_energy(vals, grid)
    B_term = pullback_integral(vals, fields.b, grid)
    if fields.V.is_zero:
        V_term = 0.0
    else:
        V_term = float(np.sum(fields.V.shifted(vals) * grid.w))
    S = 0.5 * E + B_term + V_term
    return EnergyTerms(E=E, dirichlet=0.5 * E, B_term=B_term, V_term=V_term,
                       S_tilde=S, S_raw=S - fields.V.shift * grid.total_volume)


def action_value(vals: np.ndarray, grid: SurfaceGrid,
                 fields: FieldBackground) -> float:
    """Shifted action S_tilde; fast path used inside the stepper."""
    S = 0.5 * dirichlet_energy(vals, grid)
    if not fields.b.is_zero:
        S += pullback_integral(vals, fields.b, grid)
    if not fields.V.is_zero:
        S += float(np.sum(fields.V.shifted(vals) * grid.w))
    return S


def local_energy(u: MapField, grid: SurfaceGrid, x0, R: float) -> float:
    """int_{B_R(x0)} |du|^2 dmu (centered frame derivatives)."""
    mask = ball_mask(grid, x0, R)
    dens = grad_sq_density(u.values, grid)
    return float(np.sum(dens[mask] * grid.w[mask]))


def local_energy_map(u: MapField, grid: SurfaceGrid, R: float) -> np.ndarray:
    """Ball energy around every node at once (FFT convolution)."""
    dens = grad_sq_density(u.values, grid) * grid.w
    return ball_sum_map(dens, grid, R)


# -- flow right-hand side ---------------------------------------------------------

def _bfield_force(vals: np.ndarray, grid: SurfaceGrid, target: TargetManifold,
                  fields: FieldBackground) -> np.ndarray:
    """Exact w-metric gradient of the discrete B-term, tangentially projected.

    Coordinate gradient of sum_n (D0x u)^T b(u) (D0y u):
        g^k = d_k b_ij ux^i uy^j - D0x(b_kj uy^j) - D0y(ux^i b_ik)
    which converges to Omega_kij ux^i uy^j; the force in the flow is
    e^{-2 lam} P(u) g = Z(du(e1) ^ du(e2)) + O(dx^2).
    """
    b = fields.b
    ux = d0x(vals, grid)
    uy = d0y(vals, grid)
    bu = b.coeff(vals)
    g = np.einsum("...kij,...i,...j->...k", b.dcoeff(vals), ux, uy)
    g -= d0x(np.einsum("...kj,...j->...k", bu, uy), grid)
    g -= d0y(np.einsum("...ik,...i->...k", bu, ux), grid)
    g *= grid.em2l[..., None]
    return tangent_project(target, vals, g)


def flow_rhs(u: MapField, grid: SurfaceGrid, target: TargetManifold,
             fields: FieldBackground) -> np.ndarray:
    """Delta_h u - II(du, du) - Z(du(e1) ^ du(e2)) - P grad V(u).

    The result need not be pointwise tangent: the normal part of Delta_h u
    balances the II term up to truncation error.
    """
    vals = u.values
    rhs = laplace_beltrami(vals, grid)
    du1, du2 = frame_derivatives(vals, grid)
    rhs -= target.sff(vals, du1, du1) + target.sff(vals, du2, du2)
    if not fields.b.is_zero:
        rhs -= _bfield_force(vals, grid, target, fields)
    if not fields.V.is_zero:
        rhs -= tangential_grad_V(vals, fields.V, target)
    return rhs


def el_residual(u: MapField, grid: SurfaceGrid, target: TargetManifold,
                fields: FieldBackground):
    """Euler-Lagrange residual field with its L2 and Linf norms."""
    r = flow_rhs(u, grid, target, fields)
    return r, l2_norm(r, grid), float(np.max(np.abs(r)))


def gradient_consistency_check(u: MapField, v: np.ndarray, grid: SurfaceGrid,
                               target: TargetManifold, fields: FieldBackground,
                               eps_list=(1e-3, 1e-4, 1e-5)) -> dict:
    """Compare central differences of the discrete action against the flow RHS.

    D(eps) = [S(pi(u + eps v)) - S(pi(u - eps v))] / (2 eps) is matched
    against -<flow_rhs(u), v> for tangent v.
    """
    v = tangent_project(target, u.values, v)
    inner = -l2_inner(flow_rhs(u, grid, target, fields), v, grid)
    rows = []
    for eps in eps_list:
        up = target.project(u.values + eps * v)
        um = target.project(u.values - eps * v)
        fd = (action_value(up, grid, fields) - action_value(um, grid, fields)) / (2 * eps)
        rel = abs(fd - inner) / max(abs(inner), 1e-300)
        rows.append({"eps": eps, "fd": fd, "inner": inner, "rel_err": rel})
    return {"rows": rows, "min_rel_err": min(r["rel_err"] for r in rows),
            "inner": inner}


# -- ledger ------------------------------------------------------------------------

@dataclass
class EnergyRecord:
    t: float
    E: float
    dirichlet: float
    B_term: float
    V_term: float
    S_tilde: float
    kinetic: float
    cum_dissipation: float
    hess_diag: float
    sup_local_energy: float
    dt: float

    def row(self):
        return [getattr(self, c) for c in LEDGER_COLUMNS]


@dataclass
class EnergyLedger:
    records: list = dc_field(default_factory=list)

    def append(self, rec: EnergyRecord):
        if self.records and rec.t <= self.records[-1].t:
            raise GridError("ledger timestamps must be strictly increasing")
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def as_array(self) -> np.ndarray:
        return np.array([r.row() for r in self.records])


def monotonicity_check(ledger: EnergyLedger, delta2: float, S0: float,
                       identity_tol: float | None = None) -> dict:
    """E(u_t) <= delta2 * S0 at every record, plus the dissipation identity."""
    E = ledger.column("E")
    S = ledger.column("S_tilde")
    diss = ledger.column("cum_dissipation")
    bound = delta2 * S0 * (1.0 + 1e-9)
    violations = E - bound
    defect = abs(S[-1] + diss[-1] - S0)
    steps_ok = bool(np.all(np.diff(S) <= 1e-10 * (1.0 + S0)))
    report = {
        "energy_bound_ok": bool(np.all(violations <= 0.0)),
        "max_energy_excess": float(np.max(violations)),
        "monotone_ok": steps_ok,
        "identity_defect": float(defect),
        "delta2": delta2,
        "S0": S0,
    }
    if identity_tol is not None:
        report["identity_ok"] = bool(defect <= identity_tol)
    return report


# -- time stepping -----------------------------------------------------------------

def cfl_bound(grid: SurfaceGrid, cfl: float) -> float:
    return cfl * min(grid.dx, grid.dy) ** 2 * math.exp(2.0 * float(np.min(grid.lam))) / 4.0


@dataclass
class FlowConfig:
    t_end: float = 1.0
    cfl: float = 0.2
    dt_init: float | None = None    # defaults to the CFL bound
    dt_min: float = 1e-9
    delta1: float = 0.5
    ball_radius: float = 0.5
    conv_tol: float = 0.0           # 0 disables the convergence probe
    record_every: int = 10
    tol_up: float = 1e-10           # relative slack for per-step S increase
    grow_after: int = 50            # stable steps before dt growth
    monitor: bool = False           # concentration scan at record times
    snapshot_cap: int = 32          # dyadic ring size

    def validate(self, grid: SurfaceGrid):
        if not (0.0 < self.cfl <= 1.0):
            raise GridError(f"cfl must be in (0, 1], got {self.cfl}")
        bound = cfl_bound(grid, self.cfl)
        if self.dt_init is not None and self.dt_init > bound * (1 + 1e-12):
            raise GridError(f"dt_init {self.dt_init} exceeds CFL bound {bound}")
        dt0 = self.dt_init if self.dt_init is not None else bound
        if self.dt_min >= dt0:
            raise GridError("dt_min must be smaller than the initial dt")
        if not (0.0 < self.ball_radius < grid.inj_radius):
            raise GridError(f"ball_radius {self.ball_radius} outside "
                            f"(0, {grid.inj_radius})")


@dataclass
class FlowState:
    t: float
    u: MapField
    dt: float
    grid: SurfaceGrid
    target: TargetManifold
    fields: FieldBackground
    config: FlowConfig
    ledger: EnergyLedger = dc_field(default_factory=EnergyLedger)
    events: list = dc_field(default_factory=list)
    snapshots: list = dc_field(default_factory=list)   # (t, values) ring
    steps: int = 0
    stable_steps: int = 0
    cum_dissipation: float = 0.0
    last_kinetic: float = 0.0
    S_current: float = 0.0
    S0: float = 0.0
    converged: bool = False


def init_state(u0: MapField, grid: SurfaceGrid, target: TargetManifold,
               fields: FieldBackground, config: FlowConfig) -> FlowState:
    config.validate(grid)
    u = MapField(target.project(u0.values), target)
    S0 = action_value(u.values, grid, fields)
    dt = config.dt_init if config.dt_init is not None else cfl_bound(grid, config.cfl)
    state = FlowState(t=0.0, u=u, dt=dt, grid=grid, target=target,
                      fields=fields, config=config, S_current=S0, S0=S0)
    _record(state)
    _snapshot(state)
    return state


def _record(state: FlowState):
    terms = energies(state.u, state.grid, state.fields)
    sup_loc = float(np.max(local_energy_map(state.u, state.grid,
                                            state.config.ball_radius)))
    hd = float(np.sum(hessian_sq_density(state.u.values, state.grid) * state.grid.w))
    state.ledger.append(EnergyRecord(
        t=state.t, E=terms.E, dirichlet=terms.dirichlet, B_term=terms.B_term,
        V_term=terms.V_term, S_tilde=terms.S_tilde, kinetic=state.last_kinetic,
        cum_dissipation=state.cum_dissipation, hess_diag=hd,
        sup_local_energy=sup_loc, dt=state.dt))


def _snapshot(state: FlowState):
    state.snapshots.append((state.t, state.u.values.copy()))
    cap = state.config.snapshot_cap
    if len(state.snapshots) > 2 * cap:
        # dyadic thinning: keep the newest cap entries, halve the older ones
        old = state.snapshots[:-cap]
        state.snapshots = old[::2] + state.snapshots[-cap:]


def step(state: FlowState) -> FlowState:
    """One projected explicit Euler step with adaptive dt.

    Halves dt (and retries) when S_tilde increases beyond tolerance; grows dt
    1.1x after `grow_after` stable steps, capped by the CFL bound.  A dt
    collapse below dt_min raises a stiffness event and the step is accepted,
    matching the restart-past-singular-time semantics.
    """
    cfg = state.config
    vals = state.u.values
    rhs = flow_rhs(state.u, state.grid, state.target, state.fields)
    tol_up = cfg.tol_up * (1.0 + state.S0)
    dt = state.dt
    collapsed = False
    while True:
        new_vals = state.target.project(vals + dt * rhs)
        S_new = action_value(new_vals, state.grid, state.fields)
        if S_new <= state.S_current + tol_up:
            break
        dt *= 0.5
        if dt < cfg.dt_min:
            collapsed = True
            dt = cfg.dt_min
            new_vals = state.target.project(vals + dt * rhs)
            S_new = action_value(new_vals, state.grid, state.fields)
            break

    diff = new_vals - vals
    kinetic = l2_inner(diff, diff, state.grid) / dt**2
    state.cum_dissipation += kinetic * dt
    state.last_kinetic = kinetic
    state.u = MapField(new_vals, state.target)
    state.t += dt
    state.S_current = S_new
    state.steps += 1

    if collapsed:
        from .singular import SingularEvent  # avoid a module cycle
        dens = grad_sq_density(new_vals, state.grid) * state.grid.w
        ix, iy = np.unravel_index(int(np.argmax(
            ball_sum_map(dens, state.grid, cfg.ball_radius))), dens.shape)
        le = local_energy(state.u, state.grid, (ix, iy), cfg.ball_radius)
        kind = "concentration" if le >= cfg.delta1 else "stiffness"
        state.events.append(SingularEvent(t=state.t, ix=int(ix), iy=int(iy),
                                          R=cfg.ball_radius, local_energy=le,
                                          kind=kind))
        state.stable_steps = 0
        state.dt = dt
        return state

    if dt < state.dt:
        state.stable_steps = 0
        state.dt = dt
    else:
        state.stable_steps += 1
        if state.stable_steps >= cfg.grow_after:
            state.dt = min(state.dt * 1.1, cfl_bound(state.grid, cfg.cfl))
            state.stable_steps = 0
    return state


def run(u0: MapField, grid: SurfaceGrid, target: TargetManifold,
        fields: FieldBackground, config: FlowConfig) -> FlowState:
    """Advance the flow to t_end (or convergence).  Deterministic."""
    from .singular import convergence_probe

    state = init_state(u0, grid, target, fields, config)
    while state.t < config.t_end - 1e-15 and not state.converged:
        step(state)
        if state.steps % config.record_every == 0 or state.t >= config.t_end - 1e-15:
            _record(state)
            _snapshot(state)
            if config.conv_tol > 0.0:
                _, res_l2, _ = el_residual(state.u, grid, target, fields)
                probe = convergence_probe(state.last_kinetic, res_l2,
                                          config.conv_tol)
                state.converged = probe["converged"]
    if state.ledger.records[-1].t < state.t:
        _record(state)
        _snapshot(state)
    return state
