"""Geometric heat flow on a flat conformal torus: Dirichlet energy plus a
two-form pullback and a scalar potential, with monotonicity, concentration,
and rewriting diagnostics."""

from .action import (CONSTRAINT_TOL, LEDGER_COLUMNS, EnergyLedger,
                     EnergyRecord, EnergyTerms, FlowConfig, FlowState,
                     MapField, action_value, cfl_bound, dirichlet_energy,
                     el_residual, energies, flow_rhs,
                     gradient_consistency_check, init_state, local_energy,
                     local_energy_map, monotonicity_check, run, step)
from .cli import compare_runs, main, run_scenario
from .config import (PRESETS, build_objects, default_config, load_config,
                     preset_config, save_config, validate_config)
from .errors import (ConfigError, GridError, HypothesisError,
                     OffManifoldError, ProjectionError, ShapeError,
                     SnapshotError, StringFlowError, TangencyError,
                     UnsupportedConfigurationError)
from .fields import (FieldBackground, ScalarPotential, SupNorms, TwoFormField,
                     delta_constants, make_potential, make_two_form,
                     pullback_integral, smallness_report, sup_norms,
                     tangential_grad_V, z_operator, zero_background,
                     zero_potential, zero_two_form)
from .grid import (SurfaceGrid, ball_mask, ball_sum_map, build_grid,
                   conformal_rescale, grad_sq_density, hessian_sq_density,
                   l2_inner, l2_norm, laplace_beltrami, ricci_identity_check)
from .initial_data import (bump_map, constant_map, geodesic_wrap, noisy_wrap,
                           random_smooth_map, small_energy_map)
from .io import (export_csv, export_snapshot, read_events_jsonl,
                 read_ledger_csv, read_snapshot, write_events_jsonl,
                 write_ledger_csv, write_run_outputs, write_snapshot)
from .singular import (ConcentrationMonitor, SingularEvent, choose_R1_T1,
                       concentration_scan, convergence_probe, k_bound,
                       ladyzhenskaya_ratio, parabolic_rescale,
                       rescale_out_grid)
from .structure import (AntisymmetricPotential, assemble_A, bochner_density,
                        gap_check, rewrite_residual, scalar_curvature,
                        triviality_condition, w2_43_seminorm)
from .targets import SphereTarget, TargetManifold, make_target, tangent_project

__version__ = "0.1.0"
