"""Numerical laboratory for the 1-D damped p-system and its diffusion-wave
asymptotics: self-similar profiles, the first-order corrected expansion, a
finite-difference solver for the full system, approximate Green kernels with
fitted comparison bounds, and decay-rate analysis of simulated trajectories.
"""

from .analysis import (DecayFit, NormSeries, WeightedNorm, compute_norms,
                       compute_V, compute_weighted_norm, fit_decay_exponent,
                       write_norms_csv)
from .config import (ConfigError, ExperimentConfig, config_from_dict,
                     default_config, load_config, snapshot_schedule,
                     validate_config)
from .correction import (CorrectionProfile, ExpansionProfile,
                         check_mass_compatibility, closed_form_correction,
                         eval_expansion, eval_g2_g3, eval_source,
                         quadratic_pressure_remainder, solve_correction,
                         source_decay_scan, write_correction_csv)
from .diffusion_wave import (DiffusionWaveProfile, SolverFailure, TailFit,
                             certify_tails, discrete_residual, eval_ubar,
                             eval_vbar, solve_diffusion_wave,
                             write_profile_csv)
from .euler import (Grid1D, InitialDataSpec, NumericalFailure, SolverConfig,
                    Trajectory, cfl_dt, constant_state_drift,
                    convergence_orders, integrate, load_snapshots,
                    make_initial_data, save_snapshots, step)
from .green import (DuhamelResult, KernelBoundFit, KernelContext,
                    check_GD_norms, duhamel_reconstruct, duhamel_schedule,
                    e_tilde, eval_G, eval_RG, fit_kernel_bound, kernel_E,
                    kernel_GD, theta_weight, validate_kernel_bound)
from .pressure import FarField, PressureLaw

__version__ = "0.1.0"
