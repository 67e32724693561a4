"""gbpinch: multiphase-field simulation of grain-boundary-assisted rod pinch-off.

A finite-difference solver for curvature-driven, volume-preserving evolution
of a precipitate rod spanning a three-grain matrix, coupling pairwise
phase-field relaxation to chemical-potential diffusion with grain-boundary
and inter-phase transport, plus the analysis stack for fragmentation
topology, termination geometry and coarsening kinetics.
"""

from .fields import GridSpec, simplex_project, active_set, grad, laplacian, divergence
from .thermo import PhaseThermo, calibrate
from .energetics import InterfaceParams, make_interface_params
from .transport import DiffusivitySet, make_diffusivities, mobility, mu_step
from .evolution import Model, RunSchedule, Stepper, build_tau, tau_phase, phase_step, run
from .domain import RodGeometry, build_domain, profile_1d, grid_for_rod
from .config import RunConfig, default_config, load_config

__version__ = "0.1.0"
