"""Weak trajectories of semiclassical wavepackets in a 2D time-dependent
linear oscillator: exact Gaussian propagation, weak position measurements,
Bohmian average trajectories, and a grid-based brute-force cross-check."""

from .classical import (PotentialParams, TrajectoryRecord, ErmakovSolution,
                        make_grid, integrate_trajectory, ermakov_solve,
                        calibrate_return_time, default_potential)
from .gaussians import (ComplexGaussian, isotropic_gaussian, evaluate,
                        overlap, moment_r, normalize, norm_squared)
from .propagation import (Branch, Superposition, propagate_forward,
                          propagate_superposition, backward_postselected,
                          evaluate_superposition)
from .weak import (Meter, WeakValueSample, WeakTrajectory, PointerReadout,
                   interaction_time, weak_value_position, weak_trajectory,
                   weak_value_expansion_check, pointer_readout, simulate_shots,
                   sequence_amplitude)
from .bohmian import (AverageTrajectory, velocity, weak_momentum_value,
                      integrate_average_trajectory, fig2b_family,
                      dwell_sequence)
from .oracle import (Mesh, GridState, sample_gaussian, grid_propagate,
                     coupled_meter_simulate, mesh_for_branches)
from .scenarios import (ScenarioConfig, parse_config, load_config,
                        bundled_scenarios, bundled_config_text, run)
from .validation import run_acceptance, run_check, format_report

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
