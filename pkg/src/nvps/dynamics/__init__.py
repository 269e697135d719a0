"""Time evolution of the level model and of the coherently driven two-level transition."""

from .bloch import (
    BlochTrajectory,
    IntegrationError,
    TwoLevelParams,
    bloch_integrate,
    excitation_spectrum,
    g2_numeric,
    spectrum_fwhm,
    steady_state_excited,
)
from .kmc import Event, EventList, sample_jump_trajectory, simulate_shots
from .master import PopulationTrajectory, integrate_master, steady_state
from .rates import compile_sequence, rate_matrix
