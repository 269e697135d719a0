"""Fits of simulated data and closed-form coherence figures of merit."""

from .coherence import CoherenceSummary, coherence_summary, envelope_rate, g2_closed_form, isc_difference
from .fits import (
    DegenerateFitError,
    FitError,
    FitResult,
    InsufficientDataError,
    fit_exponential,
    fit_g2,
    g2_model,
    rabi_visibility,
)
from .lm import LMResult, levenberg_marquardt
