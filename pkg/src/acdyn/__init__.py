"""Active cyber defence contagion models (A-SIS, A-SIR)."""

from .analysis import (
    Regime,
    admissible_R,
    asir_i_of_sa,
    asir_peak,
    certify_endemic,
    certify_ife,
    classify,
    jacobian,
    limiting_infected,
    lyapunov_endemic,
    lyapunov_ife,
    nullcline_a,
    nullcline_r_inverse,
    spectral,
)
from .integrator import IntegrationOptions, Trajectory, integrate, track_peak
from .investment import InvestmentProblem, build_family, eradication_check, foc_residual, solve
from .models import (
    AsirParams,
    AsirState,
    AsisParams,
    AsisState,
    SisParams,
    asir_field,
    asis_field,
    sis_field,
)
from .stochastic import PopulationConfig, simulate_ctmc, summarize

__version__ = "0.1.0"
