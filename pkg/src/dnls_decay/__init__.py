"""Long-time behaviour of cubic derivative nonlinear Schroedinger equations.

Resonance coefficients, dissipation classification, the reduced profile
equation, a pseudospectral solver for the full equation and the tools to
fit and judge log-time decay rates.
"""
from .nonlinearity import (CubicNonlinearity, DegreeError, Monomial, NuPolynomial, ParseError,
                           compute_nu, evaluate, is_weakly_gauge_invariant, load_nonlinearity,
                           nu_quadrature_oracle, parse_nonlinearity)
from .classifier import (ConditionAError, DissipationClass, RealCubicPoly, Trichotomy,
                         check_condition_A, classify, classify_nu, integral_I_theta,
                         lifespan_bound)
from .profile import (FrequencyGrid, InitialProfile, ProfileDivergenceError, ProfileState,
                      closed_form_modulus, integrate_profile, l2_norm, predicted_exponent,
                      profile_trajectory)
from .analysis import (DecaySeries, FitReport, MatsumuraInstance, fit_decay_exponent,
                       matsumura_c2, verdict, verify_matsumura)
from .scenario import RunSummary, Scenario, emit_plotdata, run_scenario

__version__ = "0.1.0"
