"""Pendulum with periodically varying length: analysis and diagnostics.

Analytical predictors (resonance tongues, limit-cycle frequency response,
regular-rotation existence and stability) together with the numerical
machinery that verifies them: Floquet multipliers, adaptive integration
with stroboscopic sampling, Lyapunov exponents, rotation numbers,
bifurcation sweeps, and basin-of-attraction scans.
"""

from .model import (DimensionlessParams, Excitation, PhysicalParams, QState,
                    State, eval_excitation, fourier_coeff, map_theta_q,
                    rhs_hill_linearized, rhs_q, rhs_theta, rhs_variational,
                    to_dimensionless, wrap_angle)
from .integrate import (DEFAULT_CONFIG, SCAN_CONFIG, IntegratorConfig,
                        StepSizeUnderflow, Trajectory, advance, integrate_ivp,
                        integrate_with_tangent, strobe)
from .floquet import (Monodromy, Tongue, first_tongue_interval,
                      halfcone_contains, is_stable, locate_boundary,
                      monodromy, stability_scan)

__version__ = "0.1.0"
