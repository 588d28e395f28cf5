"""Adaptive integration of the pendulum vector fields.

Thin Python layer over the compiled Dormand-Prince 5(4) core: embedded
error control, dense-output sampling (so stroboscopic sections never
restart the integration), and joint propagation of the tangent flow.
Independent integrations share nothing mutable and are safe to run from
any number of worker processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import DimensionlessParams, Excitation, State

__all__ = [
    "StepSizeUnderflow",
    "IntegratorConfig",
    "DEFAULT_CONFIG",
    "SCAN_CONFIG",
    "VectorField",
    "theta_field",
    "q_field",
    "hill_field",
    "theta_tangent_field",
    "averaged_rotation_field",
    "Trajectory",
    "integrate_ivp",
    "advance",
    "strobe",
    "integrate_with_tangent",
    "tangent_growth_per_period",
    "TWO_PI",
]

TWO_PI = 2.0 * math.pi


class StepSizeUnderflow(RuntimeError):
    """Raised when the controller would need steps below 1e-12 (singular or
    blown-up dynamics)."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Error-control settings for the embedded pair."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    max_step: float = math.pi / 4.0
    initial_step: float = 1e-2

    def __post_init__(self):
        if not 0.0 < self.rel_tol <= 1e-2:
            raise ValueError("rel_tol must lie in (0, 1e-2]")
        if not 0.0 < self.abs_tol <= 1e-2:
            raise ValueError("abs_tol must lie in (0, 1e-2]")
        if not 0.0 < self.max_step <= TWO_PI:
            raise ValueError("max_step must lie in (0, 2*pi]")
        if self.initial_step <= 0:
            raise ValueError("initial_step must be positive")


#: Tight tolerances for Floquet multipliers and response verification.
DEFAULT_CONFIG = IntegratorConfig()
#: Looser tolerances for large grid scans.
SCAN_CONFIG = IntegratorConfig(rel_tol=1e-8, abs_tol=1e-8)


@dataclass(frozen=True)
class VectorField:
    """A compiled right-hand side plus its parameters.

    Instances are also plain Python callables f(tau, y) evaluating the same
    expressions through :mod:`ppvl.model`, which keeps them usable with
    external integrators (the test suite exploits this for cross-checks).
    """

    kind: int
    dim: int
    epsilon: float
    beta: float
    omega: float
    cos_coeffs: tuple[float, ...]
    sin_coeffs: tuple[float, ...]
    aux: float = 0.0

    def _arrays(self):
        return (np.asarray(self.cos_coeffs, dtype=np.float64),
                np.asarray(self.sin_coeffs, dtype=np.float64))

    def __call__(self, tau: float, y) -> np.ndarray:
        ak, bk = self._arrays()
        dy = np.empty(self.dim, dtype=np.float64)
        _kernels.rhs_eval(self.kind, float(tau), np.asarray(y, dtype=np.float64),
                          dy, self.epsilon, self.beta, self.omega, ak, bk, self.aux)
        return dy


def _make_field(kind: int, dim: int, params: DimensionlessParams,
                excitation: Excitation, aux: float = 0.0) -> VectorField:
    return VectorField(kind, dim, params.epsilon, params.beta, params.omega,
                       tuple(excitation.cos_coeffs), tuple(excitation.sin_coeffs), aux)


def theta_field(params: DimensionlessParams, excitation: Excitation) -> VectorField:
    """Full nonlinear pendulum in (theta, theta_dot)."""
    return _make_field(_kernels.KIND_THETA, 2, params, excitation)


def q_field(params: DimensionlessParams, excitation: Excitation) -> VectorField:
    """Substituted q-form in (q, q_dot)."""
    return _make_field(_kernels.KIND_QFORM, 2, params, excitation)


def hill_field(params: DimensionlessParams, excitation: Excitation) -> VectorField:
    """Linearization about the hanging position in (q, q_dot)."""
    return _make_field(_kernels.KIND_HILL, 2, params, excitation)


def theta_tangent_field(params: DimensionlessParams, excitation: Excitation) -> VectorField:
    """Pendulum flow augmented with its tangent flow (4 components)."""
    return _make_field(_kernels.KIND_THETA_TAN, 4, params, excitation)


def averaged_rotation_field(b: int, params: DimensionlessParams) -> VectorField:
    """Autonomous averaged phase-mismatch/velocity system for |b| in {1, 2}."""
    if abs(b) == 1:
        kind = _kernels.KIND_AVG_ROT1
    elif abs(b) == 2:
        kind = _kernels.KIND_AVG_ROT2
    else:
        raise ValueError("averaged rotation equations exist for |b| in {1, 2}")
    return VectorField(kind, 2, params.epsilon, params.beta, params.omega,
                       (1.0,), (0.0,), float(b))


@dataclass(frozen=True)
class Trajectory:
    """Samples of an integration at caller-requested times."""

    taus: np.ndarray
    states: np.ndarray  # shape (len(taus), dim)

    def __post_init__(self):
        if len(self.taus) != len(self.states):
            raise ValueError("taus and states must have equal length")
        if len(self.taus) > 1 and not np.all(np.diff(self.taus) > 0):
            raise ValueError("sample times must be strictly increasing")


def _run_dense(field: VectorField, y0, tau0: float, tau_end: float,
               sample_taus, config: IntegratorConfig):
    ak, bk = field._arrays()
    y0 = np.asarray(y0, dtype=np.float64)
    if y0.shape != (field.dim,):
        raise ValueError(f"initial state must have shape ({field.dim},)")
    samples, y_final, status = _kernels.integrate_dense(
        field.kind, y0, float(tau0), float(tau_end),
        np.asarray(sample_taus, dtype=np.float64),
        config.rel_tol, config.abs_tol, config.max_step, config.initial_step,
        field.epsilon, field.beta, field.omega, ak, bk, field.aux)
    if status != _kernels.STATUS_OK:
        raise StepSizeUnderflow(
            f"required step below {_kernels.MIN_STEP:g} at tau ~ {tau_end:g}")
    return samples, y_final


def integrate_ivp(field: VectorField, state0, tau0: float, tau_end: float,
                  sample_taus, config: IntegratorConfig = DEFAULT_CONFIG) -> Trajectory:
    """Integrate field over [tau0, tau_end], sampling via dense output.

    sample_taus must be strictly increasing and lie within [tau0, tau_end].
    """
    sample_taus = np.asarray(sample_taus, dtype=np.float64)
    if sample_taus.size:
        if sample_taus[0] < tau0 - 1e-12 or sample_taus[-1] > tau_end + 1e-12:
            raise ValueError("sample times must lie within [tau0, tau_end]")
    if tau_end <= tau0:
        raise ValueError("tau_end must exceed tau0")
    samples, _ = _run_dense(field, state0, tau0, tau_end, sample_taus, config)
    return Trajectory(taus=sample_taus.copy(), states=samples)


def advance(field: VectorField, state0, tau0: float, tau_end: float,
            config: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Flow state0 from tau0 to tau_end, returning only the final state."""
    _, y_final = _run_dense(field, state0, tau0, tau_end,
                            np.empty(0, dtype=np.float64), config)
    return y_final


def strobe(field: VectorField, state0, tau0: float, n_periods: int,
           config: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """States at tau0 + 2*pi*n for n = 0..n_periods (n_periods + 1 samples)."""
    if n_periods < 1:
        raise ValueError("n_periods must be >= 1")
    taus = tau0 + TWO_PI * np.arange(n_periods + 1, dtype=np.float64)
    samples, _ = _run_dense(field, state0, tau0, taus[-1], taus, config)
    return samples


def integrate_with_tangent(params: DimensionlessParams, excitation: Excitation,
                           state0: State, delta0, tau_end: float,
                           config: IntegratorConfig = DEFAULT_CONFIG):
    """Propagate state and unit tangent jointly to tau_end.

    Returns (final State, final unit tangent, log of the tangent growth).
    """
    delta0 = np.asarray(delta0, dtype=np.float64)
    nrm0 = float(np.hypot(delta0[0], delta0[1]))
    if not math.isclose(nrm0, 1.0, rel_tol=1e-9):
        raise ValueError("delta0 must be a unit vector")
    field = theta_tangent_field(params, excitation)
    y0 = np.array([state0.theta, state0.theta_dot, delta0[0], delta0[1]])
    y = advance(field, y0, state0.tau, tau_end, config)
    growth = float(np.hypot(y[2], y[3]))
    tangent = np.array([y[2] / growth, y[3] / growth])
    final = State(theta=float(y[0]), theta_dot=float(y[1]), tau=float(tau_end))
    return final, tangent, math.log(growth)


def tangent_growth_per_period(params: DimensionlessParams, excitation: Excitation,
                              state0: State, delta0, n_periods: int,
                              config: IntegratorConfig = SCAN_CONFIG):
    """Per-period tangent log-growth factors with renormalization.

    The workhorse behind maximal-Lyapunov estimates: the tangent vector is
    renormalized after every excitation period and the log growth factors
    are returned together with the final augmented state.
    """
    ak, bk = excitation.coeff_arrays()
    y0 = np.array([state0.theta, state0.theta_dot], dtype=np.float64)
    delta0 = np.asarray(delta0, dtype=np.float64)
    y, logs, status = _kernels.benettin_tangent(
        y0, delta0, state0.tau, int(n_periods),
        config.rel_tol, config.abs_tol, config.max_step, config.initial_step,
        params.epsilon, params.beta, params.omega, ak, bk)
    if status != _kernels.STATUS_OK:
        raise StepSizeUnderflow("tangent propagation failed (step underflow)")
    return y, logs
