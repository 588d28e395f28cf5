"""Equations of motion for the pendulum with periodically varying length.

A point mass slides along a weightless rod, the distance from the pivot
following a smooth 2*pi-periodic law l(t) = l0 + a*phi(Omega*t).  In the
dimensionless time tau = Omega*t the deviation angle theta obeys

    theta'' + (2*eps*phi'/(1 + eps*phi) + beta*omega) * theta'
            + omega**2 * sin(theta) / (1 + eps*phi) = 0

with eps = a/l0 the relative modulation amplitude, omega = Omega0/Omega the
frequency ratio (Omega0 = sqrt(g/l0)) and beta the scaled damping.  The
substitution theta = q / (1 + eps*phi) removes the velocity-proportional
modulation term and yields the q-form used for stability analysis of the
hanging position and for small-oscillation asymptotics.

This module holds the parameter records, the excitation (a finite Fourier
series with zero mean), the right-hand sides of the theta-form, q-form,
linearized and variational equations, and the theta <-> q map.  Everything
is a pure function of its arguments; the integrators and diagnostics build
on top.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

__all__ = [
    "PhysicalParams",
    "DimensionlessParams",
    "Excitation",
    "State",
    "QState",
    "eval_excitation",
    "fourier_coeff",
    "rhs_theta",
    "rhs_q",
    "rhs_hill_linearized",
    "rhs_variational",
    "to_dimensionless",
    "map_theta_q",
    "wrap_angle",
]

# Grid used both for the max|phi| invariant check and for quadrature of
# Fourier coefficients of black-box excitations (smooth periodic integrand,
# so the uniform rule is spectrally accurate).
_QUAD_POINTS = 4096


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional pendulum parameters (SI units)."""

    mass: float            # kg
    mean_length: float     # m
    amplitude: float       # m, length modulation amplitude
    drive_frequency: float # rad/s
    damping: float         # kg/s
    gravity: float = 9.81  # m/s^2

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.mean_length <= 0:
            raise ValueError("mean_length must be positive")
        if self.gravity <= 0:
            raise ValueError("gravity must be positive")
        if self.drive_frequency <= 0:
            raise ValueError("drive_frequency must be positive")
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if self.damping < 0:
            raise ValueError("damping must be non-negative")
        if self.amplitude >= self.mean_length:
            raise ValueError("amplitude must stay below mean_length (length stays positive)")


@dataclass(frozen=True)
class DimensionlessParams:
    """The (epsilon, beta, omega) triple governing the dimensionless dynamics."""

    epsilon: float  # relative modulation amplitude, 0 <= eps < 1
    beta: float     # scaled damping, >= 0
    omega: float    # natural-to-drive frequency ratio, > 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must satisfy 0 <= epsilon < 1")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.omega <= 0:
            raise ValueError("omega must be positive")


@dataclass(frozen=True)
class Excitation:
    """Zero-mean 2*pi-periodic length modulation as a finite Fourier series.

    phi(tau) = sum_k cos_coeffs[k-1]*cos(k*tau) + sin_coeffs[k-1]*sin(k*tau)

    There is no constant term, so the mean vanishes by construction.  The
    normalization max|phi| <= 1 keeps eps meaningful as the relative
    amplitude and guarantees 1 + eps*phi > 0 for eps < 1.
    """

    cos_coeffs: tuple[float, ...] = (1.0,)
    sin_coeffs: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if len(self.cos_coeffs) != len(self.sin_coeffs):
            raise ValueError("cos_coeffs and sin_coeffs must have equal length")
        if len(self.cos_coeffs) < 1:
            raise ValueError("at least one harmonic is required")
        tau = np.linspace(0.0, 2.0 * np.pi, _QUAD_POINTS, endpoint=False)
        phi, _, _ = eval_excitation(self, tau)
        if np.max(np.abs(phi)) > 1.0 + 1e-12:
            raise ValueError("excitation must satisfy max|phi| <= 1")

    @classmethod
    def cosine(cls) -> "Excitation":
        """The default modulation phi = cos(tau)."""
        return cls((1.0,), (0.0,))

    @property
    def order(self) -> int:
        return len(self.cos_coeffs)

    def coeff_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.asarray(self.cos_coeffs, dtype=np.float64),
                np.asarray(self.sin_coeffs, dtype=np.float64))


@dataclass(frozen=True)
class State:
    """Pendulum state: unwrapped angle, angular velocity, dimensionless time."""

    theta: float
    theta_dot: float
    tau: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.theta_dot)
                and math.isfinite(self.tau)):
            raise ValueError("state fields must be finite")


@dataclass(frozen=True)
class QState:
    """State of the substituted variable q = theta * (1 + eps*phi)."""

    q: float
    q_dot: float
    tau: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.q_dot)
                and math.isfinite(self.tau)):
            raise ValueError("state fields must be finite")


def eval_excitation(excitation: Excitation, tau):
    """Evaluate (phi, phi', phi'') of the Fourier series at tau.

    Accepts scalar or ndarray tau; exactly 2*pi-periodic since only
    cos(k*tau) and sin(k*tau) terms appear.
    """
    tau = np.asarray(tau, dtype=np.float64)
    phi = np.zeros_like(tau)
    phi_d = np.zeros_like(tau)
    phi_dd = np.zeros_like(tau)
    for idx, (ak, bk) in enumerate(zip(excitation.cos_coeffs, excitation.sin_coeffs)):
        k = idx + 1
        c = np.cos(k * tau)
        s = np.sin(k * tau)
        phi += ak * c + bk * s
        phi_d += k * (-ak * s + bk * c)
        phi_dd += (k * k) * (-ak * c - bk * s)
    if phi.ndim == 0:
        return float(phi), float(phi_d), float(phi_dd)
    return phi, phi_d, phi_dd


def fourier_coeff(excitation: Excitation | Callable[[np.ndarray], np.ndarray],
                  k: int) -> tuple[float, float]:
    """Cosine/sine Fourier coefficients (a_k, b_k) of the excitation.

    a_k = (1/pi) * int_0^{2pi} phi(tau) cos(k tau) dtau, likewise b_k with
    sin.  For a stored series this is a lookup; a black-box callable phi is
    integrated with the uniform trapezoid rule on a 2**12-point grid, which
    is spectrally accurate for smooth periodic integrands.
    """
    if k < 1:
        raise ValueError("harmonic index k must be >= 1")
    if isinstance(excitation, Excitation):
        if k <= excitation.order:
            return excitation.cos_coeffs[k - 1], excitation.sin_coeffs[k - 1]
        return 0.0, 0.0
    tau = np.linspace(0.0, 2.0 * np.pi, _QUAD_POINTS, endpoint=False)
    phi = np.asarray(excitation(tau), dtype=np.float64)
    a_k = 2.0 * np.mean(phi * np.cos(k * tau))
    b_k = 2.0 * np.mean(phi * np.sin(k * tau))
    return float(a_k), float(b_k)


def rhs_theta(state: State, params: DimensionlessParams,
              excitation: Excitation) -> tuple[float, float]:
    """Right-hand side (theta', theta'') of the theta-form equation."""
    phi, phi_d, _ = eval_excitation(excitation, state.tau)
    denom = 1.0 + params.epsilon * phi
    damping = 2.0 * params.epsilon * phi_d / denom + params.beta * params.omega
    acc = -damping * state.theta_dot - params.omega ** 2 * math.sin(state.theta) / denom
    return state.theta_dot, acc


def rhs_q(qstate: QState, params: DimensionlessParams,
          excitation: Excitation) -> tuple[float, float]:
    """Right-hand side (q', q'') of the substituted q-form equation."""
    phi, phi_d, phi_dd = eval_excitation(excitation, qstate.tau)
    denom = 1.0 + params.epsilon * phi
    bw = params.beta * params.omega
    acc = (-bw * qstate.q_dot
           + params.epsilon * (phi_dd + bw * phi_d) / denom * qstate.q
           - params.omega ** 2 * math.sin(qstate.q / denom))
    return qstate.q_dot, acc


def rhs_hill_linearized(q: float, q_dot: float, tau: float,
                        params: DimensionlessParams,
                        excitation: Excitation) -> tuple[float, float]:
    """Linearization of the q-form about q = 0 (exact ratio coefficient).

    This is the damped Hill-type equation whose Floquet multipliers decide
    stability of the hanging position.  The coefficient is kept as the
    exact ratio, not its first-order expansion in eps.
    """
    phi, phi_d, phi_dd = eval_excitation(excitation, tau)
    denom = 1.0 + params.epsilon * phi
    bw = params.beta * params.omega
    coeff = (params.omega ** 2 - params.epsilon * (phi_dd + bw * phi_d)) / denom
    return q_dot, -bw * q_dot - coeff * q


def rhs_variational(state: State, delta: tuple[float, float],
                    params: DimensionlessParams,
                    excitation: Excitation) -> tuple[float, float]:
    """Tangent flow (Jacobian action) of the theta-form along a trajectory.

    Drives Lyapunov-exponent accumulation and stability checks of locked
    rotations; about theta = 0 it coincides with the linearized q-form at
    eps-independent leading order.
    """
    d_theta, d_theta_dot = delta
    phi, phi_d, _ = eval_excitation(excitation, state.tau)
    denom = 1.0 + params.epsilon * phi
    damping = 2.0 * params.epsilon * phi_d / denom + params.beta * params.omega
    acc = -damping * d_theta_dot - params.omega ** 2 * math.cos(state.theta) / denom * d_theta
    return d_theta_dot, acc


def to_dimensionless(phys: PhysicalParams) -> DimensionlessParams:
    """Convert dimensional parameters to the governing (eps, beta, omega)."""
    omega0 = math.sqrt(phys.gravity / phys.mean_length)
    return DimensionlessParams(
        epsilon=phys.amplitude / phys.mean_length,
        beta=phys.damping / (phys.mass * omega0),
        omega=omega0 / phys.drive_frequency,
    )


def map_theta_q(value: float, direction: Literal["to_q", "to_theta"], tau: float,
                params: DimensionlessParams, excitation: Excitation) -> float:
    """Map an angle between the theta and q coordinates at time tau."""
    phi, _, _ = eval_excitation(excitation, tau)
    scale = 1.0 + params.epsilon * phi
    if direction == "to_q":
        return value * scale
    if direction == "to_theta":
        return value / scale
    raise ValueError(f"direction must be 'to_q' or 'to_theta', got {direction!r}")


def wrap_angle(theta):
    """Wrap an angle (scalar or array) to the interval (-pi, pi]."""
    wrapped = np.mod(-np.asarray(theta) + np.pi, 2.0 * np.pi)
    result = -(wrapped - np.pi)
    if np.ndim(theta) == 0:
        return float(result)
    return result
