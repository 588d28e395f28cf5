"""Averaged slow-flow asymptotics: limit cycles and regular rotations.

Near the principal parametric resonance (omega close to 1/2) the
oscillation q(tau) = a*cos(tau/2 + psi) is governed by slow equations for
the amplitude and phase.  Averaging them yields a transcendental
frequency-response relation for the steady amplitude Q of the limit cycle;
its roots are found here by bracketed bisection and tagged stable or
unstable via the Jacobian of the averaged slow flow.

Regular rotations with integer relative velocity b are described by
averaged equations in the phase mismatch X1 = theta - b*tau and scaled
velocity X2.  Steady solutions exist above a closed-form frequency
threshold; the stable and unstable steady phases and the cos(X1) > 0
stability criterion are implemented for |b| = 1 and |b| = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DimensionlessParams

__all__ = [
    "PoleAtDenominator",
    "RotationNotPossible",
    "SlowState",
    "ResponsePoint",
    "RotationSteady",
    "slow_flow_rhs",
    "averaged_slow_flow",
    "response_residual",
    "response_curve",
    "rotation_exists",
    "rotation_steady",
    "rotation_is_stable",
    "averaged_rotation_rhs",
]


class PoleAtDenominator(ArithmeticError):
    """A denominator of the frequency-response relation vanished."""


class RotationNotPossible(ValueError):
    """Steady rotation requested outside its existence domain."""


@dataclass(frozen=True)
class SlowState:
    """Slow amplitude/phase of the resonant oscillation ansatz."""

    amplitude: float
    phase: float

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")


@dataclass(frozen=True)
class ResponsePoint:
    """One certified root of the frequency-response relation."""

    omega: float
    Q: float
    stable: bool


@dataclass(frozen=True)
class RotationSteady:
    """Steady phase mismatches of a regular rotation with velocity b."""

    b: int
    phase_stable: float
    phase_unstable: float
    exists: bool


def _perturbation(q: float, q_dot: float, tau: float,
                  params: DimensionlessParams) -> float:
    """Small right-hand side of the quasi-linear oscillation equation.

    eps*(phi'' + omega^2*phi)*q + omega^2*(q^3/6 - q^5/120) - beta*omega*q_dot
    with the cosine excitation, for which phi'' + omega^2*phi =
    (omega^2 - 1)*cos(tau).
    """
    w2 = params.omega ** 2
    return (params.epsilon * (w2 - 1.0) * math.cos(tau) * q
            + w2 * (q ** 3 / 6.0 - q ** 5 / 120.0)
            - params.beta * params.omega * q_dot)


def slow_flow_rhs(slow: SlowState, tau: float,
                  params: DimensionlessParams) -> tuple[float, float]:
    """Instantaneous slow equations (a', psi') on the resonant ansatz.

    Division by the amplitude appears in the phase equation, so a = 0 is
    rejected with ZeroDivisionError.
    """
    if slow.amplitude == 0.0:
        raise ZeroDivisionError("phase equation divides by the amplitude")
    arg = tau / 2.0 + slow.phase
    c = math.cos(arg)
    s = math.sin(arg)
    q = slow.amplitude * c
    q_dot = -slow.amplitude * params.omega * s
    f = _perturbation(q, q_dot, tau, params)
    a_dot = -s / params.omega * f
    psi_dot = params.omega - 0.5 - c / (slow.amplitude * params.omega) * f
    return a_dot, psi_dot


_AVG_GRID = 256  # trapezoid nodes over one 4*pi ansatz period (exact for
                 # the trigonometric-polynomial integrand)
_AVG_TAUS = np.linspace(0.0, 4.0 * math.pi, _AVG_GRID, endpoint=False)


def averaged_slow_flow(amplitude: float, phase: float,
                       params: DimensionlessParams) -> tuple[float, float]:
    """Time-average of the slow equations over the 4*pi ansatz period.

    Vectorized restatement of :func:`slow_flow_rhs`; the test suite pins
    the two against each other.
    """
    if amplitude == 0.0:
        raise ZeroDivisionError("phase equation divides by the amplitude")
    w2 = params.omega ** 2
    arg = _AVG_TAUS / 2.0 + phase
    c = np.cos(arg)
    s = np.sin(arg)
    q = amplitude * c
    q_dot = -amplitude * params.omega * s
    f = (params.epsilon * (w2 - 1.0) * np.cos(_AVG_TAUS) * q
         + w2 * (q ** 3 / 6.0 - q ** 5 / 120.0)
         - params.beta * params.omega * q_dot)
    a_dot = -s / params.omega * f
    psi_dot = params.omega - 0.5 - c / (amplitude * params.omega) * f
    return float(np.mean(a_dot)), float(np.mean(psi_dot))


def response_residual(Q: float, params: DimensionlessParams) -> float:
    """Residual of the transcendental frequency-response relation at Q.

    Returns LHS(Q, omega, beta) - eps**2; roots in Q > 0 are the steady
    limit-cycle amplitudes.  The three Q-polynomials are transcribed
    verbatim; no algebraic simplification is applied.
    """
    if Q < 0:
        raise ValueError("Q must be non-negative")
    w2 = params.omega ** 2
    q2 = Q * Q
    q4 = q2 * q2
    den1 = 1.0 - w2 * (1.0 - q2 / 12.0 + q4 / 384.0)
    den2 = 1.0 - w2 * (1.0 - q2 / 6.0 + q4 / 128.0)
    if abs(den1) < 1e-14 or abs(den2) < 1e-14:
        raise PoleAtDenominator(f"response relation has a pole at Q = {Q!r}")
    num2 = 0.5 - 2.0 * w2 * (1.0 - q2 / 8.0 + q4 / 192.0)
    lhs = (params.beta ** 2 * w2) / den1 ** 2 + num2 ** 2 / den2 ** 2
    return lhs - params.epsilon ** 2


_ROOT_GRID = 400


def _find_roots(params: DimensionlessParams) -> list[float]:
    """All roots of the response residual on (0, pi] via sign brackets."""
    qs = np.linspace(0.0, math.pi, _ROOT_GRID + 1)[1:]
    vals = np.empty(_ROOT_GRID)
    ok = np.ones(_ROOT_GRID, dtype=bool)
    for i, q in enumerate(qs):
        try:
            vals[i] = response_residual(float(q), params)
        except PoleAtDenominator:
            ok[i] = False
            vals[i] = np.nan
    roots = []
    for i in range(_ROOT_GRID - 1):
        if not (ok[i] and ok[i + 1]):
            continue
        if vals[i] == 0.0:
            roots.append(float(qs[i]))
            continue
        if vals[i] * vals[i + 1] < 0.0:
            lo, hi = float(qs[i]), float(qs[i + 1])
            flo = vals[i]
            while hi - lo > 1e-14:
                mid = 0.5 * (lo + hi)
                fmid = response_residual(mid, params)
                if fmid == 0.0:
                    lo = hi = mid
                    break
                if flo * fmid < 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fmid
            roots.append(0.5 * (lo + hi))
    if ok[-1] and vals[-1] == 0.0:
        roots.append(float(qs[-1]))
    # Certify: only keep numerically confirmed roots.
    return [r for r in roots if abs(response_residual(r, params)) < 1e-10]


def _steady_phase_seeds(params: DimensionlessParams) -> list[float]:
    """Candidate steady phases from the first-order averaged balance.

    The amplitude equation balances when sin(2*psi) equals
    2*beta*omega^2 / (eps*(1 - omega^2)); each admissible value yields two
    phase branches that differ in the sign of cos(2*psi).
    """
    if params.epsilon == 0.0:
        return []
    s2 = 2.0 * params.beta * params.omega ** 2 / (
        params.epsilon * (1.0 - params.omega ** 2))
    if abs(s2) > 1.0:
        return []
    base = math.asin(s2)
    return [base / 2.0, (math.pi - base) / 2.0]


def _steady_state_near(Q: float, params: DimensionlessParams):
    """Newton-refined steady state of the averaged flow close to Q."""
    best = None
    for psi0 in _steady_phase_seeds(params) or list(np.linspace(0.0, math.pi, 8,
                                                                endpoint=False)):
        a, psi = Q, psi0
        for _ in range(40):
            fa, fp = averaged_slow_flow(a, psi, params)
            if abs(fa) < 1e-13 and abs(fp) < 1e-13:
                break
            j = _flow_jacobian(a, psi, params)
            det = j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0]
            if abs(det) < 1e-16:
                break
            da = (-fa * j[1, 1] + fp * j[0, 1]) / det
            dp = (-fp * j[0, 0] + fa * j[1, 0]) / det
            a, psi = a + da, psi + dp
            if a <= 0 or not (math.isfinite(a) and math.isfinite(psi)):
                a = None
                break
        else:
            a = None
        if a is None:
            continue
        fa, fp = averaged_slow_flow(a, psi, params)
        if abs(fa) > 1e-11 or abs(fp) > 1e-11:
            continue
        if best is None or abs(a - Q) < abs(best[0] - Q):
            best = (a, psi)
    return best


def _flow_jacobian(a: float, psi: float, params: DimensionlessParams,
                   h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the averaged slow flow."""
    j = np.empty((2, 2))
    fa_p, fp_p = averaged_slow_flow(a + h, psi, params)
    fa_m, fp_m = averaged_slow_flow(a - h, psi, params)
    j[0, 0] = (fa_p - fa_m) / (2.0 * h)
    j[1, 0] = (fp_p - fp_m) / (2.0 * h)
    fa_p, fp_p = averaged_slow_flow(a, psi + h, params)
    fa_m, fp_m = averaged_slow_flow(a, psi - h, params)
    j[0, 1] = (fa_p - fa_m) / (2.0 * h)
    j[1, 1] = (fp_p - fp_m) / (2.0 * h)
    return j


def _residual_slope_positive(Q: float, params: DimensionlessParams) -> bool:
    h = 1e-7 * max(1.0, Q)
    return (response_residual(Q + h, params)
            - response_residual(Q - h, params)) > 0.0


def _root_is_stable(Q: float, params: DimensionlessParams) -> bool:
    """Classify a response root: stable iff attracting for the slow dynamics.

    Primary test: eigenvalues of the averaged-flow Jacobian at the steady
    state matching the root.  The averaged flow is first order, so its
    branch folds earlier than the response relation's; beyond that fold no
    matching steady state exists and the classical fold rule applies
    instead: the root is stable iff the residual increases through it.
    The two tests agree wherever both apply (pinned by the test suite).
    """
    steady = _steady_state_near(Q, params)
    if steady is not None and abs(steady[0] - Q) <= 0.25:
        a, psi = steady
        eig = np.linalg.eigvals(_flow_jacobian(a, psi, params))
        return bool(np.all(eig.real < 0.0))
    return _residual_slope_positive(Q, params)


def response_curve(omega_values, params: DimensionlessParams | tuple[float, float],
                   ) -> list[ResponsePoint]:
    """Certified response roots with stability tags over omega samples.

    `params` may be a DimensionlessParams (its omega is ignored per sample)
    or a bare (epsilon, beta) pair.  An empty result is a valid answer.
    """
    if isinstance(params, tuple):
        eps, beta = params
    else:
        eps, beta = params.epsilon, params.beta
    points = []
    for omega in np.asarray(omega_values, dtype=np.float64):
        if not 0.0 < omega < 1.0:
            raise ValueError("response curve is defined for omega in (0, 1)")
        local = DimensionlessParams(epsilon=eps, beta=beta, omega=float(omega))
        for root in _find_roots(local):
            points.append(ResponsePoint(omega=float(omega), Q=root,
                                        stable=_root_is_stable(root, local)))
    return points


def rotation_exists(b_abs: int, params: DimensionlessParams) -> bool:
    """Existence of steady rotations with relative velocity |b| in {1, 2}."""
    if b_abs not in (1, 2):
        raise ValueError("existence conditions cover |b| in {1, 2}")
    if params.epsilon == 0.0:
        return False
    if b_abs == 1:
        threshold = 2.0 * params.beta / (3.0 * params.epsilon)
    else:
        threshold = (8.0 * params.beta / (9.0 * params.epsilon ** 2)
                     / (1.0 + params.epsilon ** 2 / 27.0))
    return params.omega >= threshold


def _wrap(angle: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = -((-angle + math.pi) % (2.0 * math.pi) - math.pi)
    return wrapped


def rotation_steady(b: int, params: DimensionlessParams) -> RotationSteady:
    """Stable and unstable steady phase mismatches for a rotation b.

    Principal branch only; the 2*pi*k families are physically identical.
    Raises RotationNotPossible below the existence threshold.
    """
    if b not in (-2, -1, 1, 2):
        raise ValueError("steady rotations are predicted for b in {+-1, +-2}")
    if not rotation_exists(abs(b), params):
        raise RotationNotPossible(
            f"no steady rotation with |b| = {abs(b)} at eps = {params.epsilon}, "
            f"beta = {params.beta}, omega = {params.omega}")
    if abs(b) == 1:
        arg = 2.0 * params.beta / (3.0 * params.epsilon * params.omega)
        stable = -b * math.asin(arg)
        unstable = _wrap(math.pi + b * math.asin(arg))
    else:
        arg = (4.0 * b * params.beta / (9.0 * params.epsilon ** 2 * params.omega)
               / (1.0 + params.epsilon ** 2 / 27.0))
        stable = -math.asin(arg)
        unstable = _wrap(math.pi + math.asin(arg))
    return RotationSteady(b=b, phase_stable=_wrap(stable),
                          phase_unstable=unstable, exists=True)


def rotation_is_stable(phase: float) -> bool:
    """Asymptotic stability of a steady rotation phase: cos(X1) > 0."""
    return math.cos(phase) > 0.0


def averaged_rotation_rhs(b: int, X: tuple[float, float],
                          params: DimensionlessParams) -> tuple[float, float]:
    """Averaged phase-mismatch/velocity equations for |b| in {1, 2}."""
    x1, x2 = X
    eps, beta, omega = params.epsilon, params.beta, params.omega
    if abs(b) == 1:
        return (x2 - b,
                -1.5 * eps * omega ** 2 * math.sin(x1) - beta * omega * x2)
    if abs(b) == 2:
        dev = x2 - b / 2.0
        bracket = 1.0 - dev ** 2 + eps ** 2 / 27.0
        return (dev,
                -(9.0 / 16.0) * eps ** 2 * omega ** 2 * bracket * math.sin(x1)
                - 0.5 * beta * omega * x2)
    raise ValueError("averaged equations are available for |b| in {1, 2}")
