"""Compiled numerical core: Dormand-Prince 5(4) with dense output.

All hot loops live here as numba kernels so that parameter sweeps and basin
scans run at compiled speed.  The right-hand sides are selected by an
integer kind tag; the Python-level mirrors in :mod:`ppvl.model` are the
readable reference implementations and the two are cross-checked in the
test suite.

State layouts per kind:
  THETA      [theta, theta_dot]                    full nonlinear pendulum
  QFORM      [q, q_dot]                            substituted variable
  HILL       [q, q_dot]                            linearized about q = 0
  THETA_TAN  [theta, theta_dot, dtheta, dtheta_d]  flow + tangent flow
  AVG_ROT1   [X1, X2]                              averaged rotation, |b| = 1
  AVG_ROT2   [X1, X2]                              averaged rotation, |b| = 2
"""

import numpy as np
from numba import njit

KIND_THETA = 0
KIND_QFORM = 1
KIND_HILL = 2
KIND_THETA_TAN = 3
KIND_AVG_ROT1 = 4
KIND_AVG_ROT2 = 5

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1

# Smallest step before the integration is declared singular.
MIN_STEP = 1e-12

# Dormand-Prince 5(4) tableau.
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# Difference between the 5th-order weights and the embedded 4th-order weights.
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)
# Dense-output weights of the 4th-order continuous extension.
_D1 = -12715105075.0 / 11282082432.0
_D3 = 87487479700.0 / 32700410799.0
_D4 = -10690763975.0 / 1880347072.0
_D5 = 701980252875.0 / 199316789632.0
_D6 = -1453857185.0 / 822651844.0
_D7 = 69997945.0 / 29380423.0


@njit(cache=True)
def excitation_eval(ak, bk, tau):
    """phi, phi', phi'' of the Fourier series at scalar tau."""
    phi = 0.0
    phi_d = 0.0
    phi_dd = 0.0
    for idx in range(ak.shape[0]):
        k = idx + 1
        c = np.cos(k * tau)
        s = np.sin(k * tau)
        phi += ak[idx] * c + bk[idx] * s
        phi_d += k * (-ak[idx] * s + bk[idx] * c)
        phi_dd += k * k * (-ak[idx] * c - bk[idx] * s)
    return phi, phi_d, phi_dd


@njit(cache=True)
def rhs_eval(kind, tau, y, dy, eps, beta, omega, ak, bk, aux):
    """Evaluate the selected right-hand side into dy."""
    if kind == KIND_THETA or kind == KIND_THETA_TAN:
        phi, phi_d, _ = excitation_eval(ak, bk, tau)
        denom = 1.0 + eps * phi
        damping = 2.0 * eps * phi_d / denom + beta * omega
        dy[0] = y[1]
        dy[1] = -damping * y[1] - omega * omega * np.sin(y[0]) / denom
        if kind == KIND_THETA_TAN:
            dy[2] = y[3]
            dy[3] = -damping * y[3] - omega * omega * np.cos(y[0]) / denom * y[2]
    elif kind == KIND_QFORM:
        phi, phi_d, phi_dd = excitation_eval(ak, bk, tau)
        denom = 1.0 + eps * phi
        bw = beta * omega
        dy[0] = y[1]
        dy[1] = (-bw * y[1] + eps * (phi_dd + bw * phi_d) / denom * y[0]
                 - omega * omega * np.sin(y[0] / denom))
    elif kind == KIND_HILL:
        phi, phi_d, phi_dd = excitation_eval(ak, bk, tau)
        denom = 1.0 + eps * phi
        bw = beta * omega
        coeff = (omega * omega - eps * (phi_dd + bw * phi_d)) / denom
        dy[0] = y[1]
        dy[1] = -bw * y[1] - coeff * y[0]
    elif kind == KIND_AVG_ROT1:
        b = aux
        dy[0] = y[1] - b
        dy[1] = -1.5 * eps * omega * omega * np.sin(y[0]) - beta * omega * y[1]
    else:  # KIND_AVG_ROT2
        b = aux
        half_b = 0.5 * b
        dev = y[1] - half_b
        bracket = 1.0 - dev * dev + eps * eps / 27.0
        dy[0] = dev
        dy[1] = (-(9.0 / 16.0) * eps * eps * omega * omega * bracket * np.sin(y[0])
                 - 0.5 * beta * omega * y[1])


@njit(cache=True)
def _dense_eval(theta, h, y0, y1, k1, k3, k4, k5, k6, k7, out):
    """4th-order continuous extension of an accepted step at fraction theta."""
    for i in range(y0.shape[0]):
        rc2 = y1[i] - y0[i]
        rc3 = h * k1[i] - rc2
        rc4 = rc2 - h * k7[i] - rc3
        rc5 = h * (_D1 * k1[i] + _D3 * k3[i] + _D4 * k4[i] + _D5 * k5[i]
                   + _D6 * k6[i] + _D7 * k7[i])
        out[i] = y0[i] + theta * (rc2 + (1.0 - theta)
                                  * (rc3 + theta * (rc4 + (1.0 - theta) * rc5)))


@njit(cache=True)
def integrate_dense(kind, y0, tau0, tau_end, sample_taus, rtol, atol, max_step,
                    initial_step, eps, beta, omega, ak, bk, aux):
    """Adaptive DP54 run over [tau0, tau_end] with dense-output sampling.

    sample_taus must be non-decreasing and lie within [tau0, tau_end].
    Returns (samples, y_final, status); on step-size underflow the samples
    collected so far are valid and status flags the failure.
    """
    n = y0.shape[0]
    nsamp = sample_taus.shape[0]
    samples = np.empty((nsamp, n), dtype=np.float64)
    status = STATUS_OK

    y = y0.copy()
    ynew = np.empty(n, dtype=np.float64)
    yerr = np.empty(n, dtype=np.float64)
    ystage = np.empty(n, dtype=np.float64)
    k1 = np.empty(n, dtype=np.float64)
    k2 = np.empty(n, dtype=np.float64)
    k3 = np.empty(n, dtype=np.float64)
    k4 = np.empty(n, dtype=np.float64)
    k5 = np.empty(n, dtype=np.float64)
    k6 = np.empty(n, dtype=np.float64)
    k7 = np.empty(n, dtype=np.float64)

    t = tau0
    isamp = 0
    while isamp < nsamp and sample_taus[isamp] <= tau0:
        for i in range(n):
            samples[isamp, i] = y[i]
        isamp += 1

    if tau_end <= tau0:
        for j in range(isamp, nsamp):
            for i in range(n):
                samples[j, i] = y[i]
        return samples, y, status

    h = initial_step
    if h > max_step:
        h = max_step
    if h > tau_end - tau0:
        h = tau_end - tau0

    rhs_eval(kind, t, y, k1, eps, beta, omega, ak, bk, aux)

    while t < tau_end:
        if h < MIN_STEP:
            status = STATUS_STEP_UNDERFLOW
            break
        last = False
        if t + h >= tau_end:
            h = tau_end - t
            last = True

        # Stages 2..7 (k1 is fresh from FSAL or the initial evaluation).
        for i in range(n):
            ystage[i] = y[i] + h * _A21 * k1[i]
        rhs_eval(kind, t + _C2 * h, ystage, k2, eps, beta, omega, ak, bk, aux)
        for i in range(n):
            ystage[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        rhs_eval(kind, t + _C3 * h, ystage, k3, eps, beta, omega, ak, bk, aux)
        for i in range(n):
            ystage[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        rhs_eval(kind, t + _C4 * h, ystage, k4, eps, beta, omega, ak, bk, aux)
        for i in range(n):
            ystage[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i]
                                    + _A54 * k4[i])
        rhs_eval(kind, t + _C5 * h, ystage, k5, eps, beta, omega, ak, bk, aux)
        for i in range(n):
            ystage[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                    + _A64 * k4[i] + _A65 * k5[i])
        rhs_eval(kind, t + h, ystage, k6, eps, beta, omega, ak, bk, aux)
        for i in range(n):
            ynew[i] = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                  + _B5 * k5[i] + _B6 * k6[i])
        rhs_eval(kind, t + h, ynew, k7, eps, beta, omega, ak, bk, aux)

        # Scaled error norm of the embedded 4th-order estimate.
        err = 0.0
        for i in range(n):
            yerr[i] = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i]
                           + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
            ya = abs(y[i])
            yb = abs(ynew[i])
            sc = atol + rtol * (ya if ya > yb else yb)
            r = yerr[i] / sc
            err += r * r
        err = np.sqrt(err / n)

        if not np.isfinite(err):
            status = STATUS_STEP_UNDERFLOW
            break

        if err <= 1.0:
            tnew = t + h
            # Emit dense samples falling inside the accepted step.
            while isamp < nsamp and sample_taus[isamp] <= tnew:
                frac = (sample_taus[isamp] - t) / h
                if frac >= 1.0:
                    for i in range(n):
                        samples[isamp, i] = ynew[i]
                else:
                    _dense_eval(frac, h, y, ynew, k1, k3, k4, k5, k6, k7, ystage)
                    for i in range(n):
                        samples[isamp, i] = ystage[i]
                isamp += 1
            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]  # FSAL
            t = tnew
            if last:
                break
            # Step-size growth, capped.
            if err == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * err ** -0.2
                if fac > 5.0:
                    fac = 5.0
                elif fac < 0.2:
                    fac = 0.2
            h *= fac
            if h > max_step:
                h = max_step
        else:
            fac = 0.9 * err ** -0.2
            if fac < 0.1:
                fac = 0.1
            h *= fac

    if status == STATUS_OK:
        # Flush samples that coincide with tau_end within roundoff.
        while isamp < nsamp:
            for i in range(n):
                samples[isamp, i] = y[i]
            isamp += 1
    else:
        for j in range(isamp, nsamp):
            for i in range(n):
                samples[j, i] = np.nan
    return samples, y, status


@njit(cache=True)
def advance(kind, y0, tau0, tau_end, rtol, atol, max_step, initial_step,
            eps, beta, omega, ak, bk, aux):
    """Flow from tau0 to tau_end without intermediate sampling."""
    empty = np.empty(0, dtype=np.float64)
    _, y, status = integrate_dense(kind, y0, tau0, tau_end, empty, rtol, atol,
                                   max_step, initial_step, eps, beta, omega,
                                   ak, bk, aux)
    return y, status


@njit(cache=True)
def benettin_tangent(y0, delta0, tau0, n_periods, rtol, atol, max_step,
                     initial_step, eps, beta, omega, ak, bk):
    """Tangent-flow growth per excitation period with renormalization.

    Propagates the augmented theta system over n_periods windows of 2*pi,
    renormalizing the tangent after each and recording log growth factors.
    Returns (final_state4, log_growths, status).
    """
    two_pi = 2.0 * np.pi
    y = np.empty(4, dtype=np.float64)
    y[0] = y0[0]
    y[1] = y0[1]
    nrm0 = np.sqrt(delta0[0] ** 2 + delta0[1] ** 2)
    y[2] = delta0[0] / nrm0
    y[3] = delta0[1] / nrm0
    logs = np.zeros(n_periods, dtype=np.float64)
    status = STATUS_OK
    t = tau0
    for p in range(n_periods):
        y, status = advance(KIND_THETA_TAN, y, t, t + two_pi, rtol, atol,
                            max_step, initial_step, eps, beta, omega, ak, bk, 0.0)
        if status != STATUS_OK:
            break
        t += two_pi
        nrm = np.sqrt(y[2] ** 2 + y[3] ** 2)
        logs[p] = np.log(nrm)
        y[2] /= nrm
        y[3] /= nrm
    return y, logs, status
