"""Floquet stability of the hanging position and resonance tongues.

The hanging position is stable exactly when both multipliers of the
monodromy matrix of the linearized (Hill-type) equation lie inside the
unit circle.  Alongside the exact multiplier test this module carries the
first-order closed forms: the half-cone membership test for the k-th
resonance tongue in terms of the excitation's Fourier coefficients, and
the explicit frequency interval of the first tongue for the cosine
excitation.  Grid scans and bisection boundary location reproduce the
numerical stability charts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrate import (DEFAULT_CONFIG, SCAN_CONFIG, IntegratorConfig,
                        StepSizeUnderflow, TWO_PI, advance, hill_field)
from .model import DimensionlessParams, Excitation, fourier_coeff

__all__ = [
    "Monodromy",
    "Tongue",
    "monodromy",
    "is_stable",
    "halfcone_contains",
    "first_tongue_interval",
    "stability_scan",
    "locate_boundary",
    "scan_rows",
]

STABILITY_TOL = 1e-9


@dataclass(frozen=True)
class Monodromy:
    """Fundamental matrix of the linearized equation over one period."""

    matrix: np.ndarray            # 2x2 real
    multipliers: tuple[complex, complex]

    @property
    def determinant(self) -> float:
        m = self.matrix
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    @property
    def trace(self) -> float:
        return float(self.matrix[0, 0] + self.matrix[1, 1])


@dataclass(frozen=True)
class Tongue:
    """Frequency interval of a resonance tongue at fixed (beta, epsilon)."""

    k: int
    omega_low: float | None
    omega_high: float | None

    @property
    def is_empty(self) -> bool:
        return self.omega_low is None

    def contains(self, omega: float) -> bool:
        if self.is_empty:
            return False
        return self.omega_low < omega < self.omega_high


def monodromy(params: DimensionlessParams, excitation: Excitation,
              config: IntegratorConfig = DEFAULT_CONFIG) -> Monodromy:
    """Monodromy matrix over one excitation period.

    Columns are the flows of (1, 0) and (0, 1) under the linearized
    equation over tau in [0, 2*pi]; the multipliers are its eigenvalues.
    """
    field = hill_field(params, excitation)
    col0 = advance(field, np.array([1.0, 0.0]), 0.0, TWO_PI, config)
    col1 = advance(field, np.array([0.0, 1.0]), 0.0, TWO_PI, config)
    m = np.column_stack([col0, col1])
    mu = np.linalg.eigvals(m)
    return Monodromy(matrix=m, multipliers=(complex(mu[0]), complex(mu[1])))


def is_stable(m: Monodromy, tol: float = STABILITY_TOL) -> bool:
    """True iff both multipliers lie inside the unit circle (within tol).

    With damping the true boundaries are transversal so tol is uncritical;
    without damping the neutral case |mu| = 1 counts as stable, matching
    the closed half-cone boundaries.
    """
    return max(abs(m.multipliers[0]), abs(m.multipliers[1])) < 1.0 + tol


def halfcone_contains(k: int, params: DimensionlessParams,
                      excitation: Excitation) -> bool:
    """First-order membership test for the k-th resonance tongue.

    (beta/2)**2 + (2*omega/k - 1)**2 < (a_k**2 + b_k**2) * (3*eps/4)**2
    """
    if k < 1:
        raise ValueError("tongue index k must be >= 1")
    a_k, b_k = fourier_coeff(excitation, k)
    lhs = (params.beta / 2.0) ** 2 + (2.0 * params.omega / k - 1.0) ** 2
    rhs = (a_k ** 2 + b_k ** 2) * (3.0 * params.epsilon / 4.0) ** 2
    return lhs < rhs


def first_tongue_interval(beta: float, epsilon: float) -> Tongue:
    """Closed-form first tongue for the cosine excitation.

    omega in (1/2 - d, 1/2 + d) with d = sqrt(9*eps**2/16 - beta**2/4)/2,
    empty when the damping term dominates.
    """
    if beta < 0 or epsilon < 0:
        raise ValueError("beta and epsilon must be non-negative")
    disc = 9.0 * epsilon ** 2 / 16.0 - beta ** 2 / 4.0
    if disc <= 0.0:
        return Tongue(k=1, omega_low=None, omega_high=None)
    d = 0.5 * math.sqrt(disc)
    return Tongue(k=1, omega_low=0.5 - d, omega_high=0.5 + d)


def _scan_cell(omega: float, epsilon: float, beta: float,
               excitation: Excitation, config: IntegratorConfig) -> int:
    try:
        params = DimensionlessParams(epsilon=epsilon, beta=beta, omega=omega)
        return 1 if is_stable(monodromy(params, excitation, config)) else 0
    except (StepSizeUnderflow, ValueError):
        return -1


def stability_scan(omega_grid, epsilon_grid, beta: float,
                   excitation: Excitation | None = None,
                   config: IntegratorConfig = SCAN_CONFIG) -> np.ndarray:
    """Multiplier-based stability over an (omega, epsilon) grid.

    Returns an int8 array of shape (len(epsilon_grid), len(omega_grid));
    1 = stable, 0 = unstable, -1 = integration failed (never silently
    stable).  Cells are independent; row order follows the grids.
    """
    excitation = excitation or Excitation.cosine()
    omega_grid = np.asarray(omega_grid, dtype=np.float64)
    epsilon_grid = np.asarray(epsilon_grid, dtype=np.float64)
    if omega_grid.size == 0 or epsilon_grid.size == 0:
        raise ValueError("grids must be non-empty")
    if np.any(np.diff(omega_grid) <= 0) or (epsilon_grid.size > 1
                                            and np.any(np.diff(epsilon_grid) <= 0)):
        raise ValueError("grids must be strictly increasing")
    out = np.empty((epsilon_grid.size, omega_grid.size), dtype=np.int8)
    for j, eps in enumerate(epsilon_grid):
        for i, om in enumerate(omega_grid):
            out[j, i] = _scan_cell(float(om), float(eps), beta, excitation, config)
    return out


def scan_rows(omega_grid, epsilon_grid, grid: np.ndarray):
    """Yield (omega, epsilon, cell) rows of a scan in grid order."""
    for j, eps in enumerate(epsilon_grid):
        for i, om in enumerate(omega_grid):
            cell = int(grid[j, i])
            yield float(om), float(eps), ("failed" if cell < 0 else str(cell))


def locate_boundary(epsilon: float, beta: float, side: str,
                    excitation: Excitation | None = None,
                    config: IntegratorConfig = DEFAULT_CONFIG,
                    resolution: float = 1e-4,
                    bracket: float = 0.2) -> float:
    """Bisect the multiplier-based stability boundary in omega.

    side = 'low' locates the left edge of the first tongue, 'high' the
    right edge, starting from the unstable center omega = 1/2.  Raises if
    omega = 1/2 is not unstable (no tongue to bound).
    """
    if side not in ("low", "high"):
        raise ValueError("side must be 'low' or 'high'")
    excitation = excitation or Excitation.cosine()

    def stable_at(om: float) -> bool:
        params = DimensionlessParams(epsilon=epsilon, beta=beta, omega=om)
        return is_stable(monodromy(params, excitation, config))

    center = 0.5
    if stable_at(center):
        raise ValueError("omega = 1/2 is stable; no first-tongue boundary to locate")
    outer = center - bracket if side == "low" else center + bracket
    if not stable_at(outer):
        raise ValueError(f"bracket endpoint omega = {outer:g} is not stable")
    lo, hi = (outer, center) if side == "low" else (center, outer)
    # Invariant: exactly one endpoint stable; shrink to `resolution`.
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if stable_at(mid) == stable_at(lo):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
