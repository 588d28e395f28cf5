"""Long-run characterization: rotation numbers, Lyapunov exponents,
attractor classification, Poincare maps, bifurcation sweeps, basin scans.

Everything here samples the flow stroboscopically at the excitation period
2*pi, turning the forced system into a two-dimensional map whose attractors
are classified as equilibrium, period-k oscillation, rotation with integer
relative velocity b, oscillation-rotation with fractional b, or chaos
(positive maximal Lyapunov exponent).  Scans over parameter or
initial-condition grids are cell-independent and can run on a process
pool; results are assembled in grid order so output never depends on the
worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .integrate import (SCAN_CONFIG, IntegratorConfig, StepSizeUnderflow,
                        TWO_PI, advance, strobe, tangent_growth_per_period,
                        theta_field)
from .model import DimensionlessParams, Excitation, State, wrap_angle
from .averaging import rotation_exists, rotation_steady

__all__ = [
    "AttractorClass",
    "LyapunovResult",
    "ClassifyBudget",
    "BasinGrid",
    "SweepStep",
    "rotation_number",
    "max_lyapunov",
    "poincare_map",
    "classify_attractor",
    "parameter_map",
    "bifurcation_sweep",
    "basin_scan",
]

EQUILIBRIUM = "equilibrium"
OSCILLATION = "oscillation"
ROTATION = "rotation"
OSC_ROTATION = "oscillation-rotation"
CHAOTIC = "chaotic"
UNRESOLVED = "unresolved"

_SNAP_MAX_DENOMINATOR = 4


@dataclass(frozen=True)
class AttractorClass:
    """Tagged classification of a long-run regime.

    kind is one of equilibrium / oscillation / rotation /
    oscillation-rotation / chaotic / unresolved; oscillations carry the
    stroboscopic period k, rotations the rational relative velocity b.
    """

    kind: str
    period: int | None = None
    b: Fraction | None = None

    def __post_init__(self):
        if self.kind == OSCILLATION and (self.period is None or self.period < 1):
            raise ValueError("oscillation requires a positive stroboscopic period")
        if self.kind == ROTATION and (self.b is None or self.b.denominator != 1
                                      or self.b == 0):
            raise ValueError("rotation requires a nonzero integer b")
        if self.kind == OSC_ROTATION and (self.b is None or self.b.denominator == 1
                                          or self.b.denominator > _SNAP_MAX_DENOMINATOR):
            raise ValueError("oscillation-rotation requires non-integer b "
                             f"with denominator <= {_SNAP_MAX_DENOMINATOR}")

    @classmethod
    def equilibrium(cls):
        return cls(EQUILIBRIUM)

    @classmethod
    def oscillation(cls, period: int):
        return cls(OSCILLATION, period=period)

    @classmethod
    def rotation(cls, b):
        return cls(ROTATION, b=Fraction(b))

    @classmethod
    def oscillation_rotation(cls, b):
        return cls(OSC_ROTATION, b=Fraction(b))

    @classmethod
    def chaotic(cls):
        return cls(CHAOTIC)

    @classmethod
    def unresolved(cls):
        return cls(UNRESOLVED)

    def label(self) -> str:
        if self.kind == OSCILLATION:
            return f"oscillation({self.period})"
        if self.kind in (ROTATION, OSC_ROTATION):
            return f"{self.kind}({self.b})"
        return self.kind


@dataclass(frozen=True)
class LyapunovResult:
    """Maximal Lyapunov exponent per unit tau with its measurement window."""

    lambda_max: float
    n_periods: int
    transient_periods: int

    def __post_init__(self):
        if not math.isfinite(self.lambda_max):
            raise ValueError("lambda_max must be finite")
        if self.n_periods < 500:
            raise ValueError("Lyapunov estimates need n_periods >= 500")


@dataclass(frozen=True)
class ClassifyBudget:
    """Period counts and tolerances of the classification cascade."""

    transient_periods: int = 300
    window_periods: int = 500
    lyap_periods: int = 2000
    chaos_threshold: float = 0.005   # lambda_max per unit tau
    equilibrium_tol: float = 1e-6
    closure_tol: float = 1e-5
    max_cycle_period: int = 8
    snap_tol: float = 1e-3
    config: IntegratorConfig = SCAN_CONFIG

    @classmethod
    def fast(cls) -> "ClassifyBudget":
        """Reduced-window budget for coarse basin scans."""
        return cls(transient_periods=300, window_periods=200, lyap_periods=500)


def _snap_rational(raw: float, tol: float) -> Fraction | None:
    """Nearest p/q with q <= 4 within tol, preferring small q."""
    for q in range(1, _SNAP_MAX_DENOMINATOR + 1):
        p = round(raw * q)
        if abs(raw - p / q) <= tol:
            return Fraction(p, q)
    return None


def rotation_number(params: DimensionlessParams, state0: State,
                    window_periods: int = 500, transient_periods: int = 300,
                    excitation: Excitation | None = None,
                    config: IntegratorConfig = SCAN_CONFIG,
                    snap_tol: float = 1e-3):
    """Average winding per excitation period, snapped to a small rational.

    Returns Fraction(p, q) with q <= 4 when the windowed average
    delta_theta / (2*pi*n) lies within snap_tol of it, else None
    (non-resonant or chaotic motion).
    """
    raw = rotation_number_raw(params, state0, window_periods, transient_periods,
                              excitation, config)
    return _snap_rational(raw, snap_tol)


def rotation_number_raw(params: DimensionlessParams, state0: State,
                        window_periods: int = 500, transient_periods: int = 300,
                        excitation: Excitation | None = None,
                        config: IntegratorConfig = SCAN_CONFIG) -> float:
    """Unsnapped windowed average of theta_dot in units of the drive rate."""
    excitation = excitation or Excitation.cosine()
    field = theta_field(params, excitation)
    y = np.array([state0.theta, state0.theta_dot])
    tau = state0.tau
    if transient_periods > 0:
        y = advance(field, y, tau, tau + TWO_PI * transient_periods, config)
        tau += TWO_PI * transient_periods
    samples = strobe(field, y, tau, window_periods, config)
    return float((samples[-1, 0] - samples[0, 0]) / (TWO_PI * window_periods))


def max_lyapunov(params: DimensionlessParams, state0: State,
                 n_periods: int = 2000, transient_periods: int = 300,
                 excitation: Excitation | None = None,
                 config: IntegratorConfig = SCAN_CONFIG) -> LyapunovResult:
    """Maximal Lyapunov exponent via tangent flow with per-period
    renormalization, transient discarded before accumulation."""
    excitation = excitation or Excitation.cosine()
    y = np.array([state0.theta, state0.theta_dot])
    tau = state0.tau
    if transient_periods > 0:
        field = theta_field(params, excitation)
        y = advance(field, y, tau, tau + TWO_PI * transient_periods, config)
        tau += TWO_PI * transient_periods
    settled = State(theta=float(y[0]), theta_dot=float(y[1]), tau=tau)
    _, logs = tangent_growth_per_period(params, excitation, settled,
                                        np.array([1.0, 0.0]), n_periods, config)
    lam = float(np.sum(logs) / (TWO_PI * n_periods))
    return LyapunovResult(lambda_max=lam, n_periods=n_periods,
                          transient_periods=transient_periods)


def poincare_map(params: DimensionlessParams, state0: State, n_points: int,
                 transient_periods: int = 300,
                 excitation: Excitation | None = None,
                 config: IntegratorConfig = SCAN_CONFIG) -> np.ndarray:
    """Stroboscopic section after the transient: rows (theta wrapped, theta_dot)."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    excitation = excitation or Excitation.cosine()
    field = theta_field(params, excitation)
    y = np.array([state0.theta, state0.theta_dot])
    tau = state0.tau
    if transient_periods > 0:
        y = advance(field, y, tau, tau + TWO_PI * transient_periods, config)
        tau += TWO_PI * transient_periods
    samples = strobe(field, y, tau, n_points, config)[1:]
    out = samples.copy()
    out[:, 0] = wrap_angle(out[:, 0])
    return out


def _cycle_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Distance on the cylinder: angular difference in theta, plain in theta_dot."""
    dth = abs(wrap_angle(a[0] - b[0]))
    return math.hypot(dth, a[1] - b[1])


def _detect_cycle(points: np.ndarray, max_period: int, tol: float) -> int | None:
    """Minimal stroboscopic period p <= max_period closing within tol.

    points rows are (theta, theta_dot); theta may be unwrapped (compared on
    the cylinder).  Uses the trailing 3*max_period samples.
    """
    m = len(points)
    for p in range(1, max_period + 1):
        if m < 2 * p + 1:
            return None
        ok = True
        for i in range(m - p - 1, max(m - 3 * max_period, 0) - 1, -1):
            if _cycle_distance(points[i], points[i + p]) > tol:
                ok = False
                break
        if ok:
            return p
    return None


@dataclass(frozen=True)
class _ClassifyOutcome:
    attractor: AttractorClass
    cycle_points: np.ndarray | None  # wrapped stroboscopic cycle, or None
    final_state: State


def _classify(params: DimensionlessParams, state0: State,
              budget: ClassifyBudget, excitation: Excitation) -> _ClassifyOutcome:
    field = theta_field(params, excitation)
    y = np.array([state0.theta, state0.theta_dot])
    tau = state0.tau
    if budget.transient_periods > 0:
        y = advance(field, y, tau, tau + TWO_PI * budget.transient_periods,
                    budget.config)
        tau += TWO_PI * budget.transient_periods
    window = strobe(field, y, tau, budget.window_periods, budget.config)
    tau_end = tau + TWO_PI * budget.window_periods
    final = State(theta=float(window[-1, 0]), theta_dot=float(window[-1, 1]),
                  tau=tau_end)

    # 1. Equilibrium: the hanging position, modulo full turns.
    tail = window[-8:]
    eq = all(math.hypot(wrap_angle(s[0]), s[1]) < budget.equilibrium_tol
             for s in tail)
    if eq:
        return _ClassifyOutcome(AttractorClass.equilibrium(), None, final)

    raw_b = (window[-1, 0] - window[0, 0]) / (TWO_PI * budget.window_periods)
    snapped = _snap_rational(float(raw_b), budget.snap_tol)
    period = _detect_cycle(window[-(3 * budget.max_cycle_period):],
                           budget.max_cycle_period, budget.closure_tol)

    def cycle(p: int) -> np.ndarray:
        pts = window[-p:].copy()
        pts[:, 0] = wrap_angle(pts[:, 0])
        return pts

    # 2-4. Locked regular regimes.
    if snapped is not None and snapped.denominator == 1 and snapped != 0 \
            and period is not None:
        return _ClassifyOutcome(AttractorClass.rotation(snapped), cycle(period),
                                final)
    if snapped is not None and snapped.denominator > 1:
        p = period if period is not None else min(8, len(window))
        return _ClassifyOutcome(AttractorClass.oscillation_rotation(snapped),
                                cycle(p), final)
    if snapped == 0 and period is not None:
        return _ClassifyOutcome(AttractorClass.oscillation(period), cycle(period),
                                final)

    # 5. Chaos by tangent growth; the orbit is already past its transient.
    lyap = max_lyapunov(params, final, n_periods=budget.lyap_periods,
                        transient_periods=0, excitation=excitation,
                        config=budget.config)
    if lyap.lambda_max > budget.chaos_threshold:
        return _ClassifyOutcome(AttractorClass.chaotic(), None, final)
    return _ClassifyOutcome(AttractorClass.unresolved(), None, final)


def classify_attractor(params: DimensionlessParams, state0: State,
                       budget: ClassifyBudget | None = None,
                       excitation: Excitation | None = None) -> AttractorClass:
    """Decision cascade: equilibrium, locked rotation or oscillation,
    fractional locking, then chaos by Lyapunov exponent; Unresolved is a
    legitimate value, never an exception."""
    budget = budget or ClassifyBudget()
    excitation = excitation or Excitation.cosine()
    try:
        return _classify(params, state0, budget, excitation).attractor
    except StepSizeUnderflow:
        return AttractorClass.unresolved()


def _attractor_key(outcome: _ClassifyOutcome) -> tuple:
    """Identity key: (kind, rounded cycle centroid, sign of b).

    Counter-rotating attractors carry opposite b signs; centroids are
    rounded to 1e-2 so all cells of one basin share a key.
    """
    att = outcome.attractor
    sign_b = 0
    if att.b is not None:
        sign_b = (att.b > 0) - (att.b < 0)
    if att.kind == EQUILIBRIUM:
        return (att.label(), 0.0, 0.0, 0)
    if outcome.cycle_points is None:
        return (att.label(), None, None, sign_b)
    c0 = round(float(np.mean(outcome.cycle_points[:, 0])), 2) + 0.0
    c1 = round(float(np.mean(outcome.cycle_points[:, 1])), 2) + 0.0
    return (att.label(), c0, c1, sign_b)


# -- parameter maps ----------------------------------------------------------

_MAP_GENERIC_IC = State(theta=1.0, theta_dot=0.5)
_MAP_RANDOM_ICS = 8
_MAP_SEED = 20240917


def _rotation_cell_ics(params: DimensionlessParams) -> list[tuple[State, float]]:
    """Seeded and random initial conditions for the rotation metric.

    Predicted-phase seeds (steady phase, theta_dot = b) for every b with an
    existence certificate, plus fixed-seed random probes for fractional
    locking.
    """
    ics = []
    for b in (1, -1, 2, -2):
        if rotation_exists(abs(b), params):
            steady = rotation_steady(b, params)
            ics.append((State(theta=steady.phase_stable, theta_dot=float(b)),
                        float(b)))
    rng = np.random.default_rng(_MAP_SEED)
    for _ in range(_MAP_RANDOM_ICS):
        th = rng.uniform(-math.pi, math.pi)
        thd = rng.uniform(-3.0, 3.0)
        ics.append((State(theta=float(th), theta_dot=float(thd)), math.nan))
    return ics


def _rotation_metric_cell(args):
    omega, epsilon, beta, window, transient = args
    try:
        params = DimensionlessParams(epsilon=epsilon, beta=beta, omega=omega)
    except ValueError:
        return math.nan
    best = 0.0
    try:
        for ic, _ in _rotation_cell_ics(params):
            b = rotation_number(params, ic, window, transient)
            if b is not None and b != 0:
                best = max(best, abs(float(b)))
    except StepSizeUnderflow:
        return math.nan
    return best


def _lyapunov_metric_cell(args):
    omega, epsilon, beta, n_periods, transient = args
    try:
        params = DimensionlessParams(epsilon=epsilon, beta=beta, omega=omega)
        lyap = max_lyapunov(params, _MAP_GENERIC_IC, n_periods, transient)
    except (ValueError, StepSizeUnderflow):
        return math.nan
    return lyap.lambda_max


def parameter_map(metric: str, omega_grid, epsilon_grid, beta: float,
                  window_periods: int = 500, transient_periods: int = 300,
                  lyap_periods: int = 1000, workers: int = 1) -> np.ndarray:
    """Grid of rotation lockings or Lyapunov exponents over (omega, epsilon).

    rotation: max |b| locked over the per-cell initial-condition set (0 if
    none locks).  lyapunov: lambda_max from a fixed generic initial
    condition.  Failed cells are NaN, never silently regular.  Returns
    shape (len(epsilon_grid), len(omega_grid)).
    """
    omega_grid = np.asarray(omega_grid, dtype=np.float64)
    epsilon_grid = np.asarray(epsilon_grid, dtype=np.float64)
    for g in (omega_grid, epsilon_grid):
        if g.size == 0:
            raise ValueError("grids must be non-empty")
        if g.size > 1 and np.any(np.diff(g) <= 0):
            raise ValueError("grids must be strictly increasing")
    if metric == "rotation":
        cell = _rotation_metric_cell
        jobs = [(float(om), float(ep), beta, window_periods, transient_periods)
                for ep in epsilon_grid for om in omega_grid]
    elif metric == "lyapunov":
        cell = _lyapunov_metric_cell
        jobs = [(float(om), float(ep), beta, lyap_periods, transient_periods)
                for ep in epsilon_grid for om in omega_grid]
    else:
        raise ValueError("metric must be 'rotation' or 'lyapunov'")
    values = _run_jobs(cell, jobs, workers)
    return np.array(values).reshape(epsilon_grid.size, omega_grid.size)


# -- bifurcation sweep -------------------------------------------------------

@dataclass(frozen=True)
class SweepStep:
    """One epsilon step of a bifurcation sweep."""

    epsilon: float
    samples: np.ndarray          # stroboscopic theta_dot on the continued branch
    attractor: AttractorClass    # classification of the continued branch
    fresh_attractor: AttractorClass  # from the small-perturbation probe
    failed: bool = False


_SWEEP_FRESH_IC = State(theta=1e-2, theta_dot=0.0)


def bifurcation_sweep(omega_fixed: float, epsilon_grid, beta: float,
                      n_samples: int = 64,
                      budget: ClassifyBudget | None = None,
                      excitation: Excitation | None = None) -> list[SweepStep]:
    """Continuation sweep in epsilon at fixed omega.

    Step i+1 starts from the final state of step i; a fresh
    small-perturbation probe classifies subcritical branches alongside.
    The continuation chain is inherently sequential.
    """
    budget = budget or ClassifyBudget()
    excitation = excitation or Excitation.cosine()
    epsilon_grid = np.asarray(epsilon_grid, dtype=np.float64)
    if epsilon_grid.size > 1 and np.any(np.diff(epsilon_grid) <= 0):
        raise ValueError("epsilon grid must be strictly increasing")
    if n_samples > budget.window_periods:
        raise ValueError("n_samples cannot exceed the classification window")
    steps = []
    carried = _SWEEP_FRESH_IC
    for eps in epsilon_grid:
        try:
            params = DimensionlessParams(epsilon=float(eps), beta=beta,
                                         omega=omega_fixed)
        except ValueError:
            steps.append(SweepStep(float(eps), np.full(n_samples, np.nan),
                                   AttractorClass.unresolved(),
                                   AttractorClass.unresolved(), failed=True))
            continue
        try:
            outcome = _classify(params, carried, budget, excitation)
            field = theta_field(params, excitation)
            tail = strobe(field,
                          np.array([outcome.final_state.theta,
                                    outcome.final_state.theta_dot]),
                          outcome.final_state.tau, n_samples, budget.config)[1:]
            samples = tail[:, 1].copy()
            wrapped = State(theta=wrap_angle(tail[-1, 0]),
                            theta_dot=float(tail[-1, 1]))
            fresh = classify_attractor(params, _SWEEP_FRESH_IC, budget, excitation)
            steps.append(SweepStep(float(eps), samples, outcome.attractor, fresh))
            carried = wrapped
        except StepSizeUnderflow:
            steps.append(SweepStep(float(eps), np.full(n_samples, np.nan),
                                   AttractorClass.unresolved(),
                                   AttractorClass.unresolved(), failed=True))
    return steps


# -- basin scan --------------------------------------------------------------

@dataclass(frozen=True)
class BasinGrid:
    """Attractor labels over an initial-condition grid.

    labels[j, i] indexes `legend` for theta_grid[i], theta_dot_grid[j];
    legend entries are (key, AttractorClass) in first-seen row-major order.
    """

    theta_grid: np.ndarray
    theta_dot_grid: np.ndarray
    labels: np.ndarray                     # int indices into legend
    legend: list[tuple[tuple, AttractorClass]]

    @property
    def unresolved_fraction(self) -> float:
        unresolved = sum(1 for idx in self.labels.ravel()
                         if self.legend[idx][1].kind == UNRESOLVED)
        return unresolved / self.labels.size

    def attractor_set(self) -> set[str]:
        """Distinct attractor labels, excluding unresolved cells."""
        return {att.label() for _, att in self.legend if att.kind != UNRESOLVED}


def _basin_cell(args):
    theta0, theta_dot0, epsilon, beta, omega, budget = args
    params = DimensionlessParams(epsilon=epsilon, beta=beta, omega=omega)
    try:
        outcome = _classify(params, State(theta=theta0, theta_dot=theta_dot0),
                            budget, Excitation.cosine())
    except StepSizeUnderflow:
        return (AttractorClass.unresolved(), (UNRESOLVED, None, None, 0))
    return (outcome.attractor, _attractor_key(outcome))


def basin_scan(params: DimensionlessParams, theta_grid, theta_dot_grid,
               budget: ClassifyBudget | None = None,
               workers: int = 1) -> BasinGrid:
    """Classify every cell of an initial-condition grid.

    theta_grid must lie in (-pi, pi]; cells are independent and are run on
    `workers` processes, assembled in row-major (theta_dot, theta) order.
    """
    budget = budget or ClassifyBudget()
    theta_grid = np.asarray(theta_grid, dtype=np.float64)
    theta_dot_grid = np.asarray(theta_dot_grid, dtype=np.float64)
    if np.any(theta_grid <= -math.pi) or np.any(theta_grid > math.pi):
        raise ValueError("theta grid must lie in (-pi, pi]")
    for g in (theta_grid, theta_dot_grid):
        if g.size > 1 and np.any(np.diff(g) <= 0):
            raise ValueError("grids must be strictly increasing")
    jobs = [(float(th), float(thd), params.epsilon, params.beta, params.omega,
             budget)
            for thd in theta_dot_grid for th in theta_grid]
    results = _run_jobs(_basin_cell, jobs, workers)

    legend: list[tuple[tuple, AttractorClass]] = []
    index: dict[tuple, int] = {}
    labels = np.empty(len(results), dtype=np.int32)
    for pos, (att, key) in enumerate(results):
        if key not in index:
            index[key] = len(legend)
            legend.append((key, att))
        labels[pos] = index[key]
    return BasinGrid(theta_grid=theta_grid, theta_dot_grid=theta_dot_grid,
                     labels=labels.reshape(theta_dot_grid.size, theta_grid.size),
                     legend=legend)


def _run_jobs(fn, jobs, workers: int):
    """Map fn over jobs, optionally on a process pool, preserving order."""
    if workers <= 1:
        return [fn(job) for job in jobs]
    chunk = max(1, len(jobs) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=chunk))
