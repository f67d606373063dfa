"""SIDTHE compartmental model: types, dynamics, integration, derived quantities.

The model tracks population fractions (S, I, D, T, H, E) on the unit simplex:
susceptible, infected (undetected), diagnosed, threatened (hospitalized),
healed, and expired. A scalar control u in [0, u_max] scales the transmission
rate by (1 - u), modeling non-pharmaceutical interventions. All rates are per
day.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

COMPARTMENTS = ("s", "i", "d", "t", "h", "e")

# Sum-to-one tolerance for state construction; callers may override per call.
SIMPLEX_TOL = 1e-9
# Components below -CLAMP_TOL after a step indicate a genuine integrator
# failure; values in [-CLAMP_TOL, 0) are floating-point noise and are clamped.
CLAMP_TOL = 1e-12


class IntegrationError(RuntimeError):
    """A Runge-Kutta step produced a meaningfully negative compartment."""

    def __init__(self, message: str, day: int | None = None):
        super().__init__(message)
        self.day = day


@dataclass(frozen=True)
class Params:
    """The six strictly positive SIDTHE rates (1/day).

    alpha: transmission, gamma: diagnosis, lam: recovery (I and D),
    delta: aggravation (D to T), sigma: hospital recovery, tau: mortality.
    """

    alpha: float
    gamma: float
    lam: float
    delta: float
    sigma: float
    tau: float

    def __post_init__(self):
        for name, value in zip(self.field_names(), self.as_array()):
            if not value > 0.0:
                raise ValueError(f"parameter {name} must be strictly positive, got {value}")

    @staticmethod
    def field_names() -> tuple[str, ...]:
        return ("alpha", "gamma", "lam", "delta", "sigma", "tau")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.gamma, self.lam, self.delta, self.sigma, self.tau])

    @classmethod
    def from_array(cls, values) -> "Params":
        values = np.asarray(values, dtype=float)
        if values.shape != (6,):
            raise ValueError(f"expected 6 parameters, got shape {values.shape}")
        return cls(*values.tolist())

    def scaled(self, factor) -> "Params":
        """Componentwise rescaling; ``factor`` is scalar or per-parameter."""
        return Params.from_array(self.as_array() * np.asarray(factor, dtype=float))


@dataclass(frozen=True)
class ControlInput:
    """Dimensionless NPI severity; 0 is no intervention."""

    u: float
    u_max: float = 0.75

    def __post_init__(self):
        if not 0.0 <= self.u_max < 1.0:
            raise ValueError(f"u_max must lie in [0, 1), got {self.u_max}")
        if not 0.0 <= self.u <= self.u_max:
            raise ValueError(f"control {self.u} outside [0, {self.u_max}]")

    def __float__(self) -> float:
        return self.u


@dataclass(frozen=True)
class State:
    """Point on the 6-simplex: compartment fractions summing to one."""

    s: float
    i: float
    d: float
    t: float
    h: float
    e: float

    def __post_init__(self):
        arr = self.as_array()
        if np.any(arr < -CLAMP_TOL) or np.any(arr > 1.0 + CLAMP_TOL):
            raise ValueError(f"state components outside [0, 1]: {arr}")
        total = arr.sum()
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"state components sum to {total}, expected 1 "
                             f"within {SIMPLEX_TOL} (use State.from_array with "
                             f"repair=... for raw data)")

    def as_array(self) -> np.ndarray:
        return np.array([self.s, self.i, self.d, self.t, self.h, self.e])

    @classmethod
    def from_array(cls, values, repair: str | None = None, tol: float = SIMPLEX_TOL) -> "State":
        """Build a state, optionally repairing a mass deficit.

        repair:
          - None: require the sum to be 1 within ``tol``;
          - "s" / "h": assign the residual 1 - sum to that compartment
            (S distorts the disease dynamics least, being the largest);
          - "normalize": divide by the sum.
        """
        arr = np.array(values, dtype=float)
        if arr.shape != (6,):
            raise ValueError(f"expected 6 compartments, got shape {arr.shape}")
        residual = 1.0 - arr.sum()
        if repair == "s":
            arr[0] += residual
        elif repair == "h":
            arr[4] += residual
        elif repair == "normalize":
            arr = arr / arr.sum()
        elif repair is not None:
            raise ValueError(f"unknown repair mode {repair!r}")
        elif abs(residual) > tol:
            raise ValueError(f"state components sum to {arr.sum()}, expected 1 within {tol}")
        return cls(*arr.tolist())


@dataclass(frozen=True)
class Trajectory:
    """Simulated path: n+1 states on a strictly increasing time grid, n controls."""

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        controls = np.asarray(self.controls, dtype=float)
        if states.shape != (times.shape[0], 6):
            raise ValueError(f"states shape {states.shape} inconsistent with "
                             f"{times.shape[0]} time points")
        if controls.shape != (times.shape[0] - 1,):
            raise ValueError(f"expected {times.shape[0] - 1} controls, got {controls.shape}")
        if times.shape[0] > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("time grid must be strictly increasing")
        for name, arr in (("times", times), ("states", states), ("controls", controls)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def s(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def i(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def d(self) -> np.ndarray:
        return self.states[:, 2]

    @property
    def t(self) -> np.ndarray:
        return self.states[:, 3]

    @property
    def h(self) -> np.ndarray:
        return self.states[:, 4]

    @property
    def e(self) -> np.ndarray:
        return self.states[:, 5]

    def final_state(self) -> State:
        return State(*self.states[-1].tolist())


# Baseline case-study values. The raw initial condition has a mass deficit of
# 0.00171 (its components sum to 0.99829); the default repair assigns it to S.
NOMINAL_PARAMS = Params(alpha=0.35, gamma=0.1, lam=0.09, delta=2e-3, sigma=0.015, tau=0.01)
RAW_INITIAL_STATE = np.array([0.99, 0.008, 1.9e-4, 1e-4, 0.0, 0.0])
RAW_INITIAL_STATE.flags.writeable = False
DEFAULT_INITIAL_STATE = State.from_array(RAW_INITIAL_STATE, repair="s")


def _coerce_state(x) -> np.ndarray:
    if isinstance(x, State):
        return x.as_array()
    return np.asarray(x, dtype=float)


def _coerce_params(theta) -> np.ndarray:
    if isinstance(theta, Params):
        return theta.as_array()
    return np.asarray(theta, dtype=float)


def sidthe_rhs(x, u, theta) -> np.ndarray:
    """Time derivative of the SIDTHE state.

    Total function on its domain (state on the simplex, u in [0, u_max],
    positive rates); the six components sum to zero analytically. ``x`` may
    be a State, a 6-vector, or an (..., 6) array (vectorized); ``u`` a float
    or matching array.
    """
    x = _coerce_state(x)
    alpha, gamma, lam, delta, sigma, tau = _coerce_params(theta)
    u = float(u) if np.isscalar(u) or isinstance(u, ControlInput) else np.asarray(u, dtype=float)

    s, i, d, t = x[..., 0], x[..., 1], x[..., 2], x[..., 3]
    ab = alpha * (1.0 - u)
    cih = (lam * gamma) / (lam + gamma)
    f_si = ab * s * i
    f_id = gamma * i
    f_ih = cih * i
    f_dt = delta * d
    f_dh = lam * d
    f_th = sigma * t
    f_te = tau * t
    out = np.empty_like(x)
    out[..., 0] = -f_si
    out[..., 1] = f_si - f_id - f_ih
    out[..., 2] = f_id - f_dt - f_dh
    out[..., 3] = f_dt - f_th - f_te
    out[..., 4] = f_ih + f_dh + f_th
    out[..., 5] = f_te
    return out


def _clamp_step_output(x: np.ndarray, day: int | None = None) -> np.ndarray:
    worst = x.min()
    if worst < -CLAMP_TOL:
        where = "" if day is None else f" at day {day}"
        raise IntegrationError(
            f"invalid state{where}: component {COMPARTMENTS[int(x.argmin())]} = {worst} "
            f"(step size too large)", day=day)
    return np.where(x < 0.0, 0.0, x)


def rk4_step(x, u, theta, h: float = 1.0):
    """One classical RK4 step with the control held constant.

    Preserves the sum of the components to machine precision (RK4 is exact
    on linear invariants). Components in [-1e-12, 0) are clamped to zero;
    anything below that raises IntegrationError.
    """
    if not h > 0.0:
        raise ValueError(f"step size must be positive, got {h}")
    arr = _coerce_state(x)
    k1 = sidthe_rhs(arr, u, theta)
    k2 = sidthe_rhs(arr + (0.5 * h) * k1, u, theta)
    k3 = sidthe_rhs(arr + (0.5 * h) * k2, u, theta)
    k4 = sidthe_rhs(arr + h * k3, u, theta)
    out = arr + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out = _clamp_step_output(out)
    if isinstance(x, State):
        return State(*out.tolist())
    return out


def simulate(x0, schedule, theta, days: int, substeps: int = 1) -> Trajectory:
    """Integrate for ``days`` days under a piecewise-constant daily schedule.

    ``schedule`` is a scalar or a per-day sequence of length >= days;
    ``substeps`` RK4 steps are taken per day (1 by default: the rates are
    slow enough that daily steps are accurate to well below 1e-6).
    """
    if days < 0:
        raise ValueError("days must be non-negative")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    x0_arr = _coerce_state(x0)
    theta_arr = _coerce_params(theta)

    if np.isscalar(schedule) or isinstance(schedule, ControlInput):
        u_days = np.full(days, float(schedule))
    else:
        u_days = np.asarray(schedule, dtype=float)
        if u_days.shape[0] < days:
            raise ValueError(f"schedule covers {u_days.shape[0]} days, need {days}")
        u_days = u_days[:days]

    times = np.arange(days + 1, dtype=float)
    if days == 0:
        return Trajectory(times, x0_arr.reshape(1, 6), np.empty(0))

    u_steps = np.repeat(u_days, substeps)[None, :]
    states = kernels.rollout(x0_arr, theta_arr[None, :], u_steps, h=1.0 / substeps)[0]
    states = states[::substeps]

    worst_per_day = states.min(axis=1)
    if worst_per_day.min() < -CLAMP_TOL:
        day = int(np.argmax(worst_per_day < -CLAMP_TOL))
        _clamp_step_output(states[day], day=day)  # raises with the day index
    states = np.where(states < 0.0, 0.0, states)
    return Trajectory(times, states, u_days)


def r0_inverse(theta, u=0.0) -> float:
    """Susceptible-fraction threshold below which infections decline.

    Equals gamma (2 lambda + gamma) / (alpha (1-u) (lambda + gamma)): the
    inverse basic reproduction number under a transmission reduction u < 1.
    """
    alpha, gamma, lam, _, _, _ = _coerce_params(theta)
    u = float(u)
    return gamma * (2.0 * lam + gamma) / (alpha * (1.0 - u) * (lam + gamma))


def overapprox_matrix(s0: float, theta, u=0.0) -> np.ndarray:
    """Lower-triangular generator of the linear (I, D, T) bounding system.

    Freezing S at ``s0`` (S is non-increasing) makes the (I, D, T) dynamics
    linear and an upper bound on the nonlinear flow; the returned 3x3 matrix
    is its generator. Its first diagonal entry is negative exactly when
    s0 < r0_inverse(theta, u).
    """
    alpha, gamma, lam, delta, sigma, tau = _coerce_params(theta)
    u = float(u)
    ab = alpha * (1.0 - u)
    return np.array([
        [ab * s0 - gamma * (2.0 * lam + gamma) / (lam + gamma), 0.0, 0.0],
        [gamma, -(lam + delta), 0.0],
        [0.0, delta, -(sigma + tau)],
    ])
