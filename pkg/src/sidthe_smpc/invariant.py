"""Positive invariant boxes for the controlled SIDTHE dynamics.

A hospital-capacity cap T <= t_max can only be made invariant by also capping
the upstream compartments: the box [0, s_max] x [0, i_max] x [0, d_max] x
[0, t_max] x [0,1]^2 is positively invariant provided the feedback applies
u_max whenever I sits at its bound. The bounds follow from requiring each
compartment's derivative to be non-positive at its own cap given the caps
upstream of it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import Params, State, _coerce_state, sidthe_rhs

#: Sign checks on face derivatives run in floating point, so the proof's
#: strict inequalities become tolerance-band checks at this width.
BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class InvariantBox:
    """Upper bounds on (S, I, D, T); H and E are implicitly bounded by 1."""

    s_max: float
    i_max: float
    d_max: float
    t_max: float

    def __post_init__(self):
        for name, value in zip(("s_max", "i_max", "d_max", "t_max"), self.as_array()):
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")

    def as_array(self) -> np.ndarray:
        return np.array([self.s_max, self.i_max, self.d_max, self.t_max])

    def as_dict(self) -> dict[str, float]:
        return {"s_max": self.s_max, "i_max": self.i_max,
                "d_max": self.d_max, "t_max": self.t_max}


@dataclass(frozen=True)
class ParamsInterval:
    """Componentwise parameter interval 0 < lower <= upper."""

    lower: Params
    upper: Params

    def __post_init__(self):
        lo, up = self.lower.as_array(), self.upper.as_array()
        if not np.all(lo <= up):
            raise ValueError("interval requires lower <= upper componentwise")

    def corners(self):
        """All 2^6 corner parameter vectors (test oracle for robust bounds)."""
        lo, up = self.lower.as_array(), self.upper.as_array()
        for picks in itertools.product((0, 1), repeat=6):
            yield Params.from_array(np.where(picks, up, lo))

    def contains(self, theta: Params) -> bool:
        arr = theta.as_array()
        return bool(np.all(self.lower.as_array() <= arr)
                    and np.all(arr <= self.upper.as_array()))


def invariant_box(theta: Params, u_max: float, t_max: float) -> InvariantBox:
    """Invariant box for a single parameter vector.

    s_max caps S where infections can no longer grow even at u = u_max;
    i_max and d_max are the largest values whose downstream inflow can be
    absorbed at the D and T caps. All bounds are clipped to 1.
    """
    if not 0.0 <= u_max < 1.0:
        raise ValueError(f"u_max must lie in [0, 1), got {u_max}")
    if not 0.0 < t_max <= 1.0:
        raise ValueError(f"t_max must lie in (0, 1], got {t_max}")
    a, g, l, d, s, t = theta.as_array()
    s_max = g * (1.0 + l / (l + g)) / (a * (1.0 - u_max))
    i_max = (d + l) * (s + t) / (g * d) * t_max
    d_max = (s + t) / d * t_max
    return InvariantBox(min(1.0, s_max), min(1.0, i_max), min(1.0, d_max), t_max)


def robust_invariant_box(interval: ParamsInterval, u_max: float, t_max: float) -> InvariantBox:
    """Invariant box valid for every parameter vector in the interval.

    Each bound is evaluated with the interval's lower value at every
    numerator appearance and the upper value at every denominator appearance,
    which under-approximates the bound of any single vector in the interval.
    """
    if not 0.0 <= u_max < 1.0:
        raise ValueError(f"u_max must lie in [0, 1), got {u_max}")
    if not 0.0 < t_max <= 1.0:
        raise ValueError(f"t_max must lie in (0, 1], got {t_max}")
    lo, up = interval.lower.as_array(), interval.upper.as_array()
    a_up, g_up, l_up, d_up, s_up, t_up = up
    a_lo, g_lo, l_lo, d_lo, s_lo, t_lo = lo
    s_max = g_lo * (1.0 + l_lo / (l_up + g_up)) / (a_up * (1.0 - u_max))
    i_max = (d_lo + l_lo) * (s_lo + t_lo) / (g_up * d_up) * t_max
    d_max = (s_lo + t_lo) / d_up * t_max
    return InvariantBox(min(1.0, s_max), min(1.0, i_max), min(1.0, d_max), t_max)


def contains(box: InvariantBox, x, atol: float = 0.0) -> bool:
    """Whether the (S, I, D, T) components of ``x`` respect the box bounds."""
    arr = _coerce_state(x)
    return bool(np.all(arr[..., :4] <= box.as_array() + atol))


@dataclass(frozen=True)
class FaceCheck:
    """Result of sampling one face of the box."""

    face: str
    n_samples: int
    worst_value: float
    worst_state: np.ndarray
    passed: bool


@dataclass(frozen=True)
class NagumoReport:
    passed: bool
    faces: tuple[FaceCheck, ...]

    def failures(self) -> tuple[FaceCheck, ...]:
        return tuple(f for f in self.faces if not f.passed)


def _sample_on_face(rng, box: InvariantBox, n: int, pin: str | None, pin_value: float):
    """Random simplex states inside the box with one coordinate pinned.

    The free (S, I, D, T) coordinates are uniform within their bounds
    (rejecting draws whose sum exceeds 1); the remaining mass is split
    between H and E, except on the H/E faces where the split is pinned.
    """
    comp = {"s": 0, "i": 1, "d": 2, "t": 3, "h": 4, "e": 5}
    out = np.empty((n, 6))
    limits = np.minimum(box.as_array(), 1.0)
    if pin in ("s", "i", "d", "t"):
        # Free coordinates must fit in the mass the pinned one leaves over,
        # otherwise rejection below would almost never terminate.
        limits = np.minimum(limits, 1.0 - pin_value)
    filled = 0
    while filled < n:
        m = n - filled
        sidt = rng.uniform(0.0, limits, size=(m, 4))
        if pin in ("s", "i", "d", "t"):
            sidt[:, comp[pin]] = pin_value
        if pin in ("h", "e") and pin_value > 0.0:
            sidt = np.zeros_like(sidt)  # x_i = 1 forces all others to zero
        keep = sidt.sum(axis=1) <= 1.0
        kept = sidt[keep]
        rem = 1.0 - kept.sum(axis=1)
        if pin == "h":
            h = np.full(rem.shape, pin_value)
            e = rem - h
        elif pin == "e":
            e = np.full(rem.shape, pin_value)
            h = rem - e
        else:
            w = rng.uniform(0.0, 1.0, size=rem.shape)
            h = rem * w
            e = rem - h
        block = np.column_stack([kept, h, e])
        take = min(m, block.shape[0])
        out[filled:filled + take] = block[:take]
        filled += take
    return out


def sample_states_in_box(box: InvariantBox, n: int, rng) -> np.ndarray:
    """Random simplex states with (S, I, D, T) inside the box."""
    return _sample_on_face(rng, box, n, pin=None, pin_value=0.0)


def nagumo_boundary_check(box: InvariantBox, theta: Params, u_max: float,
                          samples: int = 10_000, seed: int = 0,
                          tol: float = BOUNDARY_TOL) -> NagumoReport:
    """Sample every face of the box and verify the boundary flow conditions.

    At each zero face the pinned compartment's derivative must be >= -tol
    for any admissible control; at the S/I/D/T upper faces it must be
    <= tol, with u = u_max required on the I face (elsewhere a random
    admissible control is used). The H = 1 and E = 1 faces force all other
    compartments to zero, so the derivative is exactly zero there.
    """
    rng = np.random.default_rng(seed)
    comp = {"s": 0, "i": 1, "d": 2, "t": 3, "h": 4, "e": 5}
    faces: list[FaceCheck] = []

    def check(face: str, pin: str, pin_value: float, u, sign: str):
        states = _sample_on_face(rng, box, samples, pin, pin_value)
        deriv = sidthe_rhs(states, u, theta)[:, comp[pin]]
        if sign == "lower":  # need deriv >= -tol
            idx = int(np.argmin(deriv))
            passed = deriv[idx] >= -tol
        else:  # need deriv <= tol
            idx = int(np.argmax(deriv))
            passed = deriv[idx] <= tol
        faces.append(FaceCheck(face, samples, float(deriv[idx]), states[idx], bool(passed)))

    for name in ("s", "i", "d", "t", "h", "e"):
        check(f"{name}=0", name, 0.0, rng.uniform(0.0, u_max, size=samples), "lower")
    check("s=s_max", "s", min(box.s_max, 1.0), rng.uniform(0.0, u_max, size=samples), "upper")
    check("i=i_max", "i", box.i_max, u_max, "upper")
    check("d=d_max", "d", box.d_max, rng.uniform(0.0, u_max, size=samples), "upper")
    check("t=t_max", "t", box.t_max, rng.uniform(0.0, u_max, size=samples), "upper")
    check("h=1", "h", 1.0, rng.uniform(0.0, u_max, size=samples), "upper")
    check("e=1", "e", 1.0, rng.uniform(0.0, u_max, size=samples), "upper")

    return NagumoReport(all(f.passed for f in faces), tuple(faces))


def band_feedback_envelope(box: InvariantBox, thetas, x0s, days: float,
                           u_max: float, band: float = 0.01, h: float = 0.01) -> np.ndarray:
    """Componentwise (S, I, D, T) maxima under the bang band feedback.

    The feedback applies u_max whenever any of S, I, D, T is within the
    relative ``band`` of its bound. The trigger is sampled once per step of
    size ``h``: near the I bound infections can grow at roughly 0.23/day, so
    the step must satisfy exp(0.23 h) - 1 < band for the trigger to engage
    before the bound is crossed (h = band works with a wide margin).

    Returns an array of shape (n_states * n_thetas, 4): the trajectory
    maxima for every (initial state, parameter vector) pair.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    pairs_x = np.repeat(x0s, thetas.shape[0], axis=0)
    pairs_th = np.tile(thetas, (x0s.shape[0], 1))
    n_steps = int(round(days / h))
    return kernels.invariance_envelope(pairs_x, pairs_th, box.as_array(),
                                       u_max, band, h, n_steps)


def in_box_state(box: InvariantBox, x: State | np.ndarray, atol: float = 0.0) -> bool:
    """Alias of :func:`contains` accepting raw arrays."""
    return contains(box, x, atol=atol)
