"""Finite scenario sets over the SIDTHE parameter vector.

A scenario is one realization of the uncertain rates together with its
probability; scenario sets discretize parameter uncertainty for the
scenario-based controller. The standard construction is a full Cartesian
grid of relative perturbations around a nominal vector.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from . import kernels
from .invariant import ParamsInterval
from .model import DEFAULT_INITIAL_STATE, Params, _coerce_state

#: Full grids grow as levels^6; refuse anything beyond this by default.
DEFAULT_GRID_CAP = 10 ** 6


@dataclass(frozen=True)
class Scenario:
    theta: Params
    probability: float

    def __post_init__(self):
        if not self.probability >= 0.0:
            raise ValueError(f"scenario probability must be >= 0, got {self.probability}")


@dataclass(frozen=True)
class ScenarioSet:
    """Ordered scenarios with probabilities on the simplex.

    Ordering is deterministic (grid construction is lexicographic with alpha
    varying slowest), so scenario indices are stable across runs.
    """

    scenarios: tuple[Scenario, ...]
    nominal_index: int = 0

    def __post_init__(self):
        if len(self.scenarios) == 0:
            raise ValueError("scenario set must contain at least one scenario")
        if not 0 <= self.nominal_index < len(self.scenarios):
            raise ValueError(f"nominal index {self.nominal_index} out of range")
        total = self.probabilities().sum()
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"scenario probabilities sum to {total}, expected 1")

    def __len__(self) -> int:
        return len(self.scenarios)

    @property
    def nominal(self) -> Params:
        return self.scenarios[self.nominal_index].theta

    def thetas(self) -> np.ndarray:
        """(N_S, 6) array of parameter vectors in scenario order."""
        return np.array([s.theta.as_array() for s in self.scenarios])

    def probabilities(self) -> np.ndarray:
        return np.array([s.probability for s in self.scenarios])

    def params_interval(self) -> ParamsInterval:
        return params_interval(self)

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.thetas().tobytes())
        digest.update(self.probabilities().tobytes())
        digest.update(str(self.nominal_index).encode())
        return digest.hexdigest()[:16]

    def to_records(self) -> list[dict]:
        return [{"theta": s.theta.as_array().tolist(), "p": s.probability}
                for s in self.scenarios]

    @classmethod
    def from_records(cls, records, nominal_index: int = 0) -> "ScenarioSet":
        scenarios = tuple(Scenario(Params.from_array(r["theta"]), float(r["p"]))
                          for r in records)
        return cls(scenarios, nominal_index)


def uniform_probabilities(n: int) -> np.ndarray:
    """Probability vector with n equal entries."""
    if n < 1:
        raise ValueError(f"need at least one scenario, got n={n}")
    return np.full(n, 1.0 / n)


def grid_scenarios(nominal: Params, rel_perturbation: float = 0.05, levels: int = 3,
                   max_scenarios: int = DEFAULT_GRID_CAP) -> ScenarioSet:
    """Full Cartesian grid of relative perturbations with uniform probabilities.

    Each parameter takes ``levels`` multiplicative factors evenly spaced in
    [1 - rel_perturbation, 1 + rel_perturbation]; levels must be odd so the
    center factor is exactly 1 and the all-center combination equals the
    nominal vector. Ordering is lexicographic with alpha varying slowest.
    """
    if levels < 1 or levels % 2 == 0:
        raise ValueError(f"levels must be odd and >= 1, got {levels}")
    if not 0.0 <= rel_perturbation < 1.0:
        raise ValueError(f"rel_perturbation must lie in [0, 1), got {rel_perturbation}")
    n = levels ** 6
    if n > max_scenarios:
        raise ValueError(f"grid of {n} scenarios exceeds the cap of {max_scenarios}; "
                         f"raise max_scenarios or subsample")
    factors = 1.0 + np.linspace(-rel_perturbation, rel_perturbation, levels)
    digits = np.indices((levels,) * 6).reshape(6, -1).T  # column 0 = alpha, slowest
    thetas = nominal.as_array()[None, :] * factors[digits]
    prob = 1.0 / n
    scenarios = tuple(Scenario(Params.from_array(row), prob) for row in thetas)
    return ScenarioSet(scenarios, nominal_index=(n - 1) // 2)


def params_interval(scenario_set: ScenarioSet) -> ParamsInterval:
    """Componentwise extrema of the scenario parameter vectors."""
    thetas = scenario_set.thetas()
    return ParamsInterval(Params.from_array(thetas.min(axis=0)),
                          Params.from_array(thetas.max(axis=0)))


def subsample_scenarios(scenario_set: ScenarioSet, n: int, seed: int = 0) -> ScenarioSet:
    """Uniform subsample without replacement, keeping the nominal scenario.

    Probabilities are reset to uniform over the subsample. Useful for quick
    runs; the subsample retains the original deterministic ordering.
    """
    total = len(scenario_set)
    if not 1 <= n <= total:
        raise ValueError(f"subsample size {n} outside [1, {total}]")
    rng = np.random.default_rng(seed)
    others = np.delete(np.arange(total), scenario_set.nominal_index)
    picked = rng.choice(others, size=n - 1, replace=False) if n > 1 else np.empty(0, int)
    indices = np.sort(np.concatenate([[scenario_set.nominal_index], picked.astype(int)]))
    prob = 1.0 / n
    scenarios = tuple(Scenario(scenario_set.scenarios[i].theta, prob) for i in indices)
    nominal_index = int(np.searchsorted(indices, scenario_set.nominal_index))
    return ScenarioSet(scenarios, nominal_index)


def adverse_corner(nominal: Params, rel_perturbation: float = 0.05,
                   x0=None, days: int = 280) -> Params:
    """The +/- corner that maximizes the uncontrolled peak of T.

    Evaluates all 2^6 sign corners of the perturbation box by simulating
    ``days`` days with u = 0 from ``x0`` and returns the corner whose T
    trajectory peaks highest. Deterministic.
    """
    x0 = DEFAULT_INITIAL_STATE if x0 is None else x0
    signs = np.indices((2,) * 6).reshape(6, -1).T  # 64 corners
    factors = 1.0 + rel_perturbation * np.where(signs, 1.0, -1.0)
    thetas = nominal.as_array()[None, :] * factors
    u = np.zeros((thetas.shape[0], days))
    states = kernels.rollout(_coerce_state(x0), thetas, u)
    peaks = states[:, :, 3].max(axis=1)
    return Params.from_array(thetas[int(np.argmax(peaks))])
