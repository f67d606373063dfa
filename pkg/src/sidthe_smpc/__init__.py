"""SIDTHE epidemic model with scenario-based stochastic NMPC for NPI scheduling."""

from .model import (
    COMPARTMENTS,
    DEFAULT_INITIAL_STATE,
    NOMINAL_PARAMS,
    RAW_INITIAL_STATE,
    ControlInput,
    IntegrationError,
    Params,
    State,
    Trajectory,
    overapprox_matrix,
    r0_inverse,
    rk4_step,
    sidthe_rhs,
    simulate,
)

__version__ = "0.1.0"
