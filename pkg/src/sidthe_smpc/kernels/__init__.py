"""Hot-loop kernels: batched RK4 rollout, its control adjoint, and the
invariance envelope sweep.

A compiled Cython extension (``_core``) is used when it was built; otherwise
the NumPy reference (``reference``) serves as a drop-in fallback. Both
produce bitwise-identical output. Selection happens once at import and can
be forced with the environment variable ``SIDTHE_SMPC_BACKEND`` set to
``compiled`` or ``python``.
"""

from __future__ import annotations

import os

import numpy as np

from . import reference

_requested = os.environ.get("SIDTHE_SMPC_BACKEND", "auto")
if _requested not in ("auto", "compiled", "python"):
    raise ValueError(f"SIDTHE_SMPC_BACKEND must be 'auto', 'compiled' or 'python', "
                     f"got {_requested!r}")

_impl = reference
_backend = "python"
if _requested in ("auto", "compiled"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]
        _backend = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise


def backend_name() -> str:
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return _backend


def _as_batch(x0, n_batch):
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim == 1:
        x0 = np.broadcast_to(x0, (n_batch, 6))
    return np.ascontiguousarray(x0)


def rollout(x0, thetas, u, h=1.0):
    """Batched RK4 rollout; see :func:`reference.rollout`.

    ``x0`` may be a single (6,) state shared by the whole batch or one state
    per batch entry.
    """
    u = np.ascontiguousarray(u, dtype=np.float64)
    thetas = np.ascontiguousarray(thetas, dtype=np.float64)
    if thetas.shape != (u.shape[0], 6):
        raise ValueError(f"thetas shape {thetas.shape} does not match batch {u.shape[0]}")
    return _impl.rollout(_as_batch(x0, u.shape[0]), thetas, u, float(h))


def rollout_vjp(states, thetas, u, seeds, h=1.0):
    """Adjoint of :func:`rollout` onto the controls; see the reference kernel."""
    states = np.ascontiguousarray(states, dtype=np.float64)
    u = np.ascontiguousarray(u, dtype=np.float64)
    seeds = np.ascontiguousarray(seeds, dtype=np.float64)
    thetas = np.ascontiguousarray(thetas, dtype=np.float64)
    if states.shape != (u.shape[0], u.shape[1] + 1, 6) or seeds.shape != states.shape:
        raise ValueError("states/seeds shapes inconsistent with controls")
    return _impl.rollout_vjp(states, thetas, u, seeds, float(h))


def invariance_envelope(x0, thetas, bounds, u_max, band, h, n_steps):
    """Running max of (S, I, D, T) under band feedback; see the reference kernel."""
    thetas = np.ascontiguousarray(thetas, dtype=np.float64)
    x0 = _as_batch(x0, thetas.shape[0])
    bounds = np.ascontiguousarray(bounds, dtype=np.float64)
    if bounds.shape != (4,):
        raise ValueError("bounds must hold the four (S, I, D, T) upper limits")
    return _impl.invariance_envelope(x0, thetas, bounds, float(u_max), float(band),
                                     float(h), int(n_steps))
