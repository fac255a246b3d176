"""Time-marching drivers.

Three drivers share one march loop:

* ``solve_regularized`` -- eps > 0, both s-end data imposed strongly in the
  eps-diffusion stencil and fed to the convective flux;
* ``solve_entropy``     -- eps = 0, s-end data enter only as exterior flux
  states, so they may stay unattained where characteristics leave;
* ``solve_impulsive``   -- zero source; at the snapped jump time the map
  u <- u + beta(x, s, u) is applied pointwise between two steps, and both
  one-sided fields are recorded.

The jump time is snapped to the nearest step index (the O(dt) placement
error is covered by the convergence tolerances), and the pre-jump field is
the state at that step.  Runs are deterministic: a given (spec, grid,
options, dt, m_bound) produces a bit-identical trajectory, which the
delayed-vs-impulsive comparisons exploit on the shared pre-impulse window.

If the running sup-norm escapes the invariant region the step was sized
for, the march restarts once with a doubled region; a second escape raises
``CflViolationError``.
"""

from __future__ import annotations

import numpy as np

from . import exprdsl
from .problem import Field, Trajectory
from .scheme import SchemeOptions, Stepper, SupNormExceeded

__all__ = [
    "solve_regularized", "solve_entropy", "solve_impulsive",
    "extract_s_trace", "CflViolationError", "GammaOutOfRangeError",
]


class CflViolationError(RuntimeError):
    pass


class GammaOutOfRangeError(ValueError):
    pass


def _initial_values(spec, grid):
    xc, sc = grid.cell_centers()
    vals = exprdsl.evaluate(spec.data_u0_1, {"x": xc[:, None], "s": sc[None, :]})
    return np.broadcast_to(np.asarray(vals, dtype=float),
                           (grid.nx, grid.ns)).astype(float)


def _apply_jump(spec, grid, u):
    if spec.beta is None:
        return u.copy()
    xc, sc = grid.cell_centers()
    b = exprdsl.evaluate(spec.beta, {"x": xc[:, None], "s": sc[None, :],
                                     "lambda": u})
    return u + b


def _march(spec, grid, eps, gamma, options, dt, m_bound, mode):
    options = options or SchemeOptions()
    attempts = 0
    while True:
        stepper = Stepper(spec, grid, eps=eps, gamma=gamma, options=options,
                          m_bound=m_bound, dt=dt)
        try:
            return _march_once(spec, grid, stepper, mode)
        except SupNormExceeded as exc:
            attempts += 1
            if attempts > 1:
                raise CflViolationError(str(exc)) from exc
            m_bound = 2.0 * max(stepper.m_bound, exc.sup)
            dt = None  # re-derive the step for the enlarged region


def _march_once(spec, grid, stepper, mode):
    dt = stepper.dt
    stride = stepper.options.snapshot_stride
    n_steps = stepper.n_steps
    n_tau = stepper.n_tau
    traj = Trajectory(grid=grid)
    traj.meta = {
        "mode": mode,
        "dt": dt,
        "n_steps": n_steps,
        "n_tau": n_tau,
        "stride": stride,
        "eps": stepper.eps,
        "gamma": stepper.gamma,
        "m_bound": stepper.m_bound,
        "options": stepper.options,
        "spec_hash": spec.context_hash(),
    }
    u = _initial_values(spec, grid)
    traj.append(0.0, Field(u.copy(), grid, 0.0))

    snap_at = set(range(0, n_steps + 1, stride))
    snap_at.add(n_steps)
    if n_tau is not None:
        snap_at.add(n_tau)
        snap_at.add(n_tau + 1)

    for n in range(n_steps):
        u = stepper.step(u, n * dt)
        t_new = (n + 1) * dt
        if n_tau is not None and n + 1 == n_tau:
            traj.tau_minus = Field(u.copy(), grid, t_new)
            if mode == "impulsive":
                u = _apply_jump(spec, grid, u)
                traj.tau_plus = Field(u.copy(), grid, t_new)
        if mode != "impulsive" and n_tau is not None and n + 1 == n_tau + 1:
            traj.tau_plus = Field(u.copy(), grid, t_new)
        sup = float(np.max(np.abs(u)))
        if sup > stepper.m_bound:
            raise SupNormExceeded(sup, stepper.m_bound, t_new)
        if n + 1 in snap_at:
            traj.append(t_new, Field(u.copy(), grid, t_new))
    return traj


def _require_gamma(spec, gamma):
    if spec.beta is None:
        return
    if not (0.0 < gamma <= spec.gamma0 / 2.0):
        raise GammaOutOfRangeError(
            f"delay width must lie in (0, gamma0/2] = (0, {spec.gamma0 / 2.0}]"
            f" for a delayed source; got {gamma} "
            "(use solve_impulsive for the instantaneous jump)")


def solve_regularized(spec, grid, eps=None, gamma=None, options=None,
                      dt=None, m_bound=None):
    """March the strictly parabolic regularization (eps > 0)."""
    eps = spec.epsilon if eps is None else eps
    gamma = spec.gamma if gamma is None else gamma
    if eps <= 0:
        raise ValueError(f"regularized solve needs eps > 0, got {eps}")
    _require_gamma(spec, gamma)
    return _march(spec, grid, eps, gamma, options, dt, m_bound, "regularized")


def solve_entropy(spec, grid, gamma=None, options=None, dt=None, m_bound=None):
    """March the eps = 0 scheme with flux-mediated s-end data."""
    gamma = spec.gamma if gamma is None else gamma
    _require_gamma(spec, gamma)
    return _march(spec, grid, 0.0, gamma, options, dt, m_bound, "entropy")


def solve_impulsive(spec, grid, options=None, dt=None, m_bound=None):
    """March with zero source and one pointwise jump at the snapped time."""
    if not (0.0 < spec.tau < spec.T):
        raise ValueError(f"jump time must lie in (0, T), got {spec.tau}")
    return _march(spec, grid, 0.0, 0.0, options, dt, m_bound, "impulsive")


def extract_s_trace(traj, side):
    """Per-snapshot x-profiles of the first/last interior s-cell row.

    Returns (times, array of shape (n_snapshots, nx)).  The interior row
    adjacent to the end is the discrete surrogate of the one-sided
    essential limit of the solution at that end.
    """
    if side == "s0":
        rows = traj.s0_traces
    elif side == "sS":
        rows = traj.sS_traces
    else:
        raise ValueError(f"side must be 's0' or 'sS', got {side!r}")
    return np.asarray(traj.times), np.stack(rows, axis=0)
