"""Problem definitions, grids, fields, and closed-form solution bounds.

The bounds implemented here are the quantitative side of the solver's
a-priori theory:

* ``max_principle_bound`` -- sup-norm bound for sources obeying a quadratic
  growth condition with constants (b1g, b2g); the infimum over the free
  exponential-weight parameter is taken numerically by golden-section.
* ``refined_max_bound`` -- sharper sup-norm bound for a delayed impulse
  source whose perturbation vanishes for |value| > b1.
* ``stability_rhs`` -- right-hand side of the L1 data-stability estimate,
  with the Gronwall weight accumulated by the same midpoint t-quadrature
  the solver uses for the source.
* ``impulsive_bounds`` -- sup-norm bounds before (M2) and after (M3) the
  jump of the impulsive problem.
* ``stability_rhs_impulsive`` -- the impulsive counterpart of the L1
  stability estimate, including the perturbation-difference terms.

Sup-norms of expression-defined data are estimated by dense sampling
(256 points per axis).  Callers that assert these bounds apply a 1%
inflation via the ``inflate`` argument.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import exprdsl, kernels

__all__ = [
    "ProblemSpec", "Grid", "Field", "Trajectory",
    "max_principle_bound", "refined_max_bound", "stability_rhs",
    "stability_rhs_impulsive", "impulsive_bounds",
    "sample_sup", "data_sup_norms", "consistency_errors",
    "ZeroInitialDataError", "golden_section_min",
]

_SAMPLES = 256
_COLLAR = 0.05


class ZeroInitialDataError(ValueError):
    """The refined bound's exponent is undefined for vanishing initial data."""


@dataclass(frozen=True)
class Grid:
    nx: int
    ns: int
    L: float
    S: float

    @property
    def dx(self):
        return self.L / self.nx

    @property
    def ds(self):
        return self.S / self.ns

    @property
    def cell_volume(self):
        return self.dx * self.ds

    def cell_centers(self):
        x = (np.arange(self.nx) + 0.5) * self.dx
        s = (np.arange(self.ns) + 0.5) * self.ds
        return x, s


@dataclass(frozen=True)
class ProblemSpec:
    """Full problem definition; expressions are exprdsl ASTs."""

    d: int
    L: float
    T: float
    S: float
    flux_a: exprdsl.Expr
    flux_phi: tuple
    data_u0_1: exprdsl.Expr
    data_u0_2: exprdsl.Expr
    data_uS_2: exprdsl.Expr
    beta: exprdsl.Expr | None = None
    tau: float = 0.5
    gamma: float = 0.0
    epsilon: float = 0.0
    b1: float = 0.0

    @property
    def gamma0(self):
        return min(self.tau, self.T - self.tau)

    @property
    def omega_measure(self):
        return self.L ** self.d

    def describe(self):
        phi = ",".join(exprdsl.to_string(p) for p in self.flux_phi)
        beta = exprdsl.to_string(self.beta) if self.beta is not None else "-"
        return (f"d={self.d};L={self.L!r};T={self.T!r};S={self.S!r};"
                f"a={exprdsl.to_string(self.flux_a)};phi={phi};beta={beta};"
                f"tau={self.tau!r};gamma={self.gamma!r};eps={self.epsilon!r};"
                f"b1={self.b1!r};u0_1={exprdsl.to_string(self.data_u0_1)};"
                f"u0_2={exprdsl.to_string(self.data_u0_2)};"
                f"uS_2={exprdsl.to_string(self.data_uS_2)}")

    def context_hash(self, extra=""):
        return hashlib.sha256((self.describe() + "|" + extra).encode()).hexdigest()[:16]

    def with_data(self, **kwargs):
        return replace(self, **kwargs)


@dataclass
class Field:
    """Cell-averaged values u(i_x, i_s) at a fixed time."""

    values: np.ndarray
    grid: Grid
    t: float = 0.0

    def sup_norm(self):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def l1_norm(self):
        return float(np.sum(np.abs(self.values)) * self.grid.cell_volume)

    def assert_finite(self):
        if not np.all(np.isfinite(self.values)):
            bad = np.argwhere(~np.isfinite(self.values))[0]
            raise ValueError(f"non-finite value at cell {tuple(bad)}")


@dataclass
class Trajectory:
    """Time-ordered snapshots plus the extracted boundary/jump traces."""

    grid: Grid
    times: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    s0_traces: list = field(default_factory=list)
    sS_traces: list = field(default_factory=list)
    tau_minus: Field | None = None
    tau_plus: Field | None = None
    meta: dict = field(default_factory=dict)

    def append(self, t, fld):
        if self.times and t <= self.times[-1]:
            raise ValueError("snapshot times must be strictly increasing")
        self.times.append(t)
        self.fields.append(fld)
        self.s0_traces.append(fld.values[:, 0].copy())
        self.sS_traces.append(fld.values[:, -1].copy())

    @property
    def final(self):
        return self.fields[-1]


# --- spec consistency ------------------------------------------------------

def _collar_max(expr, names, extents, n=128):
    """Max |expr| on the relative-width-0.05 collar of a 2-D box."""
    a = np.linspace(0.0, extents[0], n)
    b = np.linspace(0.0, extents[1], n)
    va, vb = np.meshgrid(a, b, indexing="ij")
    collar = ((va <= _COLLAR * extents[0]) | (va >= (1 - _COLLAR) * extents[0])
              | (vb <= _COLLAR * extents[1]) | (vb >= (1 - _COLLAR) * extents[1]))
    vals = np.broadcast_to(
        np.asarray(exprdsl.evaluate(expr, {names[0]: va, names[1]: vb}),
                   dtype=float), va.shape)
    return float(np.max(np.abs(vals[collar])))


def consistency_errors(spec):
    """Named violations of the load-time invariants (empty list when clean)."""
    errors = []
    if spec.d != 1:
        errors.append(f"dimension: only d=1 is supported, got d={spec.d}")
    a0 = float(exprdsl.evaluate(spec.flux_a, {"lambda": 0.0}))
    if a0 != 0.0:
        errors.append(f"flux a: a(0) = {a0} != 0")
    for i, phi in enumerate(spec.flux_phi, start=1):
        p0 = float(exprdsl.evaluate(phi, {"lambda": 0.0}))
        if p0 != 0.0:
            errors.append(f"flux phi_{i}: phi_{i}(0) = {p0} != 0")
    if not (0.0 < spec.tau < spec.T):
        errors.append(f"tau: need 0 < tau < T, got tau={spec.tau}, T={spec.T}")
    else:
        if spec.gamma < 0:
            errors.append(f"gamma: must be >= 0, got {spec.gamma}")
        elif spec.gamma > spec.gamma0 / 2.0:
            errors.append(
                f"gamma: gamma = {spec.gamma} exceeds gamma0/2 = "
                f"{spec.gamma0 / 2.0} where gamma0 = min(tau, T - tau)")
    if spec.epsilon < 0:
        errors.append(f"epsilon: must be >= 0, got {spec.epsilon}")
    m = _collar_max(spec.data_u0_1, ("x", "s"), (spec.L, spec.S))
    if m >= 1e-12:
        errors.append(f"data u0_1: |value| = {m:.3e} on the boundary collar")
    for name, expr in (("u0_2", spec.data_u0_2), ("uS_2", spec.data_uS_2)):
        m = _collar_max(expr, ("x", "t"), (spec.L, spec.T))
        if m >= 1e-12:
            errors.append(f"data {name}: |value| = {m:.3e} on the boundary collar")
    return errors


# --- sampled sup-norms -----------------------------------------------------

def sample_sup(expr, names, ranges, n=_SAMPLES, inflate=1.0):
    """Sampled sup of |expr| on a product of intervals."""
    axes = [np.linspace(lo, hi, n) for lo, hi in ranges]
    grids = np.meshgrid(*axes, indexing="ij")
    vals = exprdsl.evaluate(expr, dict(zip(names, grids)))
    vals = np.broadcast_to(np.asarray(vals, dtype=float), grids[0].shape)
    return float(np.max(np.abs(vals))) * inflate


def data_sup_norms(spec, t_window=None, inflate=1.0):
    """Sampled sup-norms of the three data functions.

    ``t_window`` restricts the time interval of the s-boundary data;
    defaults to (0, T).
    """
    lo, hi = t_window if t_window is not None else (0.0, spec.T)
    hi = max(hi, lo + 1e-12)
    return {
        "u0_1": sample_sup(spec.data_u0_1, ("x", "s"),
                           [(0.0, spec.L), (0.0, spec.S)], inflate=inflate),
        "u0_2": sample_sup(spec.data_u0_2, ("x", "t"),
                           [(0.0, spec.L), (lo, hi)], inflate=inflate),
        "uS_2": sample_sup(spec.data_uS_2, ("x", "t"),
                           [(0.0, spec.L), (lo, hi)], inflate=inflate),
    }


def sampled_deriv_max(expr, lo, hi, n=4097):
    """Max |d expr / d lambda| on [lo, hi] by dense sampling."""
    lam = np.linspace(lo, hi, n)
    _, d = exprdsl.eval_dual(expr, {"lambda": lam}, "lambda")
    return float(np.max(np.abs(d)))


# --- closed-form bounds ----------------------------------------------------

def golden_section_min(f, a, b, tol=1e-10):
    """Golden-section minimization of a unimodal function on [a, b]."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = f(x2)
    x = 0.5 * (a + b)
    return x, f(x)


def max_principle_bound(spec, t_prime, b1g, b2g, inflate=1.0):
    """Sup-norm bound M(t'): minimum over xi > b1g of

        exp(xi t') * max(data norms, sqrt(b2g / (xi - b1g))).
    """
    norms = data_sup_norms(spec, (0.0, t_prime), inflate=inflate)
    dnorm = max(norms.values())

    def objective(xi):
        tail = np.sqrt(b2g / (xi - b1g)) if b2g > 0 else 0.0
        return np.exp(xi * t_prime) * max(dnorm, tail)

    _, value = golden_section_min(objective, b1g + 1e-9, b1g + 50.0)
    return float(value)


def refined_max_bound(spec, t_prime, inflate=1.0):
    """Sharper bound M7(t') for the delayed-impulse source.

    The exponent is zero when b1 <= ||u0_1|| - 1 (the perturbation is
    already cut off within the data range), and otherwise grows just fast
    enough that the weighted solution clears the perturbation's support
    before the impulse window opens.
    """
    if spec.gamma > 0 and spec.gamma > spec.gamma0 / 2.0:
        raise ValueError("refined bound requires gamma <= gamma0/2")
    norms = data_sup_norms(spec, (0.0, spec.T), inflate=inflate)
    u01 = norms["u0_1"]
    b1 = spec.b1 if spec.beta is not None else 0.0
    if b1 <= u01 - 1.0:
        xi_star = 0.0
    else:
        if u01 == 0.0:
            raise ZeroInitialDataError(
                "refined bound undefined: ||u0_1|| = 0 with b1 > -1")
        xi_star = 2.0 / (2.0 * spec.tau - spec.gamma0) * np.log((b1 + 1.0) / u01)
    return float(np.exp(xi_star * t_prime) * max(norms.values()))


def _gronwall_weights(spec, b0, n_cells, dt):
    """Cumulative source-Lipschitz integral at t-cell midpoints."""
    mids = (np.arange(n_cells) + 0.5) * dt
    if spec.beta is None or spec.gamma <= 0 or b0 == 0.0:
        rate = np.zeros(n_cells)
    else:
        rate = b0 * kernels.k_gamma(mids, spec.tau, spec.gamma)
    g = np.cumsum(rate) * dt
    return mids, g


def stability_rhs(spec, t, d_init, d_s0, d_sS, b0, m1=None, dt=None):
    """Right-hand side of the L1 stability estimate at time t.

        exp(G(t)) * [d_init + max|a'| * int_0^t exp(-G) (d_s0 + d_sS) dt']

    ``d_s0`` and ``d_sS`` are L1(x) boundary-data differences sampled at
    t-cell midpoints with spacing ``dt`` (default T/len); G accumulates
    the source's value-Lipschitz rate with the same midpoint rule.
    """
    d_s0 = np.asarray(d_s0, dtype=float)
    d_sS = np.asarray(d_sS, dtype=float)
    n = len(d_s0)
    if dt is None:
        dt = spec.T / max(n, 1)
    if m1 is None:
        if spec.beta is not None and spec.gamma > 0:
            b1g, b2g = kernels.source_growth_constants(
                spec.beta, spec.gamma, b0, L=spec.L, S=spec.S, b1=spec.b1)
        else:
            b1g = b2g = 0.0
        m1 = max_principle_bound(spec, max(t, 1e-9), b1g, b2g)
    mids, g = _gronwall_weights(spec, b0, n, dt)
    a_max = sampled_deriv_max(spec.flux_a, -m1, m1)
    live = mids < t
    g_t = float(np.interp(t, np.concatenate(([0.0], mids)),
                          np.concatenate(([0.0], g))))
    boundary = float(np.sum(np.exp(-g[live]) * (d_s0[live] + d_sS[live])) * dt)
    return float(np.exp(g_t) * (d_init + a_max * boundary))


def impulsive_bounds(spec, inflate=1.0):
    """Sup-norm bounds (M2, M3) for the impulsive problem.

    M2 bounds the solution before the jump; M3 = max(M2 + sup|beta| over
    the pre-jump range, post-jump boundary-data norms) bounds it after.
    """
    pre = data_sup_norms(spec, (0.0, spec.tau), inflate=inflate)
    m2 = max(pre.values())
    if spec.beta is not None:
        beta_sup = sample_sup(spec.beta, ("x", "s", "lambda"),
                              [(0.0, spec.L), (0.0, spec.S), (-m2, m2)],
                              n=64, inflate=inflate)
    else:
        beta_sup = 0.0
    post = data_sup_norms(spec, (spec.tau, spec.T), inflate=inflate)
    m3 = max(m2 + beta_sup, post["u0_2"], post["uS_2"])
    return m2, m3


def stability_rhs_impulsive(spec1, spec2, t, d_init, d_s0, d_sS, dt=None):
    """Right-hand side of the L1 stability estimate for two impulsive runs.

    Boundary contributions enter through their time integrals; past the
    jump time the bound gains the perturbation-difference term and a
    pre-jump bound scaled by the first perturbation's value-Lipschitz
    constant.
    """
    d_s0 = np.asarray(d_s0, dtype=float)
    d_sS = np.asarray(d_sS, dtype=float)
    n = len(d_s0)
    if dt is None:
        dt = spec1.T / max(n, 1)
    mids = (np.arange(n) + 0.5) * dt

    def norms_for(spec, window):
        return data_sup_norms(spec, window)

    pre1 = norms_for(spec1, (0.0, spec1.tau))
    pre2 = norms_for(spec2, (0.0, spec1.tau))
    m5 = max(max(pre1.values()), max(pre2.values()))

    def beta_sup(beta):
        if beta is None:
            return 0.0
        return sample_sup(beta, ("x", "s", "lambda"),
                          [(0.0, spec1.L), (0.0, spec1.S), (-m5, m5)], n=64)

    post1 = norms_for(spec1, (spec1.tau, spec1.T))
    post2 = norms_for(spec2, (spec1.tau, spec1.T))
    m4 = max(m5 + beta_sup(spec1.beta), post1["u0_2"], post1["uS_2"],
             m5 + beta_sup(spec2.beta), post2["u0_2"], post2["uS_2"])

    a_m4 = sampled_deriv_max(spec1.flux_a, -m4, m4)
    live = mids < t
    boundary_t = float(np.sum((d_s0[live] + d_sS[live])) * dt)
    rhs = d_init + a_m4 * boundary_t
    if t >= spec1.tau:
        if spec1.beta is not None and spec2.beta is not None:
            lam = np.linspace(-m5, m5, 64)
            xg = np.linspace(0.0, spec1.L, 64)
            sg = np.linspace(0.0, spec1.S, 64)
            bind = {"x": xg[:, None, None], "s": sg[None, :, None],
                    "lambda": lam[None, None, :]}
            diff = np.abs(np.asarray(exprdsl.evaluate(spec1.beta, bind))
                          - np.asarray(exprdsl.evaluate(spec2.beta, bind)))
            beta_diff = float(np.max(diff))
            lam3 = np.linspace(-m5, m5, 256)
            _, db = exprdsl.eval_dual(
                spec1.beta, {"x": xg[:, None, None], "s": sg[None, :, None],
                             "lambda": lam3[None, None, :]}, "lambda")
            db1 = float(np.max(np.abs(db)))
        elif spec1.beta is None and spec2.beta is None:
            beta_diff = 0.0
            db1 = 0.0
        else:
            only = spec1.beta if spec1.beta is not None else spec2.beta
            beta_diff = sample_sup(only, ("x", "s", "lambda"),
                                   [(0.0, spec1.L), (0.0, spec1.S), (-m5, m5)],
                                   n=64)
            db1 = 0.0
            if spec1.beta is not None:
                lam3 = np.linspace(-m5, m5, 256)
                xg = np.linspace(0.0, spec1.L, 64)
                sg = np.linspace(0.0, spec1.S, 64)
                _, db = exprdsl.eval_dual(
                    spec1.beta, {"x": xg[:, None, None], "s": sg[None, :, None],
                                 "lambda": lam3[None, None, :]}, "lambda")
                db1 = float(np.max(np.abs(db)))
        a_m5 = sampled_deriv_max(spec1.flux_a, -m5, m5)
        pre_mask = mids < spec1.tau
        boundary_tau = float(np.sum((d_s0[pre_mask] + d_sS[pre_mask])) * dt)
        rhs += (spec1.S * spec1.omega_measure * beta_diff
                + db1 * (d_init + a_m5 * boundary_tau))
    return float(rhs)
