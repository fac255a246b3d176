"""Kinetic chi-function calculus.

chi(lambda; v) is 1 on (0, v), -1 on (v, 0) and 0 otherwise.  Its two basic
integral identities,

    integral of psi'(lambda) chi(lambda; v) dlambda = psi(v) - psi(0),
    integral of |chi(lambda; v) - chi(lambda; w)| dlambda = |v - w|,

turn pointwise statements about a solution into statements about integrals
over the value variable.  The jump diagnostic below uses exactly that: the
kinetic form of the impulse condition

    int chi(.; u+) = int (1 + d beta/d lambda) chi(.; u-) + beta(x, s, 0)

reduces, cell by cell, to u+ = u- + beta(x, s, u-).

All quadrature here is the midpoint rule on a uniform lambda grid: chi is
piecewise constant, and midpoints never hit its breakpoints.
"""

from __future__ import annotations

import numpy as np

from . import exprdsl

__all__ = [
    "chi", "chi_integral", "chi_distance", "kinetic_impulse_residual",
    "LambdaTooSmallError", "GridMismatchError",
]


class LambdaTooSmallError(ValueError):
    pass


class GridMismatchError(ValueError):
    pass


def chi(lam, v):
    """chi(lambda; v): +1 if 0 < lambda < v, -1 if v < lambda < 0, else 0."""
    lam = np.asarray(lam, dtype=float)
    v = np.asarray(v, dtype=float)
    pos = (lam > 0) & (lam < v)
    neg = (lam < 0) & (lam > v)
    out = np.where(pos, 1, np.where(neg, -1, 0))
    return int(out) if out.ndim == 0 else out


def _midpoints(Lambda, n_cells):
    dlam = 2.0 * Lambda / n_cells
    return -Lambda + (np.arange(n_cells) + 0.5) * dlam, dlam


def chi_integral(psi_prime, v, Lambda, n_cells=1024):
    """Midpoint quadrature of int psi'(lambda) chi(lambda; v) dlambda.

    psi_prime may be an Expr in ``lambda`` or any callable.  Result equals
    psi(v) - psi(0) up to O(dlambda).
    """
    if Lambda < abs(v):
        raise LambdaTooSmallError(f"Lambda={Lambda} < |v|={abs(v)}")
    mids, dlam = _midpoints(Lambda, n_cells)
    if callable(psi_prime):
        w = psi_prime(mids)
    else:
        w = exprdsl.evaluate(psi_prime, {"lambda": mids})
    return float(np.sum(w * chi(mids, v)) * dlam)


def chi_distance(v, w, Lambda, n_cells=1024):
    """Midpoint quadrature of int |chi(lambda; v) - chi(lambda; w)| dlambda."""
    if Lambda < max(abs(v), abs(w)):
        raise LambdaTooSmallError(f"Lambda={Lambda} < max(|v|,|w|)")
    mids, dlam = _midpoints(Lambda, n_cells)
    return float(np.sum(np.abs(chi(mids, v) - chi(mids, w))) * dlam)


def kinetic_impulse_residual(u_minus, u_plus, beta, M3, n_cells=1024):
    """Sup over grid cells of the kinetic jump-condition defect.

    For fields on the same grid, computes per cell

        | int chi(.; u+) - int (1 + d beta/d lambda) chi(.; u-)
          - beta(x, s, 0) |

    with midpoint quadrature on [-M3, M3], and returns the maximum.  beta
    may be None (pure continuity check).
    """
    vm = getattr(u_minus, "values", u_minus)
    vp = getattr(u_plus, "values", u_plus)
    vm = np.asarray(vm, dtype=float)
    vp = np.asarray(vp, dtype=float)
    if vm.shape != vp.shape:
        raise GridMismatchError(f"{vm.shape} vs {vp.shape}")
    gm = getattr(u_minus, "grid", None)
    gp = getattr(u_plus, "grid", None)
    if gm is not None and gp is not None and gm != gp:
        raise GridMismatchError("fields live on different grids")

    mids, dlam = _midpoints(M3, n_cells)
    lam = mids.reshape((-1,) + (1,) * vm.ndim)
    lhs = np.sum(chi(lam, vp[None]), axis=0) * dlam

    if beta is None:
        rhs = np.sum(chi(lam, vm[None]), axis=0) * dlam
        return float(np.max(np.abs(lhs - rhs)))

    if gm is not None:
        xc, sc = gm.cell_centers()
        bind = {"x": xc[:, None], "s": sc[None, :]}
    else:
        bind = {"x": 0.0, "s": 0.0}
    _, dbeta = exprdsl.eval_dual(beta, {**{k: np.asarray(val)[None] for k, val in bind.items()},
                                        "lambda": lam}, "lambda")
    weight = 1.0 + dbeta
    rhs = np.sum(weight * chi(lam, vm[None]), axis=0) * dlam
    beta0 = exprdsl.evaluate(beta, {**bind, "lambda": 0.0})
    return float(np.max(np.abs(lhs - rhs - beta0)))
