"""Shared solver runs; session-scoped because full marches dominate runtime."""

import numpy as np
import pytest

from upkolmo import solver, verify
from upkolmo.scheme import SchemeOptions, Stepper, predicted_sup
from scenarios import (diffusionless_options, nosource_spec, perturbed_spec,
                       shock_spec, source_spec, unattainable_spec, unit_grid)


@pytest.fixture(scope="session")
def grid64():
    return unit_grid(64)


@pytest.fixture(scope="session")
def gamma_family(grid64):
    """Entropy runs across delay widths plus the impulsive reference,
    with a common step and invariant region."""
    spec = source_spec()
    gammas = [0.2, 0.1, 0.05, 0.025]
    m_common = 1.05 * predicted_sup(spec) + 0.5
    dts = [Stepper(spec, grid64, eps=0.0, gamma=g, m_bound=m_common).dt
           for g in gammas]
    dts.append(Stepper(spec, grid64, eps=0.0, gamma=0.0, m_bound=m_common).dt)
    dt = min(dts)
    ref = solver.solve_impulsive(spec, grid64, dt=dt, m_bound=m_common)
    trajs = {g: solver.solve_entropy(spec, grid64, gamma=g, dt=dt,
                                     m_bound=m_common) for g in gammas}
    errors = [verify.spacetime_l1_diff(trajs[g], ref) for g in gammas]
    report = verify.gamma_limit_report(spec, gammas,
                                       errors, [trajs[g] for g in gammas], ref)
    return {"spec": spec, "gammas": gammas, "trajs": trajs, "ref": ref,
            "errors": errors, "report": report, "dt": dt,
            "m_common": m_common}


@pytest.fixture(scope="session")
def stability_family(grid64):
    """Source runs with initial data perturbed by 0.1 and 0.01 bumps."""
    base = source_spec()
    specs = {0.0: base, 0.1: perturbed_spec(base, 0.1),
             0.01: perturbed_spec(base, 0.01)}
    m_common = max(1.05 * predicted_sup(s) + 0.5 for s in specs.values())
    dt = min(Stepper(s, grid64, eps=0.0, gamma=s.gamma, m_bound=m_common).dt
             for s in specs.values())
    trajs = {d: solver.solve_entropy(s, grid64, dt=dt, m_bound=m_common)
             for d, s in specs.items()}
    return {"specs": specs, "trajs": trajs}


@pytest.fixture(scope="session")
def contraction_family(grid64):
    """Zero-source runs with equal boundary data and perturbed initial data."""
    base = nosource_spec()
    pert = perturbed_spec(base, 0.1)
    m_common = 1.05 * predicted_sup(pert) + 0.5
    dt = min(Stepper(s, grid64, eps=0.0, gamma=0.0, m_bound=m_common).dt
             for s in (base, pert))
    t1 = solver.solve_entropy(base, grid64, dt=dt, m_bound=m_common)
    t2 = solver.solve_entropy(pert, grid64, dt=dt, m_bound=m_common)
    return {"specs": (base, pert), "trajs": (t1, t2)}


@pytest.fixture(scope="session")
def epsilon_family(grid64):
    """Viscous runs for decreasing eps plus the eps = 0 entropy reference."""
    spec = nosource_spec()
    eps_values = [0.04, 0.02, 0.01]
    m_common = 1.05 * predicted_sup(spec) + 0.5
    dt = min(Stepper(spec, grid64, eps=e, gamma=0.0, m_bound=m_common).dt
             for e in eps_values)
    trajs = {e: solver.solve_regularized(spec, grid64, eps=e, gamma=0.0,
                                         dt=dt, m_bound=m_common)
             for e in eps_values}
    trajs[0.0] = solver.solve_entropy(spec, grid64, gamma=0.0, dt=dt,
                                      m_bound=m_common)
    return {"spec": spec, "eps_values": eps_values, "trajs": trajs}


@pytest.fixture(scope="session")
def impulsive_run(grid64):
    spec = source_spec()
    traj = solver.solve_impulsive(spec, grid64)
    return {"spec": spec, "traj": traj}


@pytest.fixture(scope="session")
def shock_run():
    spec = shock_spec()
    grid = unit_grid(64)
    traj = solver.solve_entropy(spec, grid, gamma=0.0,
                                options=diffusionless_options(stride=1))
    return {"spec": spec, "traj": traj, "grid": grid}


@pytest.fixture(scope="session")
def unattainable_run():
    spec = unattainable_spec()
    grid = unit_grid(64)
    traj = solver.solve_entropy(spec, grid, gamma=0.0,
                                options=diffusionless_options(stride=1))
    return {"spec": spec, "traj": traj, "grid": grid}
