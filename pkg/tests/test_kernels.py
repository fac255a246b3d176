import numpy as np
import pytest

from upkolmo import exprdsl as E
from upkolmo import kernels


def dense_simpson(f, a, b, n=20001):
    """Independent quadrature oracle (composite Simpson, n odd)."""
    x = np.linspace(a, b, n)
    y = np.asarray(f(x), dtype=float)
    h = (b - a) / (n - 1)
    return h / 3.0 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-2:2].sum())


class TestMollifier:
    def test_vanishes_outside_support(self):
        assert kernels.omega(1.0) == 0.0
        assert kernels.omega(-1.0) == 0.0
        assert kernels.omega(1.7) == 0.0

    def test_even(self):
        assert kernels.omega(-0.3) == kernels.omega(0.3)
        ts = np.linspace(-0.99, 0.99, 101)
        assert np.allclose(kernels.omega(ts), kernels.omega(-ts))

    def test_nonnegative(self):
        ts = np.linspace(-2, 2, 401)
        assert np.all(kernels.omega(ts) >= 0.0)

    def test_unit_mass(self):
        mass = dense_simpson(kernels.omega, -1.0, 1.0)
        assert abs(mass - 1.0) <= 1e-8

    def test_normalization_constant(self):
        # derived by adaptive quadrature; the classical approximate value of
        # the multiplicative constant is 2.2522 (4 digits)
        kernels.omega(0.0)  # force construction
        assert kernels.OMEGA.norm_const == pytest.approx(2.2522836, abs=1e-6)
        assert abs(kernels.OMEGA.norm_const - 2.2522) < 1e-3

    def test_peak_value(self):
        # omega(0) = norm_const * exp(-1), frozen from the quadrature oracle
        assert kernels.omega(0.0) == pytest.approx(0.8285688, abs=1e-6)


class TestDelayedKernel:
    def test_zero_after_impulse_time(self):
        for gamma in (0.2, 0.05, 1e-3):
            assert kernels.k_gamma(0.5 + 0.01, 0.5, gamma) == 0.0

    def test_zero_before_window(self):
        assert kernels.k_gamma(0.5 - 2 * 0.1, 0.5, 0.1) == 0.0

    def test_nonnegative(self):
        ts = np.linspace(0, 1, 1001)
        assert np.all(kernels.k_gamma(ts, 0.5, 0.1) >= 0.0)

    def test_rejects_nonpositive_gamma(self):
        with pytest.raises(kernels.NonPositiveGammaError):
            kernels.k_gamma(0.3, 0.5, 0.0)
        with pytest.raises(kernels.NonPositiveGammaError):
            kernels.k_gamma(0.3, 0.5, -1.0)

    @pytest.mark.parametrize("gamma", [0.2, 0.1, 0.05])
    def test_unit_mass(self, gamma):
        assert abs(kernels.kernel_mass(0.5, gamma, 1.0) - 1.0) <= 1e-8

    def test_mass_independent_quadrature(self):
        # integrate up to the jump at t = tau; the kernel vanishes beyond it
        mass = dense_simpson(lambda t: kernels.k_gamma(t, 0.5, 0.1), 0.0, 0.5,
                             n=40001)
        assert abs(mass - 1.0) <= 1e-8


def _second_moment_error(gamma, tau=0.5, n=200001):
    # quadrature stops at the jump: the kernel vanishes for t > tau
    integral = dense_simpson(
        lambda t: t ** 2 * kernels.k_gamma(t, tau, gamma), 0.0, tau, n=n)
    return abs(integral - tau ** 2)


def test_point_impulse_limit_monotone():
    errors = [_second_moment_error(g) for g in (0.2, 0.1, 0.05, 0.025)]
    assert all(e2 < e1 for e1, e2 in zip(errors, errors[1:]))


@pytest.mark.xfail(strict=True, reason=(
    "the one-sided kernel's mass centroid sits 0.3345*gamma left of the "
    "impulse time, so the t^2 test error is ~0.334*gamma = 8.3e-3 at "
    "gamma = 0.025; the 1e-3 target would need gamma ~ 0.003 "
    "(see the acceptance suite, criterion 2, which asserts this faithfully)"))
def test_point_impulse_limit_final_error_below_1e3():
    assert _second_moment_error(0.025) < 1e-3


class TestGrowthConstants:
    def test_zero_perturbation(self):
        assert kernels.source_growth_constants(None, 0.1) == (0.0, 0.0)

    def test_constant_perturbation(self):
        c = 0.7
        beta = E.parse(str(c))
        omega0 = float(kernels.omega(0.0))
        for gamma in (0.2, 0.05):
            b1g, b2g = kernels.source_growth_constants(beta, gamma, L=1, S=1,
                                                       b1=1.0)
            assert b1g == pytest.approx(omega0 * c / gamma, rel=1e-12)
            assert b2g == pytest.approx(omega0 * c / gamma, rel=1e-12)

    def test_halving_gamma_doubles_both(self):
        beta = E.parse("0.3*sin(lambda) + 0.2")
        a = kernels.source_growth_constants(beta, 0.2, L=1, S=1, b1=2.0)
        b = kernels.source_growth_constants(beta, 0.1, L=1, S=1, b1=2.0)
        assert b[0] == pytest.approx(2 * a[0], rel=1e-12)
        assert b[1] == pytest.approx(2 * a[1], rel=1e-12)

    def test_supplied_b0_formula(self):
        beta = E.parse("0")
        b1g, b2g = kernels.source_growth_constants(beta, 0.1, b0=2.0,
                                                   L=1, S=1, b1=1.0)
        omega0 = float(kernels.omega(0.0))
        assert b1g == pytest.approx(2.0 / 0.1 * omega0 * 2.0)
        assert b2g == 0.0

    def test_estimated_b0_matches_analytic(self):
        beta = E.parse("0.3*sin(lambda)")
        est = kernels.estimate_dbeta_sup(beta, 1.0, 1.0, 2.0)
        assert est == pytest.approx(0.3, abs=1e-4)

    def test_rejects_nonpositive_gamma(self):
        with pytest.raises(kernels.NonPositiveGammaError):
            kernels.source_growth_constants(E.parse("1"), 0.0, L=1, S=1, b1=1)
