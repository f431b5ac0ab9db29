import numpy as np
import pytest
from scipy import integrate

from dbarlab import estimate_lab as el
from dbarlab.domain_model import catalog
from dbarlab.errors import ConfigError
from dbarlab.homotopy_kernels import Level, ReflectionExtension
from dbarlab.leray_division import explicit_leray_convex


def test_fit_slope_exact_power():
    x = np.logspace(-3, 0, 8)
    f = el.fit_slope(x, 2.5 * x**1.5, 1.5, 1e-9)
    assert f.slope == pytest.approx(1.5) and f.r2 == pytest.approx(1.0) and f.passed


def test_fit_rejects_poor_r2():
    x = np.logspace(-3, 0, 8)
    y = np.where(np.arange(8) % 2, 1.0, 10.0)
    assert not el.fit_slope(x, y).accepted


def test_st_int_matches_adaptive_quadrature():
    a, b, m, d = 0.2, 1.0, 2, 0.1
    f = lambda t, s2, s1: s1**a * t / ((d + s1 + s2 + t**m) ** (2 + b) * (d + s1 + s2 + t))
    want, _ = integrate.tplquad(f, 0, 1, 0, 1, 0, 1, epsabs=1e-11, epsrel=1e-9)
    assert el.st_int_quadrature(a, b, m, d) == pytest.approx(want, rel=1e-6)


def test_st_int_preconditions():
    for args in [(0.6, 1.0, 2, 0.1), (-1.5, 1.0, 2, 0.1), (0.0, -1.0, 2, 0.1), (0.0, 1.0, 2, 0.7)]:
        with pytest.raises(ConfigError):
            el.st_int_quadrature(*args)


def test_st_int_asymptotic_slope():
    fit = el.st_int_slope(0.0, 1.0, 2, np.logspace(-10, -7, 7))
    assert fit.passed and abs(fit.slope + 0.5) < 0.05


def test_st_int_near_critical_flag():
    fit = el.st_int_slope(0.49, 1.0, 2, np.logspace(-6, -3, 5))
    assert fit.warning is not None


def test_sobolev_norm_of_power_forms():
    # sigma = 0: ||1||_2 = vol^{1/2} = pi/sqrt(2);  sigma = 1: pi sqrt(2/3) + pi
    assert el.sobolev_norm_power_form(0.0) == pytest.approx(np.pi / np.sqrt(2), rel=1e-8)
    assert el.sobolev_norm_power_form(1.0) == pytest.approx(np.pi * np.sqrt(2 / 3) + np.pi, rel=1e-8)


def test_hessian_stencil_on_quadratic():
    from dbarlab.domain_model import to_real

    z0 = np.array([0.1 + 0.2j, -0.3j])
    keys, pts = el._stencil(z0, 1e-2)
    A = np.arange(16.0).reshape(4, 4)
    A = A + A.T
    q = lambda z: 0.5 * to_real(z) @ A @ to_real(z)
    vals = {k: q(p) for k, p in zip(keys, pts)}
    assert el._hessian_norm(vals, 1e-2) == pytest.approx(np.linalg.norm(A), rel=1e-8)


def test_h11_of_zero_form_is_zero():
    D = catalog("ball")
    ext = ReflectionExtension(D, lambda Z: np.zeros(np.asarray(Z).shape, complex))
    vals = el.H11_on_stencil(ext, lambda zeta, z: explicit_leray_convex(D, zeta, z), np.array([0.2, 0.3j]), Level.of(0), 2, 1e-3)
    assert el._hessian_norm(vals, 1e-3) == 0


def test_shell_integral_exponent_on_ball():
    fit = el.shell_slope(catalog("ball"), [0, 1], 0.0, 1.0, np.logspace(-7, -5, 3))
    assert abs(fit.slope + 0.5) < 0.1


def test_shell_integral_bounded_when_distance_below_eps():
    """For eps > 0 and d << eps the exterior region stays eps away: no blow-up."""
    fit = el.shell_slope(catalog("ball"), [0, 1], 0.0, 1.0, np.logspace(-7, -5, 3), eps=0.01)
    assert abs(fit.slope) < 0.01
