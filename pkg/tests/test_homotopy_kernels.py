import numpy as np
import pytest

from dbarlab.domain_model import catalog
from dbarlab.errors import InternalConsistencyError
from dbarlab.homotopy_kernels import (
    INV_PI2,
    Extension,
    H1,
    Level,
    RadialCutoff,
    ReflectionExtension,
    bm_kernel,
    catalog_form,
    cf_kernel,
    homotopy_residual,
    newton_potential,
    seeley_coefficients,
    smooth_step,
)
from dbarlab.leray_division import explicit_leray_convex

BALL = catalog("ball")
LERAY = lambda zeta, z: explicit_leray_convex(BALL, zeta, z)
Z = np.array([[0.2, 0.1j], [-0.3j, 0.4], [0.1, -0.2 + 0.1j]])


def test_bm_kernel_values():
    z, zeta = np.zeros(2), np.array([1.0, 1j])
    B = bm_kernel(z, zeta)
    assert np.allclose(B["B00"], -INV_PI2 * np.array([1, -1j]) / 4)
    with pytest.raises(ValueError):
        bm_kernel(z, z)


def test_cf_kernel_checks_reproduction():
    zeta = np.array([[0.0, 1.2]])
    z = np.zeros((1, 2))
    K = cf_kernel(LERAY(zeta, z), z, zeta)
    assert np.allclose(K["K01"], 0)
    with pytest.raises(InternalConsistencyError):
        cf_kernel(np.array([[1.0, 1.0]]), z, zeta)


def test_smooth_step_limits():
    S, dS = smooth_step(np.array([-1.0, 0.0, 0.5, 1.0, 2.0]))
    assert np.allclose(S, [0, 0, 0.5, 1, 1])
    assert dS[2] > 0 and dS[0] == 0 and dS[-1] == 0


def test_seeley_coefficients_match_moments():
    a, b = seeley_coefficients(3)
    for i in range(4):
        assert abs(np.sum(a * (-b) ** i) - 1) < 1e-10


def test_newton_potential_of_indicator():
    """G * 1_{B_R} = |z|^2/8 - R^2/4 inside, with G = -1/(4 pi^2 |x|^2)."""
    R = 1.0
    z = np.array([[0.0, 0.0], [0.3, 0.2j], [0.5, -0.4]])
    u = newton_potential(lambda X: np.ones(X.shape[:-1]), z, R, Level.of(2))
    want = np.sum(np.abs(z) ** 2, axis=1) / 8 - R**2 / 4
    assert np.allclose(u, want, rtol=1e-6)


def test_closed_form_forms():
    assert catalog_form("mixed").is_closed()
    assert not catalog_form("zb2dzb1").is_closed()
    with pytest.raises(ValueError):
        catalog_form("nope")


def test_homotopy_residual_decreases_for_closed_form():
    ext = Extension(catalog_form("dzb1"), RadialCutoff(1.1, 1.6))
    lv = homotopy_residual(ext, LERAY, Z, [0, 1, 2])
    r = [l.residual_max for l in lv]
    assert r[0] > r[1] > r[2]
    assert lv[-1].relative_max < 1e-3


def test_non_closed_form_needs_second_operator():
    ext = Extension(catalog_form("zb2dzb1"), RadialCutoff(1.1, 1.6))
    with_h2 = homotopy_residual(ext, LERAY, Z, [2])[0].relative_max
    without = homotopy_residual(ext, LERAY, Z, [2], include_H2=False)[0].relative_max
    assert with_h2 < 1e-3 < 0.05 < without


def test_kernel_and_divergence_forms_agree():
    ext = Extension(catalog_form("mixed"), RadialCutoff(1.1, 1.6))
    a = H1(ext, LERAY, Z, Level.of(2), form="kernel")
    b = H1(ext, LERAY, Z, Level.of(2), form="divergence")
    assert np.allclose(a, b, atol=1e-3)


def test_reflection_extension_matches_inside_and_is_cut_off():
    rex = ReflectionExtension(BALL, catalog_form("mixed"))
    inside = np.array([[0.2, 0.3j]])
    assert np.allclose(rex(inside), catalog_form("mixed")(inside))
    far = np.array([[0.0, 1.5]])
    assert np.allclose(rex(far), 0)
    # continuity across the sphere
    w = np.array([0.6, 0.8j])
    assert np.allclose(rex((1 + 1e-7) * w[None]), rex((1 - 1e-7) * w[None]), atol=1e-5)
