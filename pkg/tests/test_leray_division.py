import numpy as np
import pytest

from dbarlab.domain_model import catalog
from dbarlab.errors import GeometryError, InfeasibleDivisionError
from dbarlab.leray_division import (
    Denominator,
    NetSpec,
    ball_quadrature,
    build_net,
    certify_leray,
    closed_form_I,
    dbar_residual,
    explicit_leray_convex,
    normalize_phi,
    skoda_division,
)
from dbarlab.normal_form import catlin_normalize


def test_explicit_map_on_ball_point():
    D = catalog("ball")
    zeta, z = np.array([0, 1.1], complex), np.zeros(2, complex)
    w = explicit_leray_convex(D, zeta, z)
    assert np.allclose(w, [0, 1 / 1.1])


def test_explicit_map_identity_on_egg(rng):
    D = catalog("egg", k=2)
    zeta = 1.05 * np.array([0.6, 0.8j]) + 0.01 * rng.normal(size=(50, 2))
    z = 0.3 * (rng.random((50, 2)) - 0.5)
    w = explicit_leray_convex(D, zeta, z)
    assert np.max(np.abs(np.sum(w * (zeta - z), axis=-1) - 1)) < 1e-12


def test_explicit_map_holomorphic_in_z():
    D = catalog("ball")
    zeta = np.array([0.3, 1.0])
    f = lambda Z: explicit_leray_convex(D, np.broadcast_to(zeta, Z.shape), Z)
    assert dbar_residual(f, np.array([[0.1, 0.2j]]))[0] < 1e-12


@pytest.fixture(scope="module")
def quad():
    return ball_quadrature(catalog("ball"), 8, 6, 10)


def test_polynomial_division_is_infeasible(quad):
    with pytest.raises(InfeasibleDivisionError):
        skoda_division(np.array([0, 2], complex), 0.5, 0, quad, basis="monomial")


def test_rational_division_identity_and_benchmark(quad):
    D = catalog("ball")
    q = np.array([0, 2], complex)
    nf = catlin_normalize(D, np.array([0, 1], complex))
    bench = closed_form_I(lambda z: np.stack([0 * z[..., 0], 1 / (z[..., 1] - 2)], axis=-1), quad, q, 0.5)
    prev = np.inf
    for deg in (0, 2, 4):
        dp = skoda_division(q, 0.5, deg, quad, nf)
        assert dp.identity_residual(quad.nodes).max() < 1e-12
        assert dp.I_eta_value <= prev * (1 + 1e-9)
        assert dp.I_eta_value <= bench * (1 + 1e-9)
        prev = dp.I_eta_value


def test_denominator_vanishes_at_q():
    D = catalog("egg", k=2)
    nf = catlin_normalize(D, np.array([0, 1], complex))
    q = np.array([0.01, 1.05])
    L = Denominator.build(nf, q, 1.0)
    assert abs(L(q)) < 1e-15


def test_normalized_pair_at_q(quad):
    D = catalog("ball")
    q = np.array([0, 1.1], complex)
    dp = skoda_division(q, 0.5, 2, quad, catlin_normalize(D, np.array([0, 1], complex)))
    z = np.array([[0.1, 0.2], [0.0, -0.3j]])
    hq, Phi = normalize_phi(dp, np.broadcast_to(q, z.shape), z)
    assert np.allclose(Phi, 1)
    with pytest.raises(GeometryError):
        normalize_phi(dp, z, z)  # Phi vanishes when zeta = z


def test_small_net_certificate():
    D = catalog("ball")
    rng = np.random.default_rng(0)
    lm, info = build_net(NetSpec(D, np.array([0, 1]), 0.03, 0.03, (0.02,), eps=0.01), rng)
    cert = certify_leray(lm, 500, rng, n_cr=20)
    assert cert.reproduction < 1e-10
    assert cert.cr_residual < 1e-8
    assert all(np.isfinite(v) and v > 0 for v in cert.fits.values())
