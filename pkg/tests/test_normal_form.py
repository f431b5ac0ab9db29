import numpy as np
import pytest

from dbarlab.domain_model import catalog, random_boundary_points
from dbarlab.errors import GeometryError
from dbarlab.normal_form import catlin_normalize, g_batch


@pytest.mark.parametrize("name,k,key", [("ball", 1, (1, 1)), ("egg", 2, (2, 2)), ("egg", 3, (3, 3))])
def test_leading_mixed_coefficient_at_pole(name, k, key):
    nf = catlin_normalize(catalog(name, k=k), np.array([0, 1], complex))
    assert abs(nf.a[key] - 1) < 1e-12
    assert abs(nf.grad_norm - 1) < 1e-12
    others = {kk: v for kk, v in nf.a.items() if kk != key}
    assert max(abs(v) for v in others.values()) < 1e-12 if others else True


def test_pure_terms_vanish_at_random_points(rng):
    for k in (1, 2, 3):
        D = catalog("egg", k=k)
        for p in random_boundary_points(D, 5, rng):
            assert catlin_normalize(D, p).residual_order_certificate < 1e-9


def test_pullback_has_normal_form_shape(rng):
    """r(phi(xi)) - Re xi_2 - sum a_jk xi1^j conj(xi1)^k is o(|xi|^m) along shrinking rays."""
    D = catalog("egg", k=2)
    p = random_boundary_points(D, 1, rng)[0]
    nf = catlin_normalize(D, p)
    d = np.array([0.6 + 0.3j, 0.2 - 0.5j])
    errs = []
    for s in (1e-1, 5e-2, 2.5e-2):
        xi = s * d
        model = xi[1].real + sum(v * xi[0] ** j * np.conj(xi[0]) ** kk for (j, kk), v in nf.a.items())
        errs.append(abs(D.r(nf.phi(xi)) - model.real))
    # the remainder mixes in xi_2 at order 2 (|xi|^2 terms with xi_2) so it decays at least quadratically
    assert errs[2] < errs[0] / 10


def test_phi_inverse_roundtrip(rng):
    D = catalog("egg", k=2)
    nf = catlin_normalize(D, random_boundary_points(D, 1, rng)[0])
    xi = 0.1 * (rng.normal(size=(6, 2)) + 1j * rng.normal(size=(6, 2)))
    assert np.allclose(nf.phi_inverse(nf.phi(xi)), xi, atol=1e-12)


def test_interior_base_point_rejected():
    with pytest.raises(GeometryError):
        catlin_normalize(catalog("ball"), np.array([0, 0.5]))


def test_g_vanishes_on_diagonal(rng):
    D = catalog("ball")
    P = random_boundary_points(D, 4, rng)
    assert np.max(np.abs(g_batch(D, P, P))) < 1e-12
