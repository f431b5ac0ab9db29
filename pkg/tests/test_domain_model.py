import numpy as np
import pytest
import sympy as sp

from dbarlab.domain_model import (
    DefiningFunction,
    Poly,
    Z1,
    Z2,
    ZB1,
    ZB2,
    boundary_project,
    catalog,
    classify_point,
    domain_from_json,
    eval_jet,
    random_boundary_points,
    ray_radius,
    star_radius,
    to_complex,
    to_real,
)
from dbarlab.errors import CapabilityError


def test_real_complex_roundtrip(rng):
    z = rng.normal(size=(5, 2)) + 1j * rng.normal(size=(5, 2))
    assert np.allclose(to_complex(to_real(z)), z)


def test_poly_algebra_matches_pointwise(rng):
    p = (Z1 * ZB1) ** 2 + 3 * Z2 - ZB2 * Z1
    z = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    direct = np.abs(z[:, 0]) ** 4 + 3 * z[:, 1] - np.conj(z[:, 1]) * z[:, 0]
    assert np.allclose(p(z), direct)
    assert p.degree == 4


def test_non_real_defining_function_rejected():
    with pytest.raises(ValueError):
        DefiningFunction(Z1 + ZB2)


def test_kn_jet_matches_symbolic():
    t = 0.5
    D = catalog("kn", t=t)
    z1, zb1, z2, zb2 = sp.symbols("z1 zb1 z2 zb2")
    r = (z1 * zb1) ** 4 + sp.Rational(1, 2) * t * z1 * zb1 * (z1**6 + zb1**6) + z2 * zb2 - 1
    p = np.array([0.3 + 0.2j, 0.5 - 0.4j])
    subs = {z1: complex(p[0]), zb1: complex(np.conj(p[0])), z2: complex(p[1]), zb2: complex(np.conj(p[1]))}
    jet = eval_jet(D.r, p, 8)
    syms = (z1, zb1, z2, zb2)
    for alpha in [(0, 0, 0, 0), (1, 0, 0, 0), (2, 1, 0, 0), (4, 4, 0, 0), (7, 1, 0, 0), (1, 7, 0, 0), (0, 0, 1, 1), (3, 2, 0, 0)]:
        expr = r
        for v, n in zip(syms, alpha):
            expr = sp.diff(expr, v, n)
        want = complex(sp.N(expr.subs(subs)))
        assert abs(jet[alpha] - want) < 1e-10 * max(1, abs(want)), alpha
    assert jet.conjugation_defect() < 1e-12


def test_jet_order_capability():
    with pytest.raises(CapabilityError):
        eval_jet(catalog("ball").r, np.zeros(2), 40)


def test_catalog_errors():
    with pytest.raises(ValueError):
        catalog("egg", k=4)
    with pytest.raises(ValueError):
        catalog("kn", t=1.5)
    with pytest.raises(ValueError):
        catalog("torus")


def test_json_roundtrip():
    D = catalog("egg", k=2)
    E = domain_from_json(D.to_json() | {"kind": "polynomial"})
    z = np.array([[0.3, 0.4j], [0.9, 0.1]])
    assert np.allclose(D.r(z), E.r(z))
    assert domain_from_json({"kind": "catalog", "id": "egg", "params": {"k": 3}}).type_max == 6


def test_star_radius_closed_forms_match_bisection(rng):
    v = rng.normal(size=(20, 4))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    w = to_complex(v)
    for name, k in (("ball", 1), ("egg", 1), ("egg", 2), ("egg", 3)):
        D = catalog(name, k=k)
        assert np.allclose(star_radius(D, w), ray_radius(D, w), atol=1e-12)


def test_boundary_points_and_classification(rng):
    D = catalog("egg", k=2)
    P = random_boundary_points(D, 10, rng)
    assert np.max(np.abs(D.r(P))) < 1e-10
    assert classify_point(D, np.zeros(2)) == "interior"
    assert classify_point(D, np.array([0, 1.1])) == "shell"
    assert classify_point(D, np.array([0, 5.0])) == "outside-neighborhood"
    q = boundary_project(D, np.array([0.2, 1.05]))
    assert abs(D.r(q)) < 1e-10
