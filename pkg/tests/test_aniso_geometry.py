import numpy as np
import pytest

from dbarlab.aniso_geometry import (
    J_delta,
    contact_order,
    polydisk,
    tau,
    type_at,
    verify_J_comparability,
    verify_power_sandwich,
    verify_tau_scaling,
)
from dbarlab.domain_model import catalog, random_boundary_points
from dbarlab.errors import GeometryError


@pytest.mark.parametrize(
    "name,k,point,expected",
    [("ball", 1, [0, 1], 2), ("egg", 2, [0, 1], 4), ("egg", 2, [0, -1], 4), ("egg", 3, [0, 1], 6), ("egg", 2, [1, 0], 2), ("kn", 2, [0, 1], 8)],
)
def test_type_and_oracle(name, k, point, expected):
    D = catalog(name, k=k)
    p = np.array(point, complex)
    assert type_at(D, p)[0] == expected
    assert contact_order(D, p) == expected


def test_tau_closed_form_on_egg():
    _, prof = type_at(catalog("egg", k=2), np.array([0, 1], complex))
    d = np.logspace(-6, -1, 7)
    assert np.allclose(tau(prof, d), d**0.25)


def test_scaling_laws_hold(rng):
    D = catalog("egg", k=3)
    for p in [np.array([0, 1], complex), *random_boundary_points(D, 2, rng)]:
        _, prof = type_at(D, p)
        d = np.logspace(-6, 0, 20)
        assert verify_power_sandwich(prof, d).passed
        assert verify_tau_scaling(prof, d).passed


def test_polydisk_and_J(rng):
    _, prof = type_at(catalog("egg", k=2), np.array([0, 1], complex))
    P = polydisk(prof, 0.5, 1e-3, 1e-3, np.zeros(2))
    assert P.contains(P.center)
    Z = P.sample(100, rng)
    assert np.all(P.contains(Z))
    assert np.all(J_delta(prof, 1e-3, Z) >= 1e-3)
    rep = verify_J_comparability(prof, 0.5, 1e-3, 1e-3, np.zeros(2), 400, rng)
    assert rep.stability < 0.2
    with pytest.raises(ValueError):
        polydisk(prof, -1, 1e-3, 0, np.zeros(2))


def test_off_boundary_point_raises():
    from dbarlab.aniso_geometry import _check_boundary

    with pytest.raises(GeometryError):
        _check_boundary(catalog("ball"), np.array([0, 0.5]))
