import numpy as np
import pytest

from dbarlab.bumping import BumpConfig, BumpFamily
from dbarlab.domain_model import catalog
from dbarlab.errors import ConfigError, GeometryError


@pytest.fixture(scope="module")
def fam():
    return BumpFamily.at(catalog("egg", k=2), np.array([0, 1], complex))


def test_shell_points_solve_the_bumped_equation(fam):
    for j in range(3, 10):
        z = fam.zeta_j(j)
        assert abs(fam.rho_eps(2.0**-j, z)) < 1e-10
        cfg = fam.config
        assert cfg.c0 * 2.0**-j <= z[1].real <= 2 * cfg.C0 * 2.0**-j


def test_sequence_is_geometric(fam):
    rows = fam.sequence(range(3, 9))
    r = [row["rho"] for row in rows]
    q = np.array(r[:-1]) / np.array(r[1:])
    assert np.allclose(q, 2.0, rtol=0.05)


def test_r_lower_bound_positive(fam, rng):
    assert fam.check_r_lower_bound(100, rng)["c_prime"] > 0


def test_bumped_domain_contains_original_near_p(fam):
    zeta = np.array([[0.05, -0.01], [0.0, -0.2]], complex)
    assert np.all(fam.member_Omega(2.0**-6, zeta))


def test_config_validation():
    with pytest.raises(ConfigError):
        BumpConfig(gamma=0.1, gamma_p=0.2)
    with pytest.raises(ConfigError):
        BumpConfig(eps0=3.0, c_H=0.5)


def test_jstar_rejects_interior(fam):
    with pytest.raises(GeometryError):
        fam.jstar(np.array([0, 0.9]))
