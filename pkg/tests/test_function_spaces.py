import numpy as np
import pytest

from dbarlab import function_spaces as fs
from dbarlab.errors import CapabilityError, DomainError


def test_hz_seminorm_of_square_root():
    """|x|^{1/2} has Lambda^{1/2} seminorm exactly 1 (attained at 0)."""
    x = np.linspace(-1, 1, 201)
    rep = fs.holder_zygmund_norm(np.abs(x) ** 0.5, x[1] - x[0], 0.5)
    assert rep.seminorm == pytest.approx(1.0, abs=1e-12)
    assert rep.sup == pytest.approx(1.0)


def test_hz_zygmund_case_for_linear_function():
    x = np.linspace(-1, 1, 101)
    rep = fs.holder_zygmund_norm(3 * x, x[1] - x[0], 1.0)
    assert rep.seminorm < 1e-10


def test_hz_high_order_unsupported():
    with pytest.raises(CapabilityError):
        fs.holder_zygmund_norm(np.zeros(10), 0.1, 2.5)


@pytest.mark.parametrize("j0", [3, 5, 7])
def test_wave_packet_lands_in_its_band(j0):
    x = np.linspace(-2, 2, 1024, endpoint=False)
    rep = fs.dyadic_resolution(fs.wave_packet(x, j0), x[1] - x[0], 0.5)
    assert rep.dominant_band() == j0


@pytest.fixture(scope="module")
def family():
    return fs.build_lp_family(1.0, 6)


def test_lp_family_moments_and_cone(family):
    assert max(abs(v) for v in family.moments().values()) < 1e-10
    assert family.support_in_cone()


def test_extension_reproduces_on_half_plane(family):
    E = fs.ExtensionOperator(family, fs.half_plane(), 12)
    pts = np.array([[0.1, 0.02], [0.3, 0.5], [-0.2, 0.001]])
    for name in ("one", "xN", "trig"):
        f = fs.TEST_FUNCTIONS[name]
        assert np.max(np.abs(E(f, pts) - f(pts))) < 1e-8


def test_extension_rejects_steep_graph(family):
    with pytest.raises(DomainError):
        fs.ExtensionOperator(family, fs.lipschitz_graph(1.5), 12)


def test_commutator_vanishes_inside(family):
    E = fs.ExtensionOperator(family, fs.half_plane(), 10)
    inner = np.array([[0.0, 0.05], [0.2, 0.3]])
    assert np.max(np.abs(E.commutator_dN(fs.power_profile(0.8), inner))) == 0


def test_support_shift_and_negative_control():
    L, R0, j = 1.0, 2, 3
    edge = L - 2.0**-R0
    assert fs.support_shift_check(L, R0, j, 0.0, lambda u: np.zeros_like(u)).holds
    assert fs.support_shift_check(L, R0, j, 0.0, lambda u: -edge * np.abs(u)).holds
    assert not fs.support_shift_check(L, R0, j, 0.0, lambda u: -(L + 0.1) * np.abs(u)).holds


def test_hardy_littlewood_power_vs_log():
    mask = lambda X: X[..., 1] > 0
    grids = [33, 65, 129]
    u, g, dl, _ = fs.hl_family_halfplane("power", 0.7)
    rs = [fs.hardy_littlewood_check(u, g, dl, np.linspace(-1, 1, n), 2, 0.7, mask_fn=mask) for n in grids]
    assert max(r.ratio for r in rs) / min(r.ratio for r in rs) < 2
    u, g, dl, _ = fs.hl_family_halfplane("log")
    rs = [fs.hardy_littlewood_check(u, g, dl, np.linspace(-1, 1, n), 2, 0.7, mask_fn=mask) for n in grids]
    assert fs.divergence_flag([r.lhs for r in rs]) and fs.divergence_flag([r.rhs for r in rs])
    with pytest.raises(CapabilityError):
        fs.hardy_littlewood_check(u, g, dl, np.linspace(-1, 1, 9), 2, 0.7, k=2, mask_fn=mask)


def test_rank_correlation_of_weighted_norm_family():
    rows = fs.weighted_lp_vs_fnorm(0.5, 2, [0.6, 1.0, 1.5], n=128)
    assert all(np.isfinite(r.ratio) and r.ratio > 0 for r in rows)
    assert fs.rank_correlation([r.lhs for r in rows], [r.rhs for r in rows]) > 0


@pytest.mark.parametrize("sigma", [0.3, 0.8, 1.2])
def test_weighted_commutator_decays_like_sigma_minus_s(family, sigma):
    E = fs.ExtensionOperator(family, fs.half_plane(), 12)
    d = 2.0 ** -np.arange(5, 12)
    w = fs.weighted_commutator_profile(E, sigma, 0.5, d)
    slope = np.polyfit(np.log(d), np.log(w), 1)[0]
    assert slope == pytest.approx(sigma - 0.5, abs=0.02)
