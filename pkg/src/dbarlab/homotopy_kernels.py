"""Bochner-Martinelli and Cauchy-Fantappie kernels and the homotopy operators in C^2.

Notation: x = zeta - z, bt_j = conj(zeta_j - z_j), |x|^2 = sum_j |x_j|^2.  With the Leray
orientation sum_i w_i (zeta_i - z_i) = 1 the operators are

    H1^0 f(z)   = -(1/pi^2) int bt . f(zeta) / |x|^4 dV
                = -(1/pi^2) int |x|^{-2} sum_j d_{zeta_j} f_j dV           (integrated by parts)
    H1^1 f(z)   = -(1/pi^2) int_shell psi(zeta) (bt_1 w_2 - bt_2 w_1) / |x|^2 dV
    H2^0 psi(z) = -(1/pi^2) int psi(zeta) (-bt_2 dzbar_1 + bt_1 dzbar_2) / |x|^4 dV

where f = E phi and psi is the dzbar_1 ^ dzbar_2 coefficient of the commutator
[dbar, E] phi (H1^1) or of E dbar phi (H2^0).  H1^0 is 4 times the Newtonian potential of
sum_j d_j f_j; the constant -1/pi^2 follows from Gamma(x) = -1/(4 pi^2 |x|^2).  The
(0,1)-part of the Cauchy-Fantappie kernel vanishes because W is holomorphic in z, so
H2^1 = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domain_model import DomainSpec, Poly, star_radius
from .errors import AccuracyError, InternalConsistencyError
from .quadrature import gauss, hopf_directions, sphere_shell_quadrature

INV_PI2 = 1.0 / np.pi**2


# ------------------------------------------------------------ kernels

def bm_kernel(z, zeta) -> dict:
    """Coefficient arrays of the Bochner-Martinelli kernel pieces used by H1^0 and H2^0."""
    z = np.asarray(z, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    bt = np.conj(zeta - z)
    n2 = np.sum(np.abs(zeta - z) ** 2, axis=-1)
    if np.any(n2 == 0):
        raise ValueError("coincident points in bm_kernel")
    B00 = -INV_PI2 * bt / n2[..., None] ** 2
    B01 = -INV_PI2 * np.stack([-bt[..., 1], bt[..., 0]], axis=-1) / n2[..., None] ** 2
    return {"B00": B00, "B01": B01}


def cf_kernel(w: np.ndarray, z, zeta, tol: float = 1e-8) -> dict:
    """Cauchy-Fantappie pieces for a Leray map value w(zeta, z)."""
    z = np.asarray(z, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    rep = np.abs(np.sum(w * (zeta - z), axis=-1) - 1)
    if np.max(rep) > tol:
        raise InternalConsistencyError(f"Leray reproduction residual {np.max(rep):.2e} exceeds {tol}")
    bt = np.conj(zeta - z)
    n2 = np.sum(np.abs(zeta - z) ** 2, axis=-1)
    K00 = -INV_PI2 * (bt[..., 0] * w[..., 1] - bt[..., 1] * w[..., 0]) / n2
    return {"K00": K00, "K01": np.zeros(K00.shape + (2,), dtype=complex)}


# ------------------------------------------------------------ forms and cutoffs

def smooth_step(x: np.ndarray):
    """C-infinity step S with S = 0 for x <= 0, S = 1 for x >= 1; returns (S, S')."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1 - x, 1.0)), 0.0)
        da = np.where(x > 0, a / np.where(x > 0, x, 1.0) ** 2, 0.0)
        db = np.where(x < 1, -b / np.where(x < 1, 1 - x, 1.0) ** 2, 0.0)
        S = a / (a + b)
        dS = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return S, np.nan_to_num(dS)


@dataclass(frozen=True)
class RadialCutoff:
    """chi(|zeta|) = 1 - S((|zeta| - R0)/(R1 - R0))."""

    R0: float
    R1: float

    def __call__(self, zeta) -> np.ndarray:
        t = np.linalg.norm(np.asarray(zeta), axis=-1)
        return 1 - smooth_step((t - self.R0) / (self.R1 - self.R0))[0]

    def dbar(self, zeta) -> np.ndarray:
        """(d chi/d zbar_1, d chi/d zbar_2); d|zeta|/d zbar_k = zeta_k / (2|zeta|)."""
        zeta = np.asarray(zeta, dtype=complex)
        t = np.linalg.norm(zeta, axis=-1)
        dS = smooth_step((t - self.R0) / (self.R1 - self.R0))[1] / (self.R1 - self.R0)
        return (-dS / (2 * np.maximum(t, 1e-300)))[..., None] * zeta

    def d(self, zeta) -> np.ndarray:
        return np.conj(self.dbar(zeta))


@dataclass(frozen=True)
class FormField:
    """(0,1)-form f_1 dzbar_1 + f_2 dzbar_2 with polynomial coefficients."""

    f1: Poly
    f2: Poly
    name: str = "form"

    def __call__(self, z) -> np.ndarray:
        return np.stack([self.f1(z), self.f2(z)], axis=-1)

    def dbar_coeff(self) -> Poly:
        """Coefficient of dzbar_1 ^ dzbar_2 in dbar phi."""
        return self.f2.deriv(1) - self.f1.deriv(3)

    def is_closed(self) -> bool:
        return not self.dbar_coeff().terms

    def divergence_parts(self):
        """(d_{z_1} f_1, d_{z_2} f_2) as polynomials."""
        return self.f1.deriv(0), self.f2.deriv(2)


def catalog_form(name: str) -> FormField:
    from .domain_model import Z1, ZB1, Z2, ZB2

    zero = Poly()
    forms = {
        "dzb1": FormField(Poly.const(1.0), zero, "dzb1"),
        "z1dzb1": FormField(Z1, zero, "z1dzb1"),  # dbar |z1|^2
        "mixed": FormField(ZB2 + Z1 * Z2, ZB1, "mixed"),  # dbar(zb1 zb2 + |z1|^2 z2)
        "zb1dzb1": FormField(ZB1, zero, "zb1dzb1"),  # dbar(zb1^2/2)
        "zb2dzb1": FormField(ZB2, zero, "zb2dzb1"),  # not closed
    }
    if name not in forms:
        raise ValueError(f"unknown form {name!r}; choose from {sorted(forms)}")
    return forms[name]


@dataclass
class Extension:
    """E phi = chi * phi with a radial cutoff equal to 1 on a ball containing the closure of D."""

    phi: FormField
    chi: RadialCutoff

    def __call__(self, zeta) -> np.ndarray:
        return self.chi(zeta)[..., None] * self.phi(zeta)

    @property
    def closed(self) -> bool:
        return self.phi.is_closed()

    def coefficients(self, zeta) -> np.ndarray:
        return self.phi(zeta)

    def divergence(self, zeta) -> np.ndarray:
        """sum_j d_{zeta_j}(chi phi_j)."""
        zeta = np.asarray(zeta, dtype=complex)
        d1, d2 = self.phi.divergence_parts()
        dchi = self.chi.d(zeta)
        f = self.phi(zeta)
        return self.chi(zeta) * (d1(zeta) + d2(zeta)) + np.sum(dchi * f, axis=-1)

    def commutator(self, zeta) -> np.ndarray:
        """dzbar_1 ^ dzbar_2 coefficient of dbar(E phi) - E(dbar phi) = dbar chi ^ phi."""
        zeta = np.asarray(zeta, dtype=complex)
        db = self.chi.dbar(zeta)
        f = self.phi(zeta)
        return db[..., 0] * f[..., 1] - db[..., 1] * f[..., 0]

    def extended_dbar(self, zeta) -> np.ndarray:
        """E(dbar phi) coefficient."""
        return self.chi(zeta) * self.phi.dbar_coeff()(zeta)

    def breaks(self, z: np.ndarray, dirs: np.ndarray) -> list[np.ndarray]:
        return [_exit_distance(z, dirs, R) for R in (self.chi.R0, self.chi.R1)]

    def outside(self, zeta) -> np.ndarray:
        return np.linalg.norm(zeta, axis=-1) > self.chi.R0

    def shell(self, lev: "Level"):
        return sphere_shell_quadrature(np.zeros(2), self.chi.R0, self.chi.R1, lev.n_rho, lev.n_chi, lev.n_ang)


def seeley_coefficients(M: int, b0: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """b_k = b0 2^k and sum_k a_k (-b_k)^i = 1 for i = 0..M."""
    b = b0 * 2.0 ** np.arange(M + 1)
    V = np.vander(-b, M + 1, increasing=True).T
    return np.linalg.solve(V, np.ones(M + 1)), b


@dataclass
class ReflectionExtension:
    """Radial reflection across the boundary of a star-shaped domain, cut off at t = 1 + u1.

    For zeta = t R(w) w with t > 1 and u = t - 1:  E f(zeta) = chi(u) sum_k a_k f((1 - b_k u) R(w) w).
    The extension matches M derivatives in t across the boundary.  dbar(E phi) is formed
    by centered differences with step fd_h.
    """

    D: DomainSpec
    coeffs: Callable[[np.ndarray], np.ndarray]
    dbar_phi: Callable[[np.ndarray], np.ndarray] | None = None
    M: int = 3
    u0: float = 0.1
    u1: float = 0.2
    fd_h: float = 1e-5

    def __post_init__(self):
        self.a, self.b = seeley_coefficients(self.M)
        if np.max(self.b) * self.u1 >= 1:
            raise ValueError("reflected points leave the domain; lower u1 or b0")

    @property
    def closed(self) -> bool:
        return self.dbar_phi is None

    def _polar(self, zeta):
        nrm = np.linalg.norm(zeta, axis=-1)
        w = zeta / np.maximum(nrm, 1e-300)[..., None]
        R = star_radius(self.D, w)
        return nrm / R, R, w

    def coefficients(self, zeta) -> np.ndarray:
        return self.coeffs(zeta)

    def _reflect(self, f, zeta) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=complex)
        shape = zeta.shape[:-1]
        zf = zeta.reshape(-1, 2)
        t, R, w = self._polar(zf)
        out = np.zeros((len(zf),) + f(zf[:1]).shape[1:], dtype=complex)
        inside = self.D.r(zf) <= 0
        if np.any(inside):
            out[inside] = f(zf[inside])
        o = ~inside & (t < 1 + self.u1)
        if np.any(o):
            u = t[o] - 1
            chi = 1 - smooth_step((u - self.u0) / (self.u1 - self.u0))[0]
            acc = 0
            for a, b in zip(self.a, self.b):
                pts = ((1 - b * u) * R[o])[:, None] * w[o]
                acc = acc + a * f(pts)
            out[o] = (chi.reshape((-1,) + (1,) * (acc.ndim - 1))) * acc
        return out.reshape(shape + out.shape[1:])

    def __call__(self, zeta) -> np.ndarray:
        return self._reflect(self.coeffs, zeta)

    def _dbar_fd(self, zeta) -> np.ndarray:
        """(k, j) -> d/dzbar_k of (E phi)_j by centered differences."""
        zeta = np.asarray(zeta, dtype=complex)
        h = self.fd_h
        out = np.empty(zeta.shape[:-1] + (2, 2), dtype=complex)
        for k in range(2):
            e = np.eye(2)[k]
            dx = (self(zeta + h * e) - self(zeta - h * e)) / (2 * h)
            dy = (self(zeta + 1j * h * e) - self(zeta - 1j * h * e)) / (2 * h)
            out[..., k, :] = 0.5 * (dx + 1j * dy)
        return out

    def extended_dbar(self, zeta) -> np.ndarray:
        if self.dbar_phi is None:
            return np.zeros(np.asarray(zeta).shape[:-1], dtype=complex)
        return self._reflect(self.dbar_phi, zeta)

    def commutator(self, zeta) -> np.ndarray:
        """dbar(E phi) - E(dbar phi) as the dzbar_1 ^ dzbar_2 coefficient (outside the closure of D)."""
        d = self._dbar_fd(zeta)
        return d[..., 0, 1] - d[..., 1, 0] - self.extended_dbar(zeta)

    def outside(self, zeta) -> np.ndarray:
        return self.D.r(zeta) > 0

    def breaks(self, z: np.ndarray, dirs: np.ndarray) -> list[np.ndarray]:
        """Exit distances from D and from the extension support along each direction."""
        out = []
        for member in (lambda Z: self.D.r(Z) < 0, lambda Z: self._polar(Z)[0] < 1 + self.u1):
            lo = np.zeros(len(dirs))
            hi = np.full(len(dirs), 2 * self.D.neighborhood_radius)
            for _ in range(48):
                mid = 0.5 * (lo + hi)
                ins = member(z + dirs * mid[:, None])
                lo = np.where(ins, mid, lo)
                hi = np.where(ins, hi, mid)
            out.append(0.5 * (lo + hi))
        return out

    def shell(self, lev: "Level"):
        """Nodes t R(w) w with 1 < t < 1 + u1 and weights (tR)^3 R dt dS."""
        dirs, wdir = hopf_directions(lev.n_chi, lev.n_ang)
        R = star_radius(self.D, dirs)
        t, wt = gauss(lev.n_rho, 1.0, 1.0 + self.u1)
        rad = R[:, None] * t[None, :]
        nodes = dirs[:, None, :] * rad[..., None]
        w = wdir[:, None] * rad**3 * R[:, None] * wt[None, :]
        return nodes.reshape(-1, 2), w.reshape(-1)


# ------------------------------------------------------------ quadrature

@dataclass(frozen=True)
class Level:
    n_rho: int
    n_chi: int
    n_ang: int

    @classmethod
    def of(cls, L: int) -> "Level":
        return cls(n_rho=6 + 4 * L, n_chi=4 + 2 * L, n_ang=8 + 4 * L)


def _exit_distance(z: np.ndarray, dirs: np.ndarray, R: float) -> np.ndarray:
    """rho > 0 with |z + rho w| = R (|z| < R, |w| = 1)."""
    b = np.real(np.sum(np.conj(dirs) * z, axis=-1))
    c = np.sum(np.abs(z) ** 2) - R**2
    return -b + np.sqrt(b**2 - c)


def _polar_nodes(z: np.ndarray, lev: Level, radii, grade: int = 0):
    """Polar nodes centred at z, piecewise Gauss in rho between break distances.

    radii is a tuple of sphere radii or a callable (z, dirs) -> [first, last] break arrays
    (exit from the closure of D, exit from the support).  grade adds geometric breaks
    first * 2^{-i} toward rho = 0 and first * 2^{i} beyond the first break.
    Returns a list of (nodes, weights, rho, outside) segments; outside marks segments
    beyond the first break.
    """
    dirs, wdir = hopf_directions(lev.n_chi, lev.n_ang)
    if callable(radii):
        outer = radii(z, dirs)
    else:
        outer = [_exit_distance(z, dirs, R) for R in radii]
    outer = list(np.maximum.accumulate(np.array(outer), axis=0))
    first, last = outer[0], outer[-1]
    inner = [first * 2.0**-i for i in range(grade, 0, -1)]
    beyond = [np.minimum(first * 2.0**i, last) for i in range(1, grade + 1)]
    breaks = [np.zeros(len(dirs))] + inner + [first] + beyond + outer[1:]
    flags = [False] * (len(inner) + 1) + [True] * (len(beyond) + len(outer) - 1)
    breaks = list(np.maximum.accumulate(np.array(breaks), axis=0))
    t, wt = gauss(lev.n_rho)
    segs = []
    for a, b, out in zip(breaks[:-1], breaks[1:], flags):
        rho = a[:, None] + (b - a)[:, None] * t[None, :]
        w = wdir[:, None] * (b - a)[:, None] * wt[None, :]
        segs.append((z + dirs[:, None, :] * rho[..., None], w, rho, out))
    return segs


def H1_0(ext, z: np.ndarray, lev: Level, form: str = "auto", grade: int = 0) -> np.ndarray:
    """Bochner-Martinelli part with polar cells centred at each query point.

    form="divergence" integrates |x|^{-2} div(E phi) (needs ext.divergence);
    form="kernel" integrates B00 . E phi directly, bounded in polar coordinates.
    """
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    if form == "auto":
        form = "divergence" if hasattr(ext, "divergence") else "kernel"
    out = np.zeros(len(z), dtype=complex)
    for i, zi in enumerate(z):
        acc = 0
        for nd, w, rho, _ in _polar_nodes(zi, lev, ext.breaks, grade):
            if form == "divergence":
                # dV = rho^3 drho dS, kernel |x|^{-2} = rho^{-2}
                acc = acc - INV_PI2 * np.sum(w * rho * ext.divergence(nd))
            else:
                B = bm_kernel(zi, nd)["B00"]
                acc = acc + np.sum((w * rho**3)[..., None] * B * ext(nd))
        out[i] = acc
    return out


def newton_potential(f: Callable, z: np.ndarray, R: float, lev: Level) -> np.ndarray:
    """G * f with G = -1/(4 pi^2 |x|^2), for f supported in the ball of radius R."""
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    out = np.zeros(len(z), dtype=complex)
    for i, zi in enumerate(z):
        acc = 0
        for nd, w, rho, _ in _polar_nodes(zi, lev, (R,)):
            acc = acc + np.sum(w * rho * f(nd))
        out[i] = -acc / (4 * np.pi**2)
    return out


def H1_1(ext, leray: Callable, z: np.ndarray, lev: Level, polar: bool = False, grade: int = 0) -> np.ndarray:
    """Integral of K00 against the commutator [dbar, E] phi over its exterior support.

    polar=False uses the extension's fixed shell rule; polar=True uses cells centred at z
    beyond the first break, which resolves query points close to the boundary.
    """
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    out = np.zeros(len(z), dtype=complex)
    if not polar:
        nodes, w = ext.shell(lev)
        psi = ext.commutator(nodes)
        m = np.abs(psi) > 0
        nodes, w, psi = nodes[m], w[m], psi[m]
    for i, zi in enumerate(z):
        if polar:
            segs = [sg for sg in _polar_nodes(zi, lev, ext.breaks, grade) if sg[3]]
            nodes = np.concatenate([sg[0].reshape(-1, 2) for sg in segs])
            w = np.concatenate([(sg[1] * sg[2] ** 3).reshape(-1) for sg in segs])
            keep = (w > 0) & ext.outside(nodes)
            nodes, w = nodes[keep], w[keep]
            psi = ext.commutator(nodes)
        W = leray(nodes, np.broadcast_to(zi, nodes.shape))
        K = cf_kernel(W, zi, nodes)["K00"]
        out[i] = np.sum(w * K * psi)
    return out


def H2_0(ext, z: np.ndarray, lev: Level) -> np.ndarray:
    """(0,1)-form H2^0 applied to E(dbar phi); singular |x|^{-3}, handled by polar cells."""
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    out = np.zeros((len(z), 2), dtype=complex)
    for i, zi in enumerate(z):
        for nd, w, rho, _ in _polar_nodes(zi, lev, ext.breaks):
            B = bm_kernel(zi, nd)["B01"]
            out[i] += np.sum((w * rho**3)[..., None] * B * ext.extended_dbar(nd)[..., None], axis=(0, 1))
    return out


def H1(ext, leray: Callable, z, lev: Level, form: str = "auto", grade: int = 0, polar: bool = False) -> np.ndarray:
    return H1_0(ext, z, lev, form, grade) + H1_1(ext, leray, z, lev, polar, grade)


# ------------------------------------------------------------ residual

def dbar_fd(u: Callable[[np.ndarray], np.ndarray], z: np.ndarray, h: float) -> np.ndarray:
    """Centered differences for (du/dzbar_1, du/dzbar_2) at each query point."""
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    pts = []
    for k in range(2):
        e = np.eye(2)[k]
        pts += [z + h * e, z - h * e, z + 1j * h * e, z - 1j * h * e]
    vals = u(np.concatenate(pts)).reshape(8, len(z))
    out = np.empty((len(z), 2), dtype=complex)
    for k in range(2):
        dx = (vals[4 * k] - vals[4 * k + 1]) / (2 * h)
        dy = (vals[4 * k + 2] - vals[4 * k + 3]) / (2 * h)
        out[:, k] = 0.5 * (dx + 1j * dy)
    return out


@dataclass
class ResidualLevel:
    level: int
    h: float
    residual_max: float
    residual_l2: float
    relative_max: float


def homotopy_residual(ext, leray: Callable, z_grid: np.ndarray, levels, h0: float = 0.1, include_H2: bool = True, form: str = "auto") -> list[ResidualLevel]:
    """phi - dbar H1 phi - H2 dbar phi on a query grid across refinement levels; step h = h0 2^{-L}."""
    z_grid = np.atleast_2d(np.asarray(z_grid, dtype=complex))
    phi = ext.coefficients(z_grid)
    scale = float(np.max(np.abs(phi))) or 1.0
    out = []
    closed = ext.closed
    for L in levels:
        lev = Level.of(L)
        h = h0 * 2.0**-L
        du = dbar_fd(lambda Z: H1(ext, leray, Z, lev, form), z_grid, h)
        res = phi - du
        if include_H2 and not closed:
            res = res - H2_0(ext, z_grid, lev)
        a = np.abs(res).max(axis=1)
        out.append(ResidualLevel(L, h, float(a.max()), float(np.sqrt(np.mean(a**2))), float(a.max() / scale)))
    return out


def observed_orders(levels: list[ResidualLevel]) -> list[float]:
    return [float(np.log(a.residual_max / b.residual_max) / np.log(a.h / b.h)) for a, b in zip(levels[:-1], levels[1:])]


def check_refinement(values: list[float], ratio: float = 0.5) -> None:
    if len(values) >= 3:
        d1, d2 = abs(values[-2] - values[-3]), abs(values[-1] - values[-2])
        if d1 > 0 and d2 / d1 > ratio:
            raise AccuracyError(f"quadrature not converging (ratio {d2 / d1:.2f})")
