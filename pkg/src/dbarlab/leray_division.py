"""Holomorphic division with minimal weighted norm, normalization near q, and patched Leray maps.

Orientation used throughout: a Leray map satisfies sum_i w_i(zeta, z) (zeta_i - z_i) = 1.
Division pairs satisfy sum_i h_i(q, z) (z_i - q_i) = 1 and are turned into Leray maps by
w = -h / Phi_q with Phi_q(zeta, z) = sum_i h_i(q, z) (z_i - zeta_i).

Division basis.  A polynomial pair can never satisfy the identity, because the left side
vanishes at z = q.  The default basis is therefore rational: h_i = P_i(z - q) / L(z) with
L(z) = g(p, z) - g(p, q) the normal-form coordinate at a boundary point p, so the identity
becomes the polynomial constraint sum_i P_i (z_i - q_i) = L on coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import null_space

from .domain_model import DomainSpec, boundary_project, project_along_gradient
from .errors import GeometryError, InfeasibleDivisionError, NumericError
from .normal_form import NormalForm, catlin_normalize, g_batch, unitary_frames
from .quadrature import StarQuadrature, gauss, star_quadrature


def monomials(d: int) -> list[tuple[int, int]]:
    return [(a, n - a) for n in range(d + 1) for a in range(n, -1, -1)]


def eval_monomials(x: np.ndarray, exps) -> np.ndarray:
    """(..., 2) -> (..., n_mono)."""
    d = max(a + b for a, b in exps)
    p1 = np.stack([x[..., 0] ** k for k in range(d + 1)], axis=-1)
    p2 = np.stack([x[..., 1] ** k for k in range(d + 1)], axis=-1)
    return np.stack([p1[..., a] * p2[..., b] for a, b in exps], axis=-1)


# ------------------------------------------------------------ convex Leray map

def explicit_leray_convex(D: DomainSpec, zeta, z, tol: float = 1e-12) -> np.ndarray:
    """w_i = (dr/dzeta_i)(zeta) / sum_j (dr/dzeta_j)(zeta)(zeta_j - z_j)."""
    zeta = np.asarray(zeta, dtype=complex)
    z = np.asarray(z, dtype=complex)
    g = D.r.dz(zeta)
    den = np.sum(g * (zeta - z), axis=-1)
    if np.min(np.abs(den)) < tol:
        raise GeometryError("vanishing support-function denominator (domain not convex here)")
    return g / den[..., None]


# ------------------------------------------------------------ division

def _poly2_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1), dtype=complex)
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            if a[i, j] != 0:
                out[i : i + b.shape[0], j : j + b.shape[1]] += a[i, j] * b
    return out


def _linear_form_poly(c0: complex, c1: complex, c2: complex) -> np.ndarray:
    P = np.zeros((2, 2), dtype=complex)
    P[0, 0], P[1, 0], P[0, 1] = c0, c1, c2
    return P


@dataclass
class Denominator:
    """L(z) = g(p, z) - g(p, q), stored as a polynomial in x = (z - q)/scale."""

    nf: NormalForm
    q: np.ndarray
    scale: float
    coeffs: np.ndarray  # [i, j] coefficient of x1^i x2^j

    @classmethod
    def build(cls, nf: NormalForm, q, scale: float) -> "Denominator":
        q = np.asarray(q, dtype=complex)
        Uh = np.conj(nf.U).T
        a0 = Uh @ (q - nf.p)
        M = scale * Uh
        u1 = _linear_form_poly(a0[0], M[0, 0], M[0, 1])
        u2 = _linear_form_poly(a0[1], M[1, 0], M[1, 1])
        deg = max([1] + list(nf.b))
        L = np.zeros((deg + 1, deg + 1), dtype=complex)
        L[:2, :2] += 2 * nf.grad_norm * u2
        pw = np.ones((1, 1), dtype=complex)
        for l in range(1, deg + 1):
            pw = _poly2_mul(pw, u1)
            if l in nf.b:
                L[: pw.shape[0], : pw.shape[1]] += 2 * nf.b[l] * pw
        L[0, 0] = 0.0  # L(q) = 0 exactly
        L[np.abs(L) < 1e-15 * np.abs(L).max()] = 0
        return cls(nf, q, scale, L)

    @property
    def degree(self) -> int:
        i, j = np.nonzero(self.coeffs)
        return int((i + j).max())

    def __call__(self, z) -> np.ndarray:
        x = (np.asarray(z, dtype=complex) - self.q) / self.scale
        n = self.coeffs.shape[0]
        p1 = np.stack([x[..., 0] ** k for k in range(n)], axis=-1)
        p2 = np.stack([x[..., 1] ** k for k in range(n)], axis=-1)
        return np.einsum("ij,...i,...j->...", self.coeffs, p1, p2)


@dataclass
class DivisionPair:
    q: np.ndarray
    eta: float
    degree: int
    basis: str
    exps: list
    coeffs1: np.ndarray
    coeffs2: np.ndarray
    scale: float
    denom: Denominator | None
    I_eta_value: float = float("nan")
    constraint_residual: float = 0.0
    notes: list = field(default_factory=list)

    def h(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        x = (z - self.q) / self.scale
        B = eval_monomials(x, self.exps)
        P = np.stack([B @ self.coeffs1, B @ self.coeffs2], axis=-1)
        if self.denom is not None:
            P = P / self.denom(z)[..., None]
        return P

    def identity_residual(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.abs(np.sum(self.h(z) * (z - self.q), axis=-1) - 1)

    def to_json(self) -> dict:
        enc = lambda v: [[c.real, c.imag] for c in v]
        return {
            "q": enc(self.q),
            "eta": self.eta,
            "degree": self.degree,
            "basis": self.basis,
            "scale": self.scale,
            "monomials": [list(e) for e in self.exps],
            "coeffs1": enc(self.coeffs1),
            "coeffs2": enc(self.coeffs2),
            "I_eta": self.I_eta_value,
            "constraint_residual": self.constraint_residual,
            "notes": self.notes,
        }


def division_constraints(exps, denom: Denominator | None, scale: float):
    """A c = b encoding sum_i P_i(x) * scale * x_i = L(x) (or = 1 without a denominator)."""
    d = max(a + b for a, b in exps)
    targets = monomials(d + 1)
    idx = {e: k for k, e in enumerate(targets)}
    n = len(exps)
    A = np.zeros((len(targets), 2 * n), dtype=complex)
    for k, (a, b) in enumerate(exps):
        A[idx[(a + 1, b)], k] += scale
        A[idx[(a, b + 1)], n + k] += scale
    rhs = np.zeros(len(targets), dtype=complex)
    if denom is None:
        rhs[idx[(0, 0)]] = 1.0
        return A, rhs, True
    Lc = denom.coeffs
    fits = True
    for i in range(Lc.shape[0]):
        for j in range(Lc.shape[1]):
            if Lc[i, j] != 0:
                if (i, j) in idx:
                    rhs[idx[(i, j)]] = Lc[i, j]
                else:
                    fits = False
    return A, rhs, fits


def weighted_objective_matrix(quad: StarQuadrature, q, eta: float, exps, scale: float, denom: Denominator | None) -> np.ndarray:
    """Rows sqrt(w dist^{2 eta} / |z - q|^2) * basis / L, so ||B c_i||^2 is the i-th term of I^eta."""
    z = quad.nodes
    wt = quad.weights * quad.boundary_gap ** (2 * eta) / np.sum(np.abs(z - q) ** 2, axis=-1)
    B = eval_monomials((z - q) / scale, exps)
    if denom is not None:
        B = B / denom(z)[:, None]
    return np.sqrt(wt)[:, None] * B


def skoda_division(q, eta: float, degree: int | None, quad: StarQuadrature, nf: NormalForm | None = None, basis: str = "rational", scale: float | None = None) -> DivisionPair:
    """Minimize the discretized I^eta over pairs satisfying the division identity exactly."""
    q = np.asarray(q, dtype=complex)
    if scale is None:
        scale = float(np.max(np.linalg.norm(quad.nodes - q, axis=-1)))
    if basis == "monomial":
        denom = None
    elif basis == "rational":
        if nf is None:
            raise ValueError("rational basis needs the normal form at a boundary point")
        denom = Denominator.build(nf, q, scale)
        Lz = denom(quad.nodes)
        if np.min(np.abs(Lz)) < 1e-12 * np.max(np.abs(Lz)):
            raise GeometryError("denominator vanishes on the quadrature region")
    else:
        raise ValueError(f"unknown basis {basis!r}")
    if degree is None:
        degree = max(0, denom.degree - 1) if denom is not None else 0
    exps = monomials(degree)
    A, rhs, fits = division_constraints(exps, denom, scale)
    if not fits:
        raise InfeasibleDivisionError(f"degree {degree} too low for a denominator of degree {denom.degree}; raise degree")
    c0, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    cres = float(np.max(np.abs(A @ c0 - rhs)))
    if cres > 1e-10 * max(1.0, np.abs(rhs).max()):
        raise InfeasibleDivisionError(f"division identity infeasible at degree {degree} in the {basis} basis (residual {cres:.2e})")
    N = null_space(A)
    B1 = weighted_objective_matrix(quad, q, eta, exps, scale, denom)
    n = len(exps)
    Bfull = np.zeros((2 * B1.shape[0], 2 * n), dtype=complex)
    Bfull[: B1.shape[0], :n] = B1
    Bfull[B1.shape[0] :, n:] = B1
    notes = []
    if N.shape[1] > 0:
        BN = Bfull @ N
        y, _, rank, _ = np.linalg.lstsq(BN, -(Bfull @ c0), rcond=None)
        if rank < N.shape[1]:
            notes.append(f"rank-deficient objective ({rank} < {N.shape[1]}); minimum-norm solution used")
        c = c0 + N @ y
    else:
        c = c0
    cres = float(np.max(np.abs(A @ c - rhs)))
    I = float(np.sum(np.abs(Bfull @ c) ** 2))
    return DivisionPair(q, eta, degree, basis, exps, c[:n], c[n:], scale, denom, I, cres, notes)


def closed_form_I(h: Callable[[np.ndarray], np.ndarray], quad: StarQuadrature, q, eta: float) -> float:
    """I^eta of a given pair evaluated on a quadrature."""
    z = quad.nodes
    wt = quad.weights * quad.boundary_gap ** (2 * eta) / np.sum(np.abs(z - q) ** 2, axis=-1)
    return float(np.sum(wt[:, None] * np.abs(h(z)) ** 2))


def ball_quadrature(D: DomainSpec, n_r=12, n_chi=10, n_ang=16, member=None, r_max=None) -> StarQuadrature:
    member = member or (lambda z: D.r(z) < 0)
    return star_quadrature(member, np.zeros(2), r_max or D.neighborhood_radius, n_r, n_chi, n_ang)


# ------------------------------------------------------------ normalization

def normalize_phi(dp: DivisionPair, zeta, z, min_phi: float = 0.5):
    """(h_{q,1}, h_{q,2}) = h / Phi_q with sum_i h_{q,i}(zeta_i - z_i) = -1 ... see module docstring.

    Returns (hq, Phi) where hq satisfies sum_i hq_i (z_i - zeta_i) = 1.
    """
    zeta = np.asarray(zeta, dtype=complex)
    z = np.asarray(z, dtype=complex)
    h = dp.h(z)
    Phi = np.sum(h * (z - zeta), axis=-1)
    if np.min(np.abs(Phi)) < min_phi:
        raise GeometryError(f"|Phi_q| = {np.min(np.abs(Phi)):.3f} below {min_phi}; zeta too far from q")
    return h / Phi[..., None], Phi


# ------------------------------------------------------------ patching

def bump(t: np.ndarray) -> np.ndarray:
    """Standard mollifier profile exp(-1/(1-t^2)) on |t| < 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = np.abs(t) < 1
    out[m] = np.exp(-1.0 / (1.0 - t[m] ** 2))
    return out


@dataclass
class NetPoint:
    q: np.ndarray
    radius: float
    pair: DivisionPair | None
    binding: str
    sup_h: float
    p: np.ndarray | None = None


@dataclass
class LerayMap:
    D: DomainSpec
    eps: float
    eta: float
    net: list
    local: Callable | None = None  # optional (zeta, z) -> w override for explicit maps

    def partition(self, zeta) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=complex)
        B = np.stack([bump(np.linalg.norm(zeta - nu.q, axis=-1) / nu.radius) for nu in self.net], axis=-1)
        S = B.sum(axis=-1)
        if np.any(S <= 0):
            raise GeometryError(f"cover gap at {int(np.sum(S <= 0))} sample(s); refine the net")
        return B / S[..., None]

    def __call__(self, zeta, z) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=complex)
        z = np.asarray(z, dtype=complex)
        chi = self.partition(zeta)
        out = np.zeros(np.broadcast_shapes(zeta.shape, z.shape), dtype=complex)
        zb = np.broadcast_to(z, out.shape)
        zetab = np.broadcast_to(zeta, out.shape)
        for k, nu in enumerate(self.net):
            m = chi[..., k] > 0
            if not np.any(m):
                continue
            if self.local is not None:
                w = self.local(nu, zetab[m], zb[m])
            else:
                hq, _ = normalize_phi(nu.pair, zetab[m], zb[m])
                w = -hq
            out[m] += chi[..., k][m][:, None] * w
        return out


def c_star(D: DomainSpec, p0, radius: float, m: int, rng: np.random.Generator, n: int = 2000) -> dict:
    """c_* = (1/8) max(||r||_1, ||g||_1, C_m)^{-1}, with C^1 norms estimated by sampling a ball around p0."""
    p0 = np.asarray(p0, dtype=complex)
    v = rng.normal(size=(n, 4))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    Z = p0 + radius * (rng.random(n)[:, None] ** 0.25) * (v[:, 0::2] + 1j * v[:, 1::2])
    r1 = float(np.max(np.abs(D.r(Z))) + np.max(np.linalg.norm(D.r.grad(Z), axis=-1)))
    # ||g(., z)||_1 in the base point, for z = p0: finite differences on a few samples
    h = 1e-6
    Zs = Z[: min(200, n)]
    base = g_batch(D, Zs, np.broadcast_to(p0, Zs.shape), m)
    grads = []
    for k in range(4):
        e = np.zeros(2, dtype=complex)
        e[k // 2] = h if k % 2 == 0 else 1j * h
        grads.append(np.abs(g_batch(D, Zs + e, np.broadcast_to(p0, Zs.shape), m) - base) / h)
    g1 = float(np.max(np.abs(base)) + np.max(np.linalg.norm(np.stack(grads, -1), axis=-1)))
    Cm = float(m * (2 * radius) ** (m - 1) + (2 * radius) ** m)
    c = 0.125 / max(r1, g1, Cm)
    return {"c_star": c, "r_C1": r1, "g_C1": g1, "C_m": Cm}


def net_radius(q, r_q: float, eps: float, sup_h: float, cstar: float) -> tuple[float, str]:
    a = cstar * (r_q + eps)
    b = cstar / sup_h
    return (a, "c*(r(q)+eps)") if a <= b else (b, "c*/C_q")


def gamma_eps(D: DomainSpec, z, zeta, m: int) -> np.ndarray:
    """Gamma_eps(z, zeta) = r(zeta) - r(z) + |Im g(zeta, z)| + |z^T - zeta^T|^m (eps cancels)."""
    z = np.asarray(z, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    img = np.abs(g_batch(D, zeta, z, m).imag)
    zt = project_along_gradient(D, z)
    zetat = project_along_gradient(D, zeta)
    return D.r(zeta) - D.r(z) + img + np.linalg.norm(zt - zetat, axis=-1) ** m


def dbar_residual(f: Callable[[np.ndarray], np.ndarray], z: np.ndarray, h: float = 1e-3, n_pts: int = 16) -> np.ndarray:
    """max_k |d f / d zbar_k| from a circular stencil in each coordinate plane.

    (1/(N h)) sum_j f(z + h w^j e_k) w^j with w = exp(2 pi i/N) equals d f/d zbar_k up to
    O(h^2); on holomorphic f every term below order N-1 cancels exactly.
    """
    z = np.asarray(z, dtype=complex)
    om = np.exp(2j * np.pi * np.arange(n_pts) / n_pts)
    res = None
    for k in range(2):
        acc = 0
        for w in om:
            acc = acc + f(z + h * w * np.eye(2)[k]) * w
        r = np.abs(acc / (n_pts * h)).reshape(len(z), -1).max(axis=1)
        res = r if res is None else np.maximum(res, r)
    return res


def holomorphic_derivative(f, z: np.ndarray, direction: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """Derivative of a holomorphic f along a complex direction (fourth order)."""
    c = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
    offs = np.array([-2, -1, 1, 2])
    return sum(cc * f(z + o * h * direction) for cc, o in zip(c, offs)) / h


# ------------------------------------------------------------ net construction

@dataclass
class NetSpec:
    D: DomainSpec
    p0: np.ndarray
    tangential_half_width: float
    spacing: float
    levels: tuple
    eps: float
    eta: float = 0.5
    degree: int | None = None
    quad_res: tuple = (8, 8, 12)


def build_net(spec: NetSpec, rng: np.random.Generator, cstar: float | None = None, region: str = "base") -> tuple[LerayMap, dict]:
    """Patch division-based local Leray maps over a tangential grid of base points and normal levels.

    region 'base' integrates the division objective over D itself; 'bumped' over D_*(q).
    """
    from .bumping import BumpFamily

    D = spec.D
    m = D.type_max
    p0 = boundary_project(D, spec.p0)
    U0 = unitary_frames(D.r.dz(p0))
    info = c_star(D, p0, 0.3, m, rng) if cstar is None else {"c_star": cstar}
    cs = info["c_star"]
    t = np.arange(-spec.tangential_half_width, spec.tangential_half_width + 1e-12, spec.spacing)
    base_quad = ball_quadrature(D, *spec.quad_res)
    net = []
    for a in t:
        for b in t:
            guess = p0 + U0[:, 0] * (a + 1j * b)
            p = boundary_project(D, guess)
            nf = catlin_normalize(D, p)
            n_out = np.conj(D.r.dz(p))
            n_out /= np.linalg.norm(n_out)
            for lev in spec.levels:
                q = p + n_out * lev
                if region == "bumped":
                    fam = BumpFamily.at(D, p)
                    dstar = fam.D_star(q)
                    quad = star_quadrature(dstar.contains, np.zeros(2), D.neighborhood_radius, *spec.quad_res)
                else:
                    quad = base_quad
                pair = skoda_division(q, spec.eta, spec.degree, quad, nf)
                inner = quad.nodes[D.r(quad.nodes) < -spec.eps]
                zb = project_along_gradient(D, inner[np.argsort(D.r(inner))[-200:]])
                zb = zb - spec.eps * np.conj(D.r.dz(zb)) / np.linalg.norm(D.r.dz(zb), axis=-1, keepdims=True) / 2
                sup_h = float(np.max(np.abs(pair.h(np.concatenate([inner, zb])))))
                rq = float(D.r(q))
                rad, binding = net_radius(q, rq, spec.eps, sup_h, cs)
                net.append(NetPoint(q, rad, pair, binding, sup_h, p))
    lm = LerayMap(D, spec.eps, spec.eta, net)
    info["n_net"] = len(net)
    info["binding"] = {k: sum(1 for nu in net if nu.binding == k) for k in ("c*(r(q)+eps)", "c*/C_q")}
    return lm, info


# ------------------------------------------------------------ certificates

def sample_cover(lm: LerayMap, n: int, rng: np.random.Generator, shrink: float = 0.9) -> np.ndarray:
    """Uniform-in-ball samples from the union of the net balls (the region U_{p,eps})."""
    k = rng.integers(0, len(lm.net), size=n)
    v = rng.normal(size=(n, 4))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    rad = np.array([lm.net[i].radius for i in k]) * shrink * rng.random(n) ** 0.25
    q = np.array([lm.net[i].q for i in k])
    zeta = q + rad[:, None] * (v[:, 0::2] + 1j * v[:, 1::2])
    keep = lm.D.r(zeta) > 0
    return zeta[keep]


def sample_interior_near(D: DomainSpec, p0, eps: float, radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Points of D'_eps = {r < -eps} within `radius` of p0."""
    p0 = np.asarray(p0, dtype=complex)
    out = []
    while sum(len(o) for o in out) < n:
        v = rng.normal(size=(4 * n, 4))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        Z = p0 + radius * rng.random(4 * n)[:, None] ** 0.25 * (v[:, 0::2] + 1j * v[:, 1::2])
        out.append(Z[D.r(Z) < -eps])
    return np.concatenate(out)[:n]


@dataclass
class LerayCertificate:
    reproduction: float
    cr_residual: float
    fits: dict
    n_pairs: int
    n_net: int

    def to_json(self):
        return {"reproduction": self.reproduction, "cr_residual": self.cr_residual, "fits": self.fits, "n_pairs": self.n_pairs, "n_net": self.n_net}


def certify_leray(lm: LerayMap, n_pairs: int, rng: np.random.Generator, z_radius: float = 0.3, n_cr: int = 200) -> LerayCertificate:
    """Reproduction residual, d-bar residual in z and the fitted derivative-bound constants."""
    D = lm.D
    m = D.type_max
    zeta = sample_cover(lm, int(n_pairs * 1.5) + 10, rng)[:n_pairs]
    p0 = np.mean([nu.p for nu in lm.net], axis=0)
    z = sample_interior_near(D, p0, lm.eps, z_radius, len(zeta), rng)
    W = lm(zeta, z)
    rep = float(np.max(np.abs(np.sum(W * (zeta - z), axis=-1) - 1)))
    k = min(n_cr, len(z))
    zc, zetac = z[:k], zeta[:k]
    cr = 0.0
    for i in range(k):
        f = lambda Z, i=i: lm(np.broadcast_to(zetac[i], Z.shape), Z)
        cr = max(cr, float(dbar_residual(f, zc[i : i + 1])[0]))
    G = gamma_eps(D, z, zeta, m)
    dist = np.linalg.norm(z - zeta, axis=-1)
    Uz = unitary_frames(D.r.dz(project_along_gradient(D, z)))
    fits = {"(0,0)": float(np.max(np.abs(W).max(axis=-1) * G ** (1 + lm.eta)))}
    for name, col, a1, a2 in (("(1,0)", 0, 1, 0), ("(0,1)", 1, 0, 1)):
        dirs = Uz[:, :, col]
        h = 1e-4 * np.minimum(1.0, dist)[:, None]
        dW = sum(c * lm(zeta, z + o * h * dirs) for c, o in zip(np.array([1.0, -8.0, 8.0, -1.0]) / 12.0, (-2, -1, 1, 2))) / h
        fits[name] = float(np.max(np.abs(dW).max(axis=-1) * dist**a1 * G ** (a2 + 1 + lm.eta)))
    return LerayCertificate(rep, cr, fits, len(zeta), len(lm.net))
