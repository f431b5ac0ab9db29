"""Special holomorphic coordinates at a point and the resulting normal-form coefficients.

Frame convention.  At ``p`` let ``g = (dr/dz1, dr/dz2)(p)`` and let ``U`` be the unitary
matrix with columns ``v1`` (complex tangent, first entry real nonnegative) and
``v2 = conj(g)/|g|``.  In rotated coordinates ``u = U^*(z - p)`` the gradient is
``(0, |g|)`` with ``|g|`` real positive.  The first step is then

    zeta1 = u1,   zeta2 = 2 |g| u2,

and step ``l`` substitutes ``zeta2 -> zeta2 - 2 b_l zeta1^l``.  Composing all steps gives

    phi_p(zeta) = p + U (zeta1, (zeta2 - 2 sum_l b_l zeta1^l) / (2|g|))
    g(p, z)     = 2|g| u2 + 2 sum_l b_l u1^l.

With this normalization rho_p = Re zeta2 + ..., and the unit ball at (0, 1) gives
rho = |zeta1|^2 + Re zeta2 + |zeta2|^2 / 4, so a_{1,1} = 1.  The derivative of g in
u2 at p equals 2|dr/dz(p)|, which is 1 exactly when |dr/dz(p)| = 1/2 (dr = dx2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve2d

from .domain_model import DomainSpec, Poly, to_complex, to_real
from .errors import GeometryError, InternalConsistencyError

FORBIDDEN_TOL = 1e-9


def unitary_frame(g: np.ndarray) -> np.ndarray:
    """Unitary U with U^T g = (0, |g|)."""
    g = np.asarray(g, dtype=complex)
    ng = float(np.linalg.norm(g))
    if ng < 1e-12:
        raise GeometryError("degenerate gradient: dr(p) = 0")
    g1, g2 = g
    v2 = np.conj(g) / ng
    if abs(g2) > 1e-300:
        v1 = np.array([abs(g2), -g1 * np.conj(g2) / abs(g2)]) / ng
    else:
        v1 = np.array([-g2, g1]) / ng
    return np.column_stack([v1, v2])


def unitary_frames(g: np.ndarray) -> np.ndarray:
    """Batched version of :func:`unitary_frame`, g of shape (n, 2)."""
    g = np.asarray(g, dtype=complex)
    ng = np.linalg.norm(g, axis=-1)
    if np.any(ng < 1e-12):
        raise GeometryError("degenerate gradient in batch")
    g1, g2 = g[..., 0], g[..., 1]
    a2 = np.abs(g2)
    safe = np.where(a2 > 1e-300, a2, 1.0)
    v1a = np.where(a2 > 1e-300, a2, -g2) / ng
    v1b = np.where(a2 > 1e-300, -g1 * np.conj(g2) / safe, g1) / ng
    v2 = np.conj(g) / ng[..., None]
    U = np.empty(g.shape[:-1] + (2, 2), dtype=complex)
    U[..., 0, 0], U[..., 1, 0] = v1a, v1b
    U[..., 0, 1], U[..., 1, 1] = v2[..., 0], v2[..., 1]
    return U


# ------------------------------------------------------------ series helpers

def _series_mul(a: np.ndarray, b: np.ndarray, N: int) -> np.ndarray:
    """Truncated product of batched univariate series, shape (..., N+1)."""
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    for i in range(N + 1):
        if np.any(a[..., i] != 0):
            out[..., i:] += a[..., i : i + 1] * b[..., : N + 1 - i]
    return out


def _series_pow_table(s: np.ndarray, n: int, N: int) -> list[np.ndarray]:
    one = np.zeros_like(s)
    one[..., 0] = 1.0
    tbl = [one]
    for _ in range(n):
        tbl.append(_series_mul(tbl[-1], s, N))
    return tbl


def _holomorphic_restriction(poly: Poly, z1s, z2s, pbar, N):
    """Series of r(z(zeta1), conj(p)) in zeta1, batched over base points."""
    terms = list(poly.terms.items())
    maxa = max(e[0] for e, _ in terms)
    maxb = max(e[2] for e, _ in terms)
    P1 = _series_pow_table(z1s, maxa, N)
    P2 = _series_pow_table(z2s, maxb, N)
    out = np.zeros_like(z1s)
    for e, c in terms:
        const = c * pbar[..., 0] ** e[1] * pbar[..., 1] ** e[3]
        out += const[..., None] * _series_mul(P1[e[0]], P2[e[2]], N)
    return out


def compute_b(D: DomainSpec, p: np.ndarray, m: int, U: np.ndarray | None = None):
    """Pure-term coefficients b_l, l = 2..m, batched over base points p (..., 2).

    b_l is the zeta1^l coefficient of r(phi(zeta1, 0), conj(p)) computed with b_l = 0;
    later steps only change degrees above l.
    """
    p = np.asarray(p, dtype=complex)
    g = D.r.dz(p)
    if U is None:
        U = unitary_frames(g)
    ng = np.linalg.norm(g, axis=-1)
    N = m
    shape = p.shape[:-1]
    b = np.zeros(shape + (N + 1,), dtype=complex)  # b[..., l]
    pbar = np.conj(p)
    for l in range(2, m + 1):
        # u2(zeta1) = -sum b_l zeta1^l / |g|
        u2 = -b / ng[..., None]
        u1 = np.zeros_like(b)
        u1[..., 1] = 1.0
        z1s = U[..., 0, 0, None] * u1 + U[..., 0, 1, None] * u2
        z2s = U[..., 1, 0, None] * u1 + U[..., 1, 1, None] * u2
        z1s[..., 0] += p[..., 0]
        z2s[..., 0] += p[..., 1]
        R = _holomorphic_restriction(D.r.poly, z1s, z2s, pbar, N)
        b[..., l] = R[..., l]
    return b, U, ng


# ------------------------------------------------------------ 2-D holomorphic series

def _mul2(a, b, N):
    out = convolve2d(a, b)[: N + 1, : N + 1]
    i, k = np.indices(out.shape)
    out[i + k > N] = 0
    return out


def _pow2_table(s, n, N):
    one = np.zeros((N + 1, N + 1), dtype=complex)
    one[0, 0] = 1
    tbl = [one]
    for _ in range(n):
        tbl.append(_mul2(tbl[-1], s, N))
    return tbl


def composition_table(D: DomainSpec, p, U, ng, b, N: int) -> np.ndarray:
    """Coefficients C[i,j,k,l] of zeta1^i zbar1^j zeta2^k zbar2^l in r(phi_p(zeta)), total degree <= N."""
    p = np.asarray(p, dtype=complex)
    z = []
    for row in range(2):
        s = np.zeros((N + 1, N + 1), dtype=complex)
        s[0, 0] = p[row]
        s[1, 0] += U[row, 0]
        c2 = U[row, 1] / (2 * ng)
        s[0, 1] += c2
        for l in range(2, len(b)):
            if l <= N:
                s[l, 0] += -2 * b[l] * c2
        z.append(s)
    terms = list(D.r.poly.terms.items())
    ma = max(max(e[0], e[1]) for e, _ in terms)
    mb = max(max(e[2], e[3]) for e, _ in terms)
    P1 = _pow2_table(z[0], ma, N)
    P2 = _pow2_table(z[1], mb, N)
    C = np.zeros((N + 1,) * 4, dtype=complex)
    cache: dict = {}

    def hol(a, bb):
        key = (a, bb)
        if key not in cache:
            cache[key] = _mul2(P1[a], P2[bb], N)
        return cache[key]

    for e, c in terms:
        H = hol(e[0], e[2])
        A = np.conj(hol(e[1], e[3]))
        C += c * np.einsum("ik,jl->ijkl", H, A)
    idx = np.indices(C.shape).sum(axis=0)
    C[idx > N] = 0
    return C


@dataclass
class NormalForm:
    p: np.ndarray
    m: int
    U: np.ndarray
    grad_norm: float  # |dr/dz(p)|
    b: dict
    a: dict
    residual_order_certificate: float
    r_at_p: float
    table: np.ndarray = field(repr=False)
    domain: DomainSpec = field(repr=False, default=None)

    @property
    def linear_part(self) -> np.ndarray:
        """Matrix M with zeta = M (z - p) for the first step."""
        return np.diag([1.0, 2 * self.grad_norm]) @ self.U.conj().T

    def _b_arr(self):
        return np.array([self.b.get(l, 0) for l in range(self.m + 1)], dtype=complex)

    def phi(self, zeta: np.ndarray) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=complex)
        z1, z2 = zeta[..., 0], zeta[..., 1]
        corr = sum(self.b[l] * z1**l for l in self.b)
        u = np.stack([z1, (z2 - 2 * corr) / (2 * self.grad_norm)], axis=-1)
        return self.p + u @ self.U.T

    def phi_inverse(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        u = (z - self.p) @ np.conj(self.U)
        u1 = u[..., 0]
        g = 2 * self.grad_norm * u[..., 1] + 2 * sum(self.b[l] * u1**l for l in self.b)
        return np.stack([u1, g], axis=-1)

    def to_json(self) -> dict:
        return {
            "p": [[c.real, c.imag] for c in self.p],
            "m": self.m,
            "U": [[[c.real, c.imag] for c in row] for row in self.U],
            "grad_norm": self.grad_norm,
            "b": {str(l): [v.real, v.imag] for l, v in self.b.items()},
            "a": [{"j": j, "k": k, "re": v.real, "im": v.imag} for (j, k), v in sorted(self.a.items())],
            "residual_order_certificate": self.residual_order_certificate,
        }


def catlin_normalize(D: DomainSpec, p, m: int | None = None, allow_interior: bool = False, tol: float = 1e-8) -> NormalForm:
    """Normal form of r at p up to order m (default: the domain's maximal type)."""
    p = np.asarray(p, dtype=complex)
    m = D.type_max if m is None else int(m)
    r_p = float(D.r(p))
    if not allow_interior and abs(r_p) > tol:
        raise GeometryError(f"base point is not on the boundary (r = {r_p:.3e})")
    b_arr, U, ng = compute_b(D, p, m)
    ng = float(ng)
    b = {l: complex(b_arr[l]) for l in range(2, m + 1)}
    N = m + 1
    C = composition_table(D, p, U, ng, b_arr, N)
    C[0, 0, 0, 0] -= r_p
    cert = 0.0
    for j in range(2, m + 1):
        cert = max(cert, abs(C[j, 0, 0, 0]), abs(C[0, j, 0, 0]))
    lin_err = max(abs(C[1, 0, 0, 0]), abs(C[0, 1, 0, 0]), abs(C[0, 0, 1, 0] - 0.5), abs(C[0, 0, 0, 1] - 0.5), abs(C[0, 0, 0, 0]))
    if cert > FORBIDDEN_TOL or lin_err > FORBIDDEN_TOL:
        raise InternalConsistencyError(f"normal form check failed: forbidden {cert:.2e}, linear {lin_err:.2e}")
    a = {(j, k): complex(C[j, k, 0, 0]) for j in range(1, m) for k in range(1, m) if j + k <= m}
    return NormalForm(p=p, m=m, U=U, grad_norm=ng, b=b, a=a, residual_order_certificate=float(cert), r_at_p=r_p, table=C, domain=D)


def pullback_defining(nf: NormalForm, zeta) -> np.ndarray:
    """rho_p(zeta) = r(phi_p(zeta)) - r(p), evaluated exactly by pointwise composition."""
    return nf.domain.r(nf.phi(zeta)) - nf.r_at_p


def pullback_from_table(nf: NormalForm, zeta, table: np.ndarray | None = None) -> np.ndarray:
    """Evaluate a composed coefficient table (default: the degree m+1 truncation)."""
    C = nf.table if table is None else table
    zeta = np.asarray(zeta, dtype=complex)
    N = C.shape[0] - 1
    z1, z2 = zeta[..., 0], zeta[..., 1]
    pw = [np.stack([v**n for n in range(N + 1)], axis=-1) for v in (z1, np.conj(z1), z2, np.conj(z2))]
    val = np.einsum("ijkl,...i,...j,...k,...l->...", C, *pw)
    return val.real


def full_composition_table(nf: NormalForm) -> np.ndarray:
    """Untruncated table of r(phi_p(zeta)) - r(p); size grows like (deg r * m)^4."""
    N = nf.domain.r.poly.degree * max(nf.m, 1)
    b_arr = nf._b_arr()
    C = composition_table(nf.domain, nf.p, nf.U, nf.grad_norm, b_arr, N)
    C[0, 0, 0, 0] -= nf.r_at_p
    return C


def second_component_inverse(nf: NormalForm, z) -> np.ndarray:
    """g(p, z), the second coordinate of phi_p^{-1}(z)."""
    return nf.phi_inverse(z)[..., 1]


def g_batch(D: DomainSpec, base: np.ndarray, z: np.ndarray, m: int | None = None) -> np.ndarray:
    """g(base_i, z_i) for arrays of base points and arguments of matching shape (..., 2)."""
    m = D.type_max if m is None else m
    base = np.asarray(base, dtype=complex)
    b, U, ng = compute_b(D, base, m)
    u = np.einsum("...ji,...j->...i", np.conj(U), np.asarray(z, dtype=complex) - base)
    out = 2 * ng * u[..., 1]
    for l in range(2, m + 1):
        out = out + 2 * b[..., l] * u[..., 0] ** l
    return out


@dataclass
class TangentialChart:
    base: np.ndarray
    s1: float
    s2: float
    t: np.ndarray
    jacobian_cert: float


def chart_coordinates(D: DomainSpec, z, zeta, eps: float, m: int | None = None) -> np.ndarray:
    """(s1, s2, t1, t2) for zeta near z; s2 = Im g(zeta, z), t = tangential offset in the frame at z."""
    z = np.asarray(z, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    s1 = D.r(zeta) + eps
    s2 = g_batch(D, zeta, np.broadcast_to(z, zeta.shape), m).imag
    Uz = unitary_frames(D.r.dz(z))
    u1 = np.einsum("...j,...j->...", np.conj(Uz[..., :, 0]), zeta - z)
    return np.stack([s1, s2, u1.real, u1.imag], axis=-1)


def tangential_chart(D: DomainSpec, z, zeta, eps: float, m: int | None = None, h: float = 1e-6) -> TangentialChart:
    z = np.asarray(z, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    c = chart_coordinates(D, z, zeta, eps, m)
    x = to_real(zeta)
    J = np.zeros((4, 4))
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        J[:, k] = (chart_coordinates(D, z, to_complex(x + e), eps, m) - chart_coordinates(D, z, to_complex(x - e), eps, m)) / (2 * h)
    # normalize so the dr and dIm g rows are unit size for a gradient of unit length
    ngr = np.linalg.norm(D.r.grad(zeta))
    ngz = 2 * np.linalg.norm(D.r.dz(zeta))
    det = abs(np.linalg.det(J)) / (ngr * ngz)
    if det < 1e-8:
        raise GeometryError(f"tangential chart degenerate (|det| = {det:.2e})")
    return TangentialChart(base=z, s1=float(c[0]), s2=float(c[1]), t=c[2:], jacobian_cert=float(det))
