"""Nonisotropic scales tau and J, generalized polydisks and the type of a boundary point."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain_model import DomainSpec
from .errors import GeometryError, InfiniteTypeError
from .normal_form import NormalForm, catlin_normalize, unitary_frame

A_TOL = 1e-9


@dataclass(frozen=True)
class AnisoProfile:
    A: dict  # l -> A_l, l = 2..m
    nf: NormalForm | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_normal_form(cls, nf: NormalForm) -> "AnisoProfile":
        A = {l: 0.0 for l in range(2, nf.m + 1)}
        for (j, k), v in nf.a.items():
            A[j + k] = max(A[j + k], abs(v))
        return cls(A=A, nf=nf)

    @property
    def m(self) -> int:
        return max(self.A)

    @property
    def type_estimate(self) -> int:
        nz = [l for l in sorted(self.A) if self.A[l] > A_TOL]
        if not nz:
            raise InfiniteTypeError("all A_l vanish; increase m")
        return nz[0]

    @property
    def top(self) -> int:
        """Largest l with A_l > 0; the upper power is 1/top."""
        nz = [l for l in self.A if self.A[l] > A_TOL]
        if not nz:
            raise InfiniteTypeError("all A_l vanish; increase m")
        return max(nz)

    def sandwich_constants(self) -> tuple[float, float]:
        """(c, C) with c d^{1/2} <= tau(d) <= C d^{1/top} for 0 < d <= 1."""
        vals = [self.A[l] ** (-1.0 / l) for l in self.A if self.A[l] > A_TOL]
        return min(vals), min(vals)


def tau(profile: AnisoProfile, delta) -> np.ndarray:
    delta = np.asarray(delta, dtype=float)
    terms = [(delta / A) ** (1.0 / l) for l, A in profile.A.items() if A > A_TOL]
    if not terms:
        raise InfiniteTypeError("tau undefined: all A_l vanish")
    return np.minimum.reduce(terms) if len(terms) > 1 else terms[0]


def J_delta(profile: AnisoProfile, delta, zeta) -> np.ndarray:
    zeta = np.asarray(zeta, dtype=complex)
    a1 = np.abs(zeta[..., 0])
    s = np.asarray(delta, dtype=float) ** 2 + np.abs(zeta[..., 1]) ** 2
    for k, A in profile.A.items():
        s = s + A**2 * a1 ** (2 * k)
    return np.sqrt(s)


@dataclass(frozen=True)
class PolydiskSpec:
    center: np.ndarray
    radius1: float
    radius2: float
    a: float
    delta: float
    gamma: float

    def contains(self, zeta) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=complex)
        d = zeta - self.center
        return (np.abs(d[..., 0]) < self.radius1) & (np.abs(d[..., 1]) < self.radius2)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        out = np.empty((n, 2), dtype=complex)
        for i, R in enumerate((self.radius1, self.radius2)):
            rad = R * np.sqrt(rng.random(n)) * (1 - 1e-12)
            out[:, i] = self.center[i] + rad * np.exp(2j * np.pi * rng.random(n))
        return out


def polydisk(profile: AnisoProfile, a: float, delta: float, gamma: float, center) -> PolydiskSpec:
    if a <= 0 or delta <= 0 or gamma < 0:
        raise ValueError("need a, delta > 0 and gamma >= 0")
    center = np.asarray(center, dtype=complex)
    J = float(J_delta(profile, delta, center))
    return PolydiskSpec(center, float(tau(profile, a * J)) + a * gamma, a * (J + gamma), a, delta, gamma)


# ------------------------------------------------------------ type

def _series_mul(a, b, N):
    out = np.zeros(N + 1, dtype=complex)
    for i in range(N + 1):
        if a[i] != 0:
            out[i:] += a[i] * b[: N + 1 - i]
    return out


def _pows(s, n, N):
    tbl = [np.eye(1, N + 1, 0, dtype=complex)[0]]
    for _ in range(n):
        tbl.append(_series_mul(tbl[-1], s, N))
    return tbl


def contact_table(D: DomainSpec, h1: np.ndarray, h2: np.ndarray, N: int) -> np.ndarray:
    """C[i, j] = coefficient of t^i conj(t)^j in r(h(t)) for holomorphic series h, degree <= N."""
    terms = list(D.r.poly.terms.items())
    P1 = _pows(h1, max(max(e[0], e[1]) for e, _ in terms), N)
    P2 = _pows(h2, max(max(e[2], e[3]) for e, _ in terms), N)
    C = np.zeros((N + 1, N + 1), dtype=complex)
    for e, c in terms:
        H = _series_mul(P1[e[0]], P2[e[2]], N)
        A = _series_mul(P1[e[1]], P2[e[3]], N)
        C += c * np.outer(H, np.conj(A))
    i, j = np.indices(C.shape)
    C[i + j > N] = 0
    return C


def contact_order(D: DomainSpec, p, m_max: int = 12, tol: float = A_TOL) -> int:
    """Maximal order of contact of complex curves with the boundary at p.

    The curve is h(t) = p + t v + f(t) n with v the unit complex tangent and n the unit
    normal.  The normal correction f is chosen degree by degree to cancel the harmonic
    terms of r(h(t)); the first degree carrying a nonzero mixed term t^i conj(t)^j
    (i, j >= 1) is the contact order.
    """
    p = np.asarray(p, dtype=complex)
    g = D.r.dz(p)
    U = unitary_frame(g)
    v, n = U[:, 0], U[:, 1]
    ng = float(np.linalg.norm(g))
    f = np.zeros(m_max + 1, dtype=complex)
    for l in range(2, m_max + 1):
        h = [np.zeros(m_max + 1, dtype=complex) for _ in range(2)]
        for i in range(2):
            h[i][0] = p[i]
            h[i][1] = v[i]
            h[i] += n[i] * f
        C = contact_table(D, h[0], h[1], m_max)
        mixed = max(abs(C[i, l - i]) for i in range(1, l))
        if mixed > tol:
            return l
        f[l] = -C[l, 0] / ng
    raise InfiniteTypeError(f"no contact order found up to {m_max}")


def type_at(D: DomainSpec, p, m_max: int | None = None) -> tuple[int, AnisoProfile]:
    m_max = D.type_max if m_max is None else m_max
    nf = catlin_normalize(D, p, m_max)
    prof = AnisoProfile.from_normal_form(nf)
    try:
        return prof.type_estimate, prof
    except InfiniteTypeError as exc:
        raise InfiniteTypeError(f"type exceeds m_max = {m_max}; increase m_max") from exc


# ------------------------------------------------------------ verification

@dataclass
class ScalingReport:
    passed: bool
    violations: int
    n_checks: int
    min_left_margin: float
    min_right_margin: float


def verify_power_sandwich(profile: AnisoProfile, deltas) -> ScalingReport:
    c, C = profile.sandwich_constants()
    d = np.asarray(deltas, dtype=float)
    t = tau(profile, d)
    lo = c * d**0.5
    hi = C * d ** (1.0 / profile.top)
    left = t / lo - 1
    right = hi / t - 1
    bad = int(np.sum(left < -1e-12) + np.sum(right < -1e-12))
    return ScalingReport(bad == 0, bad, 2 * d.size, float(left.min()), float(right.min()))


def verify_tau_scaling(profile: AnisoProfile, deltas) -> ScalingReport:
    """Checks (d1/d2)^{1/2} tau(d2) <= tau(d1) <= (d1/d2)^{1/top} tau(d2) for every pair d1 < d2."""
    d = np.sort(np.asarray(deltas, dtype=float))
    t = tau(profile, d)
    i, j = np.triu_indices(d.size, 1)
    q = d[i] / d[j]
    lo = q**0.5 * t[j]
    hi = q ** (1.0 / profile.top) * t[j]
    left = t[i] / lo - 1
    right = hi / t[i] - 1
    bad = int(np.sum(left < -1e-12) + np.sum(right < -1e-12))
    return ScalingReport(bad == 0, bad, 2 * q.size, float(left.min()), float(right.min()))


@dataclass
class JComparability:
    C_upper: float
    C_lower: float
    C_upper_half: float
    C_lower_half: float
    stability: float
    n_samples: int


def verify_J_comparability(profile: AnisoProfile, a: float, delta: float, gamma: float, center, n_samples: int, rng: np.random.Generator) -> JComparability:
    """max J(z)/(J(z')+a gamma) and max J(z')/(J(z)+a gamma) over polydisk samples, at n/2 and n."""
    P = polydisk(profile, a, delta, gamma, center)
    Z = P.sample(n_samples, rng)
    Jc = float(J_delta(profile, delta, P.center))
    Jz = J_delta(profile, delta, Z)
    up = Jz / (Jc + a * gamma)
    lo = Jc / (Jz + a * gamma)
    h = n_samples // 2
    cu, cl = float(up.max()), float(lo.max())
    cuh, clh = float(up[:h].max()), float(lo[:h].max())
    stab = max(abs(cu - cuh) / cuh, abs(cl - clh) / clh)
    return JComparability(cu, cl, cuh, clh, stab, n_samples)


def tau_table(profile: AnisoProfile, deltas) -> list[dict]:
    c, C = profile.sandwich_constants()
    d = np.asarray(deltas, dtype=float)
    t = tau(profile, d)
    return [
        {"delta": float(x), "tau": float(y), "lower": float(c * x**0.5), "upper": float(C * x ** (1.0 / profile.top))}
        for x, y in zip(d, t)
    ]


def _check_boundary(D: DomainSpec, p, tol=1e-8):
    if abs(float(D.r(np.asarray(p, dtype=complex)))) > tol:
        raise GeometryError("point is not on the boundary")
