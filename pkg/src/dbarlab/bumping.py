"""Bumped domains near a boundary point, the shell sequence zeta_j and the lower bound for r.

The plurisubharmonic bump is replaced by the surrogate H = -c_H * J_delta, which is
exactly comparable with -J_delta (c = C = c_H).  Pseudoconvexity of the bumped domains
is not modelled.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .aniso_geometry import AnisoProfile, J_delta, polydisk
from .domain_model import DomainSpec
from .errors import ConfigError, GeometryError
from .normal_form import NormalForm, catlin_normalize


@dataclass(frozen=True)
class BumpConfig:
    c_H: float = 0.5
    eps0: float = 0.2
    s0: float = 1.0
    delta0: float = 0.25
    a0: float = 1e-6
    c: float = 0.5  # chart radius in zeta
    gamma: float = 0.4
    gamma_p: float = 0.3
    mu: float = 1e-4  # enlarged domain {r < mu}
    i_max: int = 24
    grid_step: float = 1.0  # delta grid delta0 * 2^{-i * grid_step}

    def __post_init__(self):
        if not 0 < self.eps0 * self.c_H < 1:
            raise ConfigError("need 0 < eps0 * c_H < 1")
        if not 0 < self.gamma_p < self.gamma:
            raise ConfigError("need 0 < gamma' < gamma")

    @property
    def c_lower(self) -> float:
        return self.c_H / np.sqrt(2.0)

    @property
    def c0(self) -> float:
        e = self.eps0 * self.c_lower
        return 0.5 * e / (1 - e)

    @property
    def C0(self) -> float:
        e = self.eps0 * self.c_H
        return e / (1 - e)

    @property
    def C1(self) -> float:
        return 4 * self.C0 / self.c0

    def delta_grid(self) -> np.ndarray:
        n = int(round(self.i_max / self.grid_step))
        return self.delta0 * 2.0 ** (-self.grid_step * np.arange(n + 1))


@dataclass
class BumpFamily:
    """Bumped domains at a fixed boundary point p for all delta."""

    D: DomainSpec
    nf: NormalForm
    profile: AnisoProfile
    config: BumpConfig = field(default_factory=BumpConfig)

    @classmethod
    def at(cls, D: DomainSpec, p, config: BumpConfig | None = None, m: int | None = None) -> "BumpFamily":
        nf = catlin_normalize(D, p, m)
        return cls(D, nf, AnisoProfile.from_normal_form(nf), config or BumpConfig())

    @property
    def p(self):
        return self.nf.p

    def rho(self, zeta) -> np.ndarray:
        return self.D.r(self.nf.phi(zeta)) - self.nf.r_at_p

    def surrogate_bump(self, delta: float, zeta) -> np.ndarray:
        return -self.config.c_H * J_delta(self.profile, delta, zeta)

    def rho_eps(self, delta: float, zeta) -> np.ndarray:
        return self.rho(zeta) + self.config.eps0 * self.surrogate_bump(delta, zeta)

    def member_Omega(self, delta: float, zeta, strict_chart: bool = True) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=complex)
        inchart = np.linalg.norm(zeta, axis=-1) < self.config.c
        if strict_chart and zeta.ndim == 1 and not inchart:
            raise GeometryError("zeta outside the chart ball")
        rho = self.rho(zeta)
        J = J_delta(self.profile, delta, zeta)
        in_W = np.abs(rho) < self.config.s0 * J
        bumped = rho - self.config.eps0 * self.config.c_H * J < 0
        return inchart & ((rho < 0) | (in_W & bumped))

    def member_Omega_star(self, zeta) -> np.ndarray:
        zeta = np.asarray(zeta, dtype=complex)
        out = np.ones(zeta.shape[:-1], dtype=bool)
        for d in self.config.delta_grid():
            out &= self.member_Omega(d, zeta, strict_chart=False)
        return out

    def _member_z(self, z, inner) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        cfg = self.config
        dist = np.linalg.norm(z - self.p, axis=-1)
        hat = self.D.r(z) < cfg.mu
        return (hat & (dist < cfg.gamma) & inner(self.nf.phi_inverse(z))) | (hat & (dist > cfg.gamma_p))

    def member_D_delta(self, delta: float, z) -> np.ndarray:
        return self._member_z(z, lambda zeta: self.member_Omega(delta, zeta, strict_chart=False))

    def member_D_star(self, z) -> np.ndarray:
        return self._member_z(z, self.member_Omega_star)

    # -------------------------------------------------- shell sequence

    def zeta_j(self, j: int, tol: float = 1e-12) -> np.ndarray:
        delta = 2.0**-j
        if delta >= self.config.delta0:
            raise ConfigError(f"j = {j} too small: 2^-j must be below delta0")
        cfg = self.config
        lo = 0.5 * cfg.c0 * 2 * delta  # (1/2) eps c' / (1 - eps c') delta
        hi = 2 * cfg.C0 * delta
        f = lambda x: float(self.rho_eps(delta, np.array([0.0, x], dtype=complex)))
        flo, fhi = f(lo), f(hi)
        if not (flo < 0 < fhi):
            raise ConfigError(f"bisection bracket failure at j = {j}: f(lo) = {flo:.3e}, f(hi) = {fhi:.3e}")
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if f(mid) < 0:
                lo = mid
            else:
                hi = mid
        return np.array([0.0, 0.5 * (lo + hi)], dtype=complex)

    def sequence(self, j_range) -> list[dict]:
        rows = []
        for j in j_range:
            zj = self.zeta_j(j)
            rho = float(self.rho(zj))
            rows.append({"j": j, "a_star": float(zj[1].real), "rho": rho, "ratio": rho / 2.0**-j, "r_qj": float(self.D.r(self.nf.phi(zj)))})
        return rows

    def jstar(self, q, j_min: int = 3, j_max: int = 40, cone_C: float = 50.0) -> int:
        q = np.asarray(q, dtype=complex)
        rq = float(self.D.r(q))
        if rq <= 0:
            raise GeometryError("q must lie outside the closure of D")
        if np.linalg.norm(q - self.p) >= cone_C * rq:
            raise GeometryError("q is outside the cone |q - p| < C r(q)")
        rj = {j: float(self.D.r(self.nf.phi(self.zeta_j(j)))) for j in range(j_min, j_max + 1)}
        best = None
        for j in range(j_min + 1, j_max + 1):
            if rj[j] <= rq < rj[j - 1]:
                best = j
        if best is None:
            raise GeometryError("r(q) outside the computed sequence range; adjust j_min/j_max")
        return best

    def D_star(self, q, **kw) -> "BumpedDomain":
        j = self.jstar(q, **kw)
        return BumpedDomain(self, 2.0**-j, j)

    # -------------------------------------------------- checks

    def check_r_lower_bound(self, n_samples: int, rng: np.random.Generator, m: int | None = None) -> dict:
        """min r(z)/|z-p|^m over samples near p outside phi_p(Omega*)."""
        m = self.D.type_max if m is None else m
        cfg = self.config
        pts = []
        need = n_samples
        tries = 0
        while need > 0 and tries < 200:
            tries += 1
            Z = self.p + _ball_samples(4 * n_samples, cfg.gamma_p, rng)
            keep = (self.D.r(Z) > 0) & ~self.member_Omega_star(self.nf.phi_inverse(Z))
            Z = Z[keep][:need]
            pts.append(Z)
            need -= len(Z)
        Z = np.concatenate(pts)
        ratio = self.D.r(Z) / np.linalg.norm(Z - self.p, axis=-1) ** m
        return {"c_prime": float(ratio.min()), "n": int(len(Z)), "m": m}

    def delta_zeta_ratio(self, zeta) -> float | None:
        """delta~/|zeta~| with zeta~ on S_delta~; None when no such delta exists."""
        zeta = np.asarray(zeta, dtype=complex)
        rho = float(self.rho(zeta))
        J0 = float(J_delta(self.profile, 0.0, zeta))
        target = rho / (self.config.eps0 * self.config.c_H)
        if target <= J0:
            return None
        return float(np.sqrt(target**2 - J0**2) / np.linalg.norm(zeta))

    def fit_C_rho(self, delta: float, n_centers: int, n_per: int, a: float, rng: np.random.Generator) -> float:
        """max |rho(z) - rho(z')| / (a^{1/m} J(z')) over polydisks P^(a)_{delta,delta}(z') with centers in Omega_p."""
        m = self.profile.top
        best = 0.0
        centers = self._interior_centers(n_centers, rng)
        for zc in centers:
            P = polydisk(self.profile, a, delta, delta, zc)
            Z = P.sample(n_per, rng)
            ratio = np.abs(self.rho(Z) - self.rho(zc)) / (a ** (1.0 / m) * J_delta(self.profile, delta, zc))
            best = max(best, float(ratio.max()))
        return best

    def suggested_a0(self, C_rho: float) -> float:
        cfg = self.config
        m = self.profile.top
        return 0.5 * min(1 / (2 * C_rho), (cfg.s0 / C_rho) ** m, (cfg.eps0 * cfg.c_H / C_rho) ** m)

    def _interior_centers(self, n: int, rng: np.random.Generator) -> np.ndarray:
        out = []
        while sum(len(o) for o in out) < n:
            Z = _ball_samples(4 * n, 0.5 * self.config.c, rng)
            out.append(Z[self.rho(Z) < 0])
        return np.concatenate(out)[:n]

    def polydisk_inclusion(self, delta: float, n_centers: int, n_per: int, rng: np.random.Generator, a: float | None = None) -> dict:
        a = self.config.a0 if a is None else a
        bad = 0
        total = 0
        for zc in self._interior_centers(n_centers, rng):
            P = polydisk(self.profile, a, delta, delta, zc)
            Z = P.sample(n_per, rng)
            Z = Z[np.linalg.norm(Z, axis=-1) < self.config.c]
            bad += int(np.sum(~self.member_Omega(delta, Z, strict_chart=False)))
            total += len(Z)
        return {"violations": bad, "samples": total, "a": a}


@dataclass
class BumpedDomain:
    family: BumpFamily
    delta: float
    j: int | None = None

    def contains(self, z) -> np.ndarray:
        return self.family.member_D_delta(self.delta, z)

    def contains_zeta(self, zeta) -> np.ndarray:
        return self.family.member_Omega(self.delta, zeta, strict_chart=False)


def _ball_samples(n: int, R: float, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=(n, 4))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v *= R * rng.random(n)[:, None] ** 0.25
    return v[:, 0::2] + 1j * v[:, 1::2]


def with_grid(cfg: BumpConfig, step: float) -> BumpConfig:
    return replace(cfg, grid_step=step)
