"""Norm estimators (Hölder-Zygmund, Littlewood-Paley), a cone-supported extension operator
on graph domains in R^2, commutator and weighted-norm checks.

Extension operator.  phi_0 = P * B with B a polynomial bump on a disk inside the cone
-K^L = {x_N < -L |x'|} and P a polynomial making the moments of order 1..M vanish
(integral 1).  With A_j g = 2^{jN} phi_0(2^j .) * g,

    phi_j = A_j - A_{j-1},   psi_j = A_j + A_{j-1}      (A_{-1} = 0)

so that sum_{j<=J} psi_j * phi_j = A_J A_J telescopes to an approximate identity of order M.
The extension is E f = sum_j psi_j * (1_omega (phi_j * f)).  phi_1 carries vanishing moments
of order 0..M; psi_1 does not (its integral is 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import CapabilityError, DomainError, NumericError
from .homotopy_kernels import smooth_step
from .quadrature import gauss


# ------------------------------------------------------------ Hölder-Zygmund

@dataclass
class HZReport:
    value: float
    sup: float
    seminorm: float
    per_scale: list  # (separation, max quotient)
    s: float

    def to_json(self) -> dict:
        return {"value": self.value, "sup": self.sup, "seminorm": self.seminorm, "s": self.s,
                "per_scale": [{"separation": a, "quotient": b} for a, b in self.per_scale]}


def _sl(a: np.ndarray, start: int, stop: int, axis: int) -> np.ndarray:
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(start, stop)
    return a[tuple(idx)]


def _seminorm(values: np.ndarray, mask: np.ndarray, h: float, s: float, second: bool) -> dict:
    """separation -> max difference quotient over axis-aligned pairs (or triples) at that separation."""
    per = {}
    k = 1
    while (2 * k if second else k) < max(values.shape):
        best = 0.0
        for ax in range(values.ndim):
            n = values.shape[ax]
            if second:
                if 2 * k >= n:
                    continue
                l, m, r = (_sl(values, 0, n - 2 * k, ax), _sl(values, k, n - k, ax), _sl(values, 2 * k, n, ax))
                sel = _sl(mask, 0, n - 2 * k, ax) & _sl(mask, k, n - k, ax) & _sl(mask, 2 * k, n, ax)
                d = np.abs(l + r - 2 * m)
            else:
                if k >= n:
                    continue
                d = np.abs(_sl(values, k, n, ax) - _sl(values, 0, n - k, ax))
                sel = _sl(mask, k, n, ax) & _sl(mask, 0, n - k, ax)
            if np.any(sel):
                best = max(best, float(d[sel].max()))
        per[k * h] = best / (k * h) ** s
        k *= 2
    return per


def _erode(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    for ax in range(mask.ndim):
        n = mask.shape[ax]
        tmp = np.zeros_like(mask)
        idx = [slice(None)] * mask.ndim
        idx[ax] = slice(1, n - 1)
        tmp[tuple(idx)] = _sl(mask, 0, n - 2, ax) & _sl(mask, 2, n, ax)
        out &= tmp
    return out


def holder_zygmund_norm(values: np.ndarray, h: float, s: float, mask: np.ndarray | None = None) -> HZReport:
    """Sup-based estimate of the Lambda^s norm from axis-aligned pairs at dyadic separations.

    0 < s < 1 uses first differences, s = 1 second differences, 1 < s <= 2 recurses on the
    gradient (centered differences).  Pairs with a point outside the mask are skipped.
    """
    values = np.asarray(values, dtype=float)
    mask = np.ones(values.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if s <= 0:
        raise ValueError("s must be positive")
    if s > 2:
        raise CapabilityError("s > 2 needs second derivatives beyond centered-difference accuracy")
    sup = float(np.abs(values[mask]).max()) if np.any(mask) else 0.0
    if s <= 1:
        per = _seminorm(values, mask, h, s, second=(s == 1))
        semi = max(per.values()) if per else 0.0
        return HZReport(sup + semi, sup, semi, sorted(per.items()), s)
    grads = np.gradient(values, h) if values.ndim > 1 else [np.gradient(values, h)]
    inner = _erode(mask)
    best = None
    for g in grads:
        r = holder_zygmund_norm(g, h, s - 1, inner)
        best = r if best is None or r.value > best.value else best
    return HZReport(sup + best.value, sup, best.value, best.per_scale, s)


# ------------------------------------------------------------ Littlewood-Paley

@dataclass
class FNormReport:
    value: float
    band_sup: list  # (j, sup_x 2^{js} |lambda_j * f|)
    J_max: int
    uncaptured_fraction: float

    def dominant_band(self) -> int:
        return max(self.band_sup, key=lambda t: t[1])[0]

    def to_json(self) -> dict:
        return {"value": self.value, "J_max": self.J_max, "uncaptured_fraction": self.uncaptured_fraction,
                "bands": [{"j": j, "sup": v} for j, v in self.band_sup]}


def lambda0_hat(xi: np.ndarray) -> np.ndarray:
    """1 on |xi| < 1, 0 on |xi| >= 2, C-infinity in between."""
    return 1 - smooth_step(np.asarray(xi) - 1.0)[0]


def dyadic_resolution(values: np.ndarray, h: float, s: float, p: float = np.inf, q: float = np.inf, pad: int = 4, max_uncaptured: float = 0.01) -> FNormReport:
    """F^s_{pq} estimate of a compactly supported grid function via FFT bands on a padded periodic box."""
    values = np.asarray(values, dtype=complex)
    shape = tuple(pad * n for n in values.shape)
    F = np.fft.fftn(values, s=shape, axes=tuple(range(len(shape))))
    axes = np.meshgrid(*[2 * np.pi * np.fft.fftfreq(n, h) for n in shape], indexing="ij")
    xi = np.sqrt(sum(a**2 for a in axes))
    J_max = int(np.floor(np.log2(np.pi / h))) - 1
    energy = float(np.sum(np.abs(F) ** 2))
    if energy == 0:
        return FNormReport(0.0, [], J_max, 0.0)
    unc = float(np.sum(np.abs(F) ** 2 * (1 - lambda0_hat(xi * 2.0**-J_max)) ** 2) / energy)
    if unc > max_uncaptured:
        raise NumericError(f"aliasing check failed: {unc:.2%} of the energy above the top band")
    bands = []
    acc = None
    prev = np.zeros_like(xi)
    for j in range(J_max + 1):
        cur = lambda0_hat(xi * 2.0**-j)
        band = np.abs(np.fft.ifftn(F * (cur - prev))) * 2.0 ** (j * s)
        prev = cur
        bands.append((j, float(band.max())))
        if q == np.inf:
            acc = band if acc is None else np.maximum(acc, band)
        else:
            acc = band**q if acc is None else acc + band**q
    if q != np.inf:
        acc = acc ** (1 / q)
    val = float(acc.max()) if p == np.inf else float((np.sum(acc**p) * h ** values.ndim) ** (1 / p))
    return FNormReport(val, bands, J_max, unc)


def wave_packet(x: np.ndarray, j0: int, width: float = 0.25) -> np.ndarray:
    return np.exp(-(x / width) ** 2) * np.cos(2.0**j0 * x)


def rank_correlation(a, b) -> float:
    from scipy.stats import spearmanr

    return float(spearmanr(a, b).statistic)


# ------------------------------------------------------------ LP family and extension

@dataclass
class LPFamily:
    """Cone-supported family in R^2 built from phi_0 = P * (1 - |x - c|^2/rho^2)^k_b."""

    L: float
    M: int
    center: np.ndarray
    rho: float
    coeffs: dict  # (a, b) -> coefficient of u1^a u2^b, u = (x - center)/rho
    nodes: np.ndarray  # quadrature nodes on the support disk
    weights: np.ndarray  # weights * phi_0(node)
    k_bump: int = 4
    N: int = 2

    def phi0(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = x - self.center
        s = 1 - np.sum(d**2, axis=-1) / self.rho**2
        B = np.where(s > 0, s, 0.0) ** self.k_bump
        u = d / self.rho
        P = sum(c * u[..., 0] ** a * u[..., 1] ** b for (a, b), c in self.coeffs.items())
        return P * B

    def phi_j(self, j: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a = 4.0**j * self.phi0(2.0**j * x)
        return a if j == 0 else a - 4.0 ** (j - 1) * self.phi0(2.0 ** (j - 1) * x)

    def psi_j(self, j: int, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a = 4.0**j * self.phi0(2.0**j * x)
        return a if j == 0 else a + 4.0 ** (j - 1) * self.phi0(2.0 ** (j - 1) * x)

    def moments(self, which: str = "phi1") -> dict:
        """Quadrature moments x^alpha, |alpha| <= M, of phi_0 or phi_1."""
        out = {}
        y = self.nodes
        for a in range(self.M + 1):
            for b in range(self.M + 1 - a):
                m0 = math.fsum(self.weights * y[:, 0] ** a * y[:, 1] ** b)
                out[(a, b)] = m0 if which == "phi0" else m0 - 2.0 ** (a + b) * m0
        return out

    def support_in_cone(self, n: int = 4000, rng: np.random.Generator | None = None) -> bool:
        rng = rng or np.random.default_rng(0)
        th = 2 * np.pi * rng.random(n)
        r = self.rho * np.sqrt(rng.random(n))
        y = self.center + np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
        return bool(np.all(y[:, 1] < -self.L * np.abs(y[:, 0])))

    def A(self, j: int, f: Callable, x: np.ndarray) -> np.ndarray:
        """A_j f(x) = sum_k W_k f(x - 2^{-j} y_k); A_{-1} = 0."""
        x = np.asarray(x, dtype=float)
        if j < 0:
            return np.zeros(x.shape[:-1])
        pts = x[..., None, :] - 2.0**-j * self.nodes
        return np.sum(self.weights * f(pts), axis=-1)

    def approx_identity_residual(self, g: Callable, x: np.ndarray, J: int) -> float:
        """max |A_J A_J g - g| = max |sum_{j<=J} psi_j * phi_j * g - g| on the sample points."""
        val = self.A(J, lambda Y: self.A(J, g, Y), x)
        return float(np.max(np.abs(val - g(x))))


def build_lp_family(L: float, M: int = 6, k_bump: int = 4, n_r: int | None = None, n_th: int | None = None) -> LPFamily:
    if L <= 0 or M < 1:
        raise ValueError("need L > 0 and M >= 1")
    center = np.array([0.0, -1.0])
    rho = 0.9 / np.sqrt(1 + L**2)
    deg = 2 * M + 2 * k_bump + 2
    n_r = n_r or deg // 2 + 2
    n_th = n_th or deg + 2
    t, wt = gauss(n_r)
    th = 2 * np.pi * np.arange(n_th) / n_th
    R, TH = np.meshgrid(rho * t, th, indexing="ij")
    nodes = center + np.stack([R * np.cos(TH), R * np.sin(TH)], axis=-1).reshape(-1, 2)
    w = (rho * wt[:, None] * R * (2 * np.pi / n_th)).reshape(-1)
    U = (nodes - center) / rho
    B = (1 - np.sum(U**2, axis=-1)) ** k_bump
    mons = [(a, b) for a in range(M + 1) for b in range(M + 1 - a)]
    # int phi_0 Q = Q(0) for every Q of degree <= M, tested on Q = u^beta (well conditioned)
    u0 = -center / rho
    V = np.array([[np.sum(w * B * U[:, 0] ** (a + c) * U[:, 1] ** (b + d)) for (a, b) in mons] for (c, d) in mons])
    rhs = np.array([u0[0] ** c * u0[1] ** d for (c, d) in mons])
    coef = np.linalg.solve(V, rhs)
    coef = coef + np.linalg.solve(V, rhs - V @ coef)  # one refinement step
    fam = LPFamily(L, M, center, rho, dict(zip(mons, coef)), nodes, np.zeros(len(nodes)), k_bump)
    W = w * fam.phi0(nodes)
    # moment fitting: the smallest weight correction that makes the discrete moments exact
    # (P has large coefficients, so evaluating phi_0 in floating point leaves ~1e-12 errors)
    Y = np.array([U[:, 0] ** c * U[:, 1] ** d for (c, d) in mons])
    for _ in range(2):
        W = W + np.linalg.lstsq(Y, rhs - Y @ W, rcond=None)[0]
    fam.weights = W
    return fam


@dataclass(frozen=True)
class GraphDomain:
    """omega = {x_N > rho(x')} in R^2 with a Lipschitz graph."""

    rho: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    name: str = "graph"

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x[..., 1] > self.rho(x[..., 0])

    def delta(self, x) -> np.ndarray:
        """Vertical distance x_N - rho(x'), comparable to the boundary distance."""
        x = np.asarray(x, dtype=float)
        return x[..., 1] - self.rho(x[..., 0])


def half_plane() -> GraphDomain:
    return GraphDomain(lambda u: np.zeros_like(u), 0.0, "halfplane")


def lipschitz_graph(slope: float = 0.3) -> GraphDomain:
    return GraphDomain(lambda u: slope * np.abs(u), slope, f"graph{slope:g}")


@dataclass
class ExtensionOperator:
    family: LPFamily
    omega: GraphDomain
    J: int = 12
    cutoff: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.omega.lipschitz >= self.family.L:
            raise DomainError(f"Lipschitz constant {self.omega.lipschitz} must be below the cone opening {self.family.L}")

    def g(self, j: int, f: Callable, y: np.ndarray) -> np.ndarray:
        """phi_j * f at y."""
        fam = self.family
        return fam.A(j, f, y) - fam.A(j - 1, f, y)

    def __call__(self, f: Callable, x: np.ndarray, chunk: int = 64) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty(len(x))
        for s in range(0, len(x), chunk):
            out[s:s + chunk] = self._eval(f, x[s:s + chunk])
        if self.cutoff is not None:
            out = out * self.cutoff(x)
        return out

    def _eval(self, f, x):
        fam = self.family
        acc = np.zeros(len(x))
        for j in range(self.J + 1):
            inner = lambda Y, j=j: self.omega.contains(Y) * self.g(j, f, Y)
            acc += fam.A(j, inner, x) + fam.A(j - 1, inner, x)
        return acc

    def commutator_dN(self, f: Callable, x: np.ndarray, n_quad: int = 48) -> np.ndarray:
        """[d/dx_N, E] f as the boundary layer sum_j int psi_j(x - (y', rho(y'))) (phi_j * f)(y', rho(y')) dy'."""
        fam = self.family
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(len(x))
        t, wt = gauss(n_quad, -1.0, 1.0)
        reach = (np.linalg.norm(fam.center) + fam.rho)
        for j in range(self.J + 1):
            half = reach * 2.0 ** -(j - 1) if j > 0 else reach
            y1 = x[:, :1] + half * t[None, :]
            yb = np.stack([y1, self.omega.rho(y1)], axis=-1)
            val = fam.psi_j(j, x[:, None, :] - yb)
            live = np.abs(val) > 0
            if not np.any(live):
                continue
            gj = np.zeros_like(val)
            gj[live] = self.g(j, f, yb[live])
            out += half * np.sum(wt * val * gj, axis=1)
        return out


def rychkov_extend(f: Callable, x: np.ndarray, omega: GraphDomain | None = None, J: int = 12, M: int = 6, L: float = 1.0) -> np.ndarray:
    E = ExtensionOperator(build_lp_family(L, M), omega or half_plane(), J)
    return E(f, x)


@dataclass
class ReproductionRow:
    name: str
    J: int
    M: int
    residual: float


TEST_FUNCTIONS: dict = {
    "one": lambda X: np.ones(X.shape[:-1]),
    "xN": lambda X: X[..., 1],
    "quad": lambda X: X[..., 0] ** 2 + X[..., 1],
    "trig": lambda X: np.sin(X[..., 0]) * np.cos(X[..., 1]),
    "gauss": lambda X: np.exp(-np.sum(X**2, axis=-1)),
}


def reproduction_table(omega: GraphDomain, Js, Ms, points: np.ndarray, funcs: dict | None = None, L: float = 1.0) -> list[ReproductionRow]:
    funcs = funcs or TEST_FUNCTIONS
    rows = []
    for M in Ms:
        fam = build_lp_family(L, M)
        for J in Js:
            E = ExtensionOperator(fam, omega, J)
            for name, f in funcs.items():
                rows.append(ReproductionRow(name, J, M, float(np.max(np.abs(E(f, points) - f(points))))))
    return rows


# ------------------------------------------------------------ commutators

@dataclass
class CommutatorReport:
    interior_max: float
    exterior_max: float
    n_interior: int
    n_exterior: int


def dbar_commutator(ext, D, grid_1d: np.ndarray, stencil_margin: float | None = None) -> CommutatorReport:
    """[dbar, E] phi on a 4-D grid; interior points farther than the stencil margin are masked in."""
    from .domain_model import boundary_distance_estimate, to_complex

    X = np.stack(np.meshgrid(*[grid_1d] * 4, indexing="ij"), axis=-1).reshape(-1, 4)
    Z = to_complex(X)
    rz = D.r(Z)
    margin = stencil_margin if stencil_margin is not None else 2 * ext.fd_h
    dist = boundary_distance_estimate(D, Z)
    inner = dist < -margin
    outer = (rz > 0) & ext.outside(Z)
    c_in = np.abs(ext.commutator(Z[inner])) if np.any(inner) else np.zeros(1)
    c_out = np.abs(ext.commutator(Z[outer])) if np.any(outer) else np.zeros(1)
    return CommutatorReport(float(c_in.max()), float(c_out.max()), int(inner.sum()), int(outer.sum()))


def power_profile(sigma: float, R: float = 1.0) -> Callable:
    """f_sigma = max(x_N, 0)^sigma (1 - |x|^2/R^2)_+^4 on the half-plane model."""
    def f(X):
        X = np.asarray(X, dtype=float)
        b = np.maximum(1 - np.sum(X**2, axis=-1) / R**2, 0.0) ** 4
        return np.maximum(X[..., 1], 0.0) ** sigma * b
    return f


@dataclass
class WeightedSup:
    sigma: float
    s: float
    h: float
    value: float
    argmax_depth: float


def weighted_commutator_sup(E: ExtensionOperator, sigma: float, s: float, h: float, depth_max: float = 0.125, x1: tuple = (-0.1, 0.0, 0.15)) -> WeightedSup:
    """sup over exterior grid points (x', -d), d = h, 2h, ..., of d^{1-s} |[d/dx_N, E] f_sigma|.

    The window stops at depth_max: deeper points see only the two coarsest levels, whose
    smooth but large contribution says nothing about behaviour at the boundary.
    """
    f = power_profile(sigma)
    d = h * np.arange(1, int(round(depth_max / h)) + 1)
    pts = np.array([[a, -dd] for a in x1 for dd in d])
    c = np.abs(E.commutator_dN(f, pts))
    w = np.abs(pts[:, 1]) ** (1 - s) * c
    i = int(np.argmax(w))
    return WeightedSup(sigma, s, h, float(w[i]), float(-pts[i, 1]))


def weighted_commutator_profile(E: ExtensionOperator, sigma: float, s: float, depths, x1: float = 0.0) -> np.ndarray:
    """d^{1-s} |[d/dx_N, E] f_sigma| at (x1, -d); decays like d^{sigma-s} inside the layer."""
    d = np.asarray(depths, dtype=float)
    pts = np.stack([np.full_like(d, x1), -d], axis=-1)
    return d ** (1 - s) * np.abs(E.commutator_dN(power_profile(sigma), pts))


# ------------------------------------------------------------ Hardy-Littlewood

@dataclass
class HLReport:
    lhs: float
    rhs: float
    ratio: float
    h: float


def hardy_littlewood_check(u: Callable, grad_u: Callable, delta: Callable, grid_1d: np.ndarray, N: int, s: float, k: int = 1, mask_fn: Callable | None = None) -> HLReport:
    """Lambda^s estimator of u against sup|u| + sup delta^{k-s} |D u| on a masked grid (k = 1)."""
    if k != 1:
        raise CapabilityError("only k = 1 is implemented")
    h = float(grid_1d[1] - grid_1d[0])
    X = np.stack(np.meshgrid(*[grid_1d] * N, indexing="ij"), axis=-1)
    mask = mask_fn(X) if mask_fn is not None else np.ones(X.shape[:-1], dtype=bool)
    inside = X[mask][0]  # any admissible point keeps u finite off the mask
    vals = np.where(mask, u(np.where(mask[..., None], X, inside)), 0.0)
    lhs = holder_zygmund_norm(vals, h, s, mask).value
    Xm = X[mask]
    rhs = float(np.abs(u(Xm)).max() + np.max(delta(Xm) ** (k - s) * np.linalg.norm(grad_u(Xm), axis=-1)))
    return HLReport(lhs, rhs, lhs / rhs, h)


def hl_family_halfplane(kind: str, sigma: float = 0.7):
    """(u, grad u, delta, mask) for u = delta^sigma or log delta on {0 < x_N < 1} x (-1, 1)."""
    delta = lambda X: X[..., 1]
    mask = lambda X: X[..., 1] > 0
    if kind == "power":
        u = lambda X: X[..., 1] ** sigma
        g = lambda X: np.stack([np.zeros(X.shape[:-1]), sigma * X[..., 1] ** (sigma - 1)], axis=-1)
    elif kind == "log":
        u = lambda X: np.log(X[..., 1])
        g = lambda X: np.stack([np.zeros(X.shape[:-1]), 1 / X[..., 1]], axis=-1)
    else:
        raise ValueError(kind)
    return u, g, delta, mask


def hl_family_ball(kind: str, sigma: float = 0.7):
    """Same family on the unit ball of R^4 = C^2, delta = 1 - |x|."""
    nrm = lambda X: np.linalg.norm(X, axis=-1)
    delta = lambda X: 1 - nrm(X)
    mask = lambda X: nrm(X) < 1
    unit = lambda X: X / np.maximum(nrm(X), 1e-300)[..., None]
    if kind == "power":
        u = lambda X: delta(X) ** sigma
        g = lambda X: -(sigma * delta(X) ** (sigma - 1))[..., None] * unit(X)
    elif kind == "log":
        u = lambda X: np.log(delta(X))
        g = lambda X: -(1 / delta(X))[..., None] * unit(X)
    else:
        raise ValueError(kind)
    return u, g, delta, mask


def divergence_flag(values: list[float], growth: float = 1.25) -> bool:
    """True when a refinement sequence increases monotonically by more than the growth factor."""
    v = np.asarray(values)
    return bool(np.all(np.diff(v) > 0) and v[-1] > growth * v[0])


# ------------------------------------------------------------ weighted L^p vs F-norm

@dataclass
class LidingRow:
    sigma: float
    t: float
    p: float
    lhs: float
    rhs: float
    ratio: float


def weighted_lp_vs_fnorm(t: float, p: float, sigmas, n: int = 256, box: float = 1.25) -> list[LidingRow]:
    """||delta^{-t} f||_{L^p} against the F^t_{p,inf} estimate for f_sigma on the half-plane model."""
    if t <= 0:
        raise ValueError("t must be positive")
    rows = []
    x = np.linspace(-box, box, n, endpoint=False)
    h = x[1] - x[0]
    X = np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)
    for sig in sigmas:
        f = power_profile(sig)
        # lhs by Gauss-Jacobi in x_N (weight x_N^{(sig - t) p}) and Gauss in x'
        from scipy.special import roots_jacobi

        a = (sig - t) * p
        u, wu = roots_jacobi(40, 0.0, a)
        yN = 0.5 * (u + 1)
        wN = wu * 0.5 ** (1 + a)
        x1, w1 = gauss(80, -1.0, 1.0)
        P = np.stack(np.meshgrid(x1, yN, indexing="ij"), axis=-1)
        bump = np.maximum(1 - np.sum(P**2, axis=-1), 0.0) ** 4
        lhs = float(np.sum(w1[:, None] * wN[None, :] * bump**p) ** (1 / p))
        rhs = dyadic_resolution(f(X), h, t, p, np.inf).value
        rows.append(LidingRow(sig, t, p, lhs, rhs, lhs / rhs))
    return rows


# ------------------------------------------------------------ support shift

@dataclass
class SupportShift:
    holds: bool
    violations: int
    min_margin: float
    required: float
    n: int


def support_shift_check(L: float, R0: int, j: int, a: float, g: Callable, n: int = 20000, rng: np.random.Generator | None = None, b: float = 1.0, x_box: float = 1.0) -> SupportShift:
    """Samples [-K^L ∩ {y_N < -2^-j}] + {x_N - g(x') < a} and tests x_N + y_N - g(x' + y') < a - b L^{-1} 2^{-R0-j}."""
    rng = rng or np.random.default_rng(0)
    scale = 2.0**-j
    # y in the cone below -2^-j: radial |y'| and depth with tight cases near the cone edge
    y1 = (rng.random(n) * 2 - 1) * 4 * scale / L
    edge = rng.random(n) < 0.5
    depth = np.where(edge, rng.random(n) * 1e-3 * scale, rng.random(n) * 2 * scale)
    yN = -np.maximum(L * np.abs(y1), scale) - depth
    # x just inside the sublevel set
    x1 = (rng.random(n) * 2 - 1) * x_box
    x1 = np.where(rng.random(n) < 0.3, rng.random(n) * 1e-3 * np.sign(rng.random(n) - 0.5), x1)
    xN = g(x1) + a - rng.random(n) ** 4 * 1e-3 * scale
    val = xN + yN - g(x1 + y1)
    need = a - b / L * 2.0 ** (-R0 - j)
    margin = need - val
    bad = int(np.sum(margin <= 0))
    return SupportShift(bad == 0, bad, float(margin.min()), float(b / L * 2.0 ** (-R0 - j)), n)
