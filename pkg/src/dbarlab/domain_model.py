"""Polynomial defining functions on C^2, the model-domain catalog and basic boundary geometry.

A defining function r is stored as a table of monomials
``c * z1^a * conj(z1)^ab * z2^b * conj(z2)^bb``.  Every Wirtinger derivative of a
polynomial is again a polynomial, so jets are exact up to rounding.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import CapabilityError, GeometryError, NumericError

# variable order: z1, conj(z1), z2, conj(z2)
VARS = ("z1", "zb1", "z2", "zb2")
_CONJ_PERM = (1, 0, 3, 2)


def to_real(z: np.ndarray) -> np.ndarray:
    """(..., 2) complex -> (..., 4) real as (x1, y1, x2, y2)."""
    z = np.asarray(z, dtype=complex)
    return np.stack([z[..., 0].real, z[..., 0].imag, z[..., 1].real, z[..., 1].imag], axis=-1)


def to_complex(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.stack([x[..., 0] + 1j * x[..., 1], x[..., 2] + 1j * x[..., 3]], axis=-1)


class Poly:
    """Sparse polynomial in (z1, zb1, z2, zb2) with complex coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple[int, int, int, int], complex] | None = None):
        clean: dict[tuple[int, int, int, int], complex] = {}
        for e, c in (terms or {}).items():
            e = tuple(int(v) for v in e)
            if len(e) != 4 or min(e) < 0:
                raise ValueError(f"bad exponent {e}")
            c = complex(c)
            if c != 0:
                clean[e] = clean.get(e, 0) + c
        self.terms = {e: c for e, c in clean.items() if c != 0}

    # construction helpers
    @classmethod
    def var(cls, i: int) -> "Poly":
        e = [0, 0, 0, 0]
        e[i] = 1
        return cls({tuple(e): 1.0})

    @classmethod
    def const(cls, c: complex) -> "Poly":
        return cls({(0, 0, 0, 0): c})

    def __add__(self, other: "Poly | complex") -> "Poly":
        other = other if isinstance(other, Poly) else Poly.const(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0) + c
        return Poly(t)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly({e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "Poly | complex") -> "Poly":
        other = other if isinstance(other, Poly) else Poly.const(other)
        return self + (-other)

    def __rsub__(self, other: complex) -> "Poly":
        return Poly.const(other) - self

    def __mul__(self, other: "Poly | complex") -> "Poly":
        if not isinstance(other, Poly):
            return Poly({e: c * other for e, c in self.terms.items()})
        t: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2], e1[3] + e2[3])
                t[e] = t.get(e, 0) + c1 * c2
        return Poly(t)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        out = Poly.const(1.0)
        for _ in range(n):
            out = out * self
        return out

    def conj(self) -> "Poly":
        return Poly({tuple(e[k] for k in _CONJ_PERM): np.conj(c) for e, c in self.terms.items()})

    def deriv(self, var: int) -> "Poly":
        t = {}
        for e, c in self.terms.items():
            if e[var] > 0:
                ne = list(e)
                ne[var] -= 1
                t[tuple(ne)] = c * e[var]
        return Poly(t)

    def deriv_multi(self, alpha: Iterable[int]) -> "Poly":
        p = self
        for var, n in enumerate(alpha):
            for _ in range(n):
                p = p.deriv(var)
        return p

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def hermitian_defect(self) -> float:
        """max |c(M) - conj(c(conj M))|; zero iff the polynomial is real valued."""
        conj = self.conj().terms
        keys = set(self.terms) | set(conj)
        return max((abs(self.terms.get(k, 0) - conj.get(k, 0)) for k in keys), default=0.0)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if not self.terms:
            return np.zeros(z.shape[:-1], dtype=complex)
        exps = np.array(list(self.terms), dtype=int)
        coefs = np.array(list(self.terms.values()), dtype=complex)
        base = (z[..., 0], np.conj(z[..., 0]), z[..., 1], np.conj(z[..., 1]))
        maxe = exps.max(axis=0)
        pw = []
        for v in range(4):
            tbl = [np.ones_like(base[v])]
            for _ in range(maxe[v]):
                tbl.append(tbl[-1] * base[v])
            pw.append(tbl)
        out = np.zeros(z.shape[:-1], dtype=complex)
        for e, c in zip(exps, coefs):
            out = out + c * pw[0][e[0]] * pw[1][e[1]] * pw[2][e[2]] * pw[3][e[3]]
        return out

    def to_list(self) -> list[dict]:
        return [
            {"a": e[0], "ab": e[1], "b": e[2], "bb": e[3], "re": c.real, "im": c.imag}
            for e, c in sorted(self.terms.items())
        ]

    @classmethod
    def from_list(cls, items: Iterable[Mapping]) -> "Poly":
        t: dict = {}
        for m in items:
            e = (int(m.get("a", 0)), int(m.get("ab", 0)), int(m.get("b", 0)), int(m.get("bb", 0)))
            t[e] = t.get(e, 0) + complex(float(m.get("re", 0.0)), float(m.get("im", 0.0)))
        return cls(t)

    def __repr__(self) -> str:
        return f"Poly({len(self.terms)} terms, deg {self.degree})"


Z1, ZB1, Z2, ZB2 = (Poly.var(i) for i in range(4))


def _real_derivative(p: Poly, k: int) -> Poly:
    # d/dx_j = d/dz_j + d/dzb_j ; d/dy_j = i (d/dz_j - d/dzb_j)
    j = k // 2
    dz, dzb = p.deriv(2 * j), p.deriv(2 * j + 1)
    return dz + dzb if k % 2 == 0 else (dz - dzb) * 1j


@dataclass(frozen=True, eq=False)
class DefiningFunction:
    poly: Poly
    max_jet_order: int = 16
    catalog_id: str | None = None

    def __post_init__(self):
        d = self.poly.hermitian_defect()
        if d > 1e-12:
            raise ValueError(f"defining function is not real valued (hermitian defect {d:.2e})")

    @property
    def kind(self) -> str:
        return "builtin-catalog-id" if self.catalog_id else "polynomial"

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.poly(z).real

    @cached_property
    def _dz(self) -> tuple[Poly, Poly]:
        return self.poly.deriv(0), self.poly.deriv(2)

    @cached_property
    def _levi(self) -> tuple[tuple[Poly, Poly], tuple[Poly, Poly]]:
        return tuple(tuple(self.poly.deriv(2 * i).deriv(2 * j + 1) for j in range(2)) for i in range(2))

    @cached_property
    def _real_grad(self) -> tuple[Poly, ...]:
        return tuple(_real_derivative(self.poly, k) for k in range(4))

    @cached_property
    def _real_hess(self) -> tuple[tuple[Poly, ...], ...]:
        g = self._real_grad
        return tuple(tuple(_real_derivative(g[a], b) for b in range(4)) for a in range(4))

    def dz(self, z: np.ndarray) -> np.ndarray:
        """Complex gradient (dr/dz1, dr/dz2), shape (..., 2)."""
        return np.stack([self._dz[0](z), self._dz[1](z)], axis=-1)

    def grad(self, z: np.ndarray) -> np.ndarray:
        """Real gradient in (x1, y1, x2, y2)."""
        return np.stack([g(z).real for g in self._real_grad], axis=-1)

    def hess(self, z: np.ndarray) -> np.ndarray:
        h = self._real_hess
        return np.stack([np.stack([h[a][b](z).real for b in range(4)], axis=-1) for a in range(4)], axis=-2)

    def levi_matrix(self, z: np.ndarray) -> np.ndarray:
        """Matrix of d^2 r / dz_i d zb_j."""
        L = self._levi
        return np.stack([np.stack([L[i][j](z) for j in range(2)], axis=-1) for i in range(2)], axis=-2)

    def to_json(self) -> dict:
        return {"kind": "polynomial", "monomials": self.poly.to_list()}


@dataclass(frozen=True)
class JetTable:
    z: tuple[complex, complex]
    order: int
    entries: dict

    def __getitem__(self, alpha) -> complex:
        return self.entries[tuple(alpha)]

    def conjugation_defect(self) -> float:
        return max(abs(v - np.conj(self.entries[tuple(a[k] for k in _CONJ_PERM)])) for a, v in self.entries.items())


def eval_jet(r: DefiningFunction, z, order: int) -> JetTable:
    """All mixed Wirtinger derivatives of r at z up to the given total order."""
    if order > r.max_jet_order:
        raise CapabilityError(f"order {order} exceeds max_jet_order {r.max_jet_order}")
    z = np.asarray(z, dtype=complex)
    entries = {}
    for n in range(order + 1):
        for alpha in itertools.product(range(n + 1), repeat=4):
            if sum(alpha) == n:
                entries[alpha] = complex(r.poly.deriv_multi(alpha)(z))
    return JetTable(z=(complex(z[0]), complex(z[1])), order=order, entries=entries)


@dataclass(frozen=True, eq=False)
class DomainSpec:
    r: DefiningFunction
    neighborhood_radius: float = 2.0
    shell_width: float = 0.3
    catalog_params: dict = field(default_factory=dict)
    name: str = "custom"
    type_max: int = 2

    def to_json(self) -> dict:
        d = self.r.to_json()
        d.update(
            neighborhood_radius=self.neighborhood_radius,
            shell_width=self.shell_width,
            name=self.name,
            catalog_params=self.catalog_params,
            type_max=self.type_max,
        )
        return d


def domain_from_json(obj: Mapping | str) -> DomainSpec:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if obj.get("kind") == "catalog":
        return catalog(obj["id"], **obj.get("params", {}))
    if obj.get("kind") != "polynomial":
        raise ValueError("domain kind must be 'polynomial' or 'catalog'")
    poly = Poly.from_list(obj["monomials"])
    return DomainSpec(
        r=DefiningFunction(poly),
        neighborhood_radius=float(obj.get("neighborhood_radius", 2.0)),
        shell_width=float(obj.get("shell_width", 0.3)),
        name=obj.get("name", "custom"),
        catalog_params=dict(obj.get("catalog_params", {})),
        type_max=int(obj.get("type_max", max(2, poly.degree))),
    )


# ---------------------------------------------------------------- catalog

def _egg_poly(k: int) -> Poly:
    return (Z1 * ZB1) ** k + Z2 * ZB2 - 1.0


def _kn_poly(t: float) -> Poly:
    # |z1|^8 + t |z1|^2 Re(z1^6) + |z2|^2 - 1 ; bounded for |t| < 1, type 8 at (0, 1)
    return (Z1 * ZB1) ** 4 + (Z1**7 * ZB1 + Z1 * ZB1**7) * (t / 2) + Z2 * ZB2 - 1.0


CATALOG_IDS = ("ball", "egg", "kn")


def catalog(name: str, k: int = 2, t: float = 0.5, neighborhood_radius: float = 2.0, shell_width: float = 0.3) -> DomainSpec:
    """Catalog domains: ``ball``, ``egg`` (|z1|^{2k} + |z2|^2 < 1) and ``kn``."""
    if name == "ball":
        return DomainSpec(DefiningFunction(_egg_poly(1), catalog_id="ball"), neighborhood_radius, shell_width, {}, "ball", 2)
    if name == "egg":
        if k not in (1, 2, 3):
            raise ValueError("egg exponent k must be 1, 2 or 3")
        return DomainSpec(DefiningFunction(_egg_poly(k), catalog_id=f"egg{k}"), neighborhood_radius, shell_width, {"k": k}, f"egg{k}", 2 * k)
    if name == "kn":
        if not abs(t) < 1:
            raise ValueError("kn parameter t must satisfy |t| < 1 (boundedness)")
        return DomainSpec(DefiningFunction(_kn_poly(t), catalog_id="kn"), neighborhood_radius, shell_width, {"t": t}, "kn", 8)
    raise ValueError(f"unknown catalog id {name!r}; expected one of {CATALOG_IDS}")


# ---------------------------------------------------------------- geometry

def boundary_distance_estimate(D: DomainSpec, z) -> np.ndarray:
    """First-order signed distance r / |grad r|."""
    g = np.linalg.norm(D.r.grad(z), axis=-1)
    return D.r(z) / np.maximum(g, 1e-300)


def classify_point(D: DomainSpec, z) -> str:
    z = np.asarray(z, dtype=complex)
    val = float(D.r(z))
    if val < 0:
        return "interior"
    if np.linalg.norm(z) <= D.neighborhood_radius and float(boundary_distance_estimate(D, z)) <= D.shell_width:
        return "shell"
    return "outside-neighborhood"


def boundary_project(D: DomainSpec, z, tol: float = 1e-10, max_iter: int = 100) -> np.ndarray:
    """Nearest boundary point via damped Newton on the Lagrange system.

    Unknowns (w, lam) in R^4 x R with w - z - lam grad r(w) = 0 and r(w) = 0.
    """
    z = np.asarray(z, dtype=complex)
    x0 = to_real(z)
    r = D.r

    def F(x, lam):
        w = to_complex(x)
        g = r.grad(w)
        return np.concatenate([x - x0 - lam * g, [r(w)]])

    x = x0.copy()
    for _ in range(20):  # gradient steps onto the level set give a good start
        w = to_complex(x)
        g = r.grad(w)
        gg = g @ g
        if gg == 0:
            raise GeometryError("degenerate gradient during projection")
        x = x - r(w) * g / gg
        if abs(r(to_complex(x))) < 1e-3:
            break
    g = r.grad(to_complex(x))
    lam = float((x - x0) @ g / (g @ g))
    res = F(x, lam)
    for _ in range(max_iter):
        nres = np.linalg.norm(res)
        if nres < tol:
            return to_complex(x)
        w = to_complex(x)
        g, H = r.grad(w), r.hess(w)
        J = np.zeros((5, 5))
        J[:4, :4] = np.eye(4) - lam * H
        J[:4, 4] = -g
        J[4, :4] = g
        try:
            step = np.linalg.solve(J, -res)
        except np.linalg.LinAlgError as exc:
            raise NumericError("singular Newton system in boundary_project") from exc
        t = 1.0
        while t > 1e-6:
            nx, nl = x + t * step[:4], lam + t * step[4]
            nr = F(nx, nl)
            if np.linalg.norm(nr) < nres:
                break
            t /= 2
        x, lam, res = nx, nl, nr
    if np.linalg.norm(res) < tol:
        return to_complex(x)
    raise NumericError(f"boundary_project did not converge (residual {np.linalg.norm(res):.2e})")


def project_along_gradient(D: DomainSpec, z: np.ndarray, iters: int = 30, tol: float = 1e-13) -> np.ndarray:
    """Vectorised boundary projection by gradient-line Newton steps (not orthogonal in general)."""
    w = np.array(z, dtype=complex, copy=True)
    for _ in range(iters):
        val = D.r(w)
        if np.max(np.abs(val)) < tol:
            break
        g = D.r.dz(w)
        # step along conj(dr/dz): r changes to first order by 2|dz r|^2 t
        w = w - (val / (2 * np.sum(np.abs(g) ** 2, axis=-1)))[..., None] * np.conj(g)
    return w


def levi_spot_check(D: DomainSpec, z, tol: float = 1e-8) -> float:
    """Levi form on the unit complex tangent vector, divided by |dr/dz|.

    Convention: |dr/dz| = (|r_z1|^2 + |r_z2|^2)^{1/2}; the unit sphere gives 1.
    """
    z = np.asarray(z, dtype=complex)
    if abs(float(D.r(z))) > max(tol, 1e-6):
        raise GeometryError("levi_spot_check expects a boundary point")
    g = D.r.dz(z)
    ng = float(np.linalg.norm(g))
    if ng < 1e-12:
        raise GeometryError("degenerate gradient")
    v = np.array([g[1], -g[0]]) / ng
    L = D.r.levi_matrix(z)
    val = np.einsum("i,ij,j->", v, L, np.conj(v))
    return float(val.real) / ng


def random_boundary_points(D: DomainSpec, n: int, rng: np.random.Generator, z1_max: float | None = None) -> np.ndarray:
    """Boundary points of a star-shaped catalog domain along random rays from 0."""
    out = []
    while len(out) < n:
        v = rng.normal(size=4)
        v /= np.linalg.norm(v)
        d = to_complex(v)
        lo, hi = 0.0, D.neighborhood_radius
        if D.r(d * hi) <= 0:
            continue
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if D.r(d * mid) < 0:
                lo = mid
            else:
                hi = mid
        w = d * 0.5 * (lo + hi)
        w = boundary_project(D, w)
        if z1_max is not None and abs(w[0]) > z1_max:
            continue
        out.append(w)
    return np.array(out)


def ray_radius(D: DomainSpec, directions: np.ndarray, iters: int = 60) -> np.ndarray:
    """Radius R(w) with r(R w) = 0 for unit directions (star-shaped domains)."""
    lo = np.zeros(directions.shape[:-1])
    hi = np.full(directions.shape[:-1], D.neighborhood_radius)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = D.r(directions * mid[..., None]) < 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


def star_radius(D: DomainSpec, directions: np.ndarray) -> np.ndarray:
    """ray_radius with closed forms for the ball and egg catalog entries."""
    directions = np.asarray(directions, dtype=complex)
    k = {"ball": 1, "egg1": 1, "egg2": 2, "egg3": 3}.get(D.name)
    if k is None:
        return ray_radius(D, directions)
    a = np.abs(directions[..., 0]) ** (2 * k)
    b = np.abs(directions[..., 1]) ** 2
    if k == 1:
        return 1.0 / np.sqrt(a + b)
    if k == 2:
        return np.sqrt(2.0 / (b + np.sqrt(b * b + 4 * a)))
    X = np.ones_like(a)  # a X^3 + b X = 1, Newton from above converges monotonically
    X = np.maximum(X, 1.0 / np.maximum(a + b, 1e-300))
    for _ in range(60):
        X = X - (a * X**3 + b * X - 1) / (3 * a * X**2 + b)
    return np.sqrt(X)


def math_isclose(a: float, b: float, tol: float) -> bool:
    return math.isclose(a, b, abs_tol=tol)
