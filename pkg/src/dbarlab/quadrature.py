"""Quadrature rules on star-shaped regions of C^2 and on spherical shells."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


def gauss(n: int, a: float = 0.0, b: float = 1.0):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def hopf_directions(n_chi: int, n_ang: int):
    """Unit directions (cos chi e^{ia}, sin chi e^{ib}) and their sphere weights cos chi sin chi."""
    chi, wchi = gauss(n_chi, 0.0, np.pi / 2)
    ang = 2 * np.pi * np.arange(n_ang) / n_ang
    wang = 2 * np.pi / n_ang
    C, A, B = np.meshgrid(chi, ang, ang, indexing="ij")
    W = np.broadcast_to((wchi * np.cos(chi) * np.sin(chi))[:, None, None], C.shape) * wang**2
    dirs = np.stack([np.cos(C) * np.exp(1j * A), np.sin(C) * np.exp(1j * B)], axis=-1).reshape(-1, 2)
    return dirs, W.reshape(-1)


def ray_radii(member: Callable[[np.ndarray], np.ndarray], center, dirs, r_max: float, iters: int = 50) -> np.ndarray:
    """Bisection for the exit radius of a star-shaped region along each direction."""
    center = np.asarray(center, dtype=complex)
    lo = np.zeros(len(dirs))
    hi = np.full(len(dirs), r_max)
    if np.any(member(center + dirs * hi[:, None])):
        raise ValueError("region not contained in the bracket radius")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = member(center + dirs * mid[:, None])
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return 0.5 * (lo + hi)


@dataclass
class StarQuadrature:
    nodes: np.ndarray  # (N, 2)
    weights: np.ndarray  # (N,)
    boundary_gap: np.ndarray  # radial distance to the boundary along the ray
    radii: np.ndarray  # per direction

    @property
    def volume(self) -> float:
        return float(self.weights.sum())

    def integrate(self, f: np.ndarray) -> complex:
        return np.sum(self.weights * f)


def star_quadrature(member, center, r_max: float, n_r: int = 12, n_chi: int = 10, n_ang: int = 16, radii: np.ndarray | None = None) -> StarQuadrature:
    """Tensor rule in (s, chi, alpha, beta) with dV = s^3 cos chi sin chi ds dchi dalpha dbeta."""
    center = np.asarray(center, dtype=complex)
    dirs, wdir = hopf_directions(n_chi, n_ang)
    R = ray_radii(member, center, dirs, r_max) if radii is None else radii
    t, wt = gauss(n_r, 0.0, 1.0)
    s = R[:, None] * t[None, :]
    w = wdir[:, None] * (R[:, None] ** 4) * (t**3 * wt)[None, :]
    nodes = center + dirs[:, None, :] * s[..., None]
    gap = R[:, None] - s
    return StarQuadrature(nodes.reshape(-1, 2), w.reshape(-1), gap.reshape(-1), R)


def sphere_shell_quadrature(center, r_in: float, r_out: float, n_r: int, n_chi: int, n_ang: int, graded: bool = False):
    """Nodes and weights on {r_in < |z - center| < r_out}; optional geometric grading toward r_in."""
    center = np.asarray(center, dtype=complex)
    dirs, wdir = hopf_directions(n_chi, n_ang)
    if graded:
        u, wu = gauss(n_r, np.log(r_in), np.log(r_out))
        s, ws = np.exp(u), wu * np.exp(u)
    else:
        s, ws = gauss(n_r, r_in, r_out)
    nodes = center + dirs[:, None, :] * s[None, :, None]
    w = wdir[:, None] * (s**3 * ws)[None, :]
    return nodes.reshape(-1, 2), w.reshape(-1)
