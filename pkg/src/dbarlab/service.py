"""Command implementations shared by the CLI and the HTTP API.

Each operation takes a RunConfig plus its own arguments and returns a Report: a JSON
payload, optional CSV rows and a pass/fail flag.  Reports embed the full configuration.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, field_validator

from . import __version__
from .domain_model import DomainSpec, catalog, domain_from_json
from .errors import ConfigError


class Tolerances(BaseModel):
    slope_st_int: float = 0.05
    slope_shell: float = 0.1
    r2_min: float = 0.98
    h11_stability: float = 2.0


class RunConfig(BaseModel):
    """Everything a run depends on; serialized into every report."""

    domain: str = "ball"
    k: int = 2
    t: float = 0.5
    domain_spec: dict | None = None  # polynomial domain (same schema as domain_from_json)
    eta: float = 0.5
    epsilon: float = 0.01
    refine: int = Field(0, ge=0, le=4)
    seed: int = 0
    tolerances: Tolerances = Field(default_factory=Tolerances)

    @field_validator("domain")
    @classmethod
    def _known(cls, v: str) -> str:
        if v not in ("ball", "egg", "kn", "custom"):
            raise ValueError(f"unknown domain {v!r}")
        return v

    def build_domain(self) -> DomainSpec:
        if self.domain == "custom":
            if self.domain_spec is None:
                raise ConfigError("domain 'custom' needs a domain_spec in the config file")
            return domain_from_json(self.domain_spec)
        try:
            return catalog(self.domain, k=self.k, t=self.t)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass
class Report:
    command: str
    config: RunConfig
    result: dict
    passed: bool = True
    rows: list[dict] = field(default_factory=list)
    stdout: Any = None  # what the CLI prints in --json mode; defaults to the full payload

    def payload(self) -> dict:
        return {"command": self.command, "version": __version__, "config": self.config.model_dump(), "passed": self.passed, "result": _plain(self.result)}

    def csv_text(self) -> str:
        if not self.rows:
            return ""
        keys = list(dict.fromkeys(k for r in self.rows for k in r))
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: _cell(r.get(k, "")) for k in keys})
        return buf.getvalue()

    def write(self, out: str | Path) -> list[Path]:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        stem = self.command.replace(" ", "_")
        paths = [out / f"{stem}.json"]
        paths[0].write_text(json.dumps(self.payload(), indent=2, sort_keys=True) + "\n")
        if self.rows:
            paths.append(out / f"{stem}.csv")
            paths[-1].write_text(self.csv_text())
        return paths


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(_plain(v), sort_keys=True)
    return str(v)


def _plain(obj):
    """JSON-safe copy: numpy scalars and arrays, complex numbers, non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_plain(float(obj.real)), _plain(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    return obj


def parse_point(text: str) -> np.ndarray:
    """'x1,y1,x2,y2' -> (x1 + i y1, x2 + i y2)."""
    try:
        v = [float(s) for s in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad point {text!r}") from exc
    if len(v) != 4:
        raise ConfigError("a point needs four real coordinates x1,y1,x2,y2")
    return np.array([v[0] + 1j * v[1], v[2] + 1j * v[3]])


# ------------------------------------------------------------ geometry

def geom_type(cfg: RunConfig, point: np.ndarray) -> Report:
    from .aniso_geometry import _check_boundary, contact_order, type_at

    D = cfg.build_domain()
    _check_boundary(D, point)
    t, prof = type_at(D, point)
    oracle = contact_order(D, point)
    res = {"type": t, "oracle": oracle, "A": {str(l): a for l, a in prof.A.items()}}
    return Report("geom type", cfg, res, passed=t == oracle, stdout={"type": t})


def geom_tau(cfg: RunConfig, point: np.ndarray, n: int = 20) -> Report:
    from .aniso_geometry import tau_table, type_at, verify_power_sandwich, verify_tau_scaling

    D = cfg.build_domain()
    _, prof = type_at(D, point)
    deltas = np.logspace(-6, 0, n)
    a, b = verify_power_sandwich(prof, deltas), verify_tau_scaling(prof, deltas)
    rows = tau_table(prof, deltas)
    res = {"sandwich_violations": a.violations, "scaling_violations": b.violations, "top": prof.top}
    return Report("geom tau", cfg, res, passed=a.passed and b.passed, rows=rows)


def normalize(cfg: RunConfig, point: np.ndarray) -> Report:
    from .normal_form import catlin_normalize

    nf = catlin_normalize(cfg.build_domain(), point)
    ok = nf.residual_order_certificate < 1e-9
    return Report("normalize", cfg, nf.to_json(), passed=ok)


def bump(cfg: RunConfig, point: np.ndarray, j_min: int = 3, j_max: int = 12) -> Report:
    from .bumping import BumpFamily

    fam = BumpFamily.at(cfg.build_domain(), point)
    rows = fam.sequence(range(j_min, j_max + 1))
    lb = fam.check_r_lower_bound(200, cfg.rng())
    return Report("bump", cfg, {"r_lower_bound": lb, "n": len(rows)}, passed=lb["c_prime"] > 0, rows=rows)


def division(cfg: RunConfig, q: np.ndarray, degrees=range(0, 13, 2)) -> Report:
    from .domain_model import boundary_project
    from .leray_division import ball_quadrature, skoda_division
    from .normal_form import catlin_normalize

    D = cfg.build_domain()
    quad = ball_quadrature(D, 8 + 2 * cfg.refine, 6 + 2 * cfg.refine, 10 + 2 * cfg.refine)
    p = boundary_project(D, q)
    nf = catlin_normalize(D, p)
    rows = []
    for deg in degrees:
        dp = skoda_division(q, cfg.eta, deg, quad, nf)
        rows.append({"degree": deg, "I_eta": dp.I_eta_value, "identity_residual": float(dp.identity_residual(quad.nodes).max()), "constraint_residual": dp.constraint_residual})
    ok = max(r["identity_residual"] for r in rows) < 1e-10
    return Report("division", cfg, {"q": q, "eta": cfg.eta}, passed=ok, rows=rows)


def leray(cfg: RunConfig, point: np.ndarray, n_pairs: int = 2000) -> Report:
    from .leray_division import NetSpec, build_net, certify_leray

    D = cfg.build_domain()
    spacing = 0.03 / 2**cfg.refine
    lm, info = build_net(NetSpec(D, point, 0.06, spacing, (0.02, 0.04), eps=cfg.epsilon, eta=cfg.eta), cfg.rng())
    cert = certify_leray(lm, n_pairs, cfg.rng())
    ok = cert.reproduction < 1e-10 and cert.cr_residual < 1e-8
    return Report("leray", cfg, {"net": info, "certificate": cert.to_json()}, passed=ok)


def solve(cfg: RunConfig, form: str = "dzb1", levels: int = 3, n_points: int = 8) -> Report:
    from .homotopy_kernels import Extension, RadialCutoff, catalog_form, homotopy_residual, observed_orders
    from .leray_division import explicit_leray_convex

    D = cfg.build_domain()
    if D.name != "ball":
        raise ConfigError("solve uses the explicit convex Leray map and the radial cutoff; only the ball is supported")
    rng = cfg.rng()
    v = rng.normal(size=(n_points, 4))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    v *= 0.7 * rng.random(n_points)[:, None] ** 0.25
    z = v[:, 0::2] + 1j * v[:, 1::2]
    ext = Extension(catalog_form(form), RadialCutoff(1.1, 1.6))
    lv = homotopy_residual(ext, lambda zeta, w: explicit_leray_convex(D, zeta, w), z, list(range(cfg.refine, cfg.refine + levels)))
    rows = [{"level": l.level, "h": l.h, "residual_max": l.residual_max, "residual_l2": l.residual_l2, "relative_max": l.relative_max} for l in lv]
    orders = observed_orders(lv)
    ok = all(b.residual_max < a.residual_max for a, b in zip(lv, lv[1:])) and (not orders or min(orders) >= 1)
    return Report("solve", cfg, {"form": form, "orders": orders, "closed": ext.closed}, passed=ok, rows=rows)


# ------------------------------------------------------------ function spaces

def spaces_norm(cfg: RunConfig, definition: str, s: float, sigma: float, n: int = 256) -> Report:
    from . import function_spaces as fs

    x = np.linspace(-1.25, 1.25, n * 2**cfg.refine, endpoint=False)
    h = float(x[1] - x[0])
    X = np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)
    vals = fs.power_profile(sigma)(X)
    if definition == "hz":
        rep = fs.holder_zygmund_norm(vals, h, s)
        res = rep.to_json()
        rows = res["per_scale"]
    elif definition == "tl":
        rep = fs.dyadic_resolution(vals, h, s)
        res = rep.to_json()
        rows = res["bands"]
    else:
        raise ConfigError("norm definition must be 'hz' or 'tl'")
    res.update(definition=definition, s=s, sigma=sigma, h=h)
    return Report(f"spaces norm {definition}", cfg, res, rows=rows)


def spaces_extend(cfg: RunConfig, domain: str = "halfplane", J: int = 12, M: int = 6) -> Report:
    from . import function_spaces as fs

    omega = {"halfplane": fs.half_plane, "graph": fs.lipschitz_graph}.get(domain)
    if omega is None:
        raise ConfigError("extension domain must be 'halfplane' or 'graph'")
    om = omega()
    rng = cfg.rng()
    pts = np.column_stack([rng.uniform(-0.4, 0.4, 6), rng.uniform(0.0, 0.5, 6)])
    pts[:, 1] += om.rho(pts[:, 0])
    table = fs.reproduction_table(om, [J], [M], pts)
    rows = [{"function": r.name, "J": r.J, "M": r.M, "residual": r.residual} for r in table]
    worst = max(r["residual"] for r in rows)
    return Report("spaces extend", cfg, {"domain": domain, "J": J, "M": M, "max_residual": worst}, passed=worst < 1e-3, rows=rows)


# ------------------------------------------------------------ verification

def verify(cfg: RunConfig, lemma: str, alpha: float = 0.0, beta: float = 1.0, m: int = 2, delta_min: float | None = None, delta_max: float | None = None) -> Report:
    from . import estimate_lab as el
    from .acceptance import ST_INT_ASYMPTOTIC

    if lemma == "st-int":
        lo = ST_INT_ASYMPTOTIC[0] if delta_min is None else delta_min
        hi = ST_INT_ASYMPTOTIC[1] if delta_max is None else delta_max
        fit = el.st_int_slope(alpha, beta, m, np.logspace(np.log10(lo), np.log10(hi), 7 + 2 * cfg.refine), cfg.tolerances.slope_st_int)
        rows = [{"delta": x, "value": y} for x, y in zip(fit.x, fit.y)]
        return Report("verify st-int", cfg, fit.to_json(), passed=fit.passed, rows=rows)
    if lemma == "shell-int":
        D = cfg.build_domain()
        lo = 1e-8 if delta_min is None else delta_min
        hi = 1e-5 if delta_max is None else delta_max
        p = np.array([0, 1], complex)
        fit = el.shell_slope(D, p, alpha, beta, np.logspace(np.log10(lo), np.log10(hi), 4 + cfg.refine), tol=cfg.tolerances.slope_shell)
        rows = [{"distance": x, "value": y} for x, y in zip(fit.x, fit.y)]
        return Report("verify shell-int", cfg, fit.to_json(), passed=fit.passed, rows=rows)
    if lemma == "h11":
        rep = el.h11_eps_stability(eps_values=(cfg.epsilon * 5, cfg.epsilon * 2.5), eta=0.1)
        return Report("verify h11", cfg, rep, passed=rep["passed"], rows=rep["rows"])
    if lemma == "gain":
        if cfg.domain != "egg" or cfg.k != 2:
            raise ConfigError("the gain experiment is defined on the egg with k = 2")
        rep = el.regularity_gain_experiment(k=cfg.k, eta=cfg.eta)
        rows = [{"separation": s.separation, **{f"q_{e}": v for e, v in s.quotient.items()}, "level_gap": s.level_gap} for s in rep.scales]
        return Report("verify gain", cfg, rep.to_json(), passed=rep.passed, rows=rows)
    raise ConfigError(f"unknown lemma {lemma!r}")


def suite(cfg: RunConfig, quick: bool = False, only: list[int] | None = None, log=None) -> Report:
    from .acceptance import run_all

    results = run_all(quick=quick, seed=cfg.seed, only=only, log=log)
    rows = [{"id": r.id, "name": r.name, "passed": r.passed, "seconds": round(r.seconds, 3)} for r in results]
    return Report("suite", cfg, {"quick": quick, "checks": [r.to_json() for r in results]}, passed=all(r.passed for r in results), rows=rows)
