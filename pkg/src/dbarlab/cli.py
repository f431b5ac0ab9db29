"""Command-line entry point; runs the service layer in-process.

stdout carries JSON (the compact result, or the full report with --json); progress and
diagnostics go to stderr.  Exit codes: 0 all requested checks pass, 1 a check failed or
a computation raised, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from pydantic import ValidationError

from . import __version__, service
from .errors import ConfigError, DbarLabError


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run configuration")
    g.add_argument("--config", type=Path, help="JSON file with RunConfig fields; flags override it")
    g.add_argument("--domain", choices=["ball", "egg", "kn", "custom"])
    g.add_argument("--k", type=int, help="egg exponent")
    g.add_argument("--t", type=float, help="kn parameter")
    g.add_argument("--eta", type=float)
    g.add_argument("--epsilon", type=float)
    g.add_argument("--refine", type=int, help="resolution level 0-4")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", type=Path, help="directory for JSON/CSV artifacts")
    g.add_argument("--json", action="store_true", help="print the full report (config included)")
    return p


def _output_only() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int)
    p.add_argument("--refine", type=int)
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--json", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dbarlab", description="Finite-type geometry and d-bar homotopy operators on model domains in C^2.")
    ap.add_argument("--version", action="version", version=f"dbarlab {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)
    common = _common()

    geom = sub.add_parser("geom", help="type and nonisotropic scales at a boundary point")
    gs = geom.add_subparsers(dest="sub", required=True)
    for name in ("type", "tau"):
        q = gs.add_parser(name, parents=[common])
        q.add_argument("--point", required=True, help="x1,y1,x2,y2")

    q = sub.add_parser("normalize", parents=[common], help="normal-form coordinates at a boundary point")
    q.add_argument("--point", required=True)

    q = sub.add_parser("bump", parents=[common], help="shell sequence of the bumped domains")
    q.add_argument("--point", required=True)
    q.add_argument("--j-min", type=int, default=3)
    q.add_argument("--j-max", type=int, default=12)

    q = sub.add_parser("division", parents=[common], help="weighted division problem at an exterior point")
    q.add_argument("--q", required=True, help="exterior point x1,y1,x2,y2")
    q.add_argument("--max-degree", type=int, default=12)

    q = sub.add_parser("leray", parents=[common], help="patched Leray map and its certificate")
    q.add_argument("--point", default="0,0,1,0")
    q.add_argument("--pairs", type=int, default=2000)

    q = sub.add_parser("solve", parents=[common], help="homotopy residual of H1 on the ball")
    q.add_argument("--form", default="dzb1", choices=["dzb1", "z1dzb1", "mixed", "zb1dzb1", "zb2dzb1"])
    q.add_argument("--levels", type=int, default=3)
    q.add_argument("--points", type=int, default=8)

    spaces = sub.add_parser("spaces", help="function-space norms and the extension operator")
    ss = spaces.add_subparsers(dest="sub", required=True)
    q = ss.add_parser("norm", parents=[_output_only()])
    q.add_argument("--def", dest="definition", required=True, choices=["hz", "tl"])
    q.add_argument("--s", type=float, default=0.5)
    q.add_argument("--sigma", type=float, default=0.7, help="exponent of the test profile")
    q = ss.add_parser("extend", parents=[_output_only()])
    q.add_argument("--domain", default="halfplane", choices=["halfplane", "graph"])
    q.add_argument("--J", type=int, default=12)
    q.add_argument("--M", type=int, default=6)

    q = sub.add_parser("verify", parents=[common], help="integral lemmas and weighted estimates")
    q.add_argument("--lemma", required=True, choices=["st-int", "shell-int", "h11", "gain"])
    q.add_argument("--alpha", type=float, default=0.0)
    q.add_argument("--beta", type=float, default=1.0)
    q.add_argument("--m", type=int, default=2)
    q.add_argument("--delta-min", type=float)
    q.add_argument("--delta-max", type=float)

    q = sub.add_parser("suite", parents=[_output_only()], help="acceptance checklist")
    q.add_argument("--quick", action="store_true", help="reduced resolution")
    q.add_argument("--only", type=int, nargs="+", help="check ids to run")
    return ap


def _config(args) -> service.RunConfig:
    data = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    for key in ("domain", "k", "t", "eta", "epsilon", "refine", "seed"):
        v = getattr(args, key, None)
        if v is not None and not (key == "domain" and args.cmd == "spaces"):
            data[key] = v
    if args.cmd == "verify" and args.lemma == "gain" and "domain" not in data:
        data.update(domain="egg", k=data.get("k", 2), eta=data.get("eta", 0.1))
    try:
        return service.RunConfig(**data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def dispatch(args, cfg: service.RunConfig) -> service.Report:
    c = args.cmd
    if c == "geom":
        pt = service.parse_point(args.point)
        return service.geom_type(cfg, pt) if args.sub == "type" else service.geom_tau(cfg, pt)
    if c == "normalize":
        return service.normalize(cfg, service.parse_point(args.point))
    if c == "bump":
        return service.bump(cfg, service.parse_point(args.point), args.j_min, args.j_max)
    if c == "division":
        return service.division(cfg, service.parse_point(args.q), range(0, args.max_degree + 1, 2))
    if c == "leray":
        return service.leray(cfg, service.parse_point(args.point), args.pairs)
    if c == "solve":
        return service.solve(cfg, args.form, args.levels, args.points)
    if c == "spaces":
        if args.sub == "norm":
            return service.spaces_norm(cfg, args.definition, args.s, args.sigma)
        return service.spaces_extend(cfg, args.domain, args.J, args.M)
    if c == "verify":
        return service.verify(cfg, args.lemma, args.alpha, args.beta, args.m, args.delta_min, args.delta_max)
    if c == "suite":
        log = lambda line: print(line, file=sys.stderr, flush=True)
        return service.suite(cfg, quick=args.quick, only=args.only, log=log)
    raise ConfigError(f"unknown command {c!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        report = dispatch(args, cfg)
    except ConfigError as exc:
        print(f"dbarlab: configuration error: {exc}", file=sys.stderr)
        return 2
    except DbarLabError as exc:
        print(f"dbarlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.out:
        for p in report.write(args.out):
            print(f"wrote {p}", file=sys.stderr)
    shown = report.payload() if args.json else service._plain(report.stdout if report.stdout is not None else report.result)
    print(json.dumps(shown, sort_keys=True))
    if not report.passed:
        print(f"dbarlab: check failed: {report.command}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
