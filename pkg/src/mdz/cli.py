"""Command line entry point `mdz`."""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

import numpy as np

from .corespace import Bijection, Correspondence, FiniteMetricSpace, MdzError, load_metric, save_metric
from .distances import gh_bijective, gh_exact, hl_closeness, lipschitz_exact
from .harness import THEOREMS, CampaignConfig, make_rng, run_campaign
from .normed import NormSpec, bm_upper, load_norm, norm_eval
from .reductions import bm_gadget, choose_constants, kadets_gadget, renorm_build, suspend, symmetric_sample, unitize


def _payload(p):
    if isinstance(p, Correspondence):
        return sorted([int(a), int(b)] for a, b in p.pairs)
    if isinstance(p, Bijection):
        return [int(x) for x in p.perm]
    if isinstance(p, np.ndarray):
        return p.tolist()
    return p


def _emit(value: float, witness, as_json: bool) -> None:
    if as_json:
        print(json.dumps({"value": value, "witness": {"kind": witness.kind, "payload": _payload(witness.payload),
                                                      "quality": witness.quality}}))
    else:
        print(repr(float(value)))


def _load_array(path: str) -> np.ndarray:
    obj = json.loads(Path(path).read_text())
    if isinstance(obj, dict):
        obj = obj.get("vectors", obj.get("points"))
    return np.asarray(obj, dtype=float)


def _write_json(obj: dict, out: str | None) -> None:
    text = json.dumps(obj)
    if out:
        Path(out).write_text(text)
    else:
        print(text)


def _save_space(m: FiniteMetricSpace, out: str | None) -> None:
    if out:
        save_metric(m, out)
    else:
        print(json.dumps(m.to_json()))


def cmd_dist(args) -> int:
    if args.kind == "bm":
        a, b = load_norm(args.a), load_norm(args.b)
        v, w = bm_upper(a, b, restarts=args.restarts, seed=args.seed)
        _emit(v, w, args.json)
        return 0
    a, b = load_metric(args.a), load_metric(args.b)
    if args.kind == "gh":
        v, w = gh_bijective(a, b) if args.method == "bijective" else gh_exact(a, b)
    elif args.kind == "lip":
        v, w = lipschitz_exact(a, b, args.variant.upper())
    else:
        v, w = hl_closeness(a, b)
    _emit(v, w, args.json)
    return 0


def _levels(text: str) -> tuple[int, int]:
    m = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError("levels look like -3..3")
    return int(m.group(1)), int(m.group(2))


def cmd_construct(args) -> int:
    if args.kind == "suspend":
        k_min, k_max = args.levels
        _save_space(suspend(load_metric(args.input), k_min, k_max), args.out)
    elif args.kind == "bm-gadget":
        nu = load_norm(args.input)
        V = _load_array(args.vectors)
        vals = [float(norm_eval(nu, V[i] - V[j])) for i in range(len(V)) for j in range(len(V)) if i != j]
        _save_space(bm_gadget(nu, V, choose_constants(vals)).space, args.out)
    elif args.kind == "kadets-gadget":
        nu = load_norm(args.input)
        if args.samples % 2:
            raise MdzError("--samples must be even (the sample is symmetric)")
        S = symmetric_sample(nu, args.samples // 2, make_rng(args.seed))
        _save_space(kadets_gadget(nu, S, args.smax).space, args.out)
    elif args.kind == "renorm":
        spec = renorm_build(load_metric(args.input), args.alpha, args.delta)
        _write_json(spec.to_json(), args.out)
    else:
        _save_space(unitize(load_norm(args.input), _load_array(args.points)), args.out)
    return 0


def cmd_verify(args) -> int:
    cfg = CampaignConfig(args.theorem, trials=args.trials, seed=args.seed, size=args.size,
                         tolerance=args.tolerance, threads=args.threads)
    rep = run_campaign(cfg, args.report)
    a = rep.aggregate
    print(f"{cfg.theorem_id}: {'PASS' if rep.passed else 'FAIL'} "
          f"({a['pass_count']} passed, {a['fail_count']} failed, {a['skipped']} skipped, "
          f"worst margin {a['worst_margin']:.3g}, {a['wall_time']:.1f}s)")
    return 0 if rep.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mdz", description="Distances and reductions between finite metric and normed spaces.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dist", help="compute a distance between two instances")
    d.add_argument("kind", choices=["gh", "lip", "hl-close", "bm"])
    d.add_argument("a")
    d.add_argument("b")
    d.add_argument("--method", choices=["exact", "bijective"], default="exact")
    d.add_argument("--variant", choices=["bbi", "gromov", "dk"], default="bbi")
    d.add_argument("--restarts", type=int, default=8)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--json", action="store_true")
    d.set_defaults(func=cmd_dist)

    c = sub.add_parser("construct", help="build a gadget, suspension, renorm or unitized sample")
    c.add_argument("kind", choices=["suspend", "bm-gadget", "kadets-gadget", "renorm", "unitize"])
    c.add_argument("input")
    c.add_argument("--levels", type=_levels, default=(-3, 3))
    c.add_argument("--vectors")
    c.add_argument("--points")
    c.add_argument("--samples", type=int, default=8)
    c.add_argument("--smax", type=int, default=3)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--alpha", type=float, default=1.003)
    c.add_argument("--delta", type=float, default=0.002)
    c.add_argument("--out")
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify", help="run a verification campaign")
    v.add_argument("theorem", choices=THEOREMS)
    v.add_argument("--trials", type=int, default=10)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--size", type=int)
    v.add_argument("--tolerance", type=float, default=1e-9)
    v.add_argument("--threads", type=int, default=None)
    v.add_argument("--report")
    v.set_defaults(func=cmd_verify)
    return p


def _fix_levels(argv: list[str]) -> list[str]:
    # "--levels -3..3" would otherwise be read as a new option
    out = list(argv)
    for i, a in enumerate(out[:-1]):
        if a == "--levels":
            out[i], out[i + 1] = f"--levels={out[i + 1]}", ""
    return [a for a in out if a != ""]


def main(argv: list[str] | None = None) -> int:
    argv = _fix_levels(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    if args.command == "construct":
        need = {"bm-gadget": "vectors", "unitize": "points"}.get(args.kind)
        if need and getattr(args, need) is None:
            print(f"mdz: construct {args.kind} needs --{need}", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except (MdzError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"mdz: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
