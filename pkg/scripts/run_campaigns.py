"""Run every verification campaign at acceptance scale and write one JSON report per theorem.

    python scripts/run_campaigns.py --out reports/ [--only lip-to-gh kadets-to-gh] [--scale 0.1]
"""
import argparse
import sys
from pathlib import Path

from mdz.harness import CampaignConfig, run_campaign

# theorem id -> (trials, seed, size, options)
PLAN = {
    "gh-bij-equiv": (200, 1, 5, {}),
    "identity-mpq": (200, 3, 4, {}),
    "lip-to-gh": (100, 4, 4, {}),
    "hl-to-gh": (100, 6, 4, {}),
    "bm-to-lip": (50, 7, None, {}),
    "unitize-hl": (20, 5, 15, {}),
    "kadets-to-gh": (50, 8, 8, {"s_max": 3, "tuples": 1000}),
    "gh-to-renorm": (100, 11, 4, {"probes": 10_000}),
    "lip-variants": (200, 9, 4, {}),
    "metric-axioms": (1, 13, None, {"triangles": 10_000}),
    "renorm-facts": (1, 10, 4, {"probes": 10_000}),
    "glue-norm": (3, 12, None, {"probes": 1000}),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="reports")
    ap.add_argument("--only", nargs="*", choices=sorted(PLAN))
    ap.add_argument("--scale", type=float, default=1.0, help="multiply trial counts (smoke runs)")
    ap.add_argument("--threads", type=int)
    args = ap.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failed = []
    for th in args.only or PLAN:
        trials, seed, size, opts = PLAN[th]
        cfg = CampaignConfig(th, trials=max(1, round(trials * args.scale)), seed=seed, size=size,
                             threads=args.threads, options=opts)
        rep = run_campaign(cfg, out / f"{th}.json")
        a = rep.aggregate
        print(f"{th:14s} {'PASS' if rep.passed else 'FAIL'}  trials={cfg.trials:4d} skipped={a['skipped']:3d} "
              f"worst_margin={a['worst_margin']:.3g}  {a['wall_time']:.1f}s")
        if not rep.passed:
            failed.append(th)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
