"""Mountain-pass levels across the nested dihedral classes k = 1, 2, 3.

    python scripts/mountain_pass_levels.py [--alpha 2] [--q 1] [--p 2.5 5] [--n 64]
"""
import argparse
import json

from psm2d.fields import Grid2D, ProblemParams
from psm2d.solver import mountain_pass


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=2.0)
    ap.add_argument("--q", type=float, default=1.0)
    ap.add_argument("--p", type=float, nargs="+", default=[2.5, 5.0])
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--L", type=float, default=8.0)
    args = ap.parse_args()
    grid = Grid2D(args.L, args.n)
    rows = []
    for p in args.p:
        for k in (1, 2, 3):
            out = mountain_pass(ProblemParams(args.alpha, p, args.q, "minus"), k, grid=grid)
            d = out.diagnostics
            rows.append({"p": p, "k": k, "level": out.level, "converged": out.converged,
                         "min": d["min"], "max": d["max"], "nehari_rel": d["nehari_rel"],
                         "pohozaev_rel": d["pohozaev_rel"], "flags": out.flags})
            print(f"p={p:<4g} k={k} level={out.level:10.4f} converged={out.converged} "
                  f"nehari_rel={d['nehari_rel']:.1e} flags={','.join(out.flags) or '-'}")
    for p in args.p:
        lv = [r["level"] for r in rows if r["p"] == p]
        print(f"p={p:g}: levels non-decreasing in k: {all(a <= b for a, b in zip(lv, lv[1:]))}")
    print(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
