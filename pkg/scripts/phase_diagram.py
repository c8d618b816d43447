"""Phase diagram of the radial minimization of I over (p, alpha, q).

Runs (or reloads) a scan and prints, per (p, alpha), the two thresholds and
the class of every q cell. Optional PNG output needs matplotlib.

    python scripts/phase_diagram.py --out scan_out [--jobs 4] [--png phase.png]
"""
import argparse

from psm2d.phase import ScanSpec, run_scan

SYMBOL = {"trivial_collapse": ".", "negative_level_minimizer": "-",
          "positive_level_critical_point": "+", "not_converged": "?", "error": "!"}


def floats(text):
    return tuple(float(x) for x in text.split(","))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=floats, default=(5.0, 6.0, 7.0, 8.0))
    ap.add_argument("--alpha", type=floats, default=(6.5, 7.0, 8.0, 10.0))
    ap.add_argument("--q", type=floats, default=(1e-4, 1e-2, 1.0, 10.0, 100.0, 1000.0))
    ap.add_argument("--multistarts", type=int, default=4)
    ap.add_argument("--out", default="scan_out")
    ap.add_argument("--jobs", type=int, default=None)
    ap.add_argument("--png", default=None)
    args = ap.parse_args()

    spec = ScanSpec(args.p, args.alpha, args.q, multistarts=args.multistarts, out_dir=args.out)
    man = run_scan(spec, jobs=args.jobs)
    cells = man.results["cells"]
    print(f"{'p':>5} {'alpha':>6} {'qbar':>11} {'qtilde_est':>11}  " + " ".join(f"{q:>8g}" for q in spec.q_values))
    for p in spec.p_values:
        for a in spec.alpha_values:
            row = [c for c in cells if c["p"] == p and c["alpha"] == a]
            qb, qt = row[0]["qbar"], row[0]["qtilde_est"]
            fmt = lambda x: f"{x:11.4g}" if x is not None else f"{'-':>11}"
            marks = " ".join(f"{SYMBOL.get(c['classification'], '?'):>8}" for c in row)
            print(f"{p:5g} {a:6g} {fmt(qb)} {fmt(qt)}  {marks}")
    print("legend: . trivial, - negative level, + positive-level critical point, ? not converged, ! error")
    print(f"qtilde_est >= qbar everywhere: {man.results['ordering_ok']}")

    if args.png:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, len(spec.p_values), figsize=(4 * len(spec.p_values), 3.5), sharey=True)
        for ax, p in zip(list(axes) if len(spec.p_values) > 1 else [axes], spec.p_values):
            for c in (c for c in cells if c["p"] == p):
                neg = c["classification"] == "negative_level_minimizer"
                ax.scatter(c["alpha"], c["q"], c="k" if neg else "w", edgecolors="k")
            rows = sorted({(c["alpha"], c["qbar"], c["qtilde_est"]) for c in cells if c["p"] == p})
            ax.plot([r[0] for r in rows], [r[1] for r in rows], "b-", label="qbar")
            ax.plot([r[0] for r in rows], [r[2] for r in rows], "r--", label="qtilde_est")
            ax.set_yscale("log")
            ax.set_title(f"p = {p:g}")
            ax.set_xlabel("alpha")
        axes[0].set_ylabel("q") if len(spec.p_values) > 1 else None
        plt.legend()
        fig.tight_layout()
        fig.savefig(args.png, dpi=120)


if __name__ == "__main__":
    main()
