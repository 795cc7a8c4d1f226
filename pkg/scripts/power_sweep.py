"""Min-ASR versus per-antenna transmit power for every scheme."""
import argparse
from pathlib import Path

from _common import pyplot, scenario
from securebf.evaluation import power_sweep, write_sweep_csv
from securebf.scenario import parse_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="default")
    ap.add_argument("--out", default="out/sweep")
    ap.add_argument("--power-sweep", default=None, help="lo:hi:step in dBW (write as --power-sweep=-30:-20:5)")
    ap.add_argument("--schemes", nargs="+", default=["perfect", "robust", "nonrobust", "sdr"])
    args = ap.parse_args()

    sc, out = scenario(args.scenario), Path(args.out)
    powers = parse_sweep(args.power_sweep) if args.power_sweep else sc.sweep_powers_db()
    res = power_sweep(sc, powers, args.schemes, seed=sc.seed)
    write_sweep_csv(res, out / "sweep.csv")
    for r in res.rows:
        print(f"{r.power_dbw:7.2f} dBW  {r.scheme:18s} {r.min_asr:8.4f}  {r.error or ''}")

    plt = pyplot()
    if plt is None:
        return
    fig, ax = plt.subplots(figsize=(6, 4))
    for scheme in sorted({r.scheme for r in res.rows}):
        rows = [r for r in res.rows if r.scheme == scheme]
        ax.plot([r.power_dbw for r in rows], [r.min_asr for r in rows], marker="o", label=scheme)
    ax.set_xlabel("per-antenna power (dBW)")
    ax.set_ylabel("min-ASR (bps/Hz)")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.savefig(out / "sweep.png", dpi=120, bbox_inches="tight")


if __name__ == "__main__":
    main()
