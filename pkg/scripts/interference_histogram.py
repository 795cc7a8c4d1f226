"""Monte Carlo interference histograms at each primary user, robust vs non-robust."""
import argparse
from pathlib import Path

import numpy as np

from _common import pyplot, scenario
from securebf.evaluation import monte_carlo_outage, write_histogram_csv, write_outage_csv
from securebf.optimizer import solve_scheme
from securebf.scenario import lin_to_db


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="default")
    ap.add_argument("--out", default="out/histogram")
    ap.add_argument("--draws", type=int, default=None)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    sc, out = scenario(args.scenario), Path(args.out)
    ch, tg, cfg = sc.channels(), sc.targets(), sc.algorithm()
    draws = args.draws or sc.mc_draws
    plt = pyplot()
    reports = {}
    for scheme in ("robust", "nonrobust"):
        sol = solve_scheme(scheme, ch, tg, cfg)
        rep = monte_carlo_outage(sol.w, ch, tg, sol.min_asr, draws, sc.seed, args.workers, sc.histogram_bin_db)
        write_histogram_csv(rep, out / f"{scheme}_histogram.csv")
        write_outage_csv(rep, out / f"{scheme}_outage.csv")
        reports[scheme] = rep
        sat = ", ".join(f"{s:.3f}" for s in rep.interference_satisfaction)
        print(f"{scheme:10s} PU satisfaction [{sat}]  secrecy outage (any pair) {rep.secrecy_outage_any:.4f}")

    if plt is None:
        return
    n_pu = len(reports["robust"].histograms)
    fig, axes = plt.subplots(1, n_pu, figsize=(5 * n_pu, 3.5), squeeze=False)
    for q, ax in enumerate(axes[0]):
        for scheme, rep in reports.items():
            rows = np.array(rep.histogram_rows(q), dtype=float)
            if rows.size:
                ax.step(rows[:, 0], rows[:, 2] / rep.n_draws, where="post", label=scheme)
        ax.axvline(lin_to_db(tg.i_th), color="k", ls="--", lw=1, label="I_th")
        ax.set_xlabel("interference (dBW)")
        ax.set_title(f"PU {q}")
    axes[0][0].set_ylabel("fraction of draws")
    axes[0][0].legend()
    fig.savefig(out / "histogram.png", dpi=120, bbox_inches="tight")


if __name__ == "__main__":
    main()
