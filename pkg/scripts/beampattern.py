"""Beampatterns of the robust and perfect-CSI beamformers on the default scenario."""
import argparse
from pathlib import Path

import numpy as np

from _common import pyplot, scenario
from securebf.antenna import beampattern_grid
from securebf.evaluation import write_beampattern_csv
from securebf.optimizer import solve_scheme


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="default")
    ap.add_argument("--out", default="out/beampattern")
    ap.add_argument("--grid", type=int, nargs=2, default=(181, 361), metavar=("THETA", "PHI"))
    args = ap.parse_args()

    sc, out = scenario(args.scenario), Path(args.out)
    ch, tg, cfg = sc.channels(), sc.targets(), sc.algorithm()
    plt = pyplot()
    for scheme in ("robust", "perfect"):
        sol = solve_scheme(scheme, ch, tg, cfg)
        grid = beampattern_grid(sc.geometry(), sc.directivity(), sol.w, *args.grid)
        write_beampattern_csv(grid, out / f"{scheme}.csv")
        peak = grid.argmax_direction()
        print(f"{scheme:8s} min-ASR {sol.min_asr:.4f} bps/Hz, peak at theta={np.degrees(peak.theta):.1f} phi={np.degrees(peak.phi):.1f} deg")
        if plt is None:
            continue
        fig, ax = plt.subplots(figsize=(7, 4))
        im = ax.pcolormesh(np.degrees(grid.phi), np.degrees(grid.theta), np.maximum(grid.gain_db, -60), shading="auto")
        fig.colorbar(im, ax=ax, label="normalized gain (dB)")
        ax.set_xlabel("azimuth phi (deg)")
        ax.set_ylabel("polar theta (deg)")
        ax.set_title(f"{scheme} beamformer")
        fig.savefig(out / f"{scheme}.png", dpi=120, bbox_inches="tight")
        plt.close(fig)


if __name__ == "__main__":
    main()
