"""Compare the perfect-CSI optimizer with a brute-force search on random 2-antenna scenarios."""
import argparse
from pathlib import Path

from securebf.evaluation import brute_force_oracle, write_csv
from securebf.optimizer import ScenarioInfeasible, solve_perfect_csi
from securebf.scenario import random_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--grid", type=int, default=360)
    ap.add_argument("--out", default="out/oracle")
    args = ap.parse_args()

    rows = []
    for seed in range(args.seeds):
        sc = random_scenario(seed, n1=2, n2=1, n_su=1, n_eve=1, n_pu=1)
        ch, tg = sc.channels().with_perfect_csi(), sc.targets()
        orc = brute_force_oracle(ch, tg, args.grid)
        try:
            opt = solve_perfect_csi(ch, tg, sc.algorithm()).min_asr
        except ScenarioInfeasible:
            opt = float("nan")
        ref = orc.min_asr if orc.feasible else float("nan")
        rel = abs(opt - ref) / max(abs(ref), 1e-12)
        rows.append((seed, ref, opt, rel))
        print(f"seed {seed}: oracle {ref:.5f}  optimizer {opt:.5f}  rel diff {rel:.2e}")
    write_csv(Path(args.out) / "oracle.csv", ["seed", "oracle_bps_hz", "optimizer_bps_hz", "rel_diff"], rows)


if __name__ == "__main__":
    main()
