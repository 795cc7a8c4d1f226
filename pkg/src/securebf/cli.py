"""Command-line entry point: solve, sweep, montecarlo, beampattern, oracle.

Exit codes: 0 success, 2 configuration error, 3 infeasible scenario,
4 numerical failure. Failures print one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import json
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .antenna import beampattern_grid
from .evaluation import (
    brute_force_oracle,
    monte_carlo_outage,
    power_sweep,
    write_beampattern_csv,
    write_csv,
    write_histogram_csv,
    write_outage_csv,
    write_sweep_csv,
)
from .optimizer import ScenarioInfeasible, SolverFailure, solve_perfect_csi, solve_scheme
from .scenario import ScenarioError, bundled_scenario_path, derived_seed, load_scenario, parse_sweep

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 2, 3, 4

_SCHEMES = ("robust", "perfect", "sdr", "nonrobust")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ScenarioError(f"command line: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="securebf", description="Robust secure multicast beamforming experiments.")
    p.add_argument("--version", action="version", version=f"securebf {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--scenario", default="default", help="YAML scenario, run manifest (.json) or 'default'")
        sp.add_argument("--seed", type=int, default=None, help="master seed (overrides the scenario)")
        sp.add_argument("--out", default="out", help="output directory")

    s = sub.add_parser("solve", help="solve one scheme at one power")
    common(s)
    s.add_argument("--scheme", choices=_SCHEMES, default="robust")
    s.add_argument("--power-dbw", type=float, default=None, help="per-antenna power (dBW)")

    s = sub.add_parser("sweep", help="min-ASR versus per-antenna power")
    common(s)
    s.add_argument("--power-sweep", default=None, help="lo:hi:step in dBW")
    s.add_argument("--scheme", choices=_SCHEMES, action="append", default=None, help="repeatable; default all")

    s = sub.add_parser("montecarlo", help="empirical outage of a solved beamformer")
    common(s)
    s.add_argument("--scheme", choices=_SCHEMES, default="robust")
    s.add_argument("--draws", type=int, default=None)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--power-dbw", type=float, default=None)

    s = sub.add_parser("beampattern", help="normalized beampattern of a beamformer")
    common(s)
    s.add_argument("--grid", default="181x361", help="theta_steps x phi_steps")
    s.add_argument("--weights", default=None, help="solution JSON from 'solve'; solves robust if omitted")
    s.add_argument("--scheme", choices=_SCHEMES, default="robust")

    s = sub.add_parser("oracle", help="2-antenna brute-force check against the optimizer")
    common(s)
    s.add_argument("--grid", type=int, default=360, help="points per angle")
    return p


# ---------------------------------------------------------------------------


def _resolve_scenario(args):
    path = bundled_scenario_path("default_scenario") if args.scenario in ("default", "default_scenario") else Path(args.scenario)
    sc = load_scenario(path)
    if args.seed is not None:
        if args.seed < 0:
            raise ScenarioError("seed must be nonnegative", "seed")
        sc = sc.replace(seed=args.seed)
    return sc, path


def _planned_outputs(args, out: Path) -> list:
    names = {
        "solve": ["solution.json", "trace.csv"],
        "sweep": ["sweep.csv"],
        "montecarlo": ["solution.json", "montecarlo.json", "outage.csv", "histogram.csv"],
        "beampattern": ["beampattern.csv"],
        "oracle": ["oracle.json"],
    }[args.command]
    return [str(out / n) for n in ["manifest.json"] + names]


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def write_manifest(args, argv, sc, out: Path) -> dict:
    manifest = {
        "tool": "securebf",
        "version": __version__,
        "python": platform.python_version(),
        "command": args.command,
        "argv": list(argv),
        "seed": sc.seed,
        "started_utc": datetime.now(timezone.utc).isoformat(),
        "scenario": sc.resolved(),
        "outputs": _planned_outputs(args, out),
    }
    _write_json(out / "manifest.json", manifest)
    return manifest


def _power(args, sc):
    return sc.power_dbw if getattr(args, "power_dbw", None) is None else args.power_dbw


def _solve(sc, scheme, power_dbw):
    return solve_scheme(
        scheme,
        sc.channels(),
        sc.targets(power_dbw),
        sc.algorithm(),
        seed=derived_seed(sc.seed, "randomization-candidates"),
        n_candidates=sc.sdr_candidates,
    )


def _solution_doc(sol, sc, power_dbw) -> dict:
    doc = sol.to_dict()
    doc["power_dbw"] = power_dbw
    doc["eps2_abs"] = sc.eps2_rel * float(np.real(np.trace(sol.w_mat)))
    return doc


def cmd_solve(args, sc, out: Path):
    p = _power(args, sc)
    sol = _solve(sc, args.scheme, p)
    _write_json(out / "solution.json", _solution_doc(sol, sc, p))
    write_csv(out / "trace.csv", ["rate_bps_hz", "feasible"], ((t["rate"], t["feasible"]) for t in sol.trace.get("outer", [])))
    print(json.dumps({"scheme": sol.scheme, "min_asr_bps_hz": sol.min_asr, "rank1_gap": sol.rank1_gap}))


def cmd_sweep(args, sc, out: Path):
    powers = parse_sweep(args.power_sweep, "--power-sweep") if args.power_sweep else sc.sweep_powers_db()
    schemes = args.scheme or list(_SCHEMES)
    res = power_sweep(sc, powers, schemes, seed=sc.seed)
    write_sweep_csv(res, out / "sweep.csv")
    for r in res.rows:
        print(f"{r.power_dbw:8.2f} dBW  {r.scheme:18s} {r.min_asr:9.4f} bps/Hz  {r.error}")


def cmd_montecarlo(args, sc, out: Path):
    p = _power(args, sc)
    draws = sc.mc_draws if args.draws is None else args.draws
    if draws < 1:
        raise ScenarioError("--draws must be >= 1", "draws")
    sol = _solve(sc, args.scheme, p)
    _write_json(out / "solution.json", _solution_doc(sol, sc, p))
    rep = monte_carlo_outage(sol.w, sc.channels(), sc.targets(p), sol.min_asr, draws, sc.seed, args.workers, sc.histogram_bin_db)
    _write_json(out / "montecarlo.json", rep.to_dict())
    write_outage_csv(rep, out / "outage.csv")
    write_histogram_csv(rep, out / "histogram.csv")
    print(json.dumps({"interference_satisfaction": rep.interference_satisfaction.tolist(), "secrecy_outage_any": rep.secrecy_outage_any}))


def _parse_grid(text: str):
    try:
        a, b = (int(t) for t in text.lower().split("x"))
    except ValueError:
        raise ScenarioError(f"expected THETAxPHI, got {text!r}", "grid") from None
    if a < 2 or b < 2:
        raise ScenarioError("grid needs at least 2 points per axis", "grid")
    return a, b


def cmd_beampattern(args, sc, out: Path):
    nt, nph = _parse_grid(args.grid)
    if args.weights:
        doc = json.loads(Path(args.weights).read_text())
        w = np.asarray(doc["w_real"]) + 1j * np.asarray(doc["w_imag"])
    else:
        w = _solve(sc, args.scheme, sc.power_dbw).w
    if w.size != sc.n_elements:
        raise ScenarioError(f"weights have {w.size} entries, array has {sc.n_elements}", "weights")
    grid = beampattern_grid(sc.geometry(), sc.directivity(), w, nt, nph)
    write_beampattern_csv(grid, out / "beampattern.csv")


def cmd_oracle(args, sc, out: Path):
    if sc.n_elements != 2:
        raise ScenarioError("oracle needs a 2-element array", "n1/n2")
    ch = sc.channels().with_perfect_csi()
    tg = sc.targets()
    orc = brute_force_oracle(ch, tg, args.grid)
    doc = {"grid": args.grid, "oracle_feasible": orc.feasible, "oracle_min_asr_bps_hz": orc.min_asr if orc.feasible else None, "n_feasible": orc.n_feasible}
    try:
        sol = solve_perfect_csi(ch, tg, sc.algorithm())
        doc["optimizer_min_asr_bps_hz"] = sol.min_asr
    except ScenarioInfeasible as e:
        doc["optimizer_min_asr_bps_hz"] = None
        doc["optimizer_error"] = str(e)
    if orc.w is not None:
        doc["oracle_w_real"] = orc.w.real.tolist()
        doc["oracle_w_imag"] = orc.w.imag.tolist()
    _write_json(out / "oracle.json", doc)
    print(json.dumps({k: doc[k] for k in ("oracle_min_asr_bps_hz", "optimizer_min_asr_bps_hz")}))


_COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "montecarlo": cmd_montecarlo,
    "beampattern": cmd_beampattern,
    "oracle": cmd_oracle,
}


def _fail(code: int, exc: Exception, **extra) -> int:
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    doc.update(extra)
    print(json.dumps(doc, default=_json_default), file=sys.stderr)
    return code


def _finish(manifest, out: Path, code: int) -> None:
    if manifest is None:
        return
    manifest["finished_utc"] = datetime.now(timezone.utc).isoformat()
    manifest["exit_code"] = code
    manifest["outputs"] = [o for o in manifest["outputs"] if Path(o).exists()]
    _write_json(out / "manifest.json", manifest)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    manifest, out, code = None, None, EXIT_OK
    try:
        args = build_parser().parse_args(argv)
        sc, _ = _resolve_scenario(args)
        out = Path(args.out)
        manifest = write_manifest(args, argv, sc, out)
        _COMMANDS[args.command](args, sc, out)
    except ScenarioError as e:
        code = _fail(EXIT_CONFIG, e, field=e.field, line=e.line)
    except ScenarioInfeasible as e:
        code = _fail(EXIT_INFEASIBLE, e, binding=e.binding)
    except SolverFailure as e:
        code = _fail(EXIT_NUMERICAL, e, context=e.context)
    _finish(manifest, out, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
