"""Monte Carlo outage validation, power sweeps, beampattern export and the 2-antenna oracle."""
from __future__ import annotations

import csv
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .antenna import BeampatternGrid
from .channel import ChannelSet, standard_complex_normal
from .metrics import min_asr
from .optimizer import SCHEMES, ScenarioInfeasible, SolverFailure, Targets, solve_scheme
from .scenario import derived_seed

MC_BLOCK = 10_000  # draws per independent stream block; fixes the stream layout
_CSI_TAG = zlib.crc32(b"csi-error")
_EVE, _PU = 0, 1
# hard-constraint comparison slack, relative; matches the solver verification scale
REL_TOL = 1e-6
_FLOOR_DB = -300.0


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass
class MonteCarloReport:
    n_draws: int
    i_th: float
    rate: float
    interference_satisfaction: np.ndarray  # (Q,)
    secrecy_outage: np.ndarray  # (M, K)
    secrecy_outage_any: float  # some pair in outage
    histograms: list  # per PU: {bin index: count}
    bin_db: float

    @property
    def interference_outage(self) -> np.ndarray:
        return 1.0 - self.interference_satisfaction

    def histogram_rows(self, q: int):
        """(bin_low_db, bin_high_db, count) rows in increasing order."""
        return [(k * self.bin_db, (k + 1) * self.bin_db, c) for k, c in sorted(self.histograms[q].items())]

    def to_dict(self) -> dict:
        return {
            "n_draws": self.n_draws,
            "i_th": self.i_th,
            "rate_bps_hz": self.rate,
            "interference_satisfaction": self.interference_satisfaction.tolist(),
            "secrecy_outage": self.secrecy_outage.tolist(),
            "secrecy_outage_any": self.secrecy_outage_any,
            "bin_db": self.bin_db,
        }


def _stream(seed: int, role: int, idx: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(_CSI_TAG, role, idx, block)))


def _draw(est: np.ndarray, sqrt_cov: np.ndarray, seed, role, idx, block, n) -> np.ndarray:
    v = standard_complex_normal(_stream(seed, role, idx, block), (n, est.size))
    return est + v @ sqrt_cov.T


def _mc_block(job):
    (w, su, noise_su, eve, eve_sq, noise_eve, pu, pu_sq, rate, i_th, bin_db, seed, block, n) = job
    M, K, Q = len(su), len(eve), len(pu)
    c_su = np.log2(1.0 + np.abs(su.conj() @ w) ** 2 / noise_su)  # (M,)
    sec_out = np.zeros((M, K), dtype=np.int64)
    any_out = np.zeros(n, dtype=bool)
    for k in range(K):
        he = _draw(eve[k], eve_sq[k], seed, _EVE, k, block, n)
        c_e = np.log2(1.0 + np.abs(he.conj() @ w) ** 2 / noise_eve[k])
        cs = np.maximum(c_su[None, :] - c_e[:, None], 0.0)  # (n, M)
        out = cs < rate - REL_TOL * max(rate, 1.0)
        sec_out[:, k] = out.sum(axis=0)
        any_out |= out.any(axis=1)
    pu_ok = np.zeros(Q, dtype=np.int64)
    hists = []
    for q in range(Q):
        g = _draw(pu[q], pu_sq[q], seed, _PU, q, block, n)
        p = np.abs(g.conj() @ w) ** 2
        pu_ok[q] = np.count_nonzero(p <= i_th * (1.0 + REL_TOL))
        p_db = np.where(p > 0, 10.0 * np.log10(np.maximum(p, 1e-300)), _FLOOR_DB)
        idx, cnt = np.unique(np.floor(np.maximum(p_db, _FLOOR_DB) / bin_db).astype(np.int64), return_counts=True)
        hists.append(dict(zip(idx.tolist(), cnt.tolist())))
    return pu_ok, sec_out, int(any_out.sum()), hists


def monte_carlo_outage(
    w: np.ndarray,
    channels: ChannelSet,
    targets: Targets,
    rate: float,
    n_draws: int,
    seed: int,
    workers: int = 1,
    bin_db: float = 1.0,
) -> MonteCarloReport:
    """Empirical interference satisfaction and secrecy outage of ``w``.

    Draw ``i`` of user ``u`` comes from stream block ``i // MC_BLOCK`` of
    that user, so a run with fewer draws sees a prefix of a longer run and
    results do not depend on ``workers``.
    """
    if n_draws < 1:
        raise ValueError("n_draws must be >= 1")
    if bin_db <= 0:
        raise ValueError("histogram bin width must be positive")
    w = np.asarray(w, dtype=complex)
    jobs = []
    for b, start in enumerate(range(0, n_draws, MC_BLOCK)):
        n = min(MC_BLOCK, n_draws - start)
        jobs.append(
            (
                w,
                channels.su,
                channels.noise_su,
                channels.eve_est,
                [e.sqrt_cov for e in channels.eve_err],
                channels.noise_eve,
                channels.pu_est,
                [e.sqrt_cov for e in channels.pu_err],
                float(rate),
                float(targets.i_th),
                float(bin_db),
                int(seed),
                b,
                n,
            )
        )
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_mc_block, jobs))
    else:
        results = [_mc_block(j) for j in jobs]

    M, K, Q = channels.M, channels.K, channels.Q
    pu_ok = np.zeros(Q, dtype=np.int64)
    sec = np.zeros((M, K), dtype=np.int64)
    any_out = 0
    hists = [dict() for _ in range(Q)]
    for ok, so, ao, hs in results:
        pu_ok += ok
        sec += so
        any_out += ao
        for q, h in enumerate(hs):
            for k, c in h.items():
                hists[q][k] = hists[q].get(k, 0) + c
    return MonteCarloReport(
        n_draws=n_draws,
        i_th=float(targets.i_th),
        rate=float(rate),
        interference_satisfaction=pu_ok / n_draws,
        secrecy_outage=sec / n_draws,
        secrecy_outage_any=any_out / n_draws,
        histograms=hists,
        bin_db=float(bin_db),
    )


# ---------------------------------------------------------------------------
# power sweep


@dataclass
class SweepRow:
    power_dbw: float
    scheme: str
    min_asr: float
    rate: float
    converged: bool
    wall_time: float
    error: str = ""


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    def series(self, scheme: str):
        """(powers, min_asr) for one scheme; failed points give NaN."""
        rs = [r for r in self.rows if r.scheme == scheme]
        return np.array([r.power_dbw for r in rs]), np.array([r.min_asr for r in rs])


def power_sweep(scenario, powers_dbw, schemes=("robust",), seed: int | None = None, n_candidates: int | None = None) -> SweepResult:
    """Run every scheme at every per-antenna power; failures become rows, not exceptions."""
    powers = [float(p) for p in powers_dbw]
    if not powers:
        raise ValueError("power list is empty")
    if any(b <= a for a, b in zip(powers, powers[1:])):
        raise ValueError("powers must be strictly increasing")
    for s in schemes:
        _canonical_scheme(s)
    seed = derived_seed(scenario.seed if seed is None else seed, "randomization-candidates")
    n_candidates = scenario.sdr_candidates if n_candidates is None else n_candidates
    channels = scenario.channels()
    cfg = scenario.algorithm()
    out = SweepResult()
    for p in powers:
        targets = scenario.targets(p)
        for s in schemes:
            t0 = time.perf_counter()
            try:
                sol = solve_scheme(s, channels, targets, cfg, seed=seed, n_candidates=n_candidates)
                out.rows.append(SweepRow(p, _canonical_scheme(s), sol.min_asr, sol.rate, sol.converged, time.perf_counter() - t0))
            except (ScenarioInfeasible, SolverFailure) as e:
                out.rows.append(SweepRow(p, _canonical_scheme(s), float("nan"), float("nan"), False, time.perf_counter() - t0, type(e).__name__))
    return out


def _canonical_scheme(s: str) -> str:
    alias = {"perfect": "perfect-csi", "sdr": "sdr-randomization", "nonrobust": "non-robust"}
    s = alias.get(s, s)
    if s not in SCHEMES:
        raise ValueError(f"unknown scheme {s!r}")
    return s


# ---------------------------------------------------------------------------
# brute-force oracle


@dataclass
class OracleResult:
    w: np.ndarray | None
    min_asr: float
    feasible: bool
    n_feasible: int
    grid: int


def oracle_candidates(grid: int) -> np.ndarray:
    """Unit-norm 2-vectors [cos a, sin a e^{jb}].

    ``a`` takes grid + 1 values k pi / (2 grid) covering [0, pi/2], ``b`` takes
    grid values covering [0, 2 pi); a grid that is an integer multiple of
    another contains all of its points.
    """
    a = np.arange(grid + 1) * (np.pi / 2 / grid)
    b = np.arange(grid) * (2 * np.pi / grid)
    A, B = np.meshgrid(a, b, indexing="ij")
    return np.stack([np.cos(A).ravel() + 0j, (np.sin(A) * np.exp(1j * B)).ravel()], axis=1)


def brute_force_oracle(channels: ChannelSet, targets: Targets, grid: int = 360) -> OracleResult:
    """Exhaustive max-min secrecy rate over a grid of 2-antenna directions.

    Perfect CSI is assumed (estimates are used as the channels). Each
    direction is scaled by the largest factor meeting the per-antenna
    budgets and the interference threshold; per pair the secrecy rate is
    nondecreasing in that factor wherever it is positive, so this is the
    best point on the ray. Directions missing gamma_th are discarded.
    """
    if channels.n_antennas != 2:
        raise ValueError("the oracle handles 2-antenna arrays only")
    if grid < 1:
        raise ValueError("grid must be >= 1")
    U = oracle_candidates(grid)  # (G, 2)
    P = np.broadcast_to(targets.power, (2,)).astype(float)
    mag2 = np.abs(U) ** 2
    with np.errstate(divide="ignore"):
        scale = np.min(np.where(mag2 > 0, P / np.where(mag2 > 0, mag2, 1.0), np.inf), axis=1)
        for g in channels.pu_est:
            leak = np.abs(U @ g.conj()) ** 2
            scale = np.minimum(scale, np.where(leak > 0, targets.i_th / np.where(leak > 0, leak, 1.0), np.inf))
    W = U * np.sqrt(scale)[:, None]
    snr_su = np.abs(W @ channels.su.conj().T) ** 2 / channels.noise_su  # (G, M)
    ok = np.all(snr_su >= targets.gamma_th * (1.0 - REL_TOL), axis=1)
    c_su = np.log2(1.0 + snr_su)
    if channels.K:
        snr_e = np.abs(W @ channels.eve_est.conj().T) ** 2 / channels.noise_eve
        worst = np.log2(1.0 + snr_e).max(axis=1)
        value = np.maximum(c_su.min(axis=1) - worst, 0.0)
    else:
        value = c_su.min(axis=1)
    n_ok = int(ok.sum())
    if n_ok == 0:
        return OracleResult(None, float("nan"), False, 0, grid)
    value = np.where(ok, value, -np.inf)
    i = int(np.argmax(value))
    return OracleResult(W[i], float(min_asr(channels.with_perfect_csi(), W[i])), True, n_ok, grid)


# ---------------------------------------------------------------------------
# CSV output; every header names its units


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([_fmt(v) for v in r])
    return path


def write_beampattern_csv(grid: BeampatternGrid, path) -> Path:
    th = np.rad2deg(grid.theta)
    ph = np.rad2deg(grid.phi)
    rows = ((th[i], ph[j], grid.gain_db[i, j]) for i in range(th.size) for j in range(ph.size))
    return write_csv(path, ["theta_deg", "phi_deg", "gain_db"], rows)


def write_sweep_csv(result: SweepResult, path) -> Path:
    rows = ((r.power_dbw, r.scheme, r.min_asr, r.rate, r.converged, r.wall_time, r.error) for r in result.rows)
    return write_csv(path, ["power_dbw", "scheme", "min_asr_bps_hz", "rate_bps_hz", "converged", "wall_time_s", "error"], rows)


def write_histogram_csv(report: MonteCarloReport, path) -> Path:
    rows = []
    for q in range(len(report.histograms)):
        rows.extend((q, lo, hi, c) for lo, hi, c in report.histogram_rows(q))
    return write_csv(path, ["pu_index", "bin_low_db", "bin_high_db", "count"], rows)


def write_outage_csv(report: MonteCarloReport, path) -> Path:
    rows = [("interference_satisfaction", f"pu[{q}]", v) for q, v in enumerate(report.interference_satisfaction)]
    M, K = report.secrecy_outage.shape
    rows += [("secrecy_outage", f"su[{m}],eve[{k}]", report.secrecy_outage[m, k]) for m in range(M) for k in range(K)]
    rows.append(("secrecy_outage_any", "all", report.secrecy_outage_any))
    return write_csv(path, ["metric", "subject", "fraction"], rows)
