"""Bisection over the secrecy rate with a penalty-SDP rank-one inner loop.

At a fixed rate R the feasibility SDP collects the SU SNR floor, the
per-antenna power budget, the tau coupling and the Bernstein surrogates.
The rank-one requirement Tr(W) - lambda_max(W) = 0 is handled by
repeatedly minimizing Tr(W) - u^H W u, u the principal eigenvector of
the previous iterate; the penalty F = -eta (Tr W - lambda_max W) is then
non-decreasing. Note that eta only scales the objective, so it never
changes the minimizer.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import bernstein
from .channel import ChannelSet
from .conic import (
    INFEASIBLE,
    NUMERICAL_FAILURE,
    OPTIMAL,
    ConicProgram,
    Lin,
    SolverOptions,
    extract_rank1,
    rank1_gap,
    solve,
)
from .metrics import min_asr as _min_asr

log = logging.getLogger(__name__)

SCHEMES = ("robust", "perfect-csi", "sdr-randomization", "non-robust")


class ScenarioInfeasible(RuntimeError):
    """No feasible beamformer even at the lower rate bound."""

    def __init__(self, message: str, binding: str | None = None):
        super().__init__(message)
        self.binding = binding


class SolverFailure(RuntimeError):
    """The conic solver failed numerically; carries the iteration context."""

    def __init__(self, message: str, context: dict | None = None):
        super().__init__(message)
        self.context = context or {}


@dataclass
class Targets:
    """Thresholds in linear scale."""

    gamma_th: float
    i_th: float
    power: np.ndarray  # per-antenna budgets P_n
    p_out_interference: float = 0.1
    p_out_secrecy: float = 0.1

    def __post_init__(self):
        self.power = np.atleast_1d(np.asarray(self.power, dtype=float))
        if np.any(self.power <= 0):
            raise ValueError("per-antenna power budgets must be positive")
        bernstein.outage_sigma(self.p_out_interference)
        bernstein.outage_sigma(self.p_out_secrecy)

    def scaled_power(self, c: float) -> "Targets":
        return replace(self, power=self.power * c)


@dataclass
class AlgorithmConfig:
    eps1: float = 1e-3
    eps2: float = 1e-6  # relative to Tr(W)
    eta0: float = 1.0
    r_low: float = 0.0
    r_high: float | None = None  # None -> capacity upper bound
    max_outer: int = 60
    max_inner: int = 40
    stall_doubling: bool = True
    eta_cap_factor: float = 2.0**20
    stall_rtol: float = 1e-6
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.eps1 <= 0 or self.eps2 <= 0 or self.eta0 <= 0:
            raise ValueError("eps1, eps2 and eta0 must be positive")
        if self.r_high is not None and self.r_low >= self.r_high:
            raise ValueError("r_low must be below r_high")


@dataclass
class InnerStep:
    rate: float
    iteration: int
    eta: float
    penalty_prev: float
    penalty: float
    gap: float
    trace_w: float
    stalled: bool
    accepted: bool = True


@dataclass
class InnerResult:
    W: np.ndarray | None
    gap: float
    converged: bool
    iterations: int
    steps: list[InnerStep]
    reason: str = ""


@dataclass
class BeamformerSolution:
    w: np.ndarray
    w_mat: np.ndarray
    rate: float  # rate certified by the bisection (R_L)
    min_asr: float  # outage-constrained rate certified for w itself
    rank1_gap: float
    scheme: str
    converged: bool = True
    bracket: tuple[float, float] = (0.0, 0.0)
    trace: dict = field(default_factory=dict)
    degraded: bool = False
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "rate_bps_hz": self.rate,
            "min_asr_bps_hz": self.min_asr,
            "rank1_gap": self.rank1_gap,
            "trace_w": float(np.real(np.trace(self.w_mat))),
            "converged": self.converged,
            "degraded": self.degraded,
            "bracket_bps_hz": list(self.bracket),
            "wall_time_s": self.wall_time,
            "w_real": self.w.real.tolist(),
            "w_imag": self.w.imag.tolist(),
            "trace": self.trace,
        }


# ---------------------------------------------------------------------------
# program construction


def capacity_upper_bound(channels: ChannelSet, targets: Targets) -> float:
    """log2(1 + max_m ||h_m||^2 sum_n P_n / sigma_m^2); no beamformer can beat it."""
    snr = np.sum(np.abs(channels.su) ** 2, axis=1) * targets.power.sum() / channels.noise_su
    return float(np.log2(1.0 + snr.max()))


def _power_vector(targets: Targets, n: int) -> np.ndarray:
    p = targets.power
    if p.size == 1:
        return np.full(n, p[0])
    if p.size != n:
        raise ValueError(f"{p.size} power budgets given for {n} antennas")
    return p


def build_feasibility_program(
    channels: ChannelSet,
    targets: Targets,
    rate: float,
    families=("sinr", "power", "interference", "secrecy"),
):
    """Feasibility SDP at ``rate``; returns (program, W expression)."""
    n = channels.n_antennas
    prog = ConicProgram()
    W = prog.hermitian("W", n)
    if "sinr" in families:
        for m, h in enumerate(channels.su):
            prog.add_nonneg(W.quad(h) - targets.gamma_th * channels.noise_su[m], f"sinr[{m}]")
    if "power" in families:
        P = _power_vector(targets, n)
        for i in range(n):
            E = np.zeros((n, n))
            E[i, i] = 1.0
            prog.add_le(W.inner(E), P[i], f"power[{i}]")
    if "interference" in families:
        bernstein.pu_outage_blocks(prog, W, channels, targets.i_th, targets.p_out_interference)
    if "secrecy" in families:
        _, taus = bernstein.eve_outage_blocks(prog, W, channels, rate, targets.p_out_secrecy)
    else:
        taus = [prog.scalar("tau")]
        for m, h in enumerate(channels.su):
            prog.add_nonneg(W.quad(h) + channels.noise_su[m] - taus[0], f"tau<=su[{m}]")
    prog.tau = taus
    return prog, W


def _max_tau_objective(prog):
    obj = prog.tau[0]
    for t in prog.tau[1:]:
        obj = obj + t
    return obj


def feasible_point(channels, targets, rate, cfg: AlgorithmConfig, families=None):
    """W^(0): maximize tau over the feasibility set. Returns the SolveReport.

    The max-tau optimum is often degenerate; if it cannot be verified, a
    plain feasibility solve (zero objective) is used instead.
    """
    kw = {} if families is None else {"families": families}
    prog, _ = build_feasibility_program(channels, targets, rate, **kw)
    prog.maximize(_max_tau_objective(prog))
    rep = solve(prog, cfg.solver)
    if rep.status == NUMERICAL_FAILURE:
        prog.minimize(Lin.constant(0.0))
        rep = solve(prog, cfg.solver)
    return rep


def binding_family(channels, targets, cfg: AlgorithmConfig, rate: float = 0.0) -> str:
    """First constraint family whose addition makes the rate-``rate`` program infeasible."""
    order = ["sinr", "power", "interference", "secrecy"]
    for i in range(2, len(order) + 1):
        rep = feasible_point(channels, targets, rate, cfg, families=tuple(order[:i]))
        if rep.status != OPTIMAL:
            return order[i - 1] if i > 2 else "sinr/power"
    return "rank-one"


# ---------------------------------------------------------------------------
# Penalty loop and bisection


def _penalty(W, eta):
    return -eta * rank1_gap(W)


def penalty_inner_loop(channels, targets, rate, cfg: AlgorithmConfig, W0=None) -> InnerResult:
    """Drive W toward rank one at a fixed rate.

    Raises ``SolverFailure`` on numerical trouble; infeasibility at
    ``rate`` is reported through ``InnerResult.reason == "infeasible"``.
    """
    if W0 is None:
        rep = feasible_point(channels, targets, rate, cfg)
        if rep.status == INFEASIBLE:
            return InnerResult(None, np.inf, False, 0, [], "infeasible")
        if rep.status != OPTIMAL:
            raise SolverFailure(f"feasibility solve: {rep.status}", {"rate": rate, "iteration": 0})
        W0 = rep.values["W"]

    prog, Wexpr = build_feasibility_program(channels, targets, rate)
    Wj = W0
    eta = cfg.eta0
    steps: list[InnerStep] = []
    gap = rank1_gap(Wj)
    if gap <= cfg.eps2 * np.real(np.trace(Wj)):
        return InnerResult(Wj, gap, True, 0, steps)

    cached = None  # (linearization point, u, solution) -- identical programs give identical output
    it = 0
    while it < cfg.max_inner:
        if cached is not None and cached[0] is Wj:
            _, u, W_new = cached
        else:
            lam, U = np.linalg.eigh((Wj + Wj.conj().T) / 2)
            u = U[:, -1]
            prog.minimize(Wexpr.trace() - Wexpr.quad(u))
            rep = solve(prog, cfg.solver)
            if rep.status != OPTIMAL:
                if rep.status == INFEASIBLE:
                    return InnerResult(Wj, gap, False, it, steps, "infeasible")
                raise SolverFailure(
                    f"penalty iteration: {rep.status}",
                    {"rate": rate, "iteration": it, "eta": eta, "gap": gap, "solver": rep.solver_status},
                )
            W_new = rep.values["W"]
            cached = (Wj, u, W_new)
        new_gap = rank1_gap(W_new)
        # A candidate that does not lower the linearized penalty at the current
        # point (gap(Wj) there) is indistinguishable from Wj up to solver accuracy.
        linearized = float(np.real(np.trace(W_new)) - np.real(np.vdot(u, W_new @ u)))
        tr_j = float(np.real(np.trace(Wj)))
        stalled = (
            np.linalg.norm(W_new - Wj) <= cfg.stall_rtol * np.linalg.norm(Wj)
            or gap - linearized <= cfg.stall_rtol * tr_j
        )
        tol = cfg.eps2 * np.real(np.trace(W_new))
        accepted = not stalled or new_gap <= tol
        steps.append(
            InnerStep(
                rate, it, eta, _penalty(Wj, eta), _penalty(W_new, eta), new_gap,
                float(np.real(np.trace(W_new))), bool(stalled), bool(accepted),
            )
        )
        if not accepted:
            if not cfg.stall_doubling:
                return InnerResult(Wj, gap, False, it, steps, "stalled")
            eta *= 2.0
            if eta > cfg.eta0 * cfg.eta_cap_factor:
                return InnerResult(Wj, gap, False, it, steps, "eta-cap")
            continue
        Wj, gap = W_new, new_gap
        it += 1
        if gap <= tol:
            return InnerResult(Wj, gap, True, it, steps)
    return InnerResult(Wj, gap, False, it, steps, "max-inner")


def _step_record(s: InnerStep) -> dict:
    return {
        "rate": s.rate,
        "iteration": s.iteration,
        "eta": s.eta,
        "penalty_prev": s.penalty_prev,
        "penalty": s.penalty,
        "gap": s.gap,
        "trace_w": s.trace_w,
        "stalled": s.stalled,
        "accepted": s.accepted,
    }


def _bisect(probe, r_low, r_high, cfg: AlgorithmConfig):
    """Generic bisection; ``probe(R)`` returns a payload or None on failure."""
    trace = []
    first = probe(r_low)
    trace.append({"rate": r_low, "feasible": first is not None})
    if first is None:
        return None, (r_low, r_high), trace
    best, lo, hi = first, r_low, r_high
    outer = 0
    while hi - lo > cfg.eps1 and outer < cfg.max_outer:
        r = (lo + hi) / 2
        res = probe(r)
        trace.append({"rate": r, "feasible": res is not None})
        if res is not None:
            best, lo = res, r
        else:
            hi = r
        outer += 1
    return best, (lo, hi), trace


def bisection_search(channels: ChannelSet, targets: Targets, cfg: AlgorithmConfig | None = None, scheme: str = "robust") -> BeamformerSolution:
    """Largest rate (within eps1) at which the penalty loop reaches a rank-one feasible W."""
    cfg = cfg or AlgorithmConfig()
    t0 = time.perf_counter()
    r_high = cfg.r_high if cfg.r_high is not None else capacity_upper_bound(channels, targets)
    inner_log: list[dict] = []

    def probe(r):
        try:
            res = penalty_inner_loop(channels, targets, r, cfg)
        except SolverFailure as exc:
            log.info("numerical failure at R=%.6g: %s %s", r, exc, exc.context)
            inner_log.append({"rate": r, "failure": str(exc), **exc.context})
            return None
        inner_log.extend(_step_record(s) for s in res.steps)
        return res if res.converged else None

    best, bracket, outer_log = _bisect(probe, cfg.r_low, r_high, cfg)
    if best is None:
        binding = binding_family(channels, targets, cfg, cfg.r_low)
        raise ScenarioInfeasible(f"no feasible beamformer at R={cfg.r_low} (binding: {binding})", binding)
    w, gap = extract_rank1(best.W)
    return BeamformerSolution(
        w=w,
        w_mat=best.W,
        rate=bracket[0],
        min_asr=bernstein.certified_rate(channels, np.outer(w, w.conj()), targets.p_out_secrecy),
        rank1_gap=gap,
        scheme=scheme,
        converged=True,
        bracket=bracket,
        trace={"outer": outer_log, "inner": inner_log},
        wall_time=time.perf_counter() - t0,
    )


def solve_robust(channels, targets, cfg=None) -> BeamformerSolution:
    return bisection_search(channels, targets, cfg, scheme="robust")


def solve_perfect_csi(channels, targets, cfg=None) -> BeamformerSolution:
    """Benchmark: estimates treated as exact, hard constraints, same pipeline."""
    return bisection_search(channels.with_perfect_csi(), targets, cfg, scheme="perfect-csi")


def solve_non_robust(channels, targets, cfg=None) -> BeamformerSolution:
    """Design on the estimates as if exact; the reported rate is re-certified
    under the actual error model of ``channels``."""
    sol = bisection_search(channels.with_perfect_csi(), targets, cfg, scheme="non-robust")
    W1 = np.outer(sol.w, sol.w.conj())
    sol.min_asr = bernstein.certified_rate(channels, W1, targets.p_out_secrecy)
    return sol


# ---------------------------------------------------------------------------
# SDR with Gaussian randomization


def relaxed_bisection(channels, targets, cfg: AlgorithmConfig):
    """Bisection on the rank-relaxed SDP (no penalty); returns (W, rate, bracket)."""
    r_high = cfg.r_high if cfg.r_high is not None else capacity_upper_bound(channels, targets)

    def probe(r):
        rep = feasible_point(channels, targets, r, cfg)
        return rep.values["W"] if rep.status == OPTIMAL else None

    W, bracket, _ = _bisect(probe, cfg.r_low, r_high, cfg)
    if W is None:
        binding = binding_family(channels, targets, cfg, cfg.r_low)
        raise ScenarioInfeasible(f"relaxation infeasible at R={cfg.r_low} (binding: {binding})", binding)
    return W, bracket[0], bracket


def best_feasible_scale(channels, targets, w):
    """Largest power scale s (w -> sqrt(s) w) within the per-antenna and
    robust interference budgets; None if the SU SNR floor cannot be met."""
    n = len(w)
    P = _power_vector(targets, n)
    mag2 = np.abs(w) ** 2
    s_max = np.min(P[mag2 > 0] / mag2[mag2 > 0])
    W1 = np.outer(w, w.conj())
    if channels.Q:
        # interference bound is homogeneous of degree one in W
        interf = bernstein.interference_bound(channels, W1, targets.p_out_interference)
        if np.any(interf > 0):
            s_max = min(s_max, targets.i_th / interf.max())
    su = np.abs(channels.su.conj() @ w) ** 2 / channels.noise_su
    s_min = targets.gamma_th / su.min() if su.min() > 0 else np.inf
    return s_max if s_max >= s_min * (1 - 1e-9) else None


def solve_sdr_randomization(
    channels: ChannelSet,
    targets: Targets,
    cfg: AlgorithmConfig | None = None,
    n_candidates: int = 500,
    seed: int | np.random.SeedSequence = 0,
) -> BeamformerSolution:
    """Relaxed SDP at its bisection rate, then Gaussian candidates w ~ CN(0, W)."""
    if n_candidates < 1:
        raise ValueError("n_candidates must be >= 1")
    cfg = cfg or AlgorithmConfig()
    t0 = time.perf_counter()
    W, r_relaxed, bracket = relaxed_bisection(channels, targets, cfg)
    Wh = (W + W.conj().T) / 2
    lam, U = np.linalg.eigh(Wh)
    root = U * np.sqrt(np.clip(lam, 0, None))
    rng = np.random.default_rng(seed)
    best_w, best_rate, feasible_found = None, -np.inf, False
    fallback_w, fallback_rate = None, -np.inf
    for _ in range(n_candidates):
        z = rng.standard_normal((len(lam), 2))
        v = (z[:, 0] + 1j * z[:, 1]) / np.sqrt(2)
        w = root @ v
        if not np.any(np.abs(w) > 0):
            continue
        s = best_feasible_scale(channels, targets, w)
        if s is None:
            # best effort: full per-antenna power, no SNR guarantee
            P = _power_vector(targets, len(w))
            ws = w * np.sqrt(np.min(P / np.maximum(np.abs(w) ** 2, 1e-300)))
            r = bernstein.certified_rate(channels, np.outer(ws, ws.conj()), targets.p_out_secrecy)
            if r > fallback_rate:
                fallback_w, fallback_rate = ws, r
            continue
        ws = np.sqrt(s) * w
        r = bernstein.certified_rate(channels, np.outer(ws, ws.conj()), targets.p_out_secrecy)
        feasible_found = True
        if r > best_rate:
            best_w, best_rate = ws, r
    degraded = not feasible_found
    if degraded:
        best_w, best_rate = fallback_w, max(fallback_rate, 0.0)
    return BeamformerSolution(
        w=best_w,
        w_mat=W,
        rate=r_relaxed,
        min_asr=float(best_rate),
        rank1_gap=rank1_gap(W),
        scheme="sdr-randomization",
        converged=not degraded,
        bracket=bracket,
        degraded=degraded,
        wall_time=time.perf_counter() - t0,
    )


def solve_scheme(scheme: str, channels, targets, cfg=None, seed=0, n_candidates=500) -> BeamformerSolution:
    if scheme == "robust":
        return solve_robust(channels, targets, cfg)
    if scheme in ("perfect", "perfect-csi"):
        return solve_perfect_csi(channels, targets, cfg)
    if scheme in ("sdr", "sdr-randomization"):
        return solve_sdr_randomization(channels, targets, cfg, n_candidates, seed)
    if scheme in ("nonrobust", "non-robust"):
        return solve_non_robust(channels, targets, cfg)
    raise ValueError(f"unknown scheme {scheme!r}")


def nominal_min_asr(channels, w) -> float:
    """Min secrecy rate on the estimated channels, ignoring CSI error."""
    return _min_asr(channels, w)
