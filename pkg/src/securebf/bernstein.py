"""Deterministic surrogates for the interference and secrecy outage constraints.

For v ~ CN(0, I) the Bernstein-type bound

    Pr{ v^H Q v + 2 Re(v^H b) >= Tr Q + sqrt(2 s) sqrt(||Q||_F^2 + 2||b||^2) + s u+(Q) } <= exp(-s)

turns ``Pr{ ... >= delta } <= p`` into ``Tr Q + sqrt(2 s) alpha + s xi <= delta``
with ``||(vec Q, sqrt2 b)|| <= alpha``, ``xi I - Q >= 0``, ``xi >= 0`` and
``s = -ln p``. Everything emitted here is affine in (W, tau, alpha, xi).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .conic import ConicProgram, Herm, Lin


@dataclass
class BernsteinBlock:
    q_mat: Herm  # (E^1/2)^H W E^1/2
    b_vec: Lin  # E^1/2 W h_hat, as [Re; Im]
    delta: Lin
    sigma: float
    alpha: Lin | None
    xi: Lin | None
    label: str


def outage_sigma(p_out: float) -> float:
    if not 0.0 < p_out < 1.0:
        raise ValueError(f"outage probability must lie in (0, 1), got {p_out}")
    return -np.log(p_out)


def bernstein_margin(Q: np.ndarray, b: np.ndarray, sigma: float) -> float:
    """Tr Q + sqrt(2 sigma) sqrt(||Q||_F^2 + 2||b||^2) + sigma * max(lambda_max(Q), 0)."""
    Q = (Q + Q.conj().T) / 2
    lam_max = np.linalg.eigvalsh(Q)[-1] if Q.size else 0.0
    fro = np.sqrt(np.sum(np.abs(Q) ** 2) + 2 * np.sum(np.abs(b) ** 2))
    return float(np.real(np.trace(Q)) + np.sqrt(2 * sigma) * fro + sigma * max(lam_max, 0.0))


def _shared_terms(prog: ConicProgram, W: Herm, S: np.ndarray):
    """Q, xi and beta >= ||Q||_F for one error square root, created once per program.

    Blocks sharing S have the same Q, so a single ``xi I - Q >= 0`` and a
    single Frobenius bound serve all of them: each block would pick the
    smallest admissible xi anyway, and ``||(vec Q, sqrt2 b)|| <= alpha`` is
    equivalent to ``||(beta, sqrt2 b)|| <= alpha`` with ``||vec Q|| <= beta``.
    """
    cache = prog.shared_terms
    for S_seen, W_seen, terms in cache:
        if W_seen is W and S_seen.shape == S.shape and np.array_equal(S_seen, S):
            return terms
    j = len(cache)
    Q = W.congruence(S)  # S Hermitian, so S^H W S
    xi = prog.scalar(f"xi[{j}]")
    beta = prog.scalar(f"beta[{j}]")
    prog.add_psd(Herm.scaled_identity(xi, W.n) - Q, f"lmi[{j}]")
    prog.add_nonneg(xi, f"xi[{j}]>=0")
    prog.add_soc(beta, Q.hvec(), f"fro[{j}]")
    terms = (Q, xi, beta)
    cache.append((S, W, terms))
    return terms


def _emit(prog: ConicProgram, W: Herm, S: np.ndarray, h_hat: np.ndarray, delta: Lin, sigma: float, tag: str):
    """Append the deterministic surrogate for one error model.

    With a zero error covariance Q and b vanish identically and only
    ``delta >= 0`` remains.
    """
    if not np.any(S):
        prog.add_nonneg(delta, f"{tag}:perfect")
        return BernsteinBlock(W.congruence(S), W.matvec(S, h_hat), delta, sigma, None, None, tag)
    Q, xi, beta = _shared_terms(prog, W, S)
    b = W.matvec(S, h_hat)
    alpha = prog.scalar(f"alpha[{tag}]")
    prog.add_nonneg(delta - Q.trace() - np.sqrt(2 * sigma) * alpha - sigma * xi, f"{tag}:bernstein")
    prog.add_soc(alpha, Lin.stack([beta, np.sqrt(2.0) * b]), f"{tag}:soc")
    return BernsteinBlock(Q, b, delta, sigma, alpha, xi, tag)


def _check_dims(prog_n: int, channels: ChannelSet):
    if channels.n_antennas != prog_n:
        raise ValueError(f"channel dimension {channels.n_antennas} does not match W of size {prog_n}")


def uniform_su_noise(channels: ChannelSet) -> bool:
    return bool(np.allclose(channels.noise_su, channels.noise_su[0]))


def eve_outage_blocks(prog: ConicProgram, W: Herm, channels: ChannelSet, rate: float, p_out2: float, taus=None):
    """Secrecy-outage surrogate for every Eve plus the tau coupling.

    ``taus`` is a single scalar for uniform SU noise (one coupling per SU,
    ``tau <= h_m^H W h_m + sigma_m^2``); with heterogeneous noise one tau
    per SU is used and the Eve blocks are emitted per (SU, Eve) pair.
    Returns ``(blocks, taus)``.
    """
    _check_dims(W.n, channels)
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    sigma = outage_sigma(p_out2)
    uniform = uniform_su_noise(channels)
    if taus is None:
        taus = [prog.scalar("tau")] if uniform else [prog.scalar(f"tau[{m}]") for m in range(channels.M)]
    su_pairs = [(0, channels.noise_su[0])] if uniform else list(enumerate(channels.noise_su))
    for m, h in enumerate(channels.su):
        t = taus[0] if uniform else taus[m]
        prog.add_nonneg(W.quad(h) + channels.noise_su[m] - t, f"tau<=su[{m}]")

    blocks = []
    for k, (h_hat, err) in enumerate(zip(channels.eve_est, channels.eve_err)):
        s2e = channels.noise_eve[k]
        for ti, s2m in su_pairs:
            delta = (s2e / s2m) * 2.0 ** (-rate) * taus[ti] - W.quad(h_hat) - s2e
            tag = f"eve[{k}]" if uniform else f"eve[{k}],su[{ti}]"
            blocks.append(_emit(prog, W, err.sqrt_cov, h_hat, delta, sigma, tag))
    return blocks, taus


def pu_outage_blocks(prog: ConicProgram, W: Herm, channels: ChannelSet, i_th: float, p_out1: float):
    """Interference-outage surrogate, one block group per PU."""
    _check_dims(W.n, channels)
    if i_th <= 0:
        raise ValueError("interference threshold must be positive (linear scale)")
    sigma = outage_sigma(p_out1)
    blocks = []
    for q, (h_hat, err) in enumerate(zip(channels.pu_est, channels.pu_err)):
        delta = i_th - W.quad(h_hat)
        blocks.append(_emit(prog, W, err.sqrt_cov, h_hat, delta, sigma, f"pu[{q}]"))
    return blocks


# ---------------------------------------------------------------------------
# evaluation of the surrogates at a fixed W


def eve_leakage_bound(channels: ChannelSet, W: np.ndarray, p_out2: float) -> np.ndarray:
    """Per-Eve deterministic bound on h_e^H W h_e + sigma_e^2 holding w.p. >= 1 - p_out2."""
    sigma = outage_sigma(p_out2)
    out = []
    for k, (h, err) in enumerate(zip(channels.eve_est, channels.eve_err)):
        S = err.sqrt_cov
        nominal = np.real(np.vdot(h, W @ h)) + channels.noise_eve[k]
        out.append(nominal + (bernstein_margin(S @ W @ S, S @ W @ h, sigma) if np.any(S) else 0.0))
    return np.array(out)


def interference_bound(channels: ChannelSet, W: np.ndarray, p_out1: float) -> np.ndarray:
    """Per-PU deterministic bound on h_q^H W h_q holding w.p. >= 1 - p_out1."""
    sigma = outage_sigma(p_out1)
    out = []
    for h, err in zip(channels.pu_est, channels.pu_err):
        S = err.sqrt_cov
        nominal = np.real(np.vdot(h, W @ h))
        out.append(nominal + (bernstein_margin(S @ W @ S, S @ W @ h, sigma) if np.any(S) else 0.0))
    return np.array(out)


def certified_rate(channels: ChannelSet, W: np.ndarray, p_out2: float) -> float:
    """Largest R for which the secrecy surrogate holds for every (SU, Eve) pair.

    With zero error covariances this is exactly the minimum secrecy rate.
    """
    su_power = np.array([np.real(np.vdot(h, W @ h)) for h in channels.su]) + channels.noise_su
    if channels.K == 0:
        return float(np.log2(su_power / channels.noise_su).min())
    leak = eve_leakage_bound(channels, W, p_out2)
    ratio = (su_power[:, None] / channels.noise_su[:, None]) / (leak[None, :] / channels.noise_eve[None, :])
    return float(max(0.0, np.log2(ratio.min())))
