"""SNR, rates, secrecy rate and interference for a given beamformer."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def snr(h, w, sigma2: float):
    if sigma2 <= 0:
        raise ValueError(f"noise variance must be positive, got {sigma2}")
    return np.abs(np.vdot(h, w)) ** 2 / sigma2


def interference(h_q, w):
    return np.abs(np.vdot(h_q, w)) ** 2


def rate(gamma):
    return np.log2(1.0 + np.asarray(gamma))


def secrecy_rate(gamma_su: float, gamma_eves) -> float:
    """[log2(1 + gamma_m) - max_k log2(1 + gamma_k)]^+ ; no Eves means the plain rate."""
    eves = np.atleast_1d(np.asarray(gamma_eves, dtype=float))
    best_eve = rate(eves).max() if eves.size else 0.0
    return float(max(0.0, rate(gamma_su) - best_eve))


def quad_form(h, W) -> float:
    """Real part of h^H W h."""
    return float(np.real(np.vdot(h, W @ h)))


@dataclass
class LinkBudget:
    snr_su: np.ndarray
    snr_eve: np.ndarray
    rate_su: np.ndarray
    rate_eve: np.ndarray
    asr: np.ndarray
    interference_pu: np.ndarray


def link_budget(su, eve, pu, w, noise_su, noise_eve) -> LinkBudget:
    """Evaluate all links for channel rows ``su``, ``eve``, ``pu``."""
    su, eve, pu = (np.asarray(x, dtype=complex).reshape(-1, len(w)) for x in (su, eve, pu))
    g_su = np.abs(su.conj() @ w) ** 2 / np.asarray(noise_su)
    g_eve = np.abs(eve.conj() @ w) ** 2 / np.asarray(noise_eve) if len(eve) else np.zeros(0)
    r_su, r_eve = rate(g_su), rate(g_eve)
    best = r_eve.max() if r_eve.size else 0.0
    return LinkBudget(
        snr_su=g_su,
        snr_eve=g_eve,
        rate_su=r_su,
        rate_eve=r_eve,
        asr=np.maximum(r_su - best, 0.0),
        interference_pu=np.abs(pu.conj() @ w) ** 2,
    )


def min_asr(channels, w, eve=None) -> float:
    """Worst secrecy rate over SUs against all Eves.

    ``eve`` overrides the Eve channels (true or sampled); by default the
    estimates in ``channels`` are used.
    """
    eve = channels.eve_est if eve is None else eve
    lb = link_budget(channels.su, eve, np.zeros((0, len(w))), w, channels.noise_su, channels.noise_eve)
    return float(lb.asr.min())
