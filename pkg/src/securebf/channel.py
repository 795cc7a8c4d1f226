"""mmWave LoS/NLoS channel synthesis and Gaussian CSI errors."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .antenna import (
    ArrayGeometry,
    DirectivityParams,
    Direction,
    directivity_linear,
    steering_vector,
)


class NotPSDError(ValueError):
    def __init__(self, min_eig: float):
        super().__init__(f"covariance is not positive semidefinite (min eigenvalue {min_eig:.3e})")
        self.min_eig = min_eig


@dataclass(frozen=True)
class PathComponent:
    gain: complex
    direction: Direction


@dataclass(frozen=True)
class UserChannelSpec:
    los: PathComponent
    nlos: tuple[PathComponent, ...] = ()
    role: str = "SU"

    def __post_init__(self):
        if self.role not in ("SU", "Eve", "PU"):
            raise ValueError(f"unknown role {self.role!r}")


def synthesize_channel(geom: ArrayGeometry, params: DirectivityParams, spec: UserChannelSpec) -> np.ndarray:
    """LoS path plus sqrt(1/L)-weighted NLoS sum, each path scaled by sqrt(g)."""

    def path(p: PathComponent):
        g = directivity_linear(params, p.direction.theta, p.direction.phi)
        return np.sqrt(g) * p.gain * steering_vector(geom, p.direction)

    h = path(spec.los)
    if spec.nlos:
        h = h + np.sqrt(1.0 / len(spec.nlos)) * sum(path(p) for p in spec.nlos)
    return h


def matrix_sqrt_psd(E: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Hermitian square root via eigendecomposition.

    Eigenvalues in [-tol*scale, 0) are clamped to zero; anything more
    negative raises ``NotPSDError``.
    """
    E = np.asarray(E)
    E = (E + E.conj().T) / 2
    lam, U = np.linalg.eigh(E)
    scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    if lam.size and lam.min() < -tol * scale:
        raise NotPSDError(float(lam.min()))
    lam = np.clip(lam, 0.0, None)
    return (U * np.sqrt(lam)) @ U.conj().T


@dataclass
class CsiErrorModel:
    """Covariance of the estimation error, Delta h ~ CN(0, E)."""

    covariance: np.ndarray
    sqrt_cov: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        E = np.asarray(self.covariance, dtype=complex)
        if E.ndim != 2 or E.shape[0] != E.shape[1]:
            raise ValueError("covariance must be square")
        if not np.allclose(E, E.conj().T, atol=1e-10 * max(1.0, np.abs(E).max())):
            raise ValueError("covariance must be Hermitian")
        self.covariance = (E + E.conj().T) / 2
        self.sqrt_cov = matrix_sqrt_psd(self.covariance)

    @classmethod
    def scaled_identity(cls, eps: float, n: int) -> "CsiErrorModel":
        if eps < 0:
            raise NotPSDError(eps)
        return cls(eps * np.eye(n))

    @property
    def size(self) -> int:
        return self.covariance.shape[0]

    @property
    def is_zero(self) -> bool:
        return not np.any(self.covariance)


def standard_complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) entries; real and imaginary parts drawn interleaved."""
    z = rng.standard_normal(tuple(np.atleast_1d(shape)) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2)


def sample_csi_error(model: CsiErrorModel, rng_seed, n_draws: int | None = None) -> np.ndarray:
    """E^{1/2} v with v ~ CN(0, I); shape (N,) or (n_draws, N)."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    shape = (model.size,) if n_draws is None else (n_draws, model.size)
    v = standard_complex_normal(rng, shape)
    # E^{1/2} is Hermitian, so row-vector form uses its transpose
    return v @ model.sqrt_cov.T


@dataclass
class ChannelSet:
    """Channels seen by the transmitter.

    SU channels are exact; Eve and PU channels are estimates with an
    attached error model.
    """

    su: np.ndarray  # (M, N)
    eve_est: np.ndarray  # (K, N)
    pu_est: np.ndarray  # (Q, N)
    eve_err: list[CsiErrorModel]
    pu_err: list[CsiErrorModel]
    noise_su: np.ndarray  # (M,)
    noise_eve: np.ndarray  # (K,)

    def __post_init__(self):
        self.su = np.atleast_2d(np.asarray(self.su, dtype=complex))
        n = self.su.shape[1]
        self.eve_est = np.asarray(self.eve_est, dtype=complex).reshape(-1, n)
        self.pu_est = np.asarray(self.pu_est, dtype=complex).reshape(-1, n)
        self.noise_su = np.broadcast_to(np.asarray(self.noise_su, dtype=float), (self.M,)).copy()
        self.noise_eve = np.broadcast_to(np.asarray(self.noise_eve, dtype=float), (self.K,)).copy()
        if len(self.eve_err) != self.K or len(self.pu_err) != self.Q:
            raise ValueError("one error model per Eve and per PU is required")
        for e in list(self.eve_err) + list(self.pu_err):
            if e.size != n:
                raise ValueError(f"error covariance size {e.size} does not match N_h={n}")
        if np.any(self.noise_su <= 0) or np.any(self.noise_eve <= 0):
            raise ValueError("noise variances must be positive")

    @property
    def n_antennas(self) -> int:
        return self.su.shape[1]

    @property
    def M(self) -> int:
        return self.su.shape[0]

    @property
    def K(self) -> int:
        return self.eve_est.shape[0]

    @property
    def Q(self) -> int:
        return self.pu_est.shape[0]

    def with_perfect_csi(self) -> "ChannelSet":
        """Same estimates, zero error covariances."""
        n = self.n_antennas
        return ChannelSet(
            self.su,
            self.eve_est,
            self.pu_est,
            [CsiErrorModel(np.zeros((n, n))) for _ in range(self.K)],
            [CsiErrorModel(np.zeros((n, n))) for _ in range(self.Q)],
            self.noise_su,
            self.noise_eve,
        )

    def sample_true(self, rng: np.random.Generator):
        """One realization (h_eve, h_pu) = estimate + sampled error."""
        eve = np.array([h + sample_csi_error(e, rng) for h, e in zip(self.eve_est, self.eve_err)]).reshape(self.K, -1)
        pu = np.array([h + sample_csi_error(e, rng) for h, e in zip(self.pu_est, self.pu_err)]).reshape(self.Q, -1)
        return eve, pu
