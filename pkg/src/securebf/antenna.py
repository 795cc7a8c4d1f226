"""UPA steering vectors, ITU directivity mask and beampattern grids.

Angles are radians everywhere in this module. ``theta`` is the pitching
angle measured from the Z axis, ``phi`` the azimuth in the X-Y plane.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# arguments below this magnitude are treated as exact zeros when resolving
# the cot/tan singularities of the relative patterns
_ZERO = 1e-12


@dataclass(frozen=True)
class ArrayGeometry:
    n1: int
    n2: int
    wavelength: float = 1.0
    d1: float | None = None
    d2: float | None = None

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError(f"element counts must be >= 1, got {self.n1}x{self.n2}")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        # half-wavelength spacing unless overridden
        if self.d1 is None:
            object.__setattr__(self, "d1", self.wavelength / 2)
        if self.d2 is None:
            object.__setattr__(self, "d2", self.wavelength / 2)
        if self.d1 <= 0 or self.d2 <= 0:
            raise ValueError("element spacings must be positive")

    @property
    def n_elements(self) -> int:
        return self.n1 * self.n2

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength


@dataclass(frozen=True)
class DirectivityParams:
    """ITU-style mask. Angles in degrees, gains in dB."""

    g_max_db: float
    sll_db: float = 20.0
    phi_a_3db_deg: float = 70.0
    phi_e_3db_deg: float = 15.0
    enabled: bool = True

    def __post_init__(self):
        if self.sll_db <= 0:
            raise ValueError("side-lobe level must be positive (dB)")
        for bw in (self.phi_a_3db_deg, self.phi_e_3db_deg):
            if not 0 < bw < 180:
                raise ValueError(f"3 dB beamwidth must lie in (0, 180) degrees, got {bw}")

    @classmethod
    def for_array(cls, geom: ArrayGeometry, **kw) -> "DirectivityParams":
        """Mask whose peak gain defaults to the aperture gain 10*log10(N_h)."""
        kw.setdefault("g_max_db", 10 * np.log10(geom.n_elements))
        return cls(**kw)

    @classmethod
    def isotropic(cls) -> "DirectivityParams":
        return cls(g_max_db=0.0, enabled=False)


@dataclass(frozen=True)
class Direction:
    theta: float
    phi: float

    def __post_init__(self):
        if not -1e-12 <= self.theta <= np.pi + 1e-12:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if not -np.pi - 1e-12 <= self.phi <= np.pi + 1e-12:
            raise ValueError(f"phi must lie in [-pi, pi], got {self.phi}")

    @classmethod
    def from_degrees(cls, theta_deg: float, phi_deg: float) -> "Direction":
        return cls(np.deg2rad(theta_deg), np.deg2rad(phi_deg))


def axis_factors(geom: ArrayGeometry, theta, phi):
    """X-axis and Y-axis steering factors; broadcast over leading angle dims."""
    theta = np.asarray(theta, dtype=float)[..., None]
    phi = np.asarray(phi, dtype=float)[..., None]
    k = geom.wavenumber
    a_a = np.exp(1j * k * geom.d1 * np.arange(geom.n1) * np.sin(theta) * np.cos(phi))
    a_e = np.exp(1j * k * geom.d2 * np.arange(geom.n2) * np.sin(theta) * np.sin(phi))
    return a_a, a_e


def steering_vector(geom: ArrayGeometry, direction: Direction) -> np.ndarray:
    """a_a(theta, phi) kron a_e(theta, phi), length n1*n2."""
    a_a, a_e = axis_factors(geom, direction.theta, direction.phi)
    return np.kron(a_a, a_e)


def steering_matrix(geom: ArrayGeometry, theta, phi) -> np.ndarray:
    """Vectorized steering vectors, shape ``theta.shape + (N_h,)``."""
    a_a, a_e = axis_factors(geom, theta, phi)
    out = a_a[..., :, None] * a_e[..., None, :]
    return out.reshape(out.shape[:-2] + (geom.n_elements,))


def _abs_arctan_ratio(num, den, zero_over_zero):
    # |arctan(num/den)| with num/den -> +-inf mapped to pi/2
    num = np.abs(num)
    den = np.abs(den)
    out = np.arctan2(num, den)
    both = (num < _ZERO) & (den < _ZERO)
    out = np.where(num < _ZERO, 0.0, out)
    out = np.where(den < _ZERO, np.pi / 2, out)
    return np.where(both, zero_over_zero, out)


def relative_patterns(params: DirectivityParams, theta, phi):
    """(g_a, g_e) in dB, each clamped at the side-lobe level.

    g_a uses arctan(cot(theta)/cos(phi)) and g_e uses arctan(tan(theta)*sin(phi)).
    Singular points take the limit along theta at fixed phi:
    an infinite argument gives |arctan| = pi/2; for g_a the 0/0 point
    (theta = pi/2, cos(phi) = 0) is infinite along that path, for g_e the
    0/0 point (theta = pi/2, sin(phi) = 0) is zero.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st, ct = np.sin(theta), np.cos(theta)
    ang_a = _abs_arctan_ratio(ct, st * np.cos(phi), zero_over_zero=np.pi / 2)
    ang_e = _abs_arctan_ratio(st * np.sin(phi), ct, zero_over_zero=0.0)
    bw_a = np.deg2rad(params.phi_a_3db_deg)
    bw_e = np.deg2rad(params.phi_e_3db_deg)
    g_a = np.minimum(12.0 * (ang_a / bw_a) ** 2, params.sll_db)
    g_e = np.minimum(12.0 * (ang_e / bw_e) ** 2, params.sll_db)
    return g_a, g_e


def mask_angles(direction: Direction) -> tuple[float, float]:
    """Signed (psi_a, psi_e): arctan(cot(theta)/cos(phi)) and arctan(tan(theta)*sin(phi)).

    These are the angles the mask penalizes; boresight is (0, 0).
    """
    x, y, z = _unit_vector(direction)
    psi_a = np.arctan2(z, x) if x >= 0 else np.arctan2(-z, -x)
    psi_e = np.arctan2(y, z) if z >= 0 else np.arctan2(-y, -z)
    return float(psi_a), float(psi_e)


def direction_from_mask_angles(psi_a: float, psi_e: float) -> Direction:
    """Front-hemisphere (x > 0) direction with the given signed mask angles.

    With psi_a = 0 the direction is boresight whatever psi_e is.
    """
    if not (abs(psi_a) < np.pi / 2 and abs(psi_e) < np.pi / 2):
        raise ValueError("mask angles must lie in (-90, 90) degrees")
    ta = np.tan(psi_a)
    v = np.array([1.0, ta * np.tan(psi_e), ta])
    x, y, z = v / np.linalg.norm(v)
    return Direction(float(np.arccos(np.clip(z, -1.0, 1.0))), float(np.arctan2(y, x)))


def _unit_vector(direction: Direction):
    st = np.sin(direction.theta)
    return st * np.cos(direction.phi), st * np.sin(direction.phi), np.cos(direction.theta)


def directivity_db(params: DirectivityParams, theta, phi):
    """G_max - min(g_a + g_e, SLL). Accepts scalars or arrays."""
    if not params.enabled:
        return np.zeros(np.broadcast(np.asarray(theta), np.asarray(phi)).shape) + params.g_max_db
    g_a, g_e = relative_patterns(params, theta, phi)
    return params.g_max_db - np.minimum(g_a + g_e, params.sll_db)


def directivity_linear(params: DirectivityParams, theta, phi):
    return 10.0 ** (np.asarray(directivity_db(params, theta, phi)) / 10.0)


@dataclass
class BeampatternGrid:
    theta: np.ndarray  # radians, shape (n_theta,)
    phi: np.ndarray  # radians, shape (n_phi,)
    gain_db: np.ndarray  # shape (n_theta, n_phi), max 0 dB

    def argmax_direction(self) -> Direction:
        i, j = np.unravel_index(np.argmax(self.gain_db), self.gain_db.shape)
        return Direction(float(self.theta[i]), float(self.phi[j]))


def beampattern_grid(
    geom: ArrayGeometry,
    params: DirectivityParams,
    w: np.ndarray,
    theta_steps: int = 181,
    phi_steps: int = 361,
    floor_db: float = -300.0,
) -> BeampatternGrid:
    """Normalized pattern 10*log10(g * |a^H w|^2) on a uniform (theta, phi) grid."""
    w = np.asarray(w, dtype=complex)
    if w.shape != (geom.n_elements,):
        raise ValueError(f"weight vector must have length {geom.n_elements}")
    if not np.any(np.abs(w) > 0):
        raise ValueError("beampattern of a zero weight vector is undefined")
    theta = np.linspace(0.0, np.pi, theta_steps)
    phi = np.linspace(-np.pi, np.pi, phi_steps)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    a = steering_matrix(geom, tt, pp)
    power = np.abs(a.conj() @ w) ** 2 * directivity_linear(params, tt, pp)
    with np.errstate(divide="ignore"):
        gain = 10 * np.log10(power / power.max())
    return BeampatternGrid(theta, phi, np.maximum(gain, floor_db))
