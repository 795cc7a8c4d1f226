"""Scenario files: flat YAML with unit-suffixed keys, defaults, validation.

Angles are degrees, gains/thresholds dB (``*_db``/``*_dbw``/``*_dbi``);
everything is converted to radians and linear scale on load.
"""
from __future__ import annotations

import dataclasses
import json
import zlib
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .antenna import ArrayGeometry, DirectivityParams, Direction, direction_from_mask_angles, mask_angles
from .channel import ChannelSet, CsiErrorModel, PathComponent, UserChannelSpec, synthesize_channel
from .conic import SolverOptions
from .optimizer import AlgorithmConfig, Targets


class ScenarioError(ValueError):
    """Parse or validation failure; ``field`` names the offending key."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message}" + (f" ({', '.join(where)})" if where else ""))
        self.field = field
        self.line = line


@dataclass
class ScenarioFile:
    # array and mask
    n1: int = 2
    n2: int = 4
    spacing_wavelengths: float = 0.5
    g_max_dbi: float | None = None  # None -> 10*log10(N_h)
    sll_db: float = 20.0
    phi_a_3db_deg: float = 70.0
    phi_e_3db_deg: float = 15.0
    directivity_enabled: bool = True
    # users, [theta_deg, phi_deg] each; counts default to the list lengths
    n_su: int | None = None
    n_eve: int | None = None
    n_pu: int | None = None
    su_directions_deg: list = field(default_factory=list)
    eve_directions_deg: list = field(default_factory=list)
    pu_directions_deg: list = field(default_factory=list)
    # path model
    los_gain_db: float = 10.0
    nlos_paths: int = 2
    nlos_gap_db_min: float = 5.0
    nlos_gap_db_max: float = 10.0
    nlos_weaker_than_los: bool = True
    nlos_spread_deg: float = 5.0  # NLoS departures scattered in mask angles around the LoS
    # requirements
    gamma_th_db: float = 15.0
    i_th_db: float = -20.0
    p_out_interference: float = 0.1
    p_out_secrecy: float = 0.1
    noise_su_dbw: float = -20.0
    noise_eve_dbw: float = -20.0
    power_dbw: float = 0.0
    power_sweep_db: str | None = None  # "lo:hi:step"
    # CSI error: eps = eps_*_rel * mean ||h_hat||^2 / N_h unless eps_* given
    eps_h_rel: float = 0.01
    eps_g_rel: float = 0.01
    eps_h: float | None = None
    eps_g: float | None = None
    # algorithm
    eps1_bps_hz: float = 1e-3
    eps2_rel: float = 1e-6
    eta0: float = 1.0
    r_low_bps_hz: float = 0.0
    r_high_bps_hz: float | None = None
    max_outer: int = 60
    max_inner: int = 40
    solver_feas_tol: float = 1e-7
    solver_gap_tol: float = 1e-7
    solver_max_iter: int = 200
    # evaluation
    mc_draws: int = 1000
    histogram_bin_db: float = 1.0
    sdr_candidates: int = 500
    seed: int = 0

    def __post_init__(self):
        self.validate()
        self.n_su = len(self.su_directions_deg)
        self.n_eve = len(self.eve_directions_deg)
        self.n_pu = len(self.pu_directions_deg)

    # -- validation ------------------------------------------------------
    def validate(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ScenarioError("array dimensions must be >= 1", "n1/n2")
        if not self.su_directions_deg:
            raise ScenarioError("at least one SU direction is required", "su_directions_deg")
        for name in ("su_directions_deg", "eve_directions_deg", "pu_directions_deg"):
            count_name = "n_" + name.split("_")[0]
            count = getattr(self, count_name)
            if count is not None and count != len(getattr(self, name)):
                raise ScenarioError(f"{count_name}={count} but {len(getattr(self, name))} directions given", count_name)
            for d in getattr(self, name):
                if len(d) != 2:
                    raise ScenarioError("each direction must be [theta_deg, phi_deg]", name)
                if not (0 <= d[0] <= 180 and -180 <= d[1] <= 180):
                    raise ScenarioError(f"direction {d} outside theta in [0,180], phi in [-180,180]", name)
        for name in ("p_out_interference", "p_out_secrecy"):
            p = getattr(self, name)
            if not 0 < p < 1:
                raise ScenarioError(f"outage probability must lie in (0, 1), got {p}", name)
        if self.nlos_paths < 0:
            raise ScenarioError("nlos_paths must be >= 0", "nlos_paths")
        if self.nlos_gap_db_min > self.nlos_gap_db_max:
            raise ScenarioError("nlos_gap_db_min exceeds nlos_gap_db_max", "nlos_gap_db_min")
        if self.sll_db <= 0:
            raise ScenarioError("side-lobe level must be positive", "sll_db")
        for name in ("phi_a_3db_deg", "phi_e_3db_deg"):
            if not 0 < getattr(self, name) < 180:
                raise ScenarioError("beamwidth must lie in (0, 180) degrees", name)
        for name in ("eps_h_rel", "eps_g_rel"):
            if getattr(self, name) < 0:
                raise ScenarioError("CSI error scale must be nonnegative", name)
        for name in ("eps_h", "eps_g"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ScenarioError("CSI error scale must be nonnegative", name)
        if self.spacing_wavelengths <= 0:
            raise ScenarioError("spacing must be positive", "spacing_wavelengths")
        if self.eps1_bps_hz <= 0 or self.eps2_rel <= 0 or self.eta0 <= 0:
            raise ScenarioError("algorithm tolerances must be positive", "eps1_bps_hz/eps2_rel/eta0")
        if self.mc_draws < 1:
            raise ScenarioError("mc_draws must be >= 1", "mc_draws")
        if self.power_sweep_db is not None:
            self.sweep_powers_db()

    # -- derived objects -------------------------------------------------
    @property
    def n_elements(self) -> int:
        return self.n1 * self.n2

    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(self.n1, self.n2, 1.0, self.spacing_wavelengths, self.spacing_wavelengths)

    def directivity(self) -> DirectivityParams:
        geom = self.geometry()
        g_max = 10 * np.log10(geom.n_elements) if self.g_max_dbi is None else self.g_max_dbi
        return DirectivityParams(g_max, self.sll_db, self.phi_a_3db_deg, self.phi_e_3db_deg, self.directivity_enabled)

    def targets(self, power_dbw: float | None = None) -> Targets:
        p = self.power_dbw if power_dbw is None else power_dbw
        return Targets(
            gamma_th=db_to_lin(self.gamma_th_db),
            i_th=db_to_lin(self.i_th_db),
            power=np.full(self.n_elements, db_to_lin(p)),
            p_out_interference=self.p_out_interference,
            p_out_secrecy=self.p_out_secrecy,
        )

    def algorithm(self) -> AlgorithmConfig:
        return AlgorithmConfig(
            eps1=self.eps1_bps_hz,
            eps2=self.eps2_rel,
            eta0=self.eta0,
            r_low=self.r_low_bps_hz,
            r_high=self.r_high_bps_hz,
            max_outer=self.max_outer,
            max_inner=self.max_inner,
            solver=SolverOptions(self.solver_feas_tol, self.solver_gap_tol, self.solver_max_iter),
        )

    def sweep_powers_db(self) -> np.ndarray:
        if self.power_sweep_db is None:
            return np.array([self.power_dbw])
        return parse_sweep(self.power_sweep_db, "power_sweep_db")

    def user_specs(self) -> list[UserChannelSpec]:
        """LoS + NLoS path specs for every user, SUs first, then Eves, PUs."""
        rng = derived_rng(self.seed, "channel-synthesis")
        rho0 = np.sqrt(db_to_lin(self.los_gain_db))
        out = []
        for role, dirs in (("SU", self.su_directions_deg), ("Eve", self.eve_directions_deg), ("PU", self.pu_directions_deg)):
            for theta, phi in dirs:
                los = PathComponent(complex(rho0), Direction.from_degrees(theta, phi))
                nlos = []
                for _ in range(self.nlos_paths):
                    gap = rng.uniform(self.nlos_gap_db_min, self.nlos_gap_db_max)
                    sign = -1.0 if self.nlos_weaker_than_los else 1.0
                    mag = rho0 * np.sqrt(db_to_lin(sign * gap))
                    phase = rng.uniform(-np.pi, np.pi)
                    nlos.append(PathComponent(mag * np.exp(1j * phase), self._scatter(los.direction, rng)))
                out.append(UserChannelSpec(los, tuple(nlos), role))
        return out

    def _scatter(self, d: Direction, rng) -> Direction:
        psi_a, psi_e = mask_angles(d)
        lim = np.deg2rad(89.0)
        spread = np.deg2rad(self.nlos_spread_deg)
        a = np.clip(psi_a + rng.uniform(-1, 1) * spread, -lim, lim)
        e = np.clip(psi_e + rng.uniform(-1, 1) * spread, -lim, lim)
        out = direction_from_mask_angles(a, e)
        if np.cos(d.phi) * np.sin(d.theta) < 0:  # back hemisphere: same mask angles at the antipode
            out = Direction(np.pi - out.theta, float(np.angle(-np.exp(1j * out.phi))))
        return out

    def channels(self) -> ChannelSet:
        geom, params = self.geometry(), self.directivity()
        specs = self.user_specs()
        hs = np.array([synthesize_channel(geom, params, s) for s in specs])
        M, K = len(self.su_directions_deg), len(self.eve_directions_deg)
        su, eve, pu = hs[:M], hs[M : M + K], hs[M + K :]
        n = geom.n_elements
        eps_h = self.eps_h if self.eps_h is not None else self.eps_h_rel * _mean_power(eve, n)
        eps_g = self.eps_g if self.eps_g is not None else self.eps_g_rel * _mean_power(pu, n)
        return ChannelSet(
            su=su,
            eve_est=eve.reshape(-1, n),
            pu_est=pu.reshape(-1, n),
            eve_err=[CsiErrorModel.scaled_identity(eps_h, n) for _ in range(K)],
            pu_err=[CsiErrorModel.scaled_identity(eps_g, n) for _ in range(len(pu))],
            noise_su=np.full(M, db_to_lin(self.noise_su_dbw)),
            noise_eve=np.full(K, db_to_lin(self.noise_eve_dbw)),
        )

    def resolved(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **kw) -> "ScenarioFile":
        return dataclasses.replace(self, **kw)


def _mean_power(hs: np.ndarray, n: int) -> float:
    if hs.size == 0:
        return 0.0
    return float(np.mean(np.sum(np.abs(hs) ** 2, axis=1)) / n)


def db_to_lin(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0) if np.ndim(x_db) else 10.0 ** (float(x_db) / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(x)


def parse_sweep(text: str, name: str = "power_sweep") -> np.ndarray:
    """'lo:hi:step' in dB, inclusive of hi."""
    try:
        lo, hi, step = (float(t) for t in str(text).split(":"))
    except ValueError:
        raise ScenarioError(f"expected 'lo:hi:step', got {text!r}", name) from None
    if step <= 0 or hi < lo:
        raise ScenarioError("sweep needs step > 0 and hi >= lo", name)
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def derived_rng(master_seed: int, path: str, *extra: int) -> np.random.Generator:
    """Generator for a named derivation path (e.g. 'csi-error') under a master seed."""
    return np.random.default_rng(derived_seed(master_seed, path, *extra))


def derived_seed(master_seed: int, path: str, *extra: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed), zlib.crc32(path.encode()), *map(int, extra)])


_FIELDS = {f.name: f.type for f in fields(ScenarioFile)}


def _coerce(name: str, value, ann: str, line):
    """Check one value against its annotated type; ints are accepted for floats."""
    optional = ann.endswith("| None")
    base = ann.replace("| None", "").strip()
    if value is None:
        if optional:
            return None
        raise ScenarioError("value may not be empty", name, line)
    ok = {
        "int": isinstance(value, int) and not isinstance(value, bool),
        "float": isinstance(value, (int, float)) and not isinstance(value, bool),
        "bool": isinstance(value, bool),
        "str": isinstance(value, str),
        "list": isinstance(value, list),
    }.get(base, True)
    if not ok:
        raise ScenarioError(f"expected {base}, got {type(value).__name__} {value!r}", name, line)
    return float(value) if base == "float" else value


def scenario_from_dict(data: dict, lines: dict | None = None) -> ScenarioFile:
    lines = lines or {}
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ScenarioError(f"unknown key {unknown[0]!r}", unknown[0], lines.get(unknown[0]))
    data = {k: _coerce(k, v, _FIELDS[k], lines.get(k)) for k, v in data.items()}
    try:
        return ScenarioFile(**data)
    except ScenarioError as exc:
        if exc.line is None and exc.field in lines:
            raise ScenarioError(str(exc).split(" (field")[0], exc.field, lines[exc.field]) from None
        raise
    except TypeError as exc:
        raise ScenarioError(str(exc)) from None


def load_scenario(path) -> ScenarioFile:
    """Parse a YAML scenario, or the ``scenario`` section of a run manifest (.json)."""
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"scenario file not found: {path}")
    text = path.read_text()
    if path.suffix == ".json":
        data = json.loads(text)
        return scenario_from_dict(data.get("scenario", data))
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioError(f"parse error: {getattr(exc, 'problem', exc)}", line=mark.line + 1 if mark else None) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioError("scenario file must be a flat mapping of key: value")
    lines = {}
    if node is not None and hasattr(node, "value"):
        for k, _ in node.value:
            lines[k.value] = k.start_mark.line + 1
    return scenario_from_dict(data, lines)


def bundled_scenario_path(name: str = "default_scenario") -> Path:
    return Path(str(resources.files("securebf") / "scenarios" / f"{name}.yaml"))


def default_scenario() -> ScenarioFile:
    return load_scenario(bundled_scenario_path("default_scenario"))


def random_scenario(
    seed: int,
    n1: int = 2,
    n2: int = 4,
    n_su: int = 2,
    n_eve: int = 3,
    n_pu: int = 2,
    su_psi_a_deg: tuple = (5.0, 40.0),
    su_psi_e_deg: float = 6.0,
    other_psi_a_deg: tuple = (5.0, 60.0),
    other_psi_e_deg: tuple = (25.0, 75.0),
    **overrides,
) -> ScenarioFile:
    """Random placement in mask-angle coordinates.

    SUs sit inside the main lobe (|psi_e| small), Eves and PUs in the
    side-lobe region, so the mask separates intended from unintended
    users by roughly the side-lobe level. Signs of both angles are random.
    """
    rng = derived_rng(seed, "placement")

    def draw(a_rng, e_lo, e_hi):
        psi_a = rng.choice([-1.0, 1.0]) * rng.uniform(*a_rng)
        psi_e = rng.choice([-1.0, 1.0]) * rng.uniform(e_lo, e_hi)
        d = direction_from_mask_angles(np.deg2rad(psi_a), np.deg2rad(psi_e))
        return [round(float(np.rad2deg(d.theta)), 4), round(float(np.rad2deg(d.phi)), 4)]

    sus = [draw(su_psi_a_deg, 0.0, su_psi_e_deg) for _ in range(n_su)]
    eves = [draw(other_psi_a_deg, *other_psi_e_deg) for _ in range(n_eve)]
    pus = [draw(other_psi_a_deg, *other_psi_e_deg) for _ in range(n_pu)]
    base = dict(n1=n1, n2=n2, su_directions_deg=sus, eve_directions_deg=eves, pu_directions_deg=pus, seed=seed)
    base.update(overrides)
    return ScenarioFile(**base)
