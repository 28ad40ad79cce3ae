"""Radiative-convective single-column environment.

A 17-level column driven by a grey-gas longwave scheme and a hard convective
adjustment. The agent's two actions are the uniform per-layer longwave
emissivity (0..1) and the critical lapse rate (5.5..9.8 K/km). Shortwave is
absorbed entirely at the surface through a transparent atmosphere.

Discretization: levels are layer centers; interfaces sit at midpoints between
neighbouring levels, with the bottom interface half a spacing below the lowest
level and the top interface at 0 hPa. Layer mass weights are interface
pressure differences, and the surface slab participates in the convective
energy bookkeeping with the equivalent weight C_s * g / (cp * 100) hPa.

The per-step energy budget is exact by construction: summed layer heating
equals (surface emission - OLR - back radiation), so column + surface enthalpy
changes by (absorbed shortwave - OLR) * dt each radiation substep, and the
convective adjustment conserves that enthalpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import BoxSpace, ClimateEnv

__all__ = [
    "PRESSURE_LEVELS_HPA", "RcePhysicsParams", "AtmosphericColumn", "ObservedProfile",
    "RceEnv", "grey_longwave_step", "convective_adjustment", "column_heights",
    "load_observed_profile", "default_observed_profile", "save_observed_profile",
    "export_profile_with_simulated", "standard_atmosphere_temperature",
    "ProfileFormatError", "mean_squared_profile_error",
]

# 1000..100 hPa in 60 hPa steps, then a refined 10 hPa top level.
PRESSURE_LEVELS_HPA = np.array(
    [1000., 940., 880., 820., 760., 700., 640., 580., 520., 460.,
     400., 340., 280., 220., 160., 100., 10.])

N_LEVELS = 17

TEMPERATURE_FLOOR = 100.0
TEMPERATURE_CEILING = 400.0


class ProfileFormatError(ValueError):
    """Observed-profile file failed validation."""


def _interface_pressures(levels: np.ndarray) -> np.ndarray:
    mids = (levels[:-1] + levels[1:]) / 2.0
    bottom = levels[0] + (levels[0] - levels[1]) / 2.0
    return np.concatenate([[bottom], mids, [0.0]])


@dataclass
class RcePhysicsParams:
    insolation: float = 120.0          # S0/4 of a dim sun: keeps the whole
                                       # action box inside (100, 400) K
    albedo: float = 0.3
    sigma: float = 5.670374419e-8      # Stefan-Boltzmann, W/m^2/K^4
    cp: float = 1004.0                 # J/kg/K
    g: float = 9.81                    # m/s^2
    r_gas: float = 287.0               # J/kg/K, dry air
    dt: float = 86400.0                # seconds per env step
    surface_heat_capacity: float = 4.2e6   # 1 m water-equivalent slab, J/m^2/K
    isothermal_init: float = 285.0     # K
    max_steps: int = 500
    pressure_levels: np.ndarray = field(
        default_factory=lambda: PRESSURE_LEVELS_HPA.copy())

    def __post_init__(self):
        self.pressure_levels = np.asarray(self.pressure_levels, dtype=np.float64)
        if self.pressure_levels.size != N_LEVELS:
            raise ValueError(f"need exactly {N_LEVELS} pressure levels")
        if not np.all(np.diff(self.pressure_levels) < 0):
            raise ValueError("pressure levels must be strictly decreasing")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @property
    def interfaces(self) -> np.ndarray:
        return _interface_pressures(self.pressure_levels)

    @property
    def layer_dp(self) -> np.ndarray:
        iface = self.interfaces
        return iface[:-1] - iface[1:]

    @property
    def surface_weight_hpa(self) -> float:
        """Surface slab expressed as an equivalent pressure thickness."""
        return self.surface_heat_capacity * self.g / (self.cp * 100.0)

    @property
    def absorbed_shortwave(self) -> float:
        return (1.0 - self.albedo) * self.insolation


@dataclass
class AtmosphericColumn:
    """17 layer temperatures plus the surface slab."""

    temperatures: np.ndarray
    surface_temperature: float
    params: RcePhysicsParams

    def __post_init__(self):
        self.temperatures = np.asarray(self.temperatures, dtype=np.float64)
        if self.temperatures.size != N_LEVELS:
            raise ValueError(f"need exactly {N_LEVELS} temperatures")

    def validate(self) -> None:
        temps = np.concatenate([self.temperatures, [self.surface_temperature]])
        if not np.all(np.isfinite(temps)):
            raise ValueError("non-finite temperature in column")
        if np.any(temps <= TEMPERATURE_FLOOR) or np.any(temps >= TEMPERATURE_CEILING):
            raise ValueError(
                f"temperature outside ({TEMPERATURE_FLOOR}, {TEMPERATURE_CEILING}) K: "
                f"range [{temps.min():.2f}, {temps.max():.2f}]")

    def copy(self) -> "AtmosphericColumn":
        return AtmosphericColumn(self.temperatures.copy(),
                                 self.surface_temperature, self.params)


@dataclass
class ObservedProfile:
    pressures: np.ndarray
    temperatures: np.ndarray
    source: str = "file"

    def __post_init__(self):
        self.pressures = np.asarray(self.pressures, dtype=np.float64)
        self.temperatures = np.asarray(self.temperatures, dtype=np.float64)


# -- radiation ------------------------------------------------------------------


def grey_longwave_step(column: AtmosphericColumn, emissivity: float):
    """Grey longwave fluxes and heating.

    Upward flux starts at sigma*Ts^4; every layer absorbs the fraction
    ``emissivity`` of incident longwave and emits emissivity*sigma*T^4 from
    both faces. Returns per-layer heating rates (K/s) and a diagnostics dict
    with the surface flux balance.
    """
    if not 0.0 <= emissivity <= 1.0:
        raise ValueError("emissivity must be in [0, 1]")
    p = column.params
    t = column.temperatures
    eps = emissivity
    emit = eps * p.sigma * t ** 4

    up = np.empty(N_LEVELS + 1)
    up[0] = p.sigma * column.surface_temperature ** 4
    for i in range(N_LEVELS):
        up[i + 1] = up[i] * (1.0 - eps) + emit[i]
    down = np.empty(N_LEVELS + 1)
    down[N_LEVELS] = 0.0
    for i in range(N_LEVELS - 1, -1, -1):
        down[i] = down[i + 1] * (1.0 - eps) + emit[i]

    absorbed = eps * (up[:N_LEVELS] + down[1:]) - 2.0 * emit
    heating = absorbed * p.g / (p.cp * column.params.layer_dp * 100.0)
    surface_net = p.absorbed_shortwave + down[0] - up[0]
    diagnostics = {
        "olr": up[N_LEVELS],
        "down_at_surface": down[0],
        "surface_upward": up[0],
        "surface_net_flux": surface_net,
        "absorbed_shortwave": p.absorbed_shortwave,
        "upward_fluxes": up,
        "downward_fluxes": down,
    }
    return heating, diagnostics


# -- geometry and convection -----------------------------------------------------


def _heights_from_lists(t: list[float], params: RcePhysicsParams) -> list[float]:
    iface = params.interfaces
    levels = params.pressure_levels
    r_over_g = params.r_gas / params.g
    z: list[float] = [0.0] * N_LEVELS
    z_bot = 0.0
    for i in range(N_LEVELS):
        scale = r_over_g * t[i]
        z[i] = z_bot + scale * math.log(iface[i] / levels[i])
        top = iface[i + 1]
        if top <= 0:
            top = levels[i] / 2.0  # top interface at 0 hPa: finite log span
        z_bot = z_bot + scale * math.log(iface[i] / top)
    return z


def column_heights(column: AtmosphericColumn) -> np.ndarray:
    """Hydrostatic heights of the layer centers above the surface (m).

    dz = -dp / (rho g) with rho = p / (R T), integrated interface to interface
    using each layer's current temperature.
    """
    return np.array(_heights_from_lists(column.temperatures.tolist(), column.params))


def convective_adjustment(column: AtmosphericColumn, critical_lapse: float,
                          max_sweeps: int = 100) -> AtmosphericColumn:
    """Relax every super-critical adjacent pair to the critical lapse rate.

    Pairs (surface, layer 0) and (layer i, layer i+1) are swept top-down until
    stable, conserving the mass-weighted mean temperature (surface included
    with its coupling weight) exactly per pair operation. Heights are
    recomputed between sweeps of the outer loop since they depend on the
    temperatures themselves.
    """
    if not 5.5 <= critical_lapse <= 9.8:
        raise ValueError("critical lapse rate outside [5.5, 9.8] K/km")
    p = column.params
    gamma = critical_lapse / 1000.0  # K/m
    t = column.temperatures.tolist()
    ts = float(column.surface_temperature)
    w = p.layer_dp.tolist()
    w_surf = p.surface_weight_hpa

    for _outer in range(max_sweeps):
        z = _heights_from_lists(t, p)
        adjusted_any = False
        for _sweep in range(max_sweeps):
            changed = False
            # top-down over (i, i+1), then the surface pair
            for i in range(N_LEVELS - 2, -1, -1):
                target_gap = gamma * (z[i + 1] - z[i])
                if t[i] - t[i + 1] > target_gap + 1e-12:
                    total = w[i] * t[i] + w[i + 1] * t[i + 1]
                    t[i] = (total + w[i + 1] * target_gap) / (w[i] + w[i + 1])
                    t[i + 1] = t[i] - target_gap
                    changed = True
            target_gap = gamma * z[0]
            if ts - t[0] > target_gap + 1e-12:
                total = w_surf * ts + w[0] * t[0]
                ts = (total + w[0] * target_gap) / (w_surf + w[0])
                t[0] = ts - target_gap
                changed = True
            if not changed:
                break
            adjusted_any = True
        if not adjusted_any:
            break
    return AtmosphericColumn(np.array(t), ts, p)


# -- observed profiles ------------------------------------------------------------

# International-standard-atmosphere constants for the bundled default profile.
_ISA_T0 = 288.15        # K at the surface
_ISA_P0 = 1013.25       # hPa at the surface
_ISA_LAPSE = 0.0065     # K/m
_ISA_TROPOPAUSE_Z = 11000.0  # m
_ISA_T_STRAT = 216.65   # K, isothermal above the tropopause
_ISA_G = 9.80665
_ISA_R = 287.053


def standard_atmosphere_temperature(pressure_hpa: float) -> float:
    """Temperature of the 6.5 K/km troposphere / isothermal stratosphere profile."""
    exponent = _ISA_R * _ISA_LAPSE / _ISA_G
    z = (_ISA_T0 / _ISA_LAPSE) * (1.0 - (pressure_hpa / _ISA_P0) ** exponent)
    if z >= _ISA_TROPOPAUSE_Z:
        return _ISA_T_STRAT
    return _ISA_T0 - _ISA_LAPSE * z


def default_observed_profile(levels: np.ndarray | None = None) -> ObservedProfile:
    levels = PRESSURE_LEVELS_HPA if levels is None else np.asarray(levels)
    temps = np.array([standard_atmosphere_temperature(p) for p in levels])
    return ObservedProfile(levels.copy(), temps, source="standard-atmosphere")


PROFILE_HEADER = "pressure_hPa,temperature_K"


def save_observed_profile(profile: ObservedProfile, path) -> None:
    lines = [PROFILE_HEADER]
    for p, t in zip(profile.pressures, profile.temperatures):
        lines.append(f"{float(p)!r},{float(t)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_observed_profile(path=None, levels: np.ndarray | None = None) -> ObservedProfile:
    """Load a 17-row profile file, or the analytic default when path is None."""
    grid = PRESSURE_LEVELS_HPA if levels is None else np.asarray(levels)
    if path is None:
        return default_observed_profile(grid)
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh.read().splitlines() if ln.strip()]
    if not lines or lines[0] != PROFILE_HEADER:
        raise ProfileFormatError(f"expected header {PROFILE_HEADER!r}")
    rows = lines[1:]
    if len(rows) != N_LEVELS:
        raise ProfileFormatError(f"expected {N_LEVELS} data rows, got {len(rows)}")
    pressures = np.empty(N_LEVELS)
    temps = np.empty(N_LEVELS)
    for i, row in enumerate(rows):
        parts = row.split(",")
        if len(parts) != 2:
            raise ProfileFormatError(f"row {i + 1}: expected 2 columns")
        try:
            pressures[i] = float(parts[0])
            temps[i] = float(parts[1])
        except ValueError as exc:
            raise ProfileFormatError(f"row {i + 1}: {exc}") from exc
    if not np.all(np.isfinite(pressures)) or not np.all(np.isfinite(temps)):
        raise ProfileFormatError("non-finite values in profile")
    if not np.allclose(pressures, grid, rtol=1e-9, atol=1e-9):
        raise ProfileFormatError("profile pressure grid does not match the column grid")
    return ObservedProfile(pressures, temps, source=str(path))


def export_profile_with_simulated(path, profile: ObservedProfile,
                                  simulated: np.ndarray) -> None:
    """Observed-profile format plus a simulated_K column."""
    simulated = np.asarray(simulated, dtype=np.float64)
    if simulated.size != N_LEVELS:
        raise ValueError("simulated profile must have 17 values")
    lines = [PROFILE_HEADER + ",simulated_K"]
    for p, t, s in zip(profile.pressures, profile.temperatures, simulated):
        lines.append(f"{float(p)!r},{float(t)!r},{float(s)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def mean_squared_profile_error(simulated: np.ndarray, observed: np.ndarray) -> float:
    diff = np.asarray(simulated) - np.asarray(observed)
    return float(np.mean(diff * diff))


# -- the environment ---------------------------------------------------------------

OBS_CENTER = 250.0
OBS_SCALE = 150.0


class RceEnv(ClimateEnv):
    """Column model with actions [emissivity, critical lapse rate]."""

    def __init__(self, params: RcePhysicsParams | None = None,
                 observed: ObservedProfile | None = None):
        super().__init__()
        self.params = params or RcePhysicsParams()
        self.observed = observed or default_observed_profile(self.params.pressure_levels)
        if not np.allclose(self.observed.pressures, self.params.pressure_levels,
                           rtol=1e-9, atol=1e-9):
            raise ProfileFormatError("observed profile grid does not match the column")
        self.max_steps = self.params.max_steps
        self.action_space = BoxSpace(low=[0.0, 5.5], high=[1.0, 9.8])
        self.observation_space = BoxSpace(low=[-1.0] * N_LEVELS, high=[1.0] * N_LEVELS)
        self.column = AtmosphericColumn(
            np.full(N_LEVELS, self.params.isothermal_init),
            self.params.isothermal_init, self.params)

    def _observe(self) -> np.ndarray:
        return (self.column.temperatures - OBS_CENTER) / OBS_SCALE

    def _reset_state(self) -> np.ndarray:
        self.column = AtmosphericColumn(
            np.full(N_LEVELS, self.params.isothermal_init),
            self.params.isothermal_init, self.params)
        return self._observe()

    def _dynamics(self, action: np.ndarray):
        emissivity, lapse = float(action[0]), float(action[1])
        p = self.params
        heating, diag = grey_longwave_step(self.column, emissivity)
        self.column.temperatures = self.column.temperatures + heating * p.dt
        self.column.surface_temperature += (
            diag["surface_net_flux"] * p.dt / p.surface_heat_capacity)
        self.column = convective_adjustment(self.column, lapse)
        self.column.validate()
        diffs = self.column.temperatures - self.observed.temperatures
        reward = -float(np.mean(diffs * diffs))
        info = {
            "level_differences": diffs.copy(),
            "simulated_profile": self.column.temperatures.copy(),
            "surface_temperature": self.column.surface_temperature,
            "olr": diag["olr"],
        }
        return self._observe(), reward, info
