"""Reservoir case definitions, desk-scale presets and decision decoding.

Two presets are provided:

``channel2d``
    50 x 50 cells of 200 x 200 x 20 ft (a 10,000 ft square, the same extent
    as a 100 x 100 grid of 100 ft cells) with seeded high-permeability
    channels. 5 rate-controlled injectors at 1000 STB/day and 5 producers at
    3000 psi bottom-hole pressure; 20 steps of 360 days. Only well locations
    are optimized (20 integer variables).

``egglike``
    30 x 30 cells of 16 x 16 x 28 m under an elliptical active mask, a 2-D
    stand-in for the 60 x 60 x 7 Egg model (same 480 m footprint, the seven
    4 m layers lumped into one). 8 injectors (0-80 m3/day) and 4 producers
    (0-120 m3/day), all rate controlled, 10 steps of 360 days. Locations
    and per-step rates are optimized jointly (24 integer + 120 continuous).
"""

from __future__ import annotations

import configparser
import enum
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DimensionError
from ..problem import DecisionSpace

# Unit conversions, collected in one place.
FT3_PER_BBL = 5.614583
M3_TO_STB = 6.289811
DAYS_PER_YEAR = 365.0
# Darcy constants: k[mD] * A / L / mu[cp] -> rate per pressure unit.
DARCY = {
    "field": 0.001127,  # bbl/day/psi with ft
    "metric": 0.0085267,  # m3/day/bar with m
}
# Pore volume of one length-unit cube expressed in rate volume units.
VOLUME = {
    "field": 1.0 / FT3_PER_BBL,  # ft3 -> bbl
    "metric": 1.0,  # m3 -> m3
}
# Rate volume unit -> STB, for pricing.
TO_STB = {"field": 1.0, "metric": M3_TO_STB}

# Seed of the shipped channelized permeability realizations.
CHANNEL_SEED = 20220816


class WellControl(enum.Enum):
    RATE = "rate"
    BHP = "bhp"


class DecodeMode(enum.Enum):
    PLACEMENT = "placement"
    JOINT = "joint"


@dataclass(frozen=True)
class Fluid:
    """Oil-water properties with Corey relative permeabilities."""

    mu_o: float = 2.2
    mu_w: float = 1.0
    swc: float = 0.2
    sor: float = 0.2
    n_w: float = 2.0
    n_o: float = 2.0
    krw_max: float = 0.6
    kro_max: float = 0.9

    def __post_init__(self):
        if not self.swc + self.sor < 1.0:
            raise ConfigError("need swc + sor < 1")
        if min(self.mu_o, self.mu_w, self.krw_max, self.kro_max) <= 0:
            raise ConfigError("viscosities and endpoint relative permeabilities must be positive")

    def normalized(self, sw):
        se = (np.asarray(sw, dtype=float) - self.swc) / (1.0 - self.swc - self.sor)
        return np.clip(se, 0.0, 1.0)

    def mobilities(self, sw) -> tuple[np.ndarray, np.ndarray]:
        se = self.normalized(sw)
        lw = self.krw_max * se**self.n_w / self.mu_w
        lo = self.kro_max * (1.0 - se) ** self.n_o / self.mu_o
        return lw, lo

    def fractional_flow(self, sw):
        lw, lo = self.mobilities(sw)
        return lw / (lw + lo)

    def max_dfds(self, samples: int = 20001) -> float:
        """Largest slope of the fractional flow curve over the mobile range."""
        s = np.linspace(self.swc, 1.0 - self.sor, samples)
        f = self.fractional_flow(s)
        return float(np.max(np.abs(np.diff(f) / np.diff(s))))


@dataclass(frozen=True)
class Economics:
    oil_price: float = 80.0
    water_cost: float = 5.0
    injection_cost: float = 5.0
    discount: float = 0.0

    def __post_init__(self):
        if min(self.oil_price, self.water_cost, self.injection_cost) < 0:
            raise ConfigError("prices and costs must be non-negative")
        if self.discount <= -1:
            raise ConfigError("discount rate must exceed -1")


@dataclass(frozen=True)
class ReservoirCase:
    name: str
    nx: int
    ny: int
    dx: float
    dy: float
    dz: float
    perm: np.ndarray  # (ny, nx) mD
    active: np.ndarray  # (ny, nx) bool
    porosity: float
    fluid: Fluid
    sw_init: float
    p_init: float
    n_inj: int
    n_prod: int
    producer_control: WellControl = WellControl.BHP
    inj_rate: float = 1000.0
    prod_bhp: float = 3000.0
    inj_rate_max: float = 1000.0
    prod_rate_max: float = 1000.0
    economics: Economics = field(default_factory=Economics)
    n_steps: int = 20
    dt_days: float = 360.0
    units: str = "field"
    well_radius: float = 0.25
    cfl: float = 0.5
    max_substeps: int = 10_000

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=float)
        active = np.asarray(self.active, dtype=bool)
        if perm.shape != (self.ny, self.nx) or active.shape != (self.ny, self.nx):
            raise ConfigError(f"perm/active must have shape ({self.ny}, {self.nx})")
        if not active.any():
            raise ConfigError("no active cells")
        if np.any(perm[active] <= 0):
            raise ConfigError("permeability must be positive on active cells")
        if not self.fluid.swc <= self.sw_init <= 1.0 - self.fluid.sor:
            raise ConfigError("initial water saturation outside [swc, 1 - sor]")
        if self.n_inj < 1 or self.n_prod < 1:
            raise ConfigError("need at least one injector and one producer")
        if self.units not in DARCY:
            raise ConfigError(f"unknown unit system {self.units!r}")
        object.__setattr__(self, "producer_control", WellControl(self.producer_control))
        perm.flags.writeable = False
        active.flags.writeable = False
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "active", active)

    @property
    def n_wells(self) -> int:
        return self.n_inj + self.n_prod

    @property
    def control_modes(self) -> tuple[WellControl, ...]:
        return (WellControl.RATE,) * self.n_inj + (self.producer_control,) * self.n_prod

    def with_perm(self, perm) -> "ReservoirCase":
        return replace(self, perm=np.asarray(perm, dtype=float))

    def decision_space(self, mode: DecodeMode | str) -> DecisionSpace:
        mode = DecodeMode(mode)
        loc = DecisionSpace.integer(
            np.tile([1, 1], self.n_wells), np.tile([self.ny, self.nx], self.n_wells)
        )
        if mode is DecodeMode.PLACEMENT:
            return loc
        upper = np.repeat(
            [self.inj_rate_max] * self.n_inj + [self.prod_rate_max] * self.n_prod, self.n_steps
        )
        return DecisionSpace.concat(loc, DecisionSpace.continuous(np.zeros_like(upper), upper))


@dataclass(frozen=True)
class WellLayout:
    """Well cells (0-based row, column) and per-step controls.

    ``inj_rates`` has shape (n_inj, k); ``prod_controls`` has shape
    (n_prod, k) and holds rates or bottom-hole pressures depending on the
    case's producer control.
    """

    injectors: np.ndarray
    producers: np.ndarray
    inj_rates: np.ndarray
    prod_controls: np.ndarray

    def mirrored(self, nx: int) -> "WellLayout":
        def flip(cells):
            c = np.array(cells)
            c[:, 1] = nx - 1 - c[:, 1]
            return c

        return replace(self, injectors=flip(self.injectors), producers=flip(self.producers))


def nearest_active(row: int, col: int, active: np.ndarray) -> tuple[int, int]:
    """Closest active cell by centre distance; ties go to the lower row-major index."""
    if active[row, col]:
        return int(row), int(col)
    rr, cc = np.nonzero(active)  # row-major order
    d2 = (rr - row) ** 2 + (cc - col) ** 2
    k = int(np.argmin(d2))
    return int(rr[k]), int(cc[k])


def decode(x, case: ReservoirCase, mode: DecodeMode | str) -> WellLayout:
    """Turn a decision vector into well cells and controls.

    Locations come first as 1-based (row, column) pairs, injectors then
    producers; in joint mode they are followed by one block of ``n_steps``
    controls per well in the same order.
    """
    mode = DecodeMode(mode)
    x = np.asarray(x, dtype=float)
    nw, k = case.n_wells, case.n_steps
    expected = 2 * nw + (nw * k if mode is DecodeMode.JOINT else 0)
    if x.shape != (expected,):
        raise DimensionError(f"{mode.value} decoding of {case.name} needs {expected} variables, got {x.shape}")
    loc = np.rint(x[: 2 * nw]).astype(int).reshape(nw, 2) - 1
    loc[:, 0] = np.clip(loc[:, 0], 0, case.ny - 1)
    loc[:, 1] = np.clip(loc[:, 1], 0, case.nx - 1)
    cells = np.array([nearest_active(r, c, case.active) for r, c in loc], dtype=int)
    if mode is DecodeMode.JOINT:
        ctrl = x[2 * nw :].reshape(nw, k)
        inj, prod = ctrl[: case.n_inj], ctrl[case.n_inj :]
    else:
        inj = np.full((case.n_inj, k), case.inj_rate)
        fixed = case.prod_bhp if case.producer_control is WellControl.BHP else case.prod_rate_max
        prod = np.full((case.n_prod, k), fixed)
    return WellLayout(cells[: case.n_inj], cells[case.n_inj :], np.array(inj), np.array(prod))


# ---------------------------------------------------------------- geology


def channelized_permeability(
    nx: int,
    ny: int,
    n_channels: int,
    width: float,
    seed: int = CHANNEL_SEED,
    k_channel: float = 1000.0,
    k_background: float = 10.0,
    noise: float = 0.2,
) -> np.ndarray:
    """Meandering high-permeability channels running along x on a low-perm background."""
    rng = np.random.default_rng(seed)
    perm = k_background * np.exp(noise * rng.standard_normal((ny, nx)))
    cols = np.arange(nx)
    rows = np.arange(ny)[:, None]
    for _ in range(n_channels):
        y0 = rng.uniform(0.1 * ny, 0.9 * ny)
        amp = rng.uniform(0.05, 0.2) * ny
        wavelength = rng.uniform(0.5, 1.2) * nx
        phase = rng.uniform(0, 2 * np.pi)
        walk = np.cumsum(rng.normal(0.0, 0.3, nx))
        centre = y0 + amp * np.sin(2 * np.pi * cols / wavelength + phase) + walk
        inside = np.abs(rows - centre[None, :]) <= width / 2
        perm = np.where(inside, k_channel * np.exp(noise * rng.standard_normal((ny, nx))), perm)
    return perm


def elliptical_mask(nx: int, ny: int, fill: float = 0.98) -> np.ndarray:
    r, c = np.mgrid[0:ny, 0:nx]
    u = (c + 0.5 - nx / 2) / (fill * nx / 2)
    v = (r + 0.5 - ny / 2) / (fill * ny / 2)
    return u * u + v * v <= 1.0


def channel2d_case(**overrides) -> ReservoirCase:
    nx = ny = 50
    kw = dict(
        name="channel2d",
        nx=nx,
        ny=ny,
        dx=200.0,
        dy=200.0,
        dz=20.0,
        perm=channelized_permeability(nx, ny, n_channels=4, width=3.0),
        active=np.ones((ny, nx), dtype=bool),
        porosity=0.2,
        fluid=Fluid(),
        sw_init=0.2,
        p_init=6000.0,
        n_inj=5,
        n_prod=5,
        producer_control=WellControl.BHP,
        inj_rate=1000.0,
        prod_bhp=3000.0,
        inj_rate_max=1000.0,
        prod_rate_max=1000.0,
        economics=Economics(80.0, 5.0, 5.0, 0.0),
        n_steps=20,
        dt_days=360.0,
        units="field",
        well_radius=0.25,
    )
    kw.update(overrides)
    return ReservoirCase(**kw)


def egglike_case(**overrides) -> ReservoirCase:
    nx = ny = 30
    active = elliptical_mask(nx, ny)
    perm = channelized_permeability(nx, ny, n_channels=5, width=2.0, seed=CHANNEL_SEED + 1).T
    kw = dict(
        name="egglike",
        nx=nx,
        ny=ny,
        dx=16.0,
        dy=16.0,
        dz=28.0,
        perm=np.where(active, perm, 0.0),
        active=active,
        porosity=0.2,
        fluid=Fluid(mu_o=5.0, mu_w=1.0, swc=0.2, sor=0.1, n_w=3.0, n_o=4.0, krw_max=0.75, kro_max=0.8),
        sw_init=0.2,
        p_init=400.0,
        n_inj=8,
        n_prod=4,
        producer_control=WellControl.RATE,
        inj_rate=80.0,
        prod_bhp=395.0,
        inj_rate_max=80.0,
        prod_rate_max=120.0,
        economics=Economics(80.0, 5.0, 5.0, 0.0),
        n_steps=10,
        dt_days=360.0,
        units="metric",
        well_radius=0.1,
    )
    kw.update(overrides)
    return ReservoirCase(**kw)


CASES = {
    "channel2d": (channel2d_case, DecodeMode.PLACEMENT),
    "egglike": (egglike_case, DecodeMode.JOINT),
}


def make_case(name: str, **overrides) -> tuple[ReservoirCase, DecisionSpace]:
    """Preset case ``name`` and the decision space of its optimization mode."""
    try:
        factory, mode = CASES[name]
    except KeyError:
        raise ConfigError(f"unknown reservoir case {name!r}; known: {sorted(CASES)}") from None
    case = factory(**overrides)
    return case, case.decision_space(mode)


def default_mode(name: str) -> DecodeMode:
    return CASES[name][1] if name in CASES else DecodeMode.PLACEMENT


# ---------------------------------------------------------------- config files

_GRID_KEYS = ("nx", "ny", "dx", "dy", "dz")


def load_case(path) -> ReservoirCase:
    """Read a case from an INI-style file.

    Sections: ``[case]`` (name, units, mode), ``[grid]`` (nx, ny, dx, dy, dz,
    perm_file, mask_file, porosity), ``[fluid]``, ``[initial]`` (sw, p),
    ``[wells]``, ``[economics]`` and ``[schedule]`` (steps, dt_days).
    ``perm_file`` and ``mask_file`` are flat CSVs in row-major order,
    relative to the config file.
    """
    path = Path(path)
    cp = configparser.ConfigParser()
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    def get(section, key, conv=float, default=None):
        try:
            raw = cp.get(section, key)
        except (configparser.NoSectionError, configparser.NoOptionError):
            if default is None:
                raise ConfigError(f"{path}: missing [{section}] {key}") from None
            return default
        try:
            return conv(raw)
        except ValueError:
            raise ConfigError(f"{path}: bad value for [{section}] {key}: {raw!r}") from None

    nx, ny = get("grid", "nx", int), get("grid", "ny", int)

    def field_file(key, dtype):
        name = get("grid", key, str, "")
        if not name:
            return None
        values = np.loadtxt(path.parent / name, delimiter=",", dtype=float).ravel()
        if values.size != nx * ny:
            raise ConfigError(f"{path}: {key} has {values.size} values, grid has {nx * ny}")
        return values.reshape(ny, nx).astype(dtype)

    perm = field_file("perm_file", float)
    if perm is None:
        perm = np.full((ny, nx), get("grid", "perm", float))
    active = field_file("mask_file", bool)
    if active is None:
        active = np.ones((ny, nx), dtype=bool)
    fluid = Fluid(
        **{k: get("fluid", k, float, getattr(Fluid, k)) for k in Fluid.__dataclass_fields__}
    )
    econ = Economics(
        **{k: get("economics", k, float, getattr(Economics, k)) for k in Economics.__dataclass_fields__}
    )
    return ReservoirCase(
        name=get("case", "name", str, path.stem),
        nx=nx,
        ny=ny,
        dx=get("grid", "dx"),
        dy=get("grid", "dy"),
        dz=get("grid", "dz"),
        perm=perm,
        active=active,
        porosity=get("grid", "porosity"),
        fluid=fluid,
        sw_init=get("initial", "sw"),
        p_init=get("initial", "p"),
        n_inj=get("wells", "n_inj", int),
        n_prod=get("wells", "n_prod", int),
        producer_control=get("wells", "producer_control", str, "bhp"),
        inj_rate=get("wells", "inj_rate"),
        prod_bhp=get("wells", "prod_bhp"),
        inj_rate_max=get("wells", "inj_rate_max", float, get("wells", "inj_rate")),
        prod_rate_max=get("wells", "prod_rate_max", float, get("wells", "inj_rate")),
        economics=econ,
        n_steps=get("schedule", "steps", int),
        dt_days=get("schedule", "dt_days"),
        units=get("case", "units", str, "field"),
        well_radius=get("wells", "well_radius", float, 0.25),
    )


def save_case(case: ReservoirCase, path) -> None:
    """Write ``case`` as an INI file with perm/mask CSVs next to it."""
    path = Path(path)
    stem = path.with_suffix("")
    perm_file = stem.name + "_perm.csv"
    mask_file = stem.name + "_mask.csv"
    np.savetxt(path.parent / perm_file, case.perm.reshape(1, -1), delimiter=",", fmt="%.17g")
    np.savetxt(path.parent / mask_file, case.active.reshape(1, -1).astype(int), delimiter=",", fmt="%d")
    cp = configparser.ConfigParser()
    cp["case"] = {"name": case.name, "units": case.units}
    cp["grid"] = {k: repr(getattr(case, k)) for k in _GRID_KEYS}
    cp["grid"].update({"porosity": repr(case.porosity), "perm_file": perm_file, "mask_file": mask_file})
    cp["fluid"] = {k: repr(getattr(case.fluid, k)) for k in Fluid.__dataclass_fields__}
    cp["initial"] = {"sw": repr(case.sw_init), "p": repr(case.p_init)}
    cp["wells"] = {
        "n_inj": str(case.n_inj),
        "n_prod": str(case.n_prod),
        "producer_control": case.producer_control.value,
        "inj_rate": repr(case.inj_rate),
        "prod_bhp": repr(case.prod_bhp),
        "inj_rate_max": repr(case.inj_rate_max),
        "prod_rate_max": repr(case.prod_rate_max),
        "well_radius": repr(case.well_radius),
    }
    cp["economics"] = {k: repr(getattr(case.economics, k)) for k in Economics.__dataclass_fields__}
    cp["schedule"] = {"steps": str(case.n_steps), "dt_days": repr(case.dt_days)}
    with open(path, "w") as fh:
        cp.write(fh)
