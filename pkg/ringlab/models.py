"""
Core ring model types and scenario configuration.

All types are frozen pydantic models, so a parsed scenario can be shared
across threads. Parsing rejects unknown keys; physics and invariant checks
live in validate_config, which never raises.
"""

import difflib
import hashlib
import json
import logging
import math
import typing
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Type

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ConfigParseError

logger = logging.getLogger(__name__)

MAXWELL_LIMIT = 1.0 / 300.0
ORBIT_SAMPLES_PER_PERIOD = 50
SEED_MAX = 2 ** 64 - 1
DEFAULT_SEED = 42


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class Constants(_Frozen):
    """Code units: G = 1 and kappa_B = 1."""

    gravitational_constant: float = 1.0
    boltzmann_constant: float = 1.0


class DensityProfile(_Frozen):
    """Axisymmetric surface density, piecewise-linear between radial knots.

    Zero outside [knots[0], knots[-1]]. Profiles produced by rebinning also
    carry the histogram they came from, which is what their mass refers to.
    """

    knots: List[float]
    values: List[float]
    interpolation: Literal["piecewise-linear"] = "piecewise-linear"
    cell_edges: Optional[List[float]] = None
    cell_masses: Optional[List[float]] = None

    @classmethod
    def uniform(cls, sigma: float, r_inner: float, r_outer: float) -> "DensityProfile":
        return cls(knots=[r_inner, r_outer], values=[sigma, sigma])

    @classmethod
    def zero(cls, r_inner: float, r_outer: float) -> "DensityProfile":
        return cls(knots=[r_inner, r_outer], values=[0.0, 0.0])

    @classmethod
    def step(cls, r_inner: float, r_star: float, r_outer: float, inner_level: float,
             outer_level: float, width: float = 0.0) -> "DensityProfile":
        """Two-plateau profile: inner_level on [r_inner, r_star), outer_level up to r_outer.

        width > 0 replaces the jump by a linear ramp of that width centred on r_star.
        """
        half = 0.5 * width
        if half > 0.0:
            knots = [r_inner, r_star - half, r_star + half, r_outer]
            values = [inner_level, inner_level, outer_level, outer_level]
        else:
            ramp = 1e-9 * (r_outer - r_inner)
            knots = [r_inner, r_star - ramp, r_star + ramp, r_outer]
            values = [inner_level, inner_level, outer_level, outer_level]
        return cls(knots=knots, values=values)

    @property
    def knots_array(self) -> np.ndarray:
        return np.asarray(self.knots, dtype=float)

    @property
    def values_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def support(self) -> Tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    def __call__(self, radius):
        return self.evaluate(radius)

    def evaluate(self, radius):
        """Density at radius (scalar or array)."""
        result = np.interp(radius, self.knots_array, self.values_array, left=0.0, right=0.0)
        return float(result) if np.ndim(result) == 0 else result

    def minimum(self, r_lo: Optional[float] = None, r_hi: Optional[float] = None) -> float:
        """Lower bound alpha of the density over [r_lo, r_hi] (defaults to the support)."""
        lo, hi = self.support
        r_lo = lo if r_lo is None else r_lo
        r_hi = hi if r_hi is None else r_hi
        knots = self.knots_array
        sample_radii = np.concatenate(([r_lo, r_hi], knots[(knots > r_lo) & (knots < r_hi)]))
        return float(np.min(self.evaluate(sample_radii)))

    def positive_edges(self) -> List[float]:
        """Support edges where the density does not vanish (log-divergent force)."""
        edges = []
        if self.values[0] > 0.0:
            edges.append(float(self.knots[0]))
        if self.values[-1] > 0.0:
            edges.append(float(self.knots[-1]))
        return edges

    def total_mass(self) -> float:
        if self.cell_masses is not None:
            return float(math.fsum(self.cell_masses))
        r = self.knots_array
        s = self.values_array
        r0, r1 = r[:-1], r[1:]
        s0, s1 = s[:-1], s[1:]
        h = r1 - r0
        # exact integral of 2*pi*r*sigma(r) for linear sigma on each segment
        seg = np.where(
            h > 0,
            (2.0 * np.pi) * h * (s0 * (2.0 * r0 + r1) + s1 * (r0 + 2.0 * r1)) / 6.0,
            0.0,
        )
        return float(math.fsum(seg))

    def scaled(self, factor: float) -> "DensityProfile":
        masses = None if self.cell_masses is None else [factor * m for m in self.cell_masses]
        return self.model_copy(update={
            "values": [factor * v for v in self.values],
            "cell_masses": masses,
        })


class Moon(_Frozen):
    """Point-mass moon on a fixed circular orbit Z(t)."""

    mass: float
    orbit_radius: float
    angular_velocity: float = 0.0
    phase: float = 0.0

    def position(self, t: float) -> np.ndarray:
        angle = self.angular_velocity * t + self.phase
        return np.array([self.orbit_radius * math.cos(angle), self.orbit_radius * math.sin(angle)])


class RingModel(_Frozen):
    saturn_mass: float
    inner_radius: float
    outer_radius: float
    density: DensityProfile
    moons: List[Moon] = Field(default_factory=list)
    constants: Constants = Field(default_factory=Constants)

    @property
    def width(self) -> float:
        return self.outer_radius - self.inner_radius

    def ring_mass(self) -> float:
        return self.density.total_mass()

    def circular_period(self, radius: float) -> float:
        return 2.0 * math.pi * math.sqrt(radius ** 3 / self.saturn_mass)

    def with_density(self, density: DensityProfile) -> "RingModel":
        return self.model_copy(update={"density": density})

    def scaled(self, factor: float) -> "RingModel":
        """Every mass (Saturn, ring, moons) multiplied by factor."""
        return self.model_copy(update={
            "saturn_mass": factor * self.saturn_mass,
            "density": self.density.scaled(factor),
            "moons": [m.model_copy(update={"mass": factor * m.mass}) for m in self.moons],
        })


class MassSpectrum(_Frozen):
    """Particle mass distribution s(m): a single mass or a power law on [m_min, m_max]."""

    kind: Literal["single", "power_law"] = "single"
    m_min: float = 1.0
    m_max: float = 1.0
    exponent: float = -3.0

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "single" or self.m_min == self.m_max:
            return np.full(n, self.m_min, dtype=float)
        u = rng.random(n)
        p = self.exponent + 1.0
        if abs(p) < 1e-12:
            return self.m_min * (self.m_max / self.m_min) ** u
        lo, hi = self.m_min ** p, self.m_max ** p
        return (lo + u * (hi - lo)) ** (1.0 / p)


class CollisionParams(_Frozen):
    """Hard-disc collision model; the free-run time is an output, not an input."""

    restitution: float = 1.0
    particle_radius: float = 1e-3
    mass_spectrum: MassSpectrum = Field(default_factory=MassSpectrum)
    cell_size: float = 0.05
    particle_weight: float = 1.0

    @property
    def cross_section(self) -> float:
        # hard discs of equal radius: 2D cross-section is the diameter
        return 2.0 * self.particle_radius


class EnsembleConfig(_Frozen):
    size: int = 1000
    velocity_dispersion: float = 0.0


class IntegratorConfig(_Frozen):
    dt: float = 1e-3
    duration: float = 1.0
    rebin_every: int = 100
    rebin_bins: int = 64
    absorb_radius: Optional[float] = None
    escape_radius: Optional[float] = None
    table_points: int = 240
    table_tolerance: float = 1e-9


class FeatureToggles(_Frozen):
    self_gravity: bool = True
    collisions: bool = False
    moons: bool = False


class ProfileConfig(_Frozen):
    r_min: float = 0.05
    r_max: float = 4.0
    points: int = 400
    grid: Optional[List[float]] = None
    quad_tolerance: float = 1e-10
    refine_tol: float = 1e-10

    def radii(self) -> np.ndarray:
        if self.grid is not None:
            return np.asarray(self.grid, dtype=float)
        return np.linspace(self.r_min, self.r_max, self.points)


def _default_epsilons() -> List[float]:
    return [float(e) for e in np.logspace(-6.0, -3.0, 13)]


class EdgeFitConfig(_Frozen):
    edge: Literal["inner", "outer"] = "inner"
    epsilons: List[float] = Field(default_factory=_default_epsilons)
    kernel: Literal["annulus", "strip"] = "annulus"


class KineticConfig(_Frozen):
    cells: int = 40
    temperature: float = 1e-4
    snapshots: int = 5
    snapshot_every: int = 10
    delta_fractions: List[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])
    bootstrap: int = 50


class PeriodicBoxConfig(_Frozen):
    """Force-free square box with periodic walls; collisions use the collisions block."""

    size: float = 1.0
    particles: int = 1000
    temperature: float = 1.0
    steps: int = 10000
    dt: float = 0.01
    record_every: int = 1
    bootstrap: int = 200


class FullerConfig(_Frozen):
    x0: float = 1.0
    y0: float = 0.0
    stop_radius: float = 1e-6
    time_budget: float = 100.0
    tolerance: float = 1e-12
    event_tolerance: float = 1e-13
    switch_coefficient: Optional[float] = None


class OutputConfig(_Frozen):
    directory: str = "out"


def _default_units() -> Dict[str, str]:
    return {
        "length": "code length (R1 of the reference ring ~ 1)",
        "mass": "code mass (Saturn ~ 1)",
        "time": "code time (G = 1)",
    }


class ScenarioConfig(_Frozen):
    name: str = "scenario"
    units: Dict[str, str] = Field(default_factory=_default_units)
    model: RingModel
    ensemble: EnsembleConfig = Field(default_factory=EnsembleConfig)
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    collisions: CollisionParams = Field(default_factory=CollisionParams)
    features: FeatureToggles = Field(default_factory=FeatureToggles)
    profile: ProfileConfig = Field(default_factory=ProfileConfig)
    edge_fit: EdgeFitConfig = Field(default_factory=EdgeFitConfig)
    kinetic: KineticConfig = Field(default_factory=KineticConfig)
    box: PeriodicBoxConfig = Field(default_factory=PeriodicBoxConfig)
    fuller: FullerConfig = Field(default_factory=FullerConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    seed: Optional[int] = None

    def absorb_radius(self) -> float:
        value = self.integrator.absorb_radius
        return 0.1 * self.model.inner_radius if value is None else value

    def escape_radius(self) -> float:
        value = self.integrator.escape_radius
        return 10.0 * self.model.outer_radius if value is None else value


# ---------------------------------------------------------------------------
# Parsing and serialization


def _nested_model(annotation: Any) -> Optional[Type[BaseModel]]:
    """Return the pydantic model class inside Optional[...] / List[...] annotations."""
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return annotation
    for arg in typing.get_args(annotation):
        found = _nested_model(arg)
        if found is not None:
            return found
    return None


def _check_unknown_keys(data: Any, model_cls: Type[BaseModel], path: str) -> None:
    if not isinstance(data, dict):
        return
    fields = model_cls.model_fields
    for key, value in data.items():
        dotted = f"{path}.{key}" if path else str(key)
        if key not in fields:
            matches = difflib.get_close_matches(str(key), list(fields), n=1, cutoff=0.5)
            suggestion = matches[0] if matches else None
            hint = f"; nearest valid key is '{suggestion}'" if suggestion else ""
            raise ConfigParseError(f"unknown config key '{dotted}'{hint}", key=dotted, suggestion=suggestion)
        nested = _nested_model(fields[key].annotation)
        if nested is None:
            continue
        if isinstance(value, list):
            for i, item in enumerate(value):
                _check_unknown_keys(item, nested, f"{dotted}[{i}]")
        else:
            _check_unknown_keys(value, nested, dotted)


def parse_config(data: Dict[str, Any]) -> ScenarioConfig:
    """Build a ScenarioConfig from already-decoded JSON."""
    if not isinstance(data, dict):
        raise ConfigParseError("scenario must be a JSON object")
    _check_unknown_keys(data, ScenarioConfig, "")
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(p) for p in first["loc"])
        raise ConfigParseError(f"invalid value at '{location}': {first['msg']}", key=location) from e


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as e:
        raise ConfigParseError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigParseError(f"config file {path} is not valid JSON: {e}") from e
    config = parse_config(data)
    logger.info(f"Loaded scenario '{config.name}' from {path}")
    return config


def dump_config(config: ScenarioConfig) -> str:
    return json.dumps(config.model_dump(mode="json"), indent=2, sort_keys=True)


def config_hash(config: ScenarioConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Validation


class ConfigIssue(_Frozen):
    severity: Literal["error", "warning"]
    code: str
    path: str
    message: str


def _error(code: str, path: str, message: str) -> ConfigIssue:
    return ConfigIssue(severity="error", code=code, path=path, message=message)


def _warning(code: str, path: str, message: str) -> ConfigIssue:
    return ConfigIssue(severity="warning", code=code, path=path, message=message)


def _validate_density(model: RingModel, issues: List[ConfigIssue]) -> None:
    density = model.density
    knots, values = density.knots, density.values
    if len(knots) != len(values):
        issues.append(_error("density", "model.density", f"{len(knots)} knots but {len(values)} values"))
        return
    if len(knots) < 2:
        issues.append(_error("density", "model.density.knots", "at least two knots are required"))
        return
    if any(not math.isfinite(v) for v in knots + values):
        issues.append(_error("density", "model.density", "knots and values must be finite"))
        return
    if any(b <= a for a, b in zip(knots[:-1], knots[1:])):
        issues.append(_error("density", "model.density.knots", "knots must be strictly ascending"))
    for i, v in enumerate(values):
        if v < 0:
            issues.append(_error("density", f"model.density.values[{i}]",
                                 f"negative density {v!r} at knot {knots[i]!r}"))
    if knots[0] < model.inner_radius or knots[-1] > model.outer_radius:
        issues.append(_error("density", "model.density.knots",
                             f"density support [{knots[0]}, {knots[-1]}] leaves the annulus "
                             f"[{model.inner_radius}, {model.outer_radius}]"))


def validate_config(config: ScenarioConfig) -> List[ConfigIssue]:
    """Structured errors for invariant violations, warnings for suspect physics."""
    issues: List[ConfigIssue] = []
    model = config.model

    constants = model.constants
    if constants.gravitational_constant != 1.0 or constants.boltzmann_constant != 1.0:
        issues.append(_error("constants", "model.constants", "code units fix G = 1 and kappa_B = 1"))

    geometry_ok = True
    if not model.saturn_mass > 0:
        issues.append(_error("mass", "model.saturn_mass", "saturn_mass must be positive"))
        geometry_ok = False
    if not model.inner_radius > 0:
        issues.append(_error("geometry", "model.inner_radius", "inner radius must be positive"))
        geometry_ok = False
    if not model.inner_radius < model.outer_radius:
        issues.append(_error("geometry", "model.outer_radius",
                             f"degenerate annulus: R1={model.inner_radius} >= R2={model.outer_radius}"))
        geometry_ok = False

    _validate_density(model, issues)

    for i, moon in enumerate(model.moons):
        if not moon.mass > 0:
            issues.append(_error("moon", f"model.moons[{i}].mass", "moon mass must be positive"))
        if not moon.orbit_radius > 0:
            issues.append(_error("moon", f"model.moons[{i}].orbit_radius", "moon orbit radius must be positive"))

    if config.ensemble.size < 1:
        issues.append(_error("ensemble", "ensemble.size", "ensemble needs at least one particle"))
    if config.ensemble.velocity_dispersion < 0:
        issues.append(_error("ensemble", "ensemble.velocity_dispersion", "dispersion must be nonnegative"))

    integrator = config.integrator
    if not integrator.dt > 0:
        issues.append(_error("integrator", "integrator.dt", "dt must be positive"))
    if integrator.duration < 0:
        issues.append(_error("integrator", "integrator.duration", "duration must be nonnegative"))
    if integrator.rebin_every < 1 or integrator.rebin_bins < 2:
        issues.append(_error("integrator", "integrator.rebin_every",
                             "rebin_every must be >= 1 and rebin_bins >= 2"))

    if config.seed is not None and not 0 <= config.seed <= SEED_MAX:
        issues.append(_error("seed", "seed", "seed must be a 64-bit unsigned integer"))

    collisions = config.collisions
    if not 0.0 <= collisions.restitution <= 1.0:
        issues.append(_error("collisions", "collisions.restitution", "restitution must lie in [0, 1]"))
    if not collisions.particle_radius > 0:
        issues.append(_error("collisions", "collisions.particle_radius", "particle radius must be positive"))
    spectrum = collisions.mass_spectrum
    if not 0 < spectrum.m_min <= spectrum.m_max:
        issues.append(_error("collisions", "collisions.mass_spectrum", "need 0 < m_min <= m_max"))
    if config.features.collisions and collisions.cell_size < 2.0 * collisions.particle_radius:
        issues.append(_error("collisions", "collisions.cell_size",
                             "cell size must be at least twice the particle radius"))

    edge = config.edge_fit
    if any(e <= 0 for e in edge.epsilons):
        issues.append(_error("edge_fit", "edge_fit.epsilons", "epsilons must be positive"))

    if config.kinetic.cells < 3:
        issues.append(_error("kinetic", "kinetic.cells", "at least three moment cells are required"))

    box = config.box
    for name in ("size", "temperature", "dt"):
        if not getattr(box, name) > 0:
            issues.append(_error("box", f"box.{name}", f"{name} must be positive"))
    if box.particles < 2:
        issues.append(_error("box", "box.particles", "the box needs at least two particles"))
    if box.record_every < 1 or box.steps < 3 * box.record_every:
        issues.append(_error("box", "box.steps", "need at least three recorded steps"))

    if not config.fuller.stop_radius > 0:
        issues.append(_error("fuller", "fuller.stop_radius", "stop radius must be positive"))
    for name in ("time_budget", "tolerance", "event_tolerance"):
        if not getattr(config.fuller, name) > 0:
            issues.append(_error("fuller", f"fuller.{name}", f"{name.replace('_', ' ')} must be positive"))
    coefficient = config.fuller.switch_coefficient
    if coefficient is not None and not coefficient > 0:
        issues.append(_error("fuller", "fuller.switch_coefficient", "switching coefficient must be positive"))

    # physics-suspect settings
    if geometry_ok and not any(i.code == "density" for i in issues):
        ratio = model.ring_mass() / model.saturn_mass
        if ratio > MAXWELL_LIMIT:
            issues.append(_warning(
                "maxwell_limit", "model.density",
                f"ring/Saturn mass ratio {ratio:.4g} exceeds the Maxwell stability limit 1/300"))
        if integrator.dt > 0:
            period = model.circular_period(model.inner_radius)
            if integrator.dt > period / ORBIT_SAMPLES_PER_PERIOD:
                issues.append(_warning(
                    "time_step", "integrator.dt",
                    f"dt={integrator.dt:.4g} exceeds 1/{ORBIT_SAMPLES_PER_PERIOD} of the innermost "
                    f"circular period {period:.4g}"))

    if config.features.moons and not model.moons:
        issues.append(_warning("moons_empty", "features.moons", "moon forcing enabled but no moons"))

    return issues


def has_errors(issues: List[ConfigIssue]) -> bool:
    return any(i.severity == "error" for i in issues)
