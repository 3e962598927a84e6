"""
Ring Lab - Model A Dynamics
Collision-free particle dynamics under Saturn, the axisymmetric mean field of the
ring and optional moons, integrated by kick-drift-kick leapfrog with periodic
rebinning of the ring density.
"""

import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid

from .errors import (
    ConfigValidationError,
    DensityError,
    GeometryError,
    RunAbortedError,
    SingularityError,
)
from .gravity import annulus_radial_force, graded_grid
from .models import (
    DEFAULT_SEED,
    ConfigIssue,
    DensityProfile,
    RingModel,
    ScenarioConfig,
    has_errors,
    validate_config,
)
from .parallel import STREAM_ENSEMBLE, map_chunks, ordered_map, substream

logger = logging.getLogger(__name__)

ENVELOPE_QUANTILES = (0.01, 0.99)
MAX_LOST_FRACTION = 0.5
SAMPLING_GRID = 4096


@dataclass(frozen=True)
class ParticleEnsemble:
    """Planar ring particles; removed particles are only counted."""
    positions: np.ndarray
    velocities: np.ndarray
    masses: np.ndarray
    seed: int = DEFAULT_SEED
    ids: Optional[np.ndarray] = None
    fallen: int = 0
    escaped: int = 0

    def __post_init__(self):
        n = self.masses.shape[0]
        if self.positions.shape != (n, 2) or self.velocities.shape != (n, 2):
            raise GeometryError("positions and velocities must be (N, 2) arrays matching masses")
        if not (np.all(np.isfinite(self.positions)) and np.all(np.isfinite(self.velocities))):
            raise GeometryError("particle coordinates must be finite")
        if np.any(self.masses <= 0):
            raise DensityError("particle masses must be positive")
        if self.ids is None:
            object.__setattr__(self, "ids", np.arange(n))

    @classmethod
    def from_arrays(cls, positions, velocities, masses=None, seed: int = DEFAULT_SEED) -> "ParticleEnsemble":
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        velocities = np.atleast_2d(np.asarray(velocities, dtype=float))
        if masses is None:
            masses = np.ones(positions.shape[0])
        return cls(positions, velocities, np.asarray(masses, dtype=float), seed)

    @property
    def size(self) -> int:
        return int(self.masses.shape[0])

    @property
    def initial_size(self) -> int:
        return self.size + self.fallen + self.escaped

    def radii(self) -> np.ndarray:
        return np.hypot(self.positions[:, 0], self.positions[:, 1])

    def angular_momenta(self) -> np.ndarray:
        x, y = self.positions[:, 0], self.positions[:, 1]
        vx, vy = self.velocities[:, 0], self.velocities[:, 1]
        return self.masses * (x * vy - y * vx)

    def kinetic_energy(self) -> float:
        return float(0.5 * np.sum(self.masses * np.sum(self.velocities ** 2, axis=1)))


@dataclass
class RunDiagnostics:
    """Time series of a Model A run, one row per rebin."""
    times: List[float] = field(default_factory=list)
    inner_envelope: List[float] = field(default_factory=list)
    outer_envelope: List[float] = field(default_factory=list)
    total_energy: List[float] = field(default_factory=list)
    total_angular_momentum: List[float] = field(default_factory=list)
    n_present: List[int] = field(default_factory=list)
    n_fallen: List[int] = field(default_factory=list)
    n_escaped: List[int] = field(default_factory=list)
    libration: List[float] = field(default_factory=list)
    histograms: List[DensityProfile] = field(default_factory=list)
    radii: List[np.ndarray] = field(default_factory=list)
    seed: int = DEFAULT_SEED

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.times,
            "R1": self.inner_envelope,
            "R2": self.outer_envelope,
            "E": self.total_energy,
            "L": self.total_angular_momentum,
            "n_fallen": self.n_fallen,
            "n_escaped": self.n_escaped,
            "b": self.libration,
        })

    def histogram_frame(self, index: int) -> pd.DataFrame:
        profile = self.histograms[index]
        return pd.DataFrame({"R_center": profile.knots, "sigma": profile.values})


class RingFieldTable:
    """Ring force and potential tabulated on a radial grid.

    Linear interpolation inside the grid, F ~ r below it and an inverse-square
    tail above it. The potential is the exact antiderivative of that force:
    piecewise quadratic inside the grid, continuous across every node.
    """

    def __init__(self, radii: np.ndarray, force: np.ndarray):
        self.radii = np.asarray(radii, dtype=float)
        self.force_values = np.asarray(force, dtype=float)
        r_top, f_top = self.radii[-1], self.force_values[-1]
        top_potential = f_top * r_top
        integral_to_top = cumulative_trapezoid(self.force_values[::-1], -self.radii[::-1], initial=0.0)[::-1]
        # phi(r) = phi(r_top) + int_r^r_top F
        self.potential_values = top_potential + integral_to_top

    @classmethod
    def zero(cls) -> "RingFieldTable":
        return cls(np.array([1.0, 2.0]), np.zeros(2))

    @classmethod
    def build(cls, model: RingModel, density: DensityProfile, r_min: float, r_max: float,
              points: int = 240, tol: float = 1e-9, executor: Optional[Executor] = None) -> "RingFieldTable":
        if density.total_mass() == 0.0:
            return cls.zero()
        radii = graded_grid(model.with_density(density), r_min, r_max, points)
        force = np.array(ordered_map(lambda r: annulus_radial_force(density, float(r), tol), radii, executor))
        logger.debug(f"Ring field table rebuilt on {radii.size} radii")
        return cls(radii, force)

    def force(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        r0, r_top = self.radii[0], self.radii[-1]
        inside = np.interp(r, self.radii, self.force_values)
        below = self.force_values[0] * r / r0
        above = self.force_values[-1] * (r_top / np.maximum(r, r_top)) ** 2
        return np.where(r < r0, below, np.where(r > r_top, above, inside))

    def potential(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        r0, r_top = self.radii[0], self.radii[-1]
        f0 = self.force_values[0]
        i = np.clip(np.searchsorted(self.radii, r, side="right") - 1, 0, self.radii.size - 2)
        h = r - self.radii[i]
        slope = (self.force_values[i + 1] - self.force_values[i]) / (self.radii[i + 1] - self.radii[i])
        inside = self.potential_values[i] - h * (self.force_values[i] + 0.5 * slope * h)
        below = self.potential_values[0] + f0 * (r0 ** 2 - r ** 2) / (2.0 * r0)
        above = self.potential_values[-1] * r_top / np.maximum(r, r_top)
        return np.where(r < r0, below, np.where(r > r_top, above, inside))

    def stable_libration(self, saturn_mass: float) -> float:
        """First radius where the tabulated net force crosses zero downward."""
        net = self.force_values - saturn_mass / self.radii ** 2
        crossings = np.nonzero((net[:-1] > 0.0) & (net[1:] <= 0.0))[0]
        if crossings.size == 0:
            return math.nan
        i = int(crossings[0])
        r0, r1, f0, f1 = self.radii[i], self.radii[i + 1], net[i], net[i + 1]
        return float(r0 + f0 * (r1 - r0) / (f0 - f1))


class ForceField:
    """Force per unit mass acting on ring particles at time t.

    Table mode uses a RingFieldTable for the ring term. Exact mode evaluates the
    annulus quadrature per particle, which is only practical for a handful of
    particles. The last evaluation is cached, so a leapfrog step costs one call.
    """

    def __init__(self, model: RingModel, table: Optional[RingFieldTable] = None, saturn: bool = True,
                 self_gravity: bool = True, moons: bool = True, exact: bool = False,
                 density: Optional[DensityProfile] = None, tol: float = 1e-10,
                 executor: Optional[Executor] = None):
        self.model = model
        self.table = table
        self.saturn = saturn
        self.self_gravity = self_gravity
        self.moons = moons and bool(model.moons)
        self.exact = exact
        self.density = model.density if density is None else density
        self.tol = tol
        self.executor = executor
        self._cache = None
        if self_gravity and not exact and table is None:
            raise ValueError("table mode needs a RingFieldTable; pass exact=True for quadrature")

    def _radial(self, r: np.ndarray) -> np.ndarray:
        radial = np.zeros_like(r)
        if self.saturn:
            radial = radial - self.model.saturn_mass / r ** 2
        if self.self_gravity:
            if self.exact:
                radial = radial + np.array([annulus_radial_force(self.density, float(ri), self.tol) for ri in r])
            else:
                radial = radial + self.table.force(r)
        return radial

    def _moon_terms(self, positions: np.ndarray, t: float) -> np.ndarray:
        acc = np.zeros_like(positions)
        for moon in self.model.moons:
            offset = moon.position(t)[None, :] - positions
            distance = np.hypot(offset[:, 0], offset[:, 1])
            if np.any(distance == 0.0):
                raise SingularityError(f"particle coincides with a moon at t={t!r}")
            acc += moon.mass * offset / distance[:, None] ** 3
        return acc

    def _evaluate(self, positions: np.ndarray, t: float) -> np.ndarray:
        r = np.hypot(positions[:, 0], positions[:, 1])
        if np.any(r == 0.0):
            raise SingularityError("particle at the origin")
        acc = (self._radial(r) / r)[:, None] * positions
        if self.moons:
            acc = acc + self._moon_terms(positions, t)
        return acc

    def acceleration(self, positions: np.ndarray, t: float) -> np.ndarray:
        cached = self._cache
        if cached is not None and cached[0] == t and np.array_equal(cached[1], positions):
            return cached[2]
        n = positions.shape[0]
        acc = map_chunks(lambda s: self._evaluate(positions[s], t), n, None if self.exact else self.executor)
        self._cache = (t, positions.copy(), acc)
        return acc

    def potential(self, positions: np.ndarray, t: float) -> np.ndarray:
        """Specific potential energy of each particle, the ring term counted once."""
        r = np.hypot(positions[:, 0], positions[:, 1])
        phi = np.zeros_like(r)
        if self.saturn:
            phi -= self.model.saturn_mass / r
        if self.self_gravity and self.table is not None:
            phi += self.table.potential(r)
        if self.moons:
            for moon in self.model.moons:
                offset = moon.position(t)[None, :] - positions
                phi -= moon.mass / np.hypot(offset[:, 0], offset[:, 1])
        return phi


def total_force(model: RingModel, density_now: DensityProfile, t: float, point: Sequence[float],
                tol: float = 1e-10) -> np.ndarray:
    """Saturn + annulus (from density_now) + moons at point X and time t."""
    x = np.asarray(point, dtype=float)
    r = float(np.hypot(x[0], x[1]))
    if r == 0.0:
        raise SingularityError("total force is singular at the origin")
    radial = -model.saturn_mass / r ** 2 + annulus_radial_force(density_now, r, tol)
    force = radial * x / r
    for moon in model.moons:
        offset = moon.position(t) - x
        distance = float(np.hypot(offset[0], offset[1]))
        if distance == 0.0:
            raise SingularityError(f"point {x.tolist()} coincides with a moon at t={t!r}")
        force = force + moon.mass * offset / distance ** 3
    return force


def step_ensemble(ensemble: ParticleEnsemble, model: RingModel, density_now: DensityProfile, t: float,
                  dt: float, force_field: Optional[ForceField] = None, absorb_radius: Optional[float] = None,
                  escape_radius: Optional[float] = None) -> ParticleEnsemble:
    """One kick-drift-kick leapfrog step; particles crossing the absorb or escape
    radius are removed and counted."""
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt!r}")
    if dt == 0.0 or ensemble.size == 0:
        return ensemble
    if force_field is None:
        force_field = ForceField(model, exact=True, density=density_now)
    absorb = 0.1 * model.inner_radius if absorb_radius is None else absorb_radius
    escape = 10.0 * model.outer_radius if escape_radius is None else escape_radius

    half = 0.5 * dt
    v_half = ensemble.velocities + half * force_field.acceleration(ensemble.positions, t)
    x_new = ensemble.positions + dt * v_half

    r = np.hypot(x_new[:, 0], x_new[:, 1])
    fell = r < absorb
    fled = r > escape
    keep = ~(fell | fled)
    n_fell, n_fled = int(fell.sum()), int(fled.sum())
    if n_fell or n_fled:
        logger.warning(f"t={t + dt:.6g}: {n_fell} particle(s) fell onto Saturn, {n_fled} escaped")
    x_new, v_half = x_new[keep], v_half[keep]

    v_new = v_half + half * force_field.acceleration(x_new, t + dt) if x_new.shape[0] else v_half
    return replace(
        ensemble,
        positions=x_new,
        velocities=v_new,
        masses=ensemble.masses[keep],
        ids=ensemble.ids[keep],
        fallen=ensemble.fallen + n_fell,
        escaped=ensemble.escaped + n_fled,
    )


def rebin_density(ensemble: ParticleEnsemble, knots: Sequence[float]) -> DensityProfile:
    """Radial histogram over bin edges `knots`, as surface density at bin centers.

    Particles outside the edges are counted in the end bins so the carried cell
    masses always sum to the ensemble mass.
    """
    edges = np.asarray(knots, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise GeometryError("rebin edges must be strictly ascending")
    centers = 0.5 * (edges[:-1] + edges[1:])
    if ensemble.size == 0:
        zeros = [0.0] * centers.size
        return DensityProfile(knots=centers.tolist(), values=zeros, cell_edges=edges.tolist(), cell_masses=zeros)
    r = np.clip(ensemble.radii(), edges[0], edges[-1])
    index = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, centers.size - 1)
    masses = np.bincount(index, weights=ensemble.masses, minlength=centers.size)
    areas = np.pi * (edges[1:] ** 2 - edges[:-1] ** 2)
    sigma = masses / areas
    return DensityProfile(
        knots=centers.tolist(),
        values=sigma.tolist(),
        cell_edges=edges.tolist(),
        cell_masses=masses.tolist(),
    )


def sample_ring_orbits(model: RingModel, n: int, rng: np.random.Generator):
    """Positions drawn from 2*pi*r*sigma(r) with uniform angles, on circular Saturn orbits."""
    lo, hi = model.density.support
    grid = np.linspace(lo, hi, SAMPLING_GRID)
    cdf = cumulative_trapezoid(2.0 * np.pi * grid * model.density.evaluate(grid), grid, initial=0.0)
    cdf /= cdf[-1]
    r = np.interp(rng.random(n), cdf, grid)
    theta = 2.0 * np.pi * rng.random(n)
    positions = np.column_stack((r * np.cos(theta), r * np.sin(theta)))
    speed = np.sqrt(model.saturn_mass / r)
    velocities = np.column_stack((-speed * np.sin(theta), speed * np.cos(theta)))
    return positions, velocities


def initialize_ensemble(config: ScenarioConfig, seed: int) -> ParticleEnsemble:
    """Sample radii from 2*pi*r*sigma(r), uniform angles, circular Saturn speed
    plus isotropic Gaussian dispersion."""
    model = config.model
    n = config.ensemble.size
    ring_mass = model.ring_mass()
    if ring_mass <= 0.0:
        raise DensityError("cannot sample an ensemble from a massless ring")
    rng = substream(seed, STREAM_ENSEMBLE)
    positions, velocities = sample_ring_orbits(model, n, rng)
    lo, hi = model.density.support
    dispersion = config.ensemble.velocity_dispersion
    if dispersion > 0.0:
        velocities = velocities + dispersion * rng.standard_normal((n, 2))
    masses = np.full(n, ring_mass / n)
    logger.info(f"Initialized {n} particles on [{lo:g}, {hi:g}] (ring mass {ring_mass:.6g}, seed {seed})")
    return ParticleEnsemble(positions, velocities, masses, seed)


def envelopes(radii: np.ndarray) -> tuple:
    if radii.size == 0:
        return math.nan, math.nan
    lo, hi = np.quantile(radii, ENVELOPE_QUANTILES)
    return float(lo), float(hi)


def rebin_edges(radii: np.ndarray, bins: int) -> np.ndarray:
    lo, hi = float(radii.min()), float(radii.max())
    pad = 1e-9 * max(hi - lo, hi)
    return np.linspace(lo - pad, hi + pad, bins + 1)


def _record(diag: RunDiagnostics, ensemble: ParticleEnsemble, force_field: ForceField, t: float,
            histogram: DensityProfile, b: float) -> None:
    radii = ensemble.radii()
    r1, r2 = envelopes(radii)
    phi = force_field.potential(ensemble.positions, t)
    if force_field.self_gravity and force_field.table is not None:
        # the mean-field self energy is shared by pairs
        phi = phi - 0.5 * force_field.table.potential(radii)
    diag.times.append(t)
    diag.inner_envelope.append(r1)
    diag.outer_envelope.append(r2)
    diag.total_energy.append(ensemble.kinetic_energy() + float(np.sum(ensemble.masses * phi)))
    diag.total_angular_momentum.append(float(np.sum(ensemble.angular_momenta())))
    diag.n_present.append(ensemble.size)
    diag.n_fallen.append(ensemble.fallen)
    diag.n_escaped.append(ensemble.escaped)
    diag.libration.append(b)
    diag.histograms.append(histogram)
    diag.radii.append(radii)


def run_model_a(config: ScenarioConfig, seed: Optional[int] = None, executor: Optional[Executor] = None,
                initial: Optional[ParticleEnsemble] = None) -> RunDiagnostics:
    """Leapfrog the ensemble, refreshing the ring density every `rebin_every` steps."""
    issues = validate_config(config)
    if config.features.collisions:
        issues.append(ConfigIssue(severity="error", code="collisions", path="features.collisions",
                                  message="Model A is collision-free; disable features.collisions"))
    if has_errors(issues):
        raise ConfigValidationError(issues)

    model = config.model
    integrator = config.integrator
    features = config.features
    seed = (config.seed if config.seed is not None else DEFAULT_SEED) if seed is None else seed
    ensemble = initialize_ensemble(config, seed) if initial is None else initial
    absorb, escape = config.absorb_radius(), config.escape_radius()
    steps = int(round(integrator.duration / integrator.dt))
    n_initial = ensemble.initial_size

    def refresh(current: ParticleEnsemble, t: float):
        histogram = rebin_density(current, rebin_edges(current.radii(), integrator.rebin_bins))
        table = None
        if features.self_gravity:
            table = RingFieldTable.build(model, histogram, absorb, 2.0 * model.outer_radius,
                                         integrator.table_points, integrator.table_tolerance, executor)
        force_field = ForceField(model, table, self_gravity=features.self_gravity, moons=features.moons,
                                 executor=executor)
        b = table.stable_libration(model.saturn_mass) if table is not None else math.nan
        return histogram, force_field, b

    diag = RunDiagnostics(seed=seed)
    histogram, force_field, b = refresh(ensemble, 0.0)
    _record(diag, ensemble, force_field, 0.0, histogram, b)
    logger.info(f"Model A run: {steps} steps of dt={integrator.dt:g}, rebin every {integrator.rebin_every}")

    t = 0.0
    for step in range(steps):
        ensemble = step_ensemble(ensemble, model, histogram, t, integrator.dt, force_field, absorb, escape)
        t = (step + 1) * integrator.dt
        lost = ensemble.fallen + ensemble.escaped
        if lost > MAX_LOST_FRACTION * n_initial:
            _record(diag, ensemble, force_field, t, histogram, b)
            logger.error(f"Run aborted at t={t:.6g}: {lost} of {n_initial} particles lost")
            raise RunAbortedError(f"more than half of the particles lost by t={t:.6g}", diag)
        if (step + 1) % integrator.rebin_every == 0 or step + 1 == steps:
            if ensemble.size == 0:
                break
            histogram, force_field, b = refresh(ensemble, t)
            _record(diag, ensemble, force_field, t, histogram, b)
            logger.info(f"t={t:.6g}: R1={diag.inner_envelope[-1]:.9g} R2={diag.outer_envelope[-1]:.9g} b={b:.6g}")
    return diag


def libration_hold(model: RingModel, radius: float, duration: float, dt: float, tol: float = 1e-10) -> np.ndarray:
    """Radii of one particle released at rest at `radius` in the exact Saturn + ring field."""
    ensemble = ParticleEnsemble.from_arrays([[radius, 0.0]], [[0.0, 0.0]])
    force_field = ForceField(model, exact=True, moons=False, tol=tol)
    radii = [radius]
    t = 0.0
    for step in range(int(round(duration / dt))):
        ensemble = step_ensemble(ensemble, model, model.density, t, dt, force_field)
        t = (step + 1) * dt
        radii.append(float(ensemble.radii()[0]))
    return np.array(radii)

