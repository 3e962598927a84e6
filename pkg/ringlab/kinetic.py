"""
Ring Lab - Kinetic Model B
Maxwellian sampling, macroscopic moments in the local polar frame, DSMC hard-disc
collisions with restitution, transport-equation residuals, cooling rates,
the pressure flux through circles near the ring edges and a force-free
periodic box for equilibrium checks.
"""

import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .diagnostics import StationarityTrend, stationarity_trend
from .dynamics import ForceField, ParticleEnsemble, RingFieldTable, sample_ring_orbits, step_ensemble
from .errors import (
    CollisionConfigError,
    ConfigValidationError,
    CoverageError,
    DensityError,
    DomainError,
    GeometryError,
    ShapeError,
)
from .models import (
    DEFAULT_SEED,
    CollisionParams,
    ConfigIssue,
    RingModel,
    ScenarioConfig,
    has_errors,
    validate_config,
)
from .parallel import STREAM_BOOTSTRAP, STREAM_COLLISIONS, STREAM_ENSEMBLE, STREAM_MAXWELL, ordered_map, substream

logger = logging.getLogger(__name__)

KAPPA_B = 1.0

RadialForce = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class VelocitySample:
    velocities: np.ndarray
    weight: float


@dataclass(frozen=True)
class MomentField:
    """Per radial cell moments; vectors and tensors in (R, phi) components."""
    edges: np.ndarray
    rho: np.ndarray
    U: np.ndarray
    T: np.ndarray
    P: np.ndarray
    q: np.ndarray
    count: np.ndarray
    mass: np.ndarray
    time: float = 0.0

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def empty(self) -> np.ndarray:
        return self.count == 0

    @property
    def pressure(self) -> np.ndarray:
        """Equation of state p = kappa_B rho T."""
        return KAPPA_B * self.rho * self.T

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "cell_R": self.centers,
            "rho": self.rho,
            "Ux": self.U[:, 0],
            "Uy": self.U[:, 1],
            "T": self.T,
            "Pxx": self.P[:, 0, 0],
            "Pxy": self.P[:, 0, 1],
            "Pyy": self.P[:, 1, 1],
            "qx": self.q[:, 0],
            "qy": self.q[:, 1],
            "count": self.count,
        })


@dataclass
class CollisionStats:
    """Collision bookkeeping for one or more DSMC steps.

    energy_dissipated sums (1 - e^2) mu g_n^2 / 2 per collision; particle_dissipation
    is the same loss read off the particle velocities.
    """
    collisions: int = 0
    candidates: int = 0
    momentum_residual: float = 0.0
    energy_dissipated: float = 0.0
    particle_dissipation: float = 0.0
    thermal_energy: float = 0.0
    dt: float = 0.0
    particles: int = 0
    collision_radii: np.ndarray = field(default_factory=lambda: np.zeros(0))
    collision_losses: np.ndarray = field(default_factory=lambda: np.zeros(0))
    collision_ledger: np.ndarray = field(default_factory=lambda: np.zeros(0))
    subcycled_cells: int = 0

    @property
    def zeta_hat(self) -> float:
        if self.dt <= 0.0 or self.thermal_energy <= 0.0:
            return 0.0 if self.energy_dissipated == 0.0 else math.nan
        return self.energy_dissipated / (self.dt * self.thermal_energy)

    @property
    def free_run_time(self) -> float:
        if self.collisions == 0:
            return math.inf
        return self.dt * self.particles / (2.0 * self.collisions)

    def merge(self, other: "CollisionStats") -> "CollisionStats":
        """Accumulate a later step; rates refer to the combined interval."""
        span = self.dt + other.dt
        thermal = (self.thermal_energy * self.dt + other.thermal_energy * other.dt) / span if span else 0.0
        return CollisionStats(
            collisions=self.collisions + other.collisions,
            candidates=self.candidates + other.candidates,
            momentum_residual=max(self.momentum_residual, other.momentum_residual),
            energy_dissipated=self.energy_dissipated + other.energy_dissipated,
            particle_dissipation=self.particle_dissipation + other.particle_dissipation,
            thermal_energy=thermal,
            dt=self.dt + other.dt,
            particles=other.particles,
            collision_radii=np.concatenate((self.collision_radii, other.collision_radii)),
            collision_losses=np.concatenate((self.collision_losses, other.collision_losses)),
            collision_ledger=np.concatenate((self.collision_ledger, other.collision_ledger)),
            subcycled_cells=self.subcycled_cells + other.subcycled_cells,
        )


@dataclass(frozen=True)
class ResidualNorms:
    """RMS residuals of the continuity, momentum and heat-balance equations."""
    continuity: float
    momentum_radial: float
    momentum_azimuthal: float
    energy: float

    def as_dict(self) -> Dict[str, float]:
        return {
            "continuity": self.continuity,
            "momentum_radial": self.momentum_radial,
            "momentum_azimuthal": self.momentum_azimuthal,
            "energy": self.energy,
        }


# ---------------------------------------------------------------------------
# Sampling and moments


def sample_maxwellian(rho: float, U: Sequence[float], T: float, n: int, seed: int) -> VelocitySample:
    """n 2D Gaussian velocities with mean U and per-axis variance kappa_B T."""
    if T < 0:
        raise DomainError(f"temperature must be nonnegative, got {T!r}")
    if n < 1:
        raise ValueError("need at least one velocity sample")
    mean = np.asarray(U, dtype=float).reshape(1, 2)
    rng = substream(seed, STREAM_MAXWELL)
    velocities = mean + math.sqrt(KAPPA_B * T) * rng.standard_normal((n, 2))
    return VelocitySample(velocities=velocities, weight=rho / n)


def _polar(positions: np.ndarray, velocities: np.ndarray):
    r = np.hypot(positions[:, 0], positions[:, 1])
    safe = np.where(r > 0.0, r, 1.0)
    cos, sin = positions[:, 0] / safe, positions[:, 1] / safe
    v_r = velocities[:, 0] * cos + velocities[:, 1] * sin
    v_phi = -velocities[:, 0] * sin + velocities[:, 1] * cos
    return r, np.column_stack((v_r, v_phi))


def compute_moments(ensemble: ParticleEnsemble, cells: Sequence[float], time: float = 0.0) -> MomentField:
    """Mass-weighted density, mean velocity, temperature, second moment and heat flux per radial cell."""
    edges = np.asarray(cells, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise GeometryError("moment cells must be strictly ascending")
    n_cells = edges.size - 1
    r, v = _polar(ensemble.positions, ensemble.velocities)
    inside = (r >= edges[0]) & (r < edges[-1])
    index = np.searchsorted(edges, r[inside], side="right") - 1
    m, v = ensemble.masses[inside], v[inside]

    def sums(weights):
        return np.bincount(index, weights=weights, minlength=n_cells)

    count = np.bincount(index, minlength=n_cells)
    mass = sums(m)
    occupied = mass > 0.0
    denom = np.where(occupied, mass, 1.0)

    U = np.column_stack([sums(m * v[:, k]) / denom for k in range(2)])
    W = v - U[index]
    w2 = np.sum(W ** 2, axis=1)
    T = sums(m * w2) / (2.0 * KAPPA_B * denom)
    P = np.zeros((n_cells, 2, 2))
    for a in range(2):
        for b in range(a, 2):
            P[:, a, b] = sums(m * v[:, a] * v[:, b]) / denom
            P[:, b, a] = P[:, a, b]
    q = np.column_stack([sums(m * w2 * v[:, k]) / denom for k in range(2)])

    area = np.pi * (edges[1:] ** 2 - edges[:-1] ** 2)
    rho = mass / area
    U[~occupied] = 0.0
    T[~occupied] = 0.0
    q[~occupied] = 0.0
    return MomentField(edges=edges, rho=rho, U=U, T=T, P=P, q=q, count=count, mass=mass, time=time)


# ---------------------------------------------------------------------------
# Collisions


def collide_pair(v1, v2, m1, m2, normal, restitution: float):
    """Hard-disc impulse along unit normal(s); returns (v1', v2', energy loss).

    Works on single pairs or stacked arrays of pairs.
    """
    v1, v2 = np.asarray(v1, dtype=float), np.asarray(v2, dtype=float)
    n = np.asarray(normal, dtype=float)
    m1, m2 = np.asarray(m1, dtype=float), np.asarray(m2, dtype=float)
    total = m1 + m2
    g_n = np.sum((v1 - v2) * n, axis=-1)
    impulse = ((1.0 + restitution) * g_n)[..., None] * n
    v1_new = v1 - (m2 / total)[..., None] * impulse
    v2_new = v2 + (m1 / total)[..., None] * impulse
    reduced = m1 * m2 / total
    loss = 0.5 * (1.0 - restitution ** 2) * reduced * g_n ** 2
    return v1_new, v2_new, loss


def _zigzag(k: np.ndarray) -> np.ndarray:
    return np.where(k >= 0, 2 * k, -2 * k - 1)


def _cell_key(ix: np.ndarray, iy: np.ndarray) -> np.ndarray:
    a, b = _zigzag(ix), _zigzag(iy)
    return (a + b) * (a + b + 1) // 2 + b


def _collide_cell(members: np.ndarray, key: int, velocities: np.ndarray, masses: np.ndarray,
                  positions: np.ndarray, params: CollisionParams, dt: float, seed: int, step: int):
    """Collide one cell; returns (outcome, candidates, thermal energy, rounds).

    More than n/2 candidates do not fit in one set of disjoint pairs, so they are
    spread over successive rounds, each pairing the velocities left by the last.
    """
    n = members.size
    v = velocities[members]
    m = masses[members]
    mean = np.sum(m[:, None] * v, axis=0) / np.sum(m)
    thermal = 0.5 * float(np.sum(m * np.sum((v - mean) ** 2, axis=1)))
    g_max = 2.0 * float(np.max(np.hypot(v[:, 0] - mean[0], v[:, 1] - mean[1])))
    sigma = params.cross_section
    if n < 2 or g_max == 0.0 or sigma == 0.0:
        return None, 0, thermal, 0

    rng = substream(seed, STREAM_COLLISIONS, step, key)
    area = params.cell_size ** 2
    expected = 0.5 * n * (n - 1) * params.particle_weight * sigma * g_max * dt / area
    candidates = int(math.floor(expected))
    if rng.random() < expected - candidates:
        candidates += 1
    if candidates == 0:
        return None, 0, thermal, 0

    v = v.copy()
    losses, ledger, radii = [], [], []
    remaining, rounds = candidates, 0
    while remaining > 0:
        batch = min(remaining, n // 2)
        remaining -= batch
        rounds += 1
        order = rng.permutation(n)[: 2 * batch]
        first, second = order[0::2], order[1::2]
        g = v[first] - v[second]
        speed = np.hypot(g[:, 0], g[:, 1])
        accept = rng.random(batch) * g_max < speed
        impact = rng.uniform(-1.0, 1.0, batch)
        first, second, g, speed, impact = first[accept], second[accept], g[accept], speed[accept], impact[accept]
        if first.size == 0:
            continue

        unit = g / speed[:, None]
        perpendicular = np.column_stack((-unit[:, 1], unit[:, 0]))
        normal = np.sqrt(1.0 - impact ** 2)[:, None] * unit + impact[:, None] * perpendicular
        v1, v2, loss = collide_pair(v[first], v[second], m[first], m[second], normal, params.restitution)

        before = 0.5 * (m[first] * np.sum(v[first] ** 2, axis=1) + m[second] * np.sum(v[second] ** 2, axis=1))
        after = 0.5 * (m[first] * np.sum(v1 ** 2, axis=1) + m[second] * np.sum(v2 ** 2, axis=1))
        mid = 0.5 * (positions[members[first]] + positions[members[second]])
        v[first], v[second] = v1, v2
        losses.append(loss)
        ledger.append(before - after)
        radii.append(np.hypot(mid[:, 0], mid[:, 1]))

    if not losses:
        return None, candidates, thermal, rounds
    outcome = (members, v, np.concatenate(losses), np.concatenate(ledger), np.concatenate(radii))
    return outcome, candidates, thermal, rounds


def dsmc_collide(ensemble: ParticleEnsemble, params: CollisionParams, dt: float, seed: int, step: int = 0,
                 executor: Optional[Executor] = None):
    """No-time-counter DSMC over square cells; each cell draws from its own substream."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    if params.cell_size < 2.0 * params.particle_radius:
        raise CollisionConfigError(
            f"cell size {params.cell_size!r} is smaller than the particle diameter {2.0 * params.particle_radius!r}")
    if ensemble.size == 0:
        return ensemble, CollisionStats(dt=dt)

    positions, masses = ensemble.positions, ensemble.masses
    velocities = ensemble.velocities.copy()
    ix = np.floor(positions[:, 0] / params.cell_size).astype(np.int64)
    iy = np.floor(positions[:, 1] / params.cell_size).astype(np.int64)
    keys = _cell_key(ix, iy)
    order = np.argsort(keys, kind="stable")
    unique_keys, starts = np.unique(keys[order], return_index=True)
    groups = np.split(order, starts[1:])

    def work(item):
        key, members = item
        return _collide_cell(members, int(key), ensemble.velocities, masses, positions, params, dt, seed, step)

    results = ordered_map(work, list(zip(unique_keys, groups)), executor)

    momentum_before = np.sum(masses[:, None] * ensemble.velocities, axis=0)
    stats = CollisionStats(dt=dt, particles=ensemble.size)
    radii, losses, ledger = [], [], []
    for outcome, candidates, thermal, rounds in results:
        stats.candidates += candidates
        stats.thermal_energy += thermal
        stats.subcycled_cells += int(rounds > 1)
        if outcome is None:
            continue
        members, v_cell, loss, direct, where = outcome
        velocities[members] = v_cell
        stats.collisions += int(loss.size)
        radii.append(where)
        losses.append(loss)
        ledger.append(direct)

    if losses:
        stats.collision_radii = np.concatenate(radii)
        stats.collision_losses = np.concatenate(losses)
        stats.collision_ledger = np.concatenate(ledger)
        stats.energy_dissipated = float(math.fsum(stats.collision_losses))
        stats.particle_dissipation = float(math.fsum(stats.collision_ledger))
    momentum_after = np.sum(masses[:, None] * velocities, axis=0)
    scale = float(np.sum(masses * np.hypot(velocities[:, 0], velocities[:, 1]))) or 1.0
    stats.momentum_residual = float(np.max(np.abs(momentum_after - momentum_before))) / scale
    if stats.subcycled_cells:
        logger.warning(f"DSMC step {step}: dt={dt:g} exceeds the mean collision time in "
                       f"{stats.subcycled_cells} cell(s); collisions were sub-cycled")
    logger.debug(f"DSMC step {step}: {stats.collisions} collisions of {stats.candidates} candidates")
    return replace(ensemble, velocities=velocities), stats


def estimate_cooling_rate(stats: CollisionStats, field: MomentField, ledger: bool = False) -> np.ndarray:
    """Per-cell cooling rate zeta = D / (dt M kappa_B T); NaN marks empty or cold cells."""
    losses = stats.collision_ledger if ledger else stats.collision_losses
    n_cells = field.edges.size - 1
    index = np.searchsorted(field.edges, stats.collision_radii, side="right") - 1
    valid = (index >= 0) & (index < n_cells)
    dissipated = np.bincount(index[valid], weights=losses[valid], minlength=n_cells)
    defined = (field.count > 0) & (field.T > 0.0)
    zeta = np.full(n_cells, np.nan)
    if stats.dt > 0.0:
        zeta[defined] = dissipated[defined] / (stats.dt * field.mass[defined] * KAPPA_B * field.T[defined])
    return zeta


# ---------------------------------------------------------------------------
# Transport residuals


def _check_snapshots(snapshots: Sequence[MomentField]) -> float:
    if len(snapshots) < 3:
        raise ShapeError(f"need at least 3 moment snapshots, got {len(snapshots)}")
    edges = snapshots[0].edges
    for s in snapshots[1:]:
        if s.edges.shape != edges.shape or not np.array_equal(s.edges, edges):
            raise ShapeError("moment snapshots are on different cell grids")
    times = np.array([s.time for s in snapshots])
    steps = np.diff(times)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ShapeError("moment snapshots must be uniformly spaced in time")
    return float(steps[0])


def _rms(values: np.ndarray, mask: np.ndarray) -> float:
    picked = values[mask]
    return float(np.sqrt(np.mean(picked ** 2))) if picked.size else math.nan


def moment_residuals(snapshots: Sequence[MomentField], force: Optional[RadialForce] = None,
                     zeta: Optional[Sequence[np.ndarray]] = None) -> ResidualNorms:
    """Centered-difference residuals of the polar continuity, momentum and heat
    equations, RMS over interior cells and interior snapshots."""
    dt = _check_snapshots(snapshots)
    r = snapshots[0].centers
    rho = np.array([s.rho for s in snapshots])
    U = np.array([s.U for s in snapshots])
    P = np.array([s.P for s in snapshots])
    T = np.array([s.T for s in snapshots])
    q = np.array([s.q for s in snapshots])
    F = np.zeros_like(r) if force is None else np.asarray(force(r), dtype=float)
    Z = np.zeros_like(T) if zeta is None else np.nan_to_num(np.array(zeta, dtype=float))

    def d_dt(a):
        return (a[2:] - a[:-2]) / (2.0 * dt)

    def div(a, power=1):
        return np.gradient(r ** power * a, r, axis=-1) / r ** power

    mid = slice(1, -1)
    continuity = d_dt(rho) + div(rho * U[..., 0])[mid]
    momentum_r = (d_dt(rho * U[..., 0]) + div(rho * P[..., 0, 0])[mid]
                  - (rho * P[..., 1, 1])[mid] / r - (rho * F)[mid])
    momentum_phi = d_dt(rho * U[..., 1]) + div(rho * P[..., 0, 1], power=2)[mid]
    energy = 2.0 * d_dt(rho * KAPPA_B * T) + div(rho * KAPPA_B * q[..., 0])[mid] + (Z * T)[mid]

    occupied = np.all(np.array([s.count > 0 for s in snapshots]), axis=0)
    mask = np.zeros_like(occupied)
    mask[1:-1] = occupied[1:-1] & occupied[:-2] & occupied[2:]
    mask = np.broadcast_to(mask, continuity.shape)
    return ResidualNorms(
        continuity=_rms(continuity, mask),
        momentum_radial=_rms(momentum_r, mask),
        momentum_azimuthal=_rms(momentum_phi, mask),
        energy=_rms(energy, mask),
    )


def residual_noise_floor(ensembles: Sequence[ParticleEnsemble], times: Sequence[float], cells: Sequence[float],
                         force: Optional[RadialForce] = None, resamples: int = 50,
                         seed: int = DEFAULT_SEED) -> ResidualNorms:
    """Statistical floor of each residual: mean + 3 std over particle bootstraps.

    Particles are resampled once per replicate and followed through every snapshot.
    """
    size = ensembles[0].size
    if any(e.size != size for e in ensembles):
        raise ShapeError("bootstrap needs the same particles in every snapshot")
    if resamples < 2:
        raise ValueError("need at least two bootstrap resamples")
    rng = substream(seed, STREAM_BOOTSTRAP)
    rows = []
    for _ in range(resamples):
        pick = rng.integers(0, size, size)
        snaps = []
        for ensemble, t in zip(ensembles, times):
            resampled = ParticleEnsemble(ensemble.positions[pick], ensemble.velocities[pick],
                                         ensemble.masses[pick], ensemble.seed)
            snaps.append(compute_moments(resampled, cells, t))
        rows.append(moment_residuals(snaps, force).as_dict())
    frame = pd.DataFrame(rows)
    floor = frame.mean() + 3.0 * frame.std(ddof=1)
    return ResidualNorms(**{k: float(floor[k]) for k in frame.columns})


# ---------------------------------------------------------------------------
# Edge pressure flux


def circle_flux(field: MomentField, radius: float, normal_sign: float) -> float:
    """Flux of rho P through the circle R = radius along normal_sign * e_R."""
    centers = field.centers
    if not centers[0] <= radius <= centers[-1]:
        raise CoverageError(f"R={radius!r} lies outside the moment cells [{centers[0]!r}, {centers[-1]!r}]")
    rho_p = np.interp(radius, centers, field.rho * field.P[:, 0, 0])
    return float(normal_sign * 2.0 * math.pi * radius * rho_p)


def edge_flux_diagnostic(field: MomentField, model: RingModel, deltas: Sequence[float]) -> pd.DataFrame:
    """Pressure flux through R = R1 + delta and R = R2 - delta for each delta.

    Both circles use the normal pointing into the ring interior, so net_inward
    adds the thrust across the inner circle to the thrust across the outer one.
    """
    d = np.asarray(deltas, dtype=float)
    if d.size == 0 or np.any(d <= 0) or np.any(np.diff(d) <= 0):
        raise GeometryError("deltas must be positive and ascending")
    if d[-1] >= model.width / 4.0:
        raise GeometryError(f"delta {d[-1]!r} is not below a quarter of the ring width")
    rows = []
    for delta in d:
        inner = circle_flux(field, model.inner_radius + delta, 1.0)
        outer = circle_flux(field, model.outer_radius - delta, -1.0)
        rows.append({"delta": float(delta), "inner_flux": inner, "outer_flux": outer, "net_inward": inner - outer})
    return pd.DataFrame(rows)


# ---------------------------------------------------------------------------
# Pipeline


def maxwellian_ring_ensemble(config: ScenarioConfig, seed: int) -> ParticleEnsemble:
    """Ring particles on circular orbits plus Maxwellian peculiar velocities.

    Masses follow the configured spectrum, rescaled to the ring mass.
    """
    model = config.model
    n = config.ensemble.size
    ring_mass = model.ring_mass()
    if ring_mass <= 0.0:
        raise DensityError("cannot sample an ensemble from a massless ring")
    rng = substream(seed, STREAM_ENSEMBLE)
    positions, circular = sample_ring_orbits(model, n, rng)
    thermal = sample_maxwellian(ring_mass, (0.0, 0.0), config.kinetic.temperature, n, seed).velocities
    masses = config.collisions.mass_spectrum.sample(n, rng)
    masses = masses * (ring_mass / float(np.sum(masses)))
    return ParticleEnsemble(positions, circular + thermal, masses, seed)


@dataclass
class KineticResult:
    snapshots: List[MomentField]
    collision_log: pd.DataFrame
    residuals: ResidualNorms
    zeta: List[np.ndarray]
    edge_flux: pd.DataFrame
    stats: CollisionStats
    noise_floor: Optional[ResidualNorms] = None

    def residual_frame(self) -> pd.DataFrame:
        residuals = self.residuals.as_dict()
        floor = self.noise_floor.as_dict() if self.noise_floor is not None else {}
        return pd.DataFrame({
            "equation": list(residuals),
            "residual": list(residuals.values()),
            "noise_floor": [floor.get(k, math.nan) for k in residuals],
        })


def run_kinetic(config: ScenarioConfig, seed: Optional[int] = None,
                executor: Optional[Executor] = None) -> KineticResult:
    """Stream in the frozen field, collide, snapshot moments, then compute
    residuals, cooling rates and the edge flux."""
    issues = validate_config(config)
    if has_errors(issues):
        raise ConfigValidationError(issues)
    model, integrator, kinetic, features = config.model, config.integrator, config.kinetic, config.features
    seed = (config.seed if config.seed is not None else DEFAULT_SEED) if seed is None else seed
    params = config.collisions
    if features.collisions and params.cell_size < 2.0 * params.particle_radius:
        raise CollisionConfigError("cell size is smaller than the particle diameter")

    ensemble = maxwellian_ring_ensemble(config, seed)
    absorb, escape = config.absorb_radius(), config.escape_radius()
    table = None
    if features.self_gravity:
        table = RingFieldTable.build(model, model.density, absorb, 2.0 * model.outer_radius,
                                     integrator.table_points, integrator.table_tolerance, executor)
    force_field = ForceField(model, table, self_gravity=features.self_gravity, moons=features.moons,
                             executor=executor)

    def radial_force(r: np.ndarray) -> np.ndarray:
        ring = table.force(r) if table is not None else 0.0
        return -model.saturn_mass / r ** 2 + ring

    cells = np.linspace(model.inner_radius, model.outer_radius, kinetic.cells + 1)
    snapshots = [compute_moments(ensemble, cells, 0.0)]
    streamed = [ensemble]
    zeta = [np.zeros(kinetic.cells)]
    log_rows = []
    total = CollisionStats()
    window = CollisionStats()
    t = 0.0
    steps = (kinetic.snapshots - 1) * kinetic.snapshot_every
    logger.info(f"Kinetic run: {ensemble.size} particles, {steps} steps, collisions={'on' if features.collisions else 'off'}")
    for step in range(steps):
        ensemble = step_ensemble(ensemble, model, model.density, t, integrator.dt, force_field, absorb, escape)
        t = (step + 1) * integrator.dt
        if features.collisions:
            ensemble, stats = dsmc_collide(ensemble, params, integrator.dt, seed, step, executor)
            window = stats if window.dt == 0.0 else window.merge(stats)
            total = stats if total.dt == 0.0 else total.merge(stats)
            log_rows.append({"t": t, "collisions": stats.collisions, "dE": stats.energy_dissipated,
                             "zeta_hat": stats.zeta_hat, "lambda_hat": stats.free_run_time})
        if (step + 1) % kinetic.snapshot_every == 0:
            snap = compute_moments(ensemble, cells, t)
            snapshots.append(snap)
            streamed.append(ensemble)
            zeta.append(estimate_cooling_rate(window, snap) if window.dt else np.zeros(kinetic.cells))
            window = CollisionStats()
            logger.info(f"Snapshot t={t:.6g}: {int(snap.count.sum())} particles in cells")

    residuals = moment_residuals(snapshots, radial_force, zeta)
    noise_floor = None
    if kinetic.bootstrap >= 2:
        if ensemble.fallen or ensemble.escaped:
            logger.warning("Particles were lost during the run; skipping the residual noise floor")
        else:
            times = [s.time for s in snapshots]
            noise_floor = residual_noise_floor(streamed, times, cells, radial_force, kinetic.bootstrap, seed)
    deltas = [f * model.width for f in sorted(kinetic.delta_fractions)]
    edge_flux = edge_flux_diagnostic(snapshots[-1], model, deltas)
    collision_log = pd.DataFrame(log_rows, columns=["t", "collisions", "dE", "zeta_hat", "lambda_hat"])
    return KineticResult(snapshots, collision_log, residuals, zeta, edge_flux, total, noise_floor)


# ---------------------------------------------------------------------------
# Periodic box


@dataclass
class BoxResult:
    """Temperature record of a force-free periodic box."""
    times: np.ndarray
    temperature: np.ndarray
    kinetic_energy: np.ndarray
    collisions: np.ndarray
    trend: StationarityTrend

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.times,
            "T": self.temperature,
            "E": self.kinetic_energy,
            "collisions": self.collisions,
        })


def box_ensemble(size: float, n: int, temperature: float, params: CollisionParams, seed: int) -> ParticleEnsemble:
    """Uniform positions in [0, size)^2; each particle Maxwellian at its own mass."""
    rng = substream(seed, STREAM_ENSEMBLE)
    positions = size * rng.random((n, 2))
    masses = params.mass_spectrum.sample(n, rng)
    unit = sample_maxwellian(1.0, (0.0, 0.0), temperature, n, seed).velocities
    return ParticleEnsemble(positions, unit / np.sqrt(masses)[:, None], masses, seed)


def stream_periodic(ensemble: ParticleEnsemble, dt: float, size: float) -> ParticleEnsemble:
    wrapped = np.mod(ensemble.positions + dt * ensemble.velocities, size)
    wrapped = np.where(wrapped >= size, wrapped - size, wrapped)
    return replace(ensemble, positions=wrapped)


def box_temperature(ensemble: ParticleEnsemble, size: float, cell_size: float) -> float:
    """Mass-weighted mean of the cell temperatures over a square cell tiling."""
    per_side = int(round(size / cell_size))
    ij = np.clip(np.floor(ensemble.positions / cell_size).astype(np.int64), 0, per_side - 1)
    cell = ij[:, 0] * per_side + ij[:, 1]
    m, v = ensemble.masses, ensemble.velocities
    cells = per_side * per_side
    mass = np.bincount(cell, weights=m, minlength=cells)
    px = np.bincount(cell, weights=m * v[:, 0], minlength=cells)
    py = np.bincount(cell, weights=m * v[:, 1], minlength=cells)
    energy = np.bincount(cell, weights=m * np.sum(v * v, axis=1), minlength=cells)
    occupied = mass > 0.0
    thermal = energy[occupied] - (px[occupied] ** 2 + py[occupied] ** 2) / mass[occupied]
    return float(np.sum(thermal) / (2.0 * KAPPA_B * np.sum(mass)))


def run_periodic_box(config: ScenarioConfig, seed: Optional[int] = None,
                     executor: Optional[Executor] = None) -> BoxResult:
    """Stream and collide a force-free gas in a periodic box and test its temperature for a trend."""
    issues = validate_config(config)
    box, params = config.box, config.collisions
    ratio = box.size / params.cell_size
    if abs(ratio - round(ratio)) > 1e-9 * ratio:
        issues.append(ConfigIssue(severity="error", code="box", path="box.size",
                                  message="box size must be a whole number of collision cells"))
    if has_errors(issues):
        raise ConfigValidationError(issues)
    if params.restitution < 1.0:
        logger.warning(f"Periodic box with restitution {params.restitution:g} cools; expect a falling trend")
    seed = (config.seed if config.seed is not None else DEFAULT_SEED) if seed is None else seed

    ensemble = box_ensemble(box.size, box.particles, box.temperature, params, seed)
    times, temperature = [0.0], [box_temperature(ensemble, box.size, params.cell_size)]
    energy, collisions = [ensemble.kinetic_energy()], [0]
    count = 0
    logger.info(f"Periodic box: {box.particles} particles, {box.steps} steps of dt={box.dt:g}")
    for step in range(box.steps):
        ensemble = stream_periodic(ensemble, box.dt, box.size)
        ensemble, stats = dsmc_collide(ensemble, params, box.dt, seed, step, executor)
        count += stats.collisions
        if (step + 1) % box.record_every == 0:
            times.append((step + 1) * box.dt)
            temperature.append(box_temperature(ensemble, box.size, params.cell_size))
            energy.append(ensemble.kinetic_energy())
            collisions.append(count)
            count = 0

    trend = stationarity_trend(times, temperature, box.bootstrap, seed=seed)
    logger.info(f"Box temperature mean {trend.mean:.6g}, slope {trend.slope:.3g} +/- {trend.standard_error:.3g}")
    return BoxResult(np.array(times), np.array(temperature), np.array(energy), np.array(collisions), trend)
