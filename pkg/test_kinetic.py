#!/usr/bin/env python3
"""
Test script for Ring Lab - Kinetic Model B
Tests Maxwellian sampling, polar moments, DSMC collisions, cooling rates,
transport residuals, the edge pressure flux and the periodic-box equilibrium
"""

import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from ringlab.diagnostics import stationarity_trend
from ringlab.dynamics import ForceField, ParticleEnsemble, step_ensemble
from ringlab.errors import (
    CollisionConfigError,
    ConfigValidationError,
    CoverageError,
    DomainError,
    GeometryError,
    InsufficientDataError,
    ShapeError,
)
from ringlab.kinetic import (
    box_ensemble,
    circle_flux,
    collide_pair,
    compute_moments,
    dsmc_collide,
    edge_flux_diagnostic,
    estimate_cooling_rate,
    moment_residuals,
    run_kinetic,
    run_periodic_box,
    sample_maxwellian,
    stream_periodic,
)
from ringlab.models import CollisionParams, DensityProfile, RingModel, load_config, parse_config

SCENARIOS = Path(__file__).parent / "scenarios"


def ring_model() -> RingModel:
    sigma = 0.02 / (3.0 * math.pi)
    return RingModel(saturn_mass=1.0, inner_radius=1.0, outer_radius=2.0,
                     density=DensityProfile.uniform(sigma, 1.0, 2.0))


def kinetic_scenario(**blocks):
    sigma = 0.02 / (3.0 * math.pi)
    data = {
        "name": "kinetic-test",
        "model": {
            "saturn_mass": 1.0,
            "inner_radius": 1.0,
            "outer_radius": 2.0,
            "density": {"knots": [1.0, 2.0], "values": [sigma, sigma]},
        },
        "seed": 9,
    }
    data.update(blocks)
    return parse_config(data)


def box_gas(n: int, temperature: float, seed: int) -> ParticleEnsemble:
    """Equal-mass Maxwellian gas inside one collision cell at R ~ 1.45."""
    rng = np.random.default_rng(seed)
    positions = 1.01 + 0.03 * rng.random((n, 2))
    velocities = sample_maxwellian(1.0, (0.0, 0.0), temperature, n, seed).velocities
    return ParticleEnsemble(positions, velocities, np.ones(n), seed)


def annulus_gas(n: int, temperature: float, seed: int, r_in: float = 1.0, r_out: float = 2.0) -> ParticleEnsemble:
    """Uniform isotropic gas in r_in < R < r_out with no bulk rotation and surface density 1."""
    rng = np.random.default_rng(seed)
    r = np.sqrt(r_in ** 2 + (r_out ** 2 - r_in ** 2) * rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    positions = np.column_stack((r * np.cos(theta), r * np.sin(theta)))
    velocities = sample_maxwellian(1.0, (0.0, 0.0), temperature, n, seed).velocities
    return ParticleEnsemble(positions, velocities, np.full(n, math.pi * (r_out ** 2 - r_in ** 2) / n), seed)


def test_sample_maxwellian():
    """Cold samples sit exactly on the mean; negative temperatures are rejected"""
    print("🎲 Testing Maxwellian sampling...")

    cold = sample_maxwellian(2.0, (0.5, -0.25), 0.0, 100, seed=1)
    assert np.all(cold.velocities == np.array([0.5, -0.25]))
    assert cold.weight == pytest.approx(0.02)

    again = sample_maxwellian(2.0, (0.0, 0.0), 0.3, 50, seed=1)
    same = sample_maxwellian(2.0, (0.0, 0.0), 0.3, 50, seed=1)
    assert np.array_equal(again.velocities, same.velocities)

    # the mean enters as a pure shift of the same Gaussian draws
    shifted = sample_maxwellian(2.0, (3.0, 0.0), 0.3, 50, seed=1)
    np.testing.assert_array_equal(shifted.velocities, again.velocities + np.array([3.0, 0.0]))
    scaled = sample_maxwellian(2.0, (0.0, 0.0), 1.2, 50, seed=1)
    np.testing.assert_allclose(scaled.velocities, 2.0 * again.velocities, rtol=1e-15)

    with pytest.raises(DomainError):
        sample_maxwellian(1.0, (0.0, 0.0), -1e-3, 10, seed=1)
    print("✅ Maxwellian sampling passed")


def test_single_particle_moments():
    """One particle: density is its mass over the cell area and it carries no temperature"""
    print("\n📏 Testing single-particle moments...")

    ensemble = ParticleEnsemble.from_arrays([[0.0, 1.5]], [[-1.2, 0.3]], [0.7])
    field = compute_moments(ensemble, [1.0, 2.0], time=0.5)
    assert field.rho[0] == pytest.approx(0.7 / (3.0 * math.pi))
    # at phi = pi/2 the Cartesian (-1.2, 0.3) is v_R = 0.3, v_phi = 1.2
    np.testing.assert_allclose(field.U[0], [0.3, 1.2], atol=1e-15)
    assert field.T[0] == 0.0
    assert field.count.tolist() == [1]
    assert field.time == 0.5

    empty = compute_moments(ensemble, [2.0, 3.0, 4.0])
    assert empty.empty.all()
    assert np.all(empty.rho == 0.0) and np.all(empty.T == 0.0)

    with pytest.raises(GeometryError):
        compute_moments(ensemble, [2.0, 1.0])
    print("✅ Single-particle moments passed")


def test_maxwellian_moments_recovered():
    """Sampled Maxwellian cell: T, U, P and q within five standard errors"""
    print("\n📈 Testing Maxwellian moment recovery...")

    n, temperature = 100_000, 0.01
    velocities = sample_maxwellian(1.0, (0.0, 0.0), temperature, n, seed=21).velocities
    # every particle on the positive x axis, so polar and Cartesian components coincide
    positions = np.column_stack((np.full(n, 1.5), np.zeros(n)))
    field = compute_moments(ParticleEnsemble(positions, velocities, np.ones(n)), [1.0, 2.0])

    assert abs(field.T[0] - temperature) < 5.0 * temperature / math.sqrt(n)
    assert np.all(np.abs(field.U[0]) < 5.0 * math.sqrt(temperature / n))
    diagonal_se = temperature * math.sqrt(2.0 / n)
    assert abs(field.P[0, 0, 0] - temperature) < 5.0 * diagonal_se
    assert abs(field.P[0, 1, 1] - temperature) < 5.0 * diagonal_se
    assert abs(field.P[0, 0, 1]) < 5.0 * temperature / math.sqrt(n)
    assert field.P[0, 0, 1] == field.P[0, 1, 0]
    assert np.all(np.abs(field.q[0]) < 5.0 * math.sqrt(24.0 * temperature ** 3 / n))
    assert field.pressure[0] == pytest.approx(field.rho[0] * field.T[0])
    print("✅ Maxwellian moments passed")


def test_collide_pair():
    """Elastic head-on exchange and inelastic two-body algebra"""
    print("\n🎱 Testing pair collisions...")

    v1, v2, loss = collide_pair([1.0, 0.0], [-1.0, 0.0], 1.0, 1.0, [1.0, 0.0], 1.0)
    np.testing.assert_allclose(v1, [-1.0, 0.0])
    np.testing.assert_allclose(v2, [1.0, 0.0])
    assert loss == 0.0

    m1, m2, e = 2.0, 3.0, 0.5
    a, b = np.array([0.4, 0.1]), np.array([-0.3, 0.2])
    normal = np.array([3.0, 4.0]) / 5.0
    a2, b2, loss = collide_pair(a, b, m1, m2, normal, e)
    g_before, g_after = np.dot(a - b, normal), np.dot(a2 - b2, normal)
    assert g_after == pytest.approx(-e * g_before)
    np.testing.assert_allclose(m1 * a2 + m2 * b2, m1 * a + m2 * b, atol=1e-15)
    tangent = np.array([-normal[1], normal[0]])
    assert np.dot(a2 - b2, tangent) == pytest.approx(np.dot(a - b, tangent))
    ke = lambda x, y: 0.5 * m1 * np.dot(x, x) + 0.5 * m2 * np.dot(y, y)
    reduced = m1 * m2 / (m1 + m2)
    assert ke(a, b) - ke(a2, b2) == pytest.approx(0.5 * (1.0 - e ** 2) * reduced * g_before ** 2)
    assert loss == pytest.approx(ke(a, b) - ke(a2, b2))
    print("✅ Pair collisions passed")


def test_dsmc_conservation_and_cooling():
    """DSMC conserves momentum, never heats, and both cooling-rate paths agree"""
    print("\n🔥 Testing DSMC collisions...")

    gas = box_gas(2000, 1.0, seed=4)
    params = CollisionParams(restitution=0.9, particle_radius=0.01, cell_size=0.05)
    after, stats = dsmc_collide(gas, params, 1e-3, seed=4)

    assert stats.collisions > 50
    assert stats.momentum_residual < 1e-13
    assert after.kinetic_energy() <= gas.kinetic_energy()
    assert gas.kinetic_energy() - after.kinetic_energy() == pytest.approx(stats.energy_dissipated, rel=1e-9)
    assert stats.particle_dissipation == pytest.approx(stats.energy_dissipated, rel=1e-9)
    assert np.array_equal(after.masses, gas.masses)
    assert np.array_equal(after.positions, gas.positions)
    assert stats.free_run_time == pytest.approx(1e-3 * 2000 / (2.0 * stats.collisions))
    assert stats.zeta_hat > 0.0

    cells = [1.40, 1.44, 1.48, 1.52]
    field = compute_moments(gas, cells)
    zeta = estimate_cooling_rate(stats, field)
    zeta_ledger = estimate_cooling_rate(stats, field, ledger=True)
    occupied = field.count > 0
    assert np.all(zeta[occupied] > 0.0)
    np.testing.assert_allclose(zeta[occupied], zeta_ledger[occupied], rtol=1e-9)
    assert np.all(np.isnan(zeta[~occupied]))

    elastic = CollisionParams(restitution=1.0, particle_radius=0.01, cell_size=0.05)
    bounced, elastic_stats = dsmc_collide(gas, elastic, 1e-3, seed=4)
    assert elastic_stats.collisions > 0
    assert np.all(estimate_cooling_rate(elastic_stats, field)[occupied] == 0.0)
    assert bounced.kinetic_energy() == pytest.approx(gas.kinetic_energy(), rel=1e-12)

    pointlike = CollisionParams(restitution=0.5, particle_radius=0.0, cell_size=0.05)
    untouched, no_stats = dsmc_collide(gas, pointlike, 1e-3, seed=4)
    assert no_stats.collisions == 0
    assert np.array_equal(untouched.velocities, gas.velocities)
    assert np.all(estimate_cooling_rate(no_stats, field)[occupied] == 0.0)
    print(f"   {stats.collisions} collisions, zeta_hat={stats.zeta_hat:.4g}")
    print("✅ DSMC collisions passed")


def test_dsmc_errors_and_determinism():
    """Bad cell sizes fail; outcomes are bitwise reproducible with and without threads"""
    print("\n🧵 Testing DSMC errors and determinism...")

    gas = annulus_gas(5000, 1e-2, seed=8)
    with pytest.raises(CollisionConfigError):
        dsmc_collide(gas, CollisionParams(particle_radius=0.1, cell_size=0.05), 1e-3, seed=1)
    with pytest.raises(ValueError):
        dsmc_collide(gas, CollisionParams(), 0.0, seed=1)

    params = CollisionParams(restitution=0.8, particle_radius=0.005, cell_size=0.05, particle_weight=200.0)
    first, first_stats = dsmc_collide(gas, params, 1e-2, seed=3, step=7)
    second, _ = dsmc_collide(gas, params, 1e-2, seed=3, step=7)
    with ThreadPoolExecutor(max_workers=4) as pool:
        threaded, threaded_stats = dsmc_collide(gas, params, 1e-2, seed=3, step=7, executor=pool)
    assert first_stats.collisions > 0
    assert np.array_equal(first.velocities, second.velocities)
    assert np.array_equal(first.velocities, threaded.velocities)
    assert first_stats.energy_dissipated == threaded_stats.energy_dissipated

    other, _ = dsmc_collide(gas, params, 1e-2, seed=3, step=8)
    assert not np.array_equal(first.velocities, other.velocities)
    print("✅ DSMC errors and determinism passed")


def test_collision_rate_independent_of_dt():
    """Dense cell: collisions per unit time and the free-run time do not depend on the step size"""
    print("\n⏱  Testing collision rate against step size...")

    n, temperature, duration = 2000, 1.0, 0.5
    params = CollisionParams(restitution=1.0, particle_radius=0.01, cell_size=0.05)
    # hard disks in 2D: the mean relative speed of a Maxwellian gas is sqrt(pi T)
    expected = 0.5 * n * (n - 1) * params.cross_section * math.sqrt(math.pi * temperature) / params.cell_size ** 2

    rates, free_runs, subcycled = {}, {}, {}
    for dt in (1e-3, 1e-2, 5e-2):
        gas = box_gas(n, temperature, seed=21)
        total = None
        for step in range(int(round(duration / dt))):
            gas, stats = dsmc_collide(gas, params, dt, seed=21, step=step)
            total = stats if total is None else total.merge(stats)
        rates[dt] = total.collisions / duration
        free_runs[dt] = total.free_run_time
        subcycled[dt] = total.subcycled_cells
        assert gas.kinetic_energy() == pytest.approx(box_gas(n, temperature, seed=21).kinetic_energy(), rel=1e-9)
        print(f"   dt={dt:g}: {rates[dt]:.0f} collisions per unit time, lambda_hat={free_runs[dt]:.4g}")

    assert subcycled[1e-3] == 0 and subcycled[5e-2] > 0
    for dt in (1e-2, 5e-2):
        assert rates[dt] == pytest.approx(rates[1e-3], rel=0.05)
        assert free_runs[dt] == pytest.approx(free_runs[1e-3], rel=0.05)
    assert rates[1e-3] == pytest.approx(expected, rel=0.05)
    print("✅ Collision rate against step size passed")


def test_static_residuals_vanish():
    """Particles at rest with no forces satisfy every balance equation exactly"""
    print("\n🧊 Testing residuals of a static ensemble...")

    gas = annulus_gas(4000, 0.0, seed=2)
    cells = np.linspace(1.0, 2.0, 11)
    snapshots = [compute_moments(gas, cells, t) for t in (0.0, 0.1, 0.2, 0.3)]
    norms = moment_residuals(snapshots)
    assert norms.as_dict() == {"continuity": 0.0, "momentum_radial": 0.0, "momentum_azimuthal": 0.0,
                               "energy": 0.0}

    with pytest.raises(ShapeError):
        moment_residuals(snapshots[:2])
    with pytest.raises(ShapeError):
        moment_residuals(snapshots[:2] + [compute_moments(gas, np.linspace(1.0, 2.0, 6), 0.2)])
    with pytest.raises(ShapeError):
        moment_residuals([compute_moments(gas, cells, t) for t in (0.0, 0.1, 0.3)])
    print("✅ Static residuals passed")


def test_continuity_residual_scales_with_sample_size():
    """Free streaming gas: quadrupling N roughly halves the continuity residual"""
    print("\n📉 Testing continuity residual refinement...")

    model = ring_model()
    cells = np.linspace(1.0, 2.0, 21)
    free = ForceField(model, saturn=False, self_gravity=False, moons=False)

    def residual(n: int) -> float:
        # the gas extends well past the cells so no edge drains them during the run
        gas = annulus_gas(n, 1e-2, seed=n, r_in=0.5, r_out=2.5)
        snapshots = [compute_moments(gas, cells, 0.0)]
        t = 0.0
        for step in range(40):
            gas = step_ensemble(gas, model, model.density, t, 5e-3, free)
            t = (step + 1) * 5e-3
            if (step + 1) % 10 == 0:
                snapshots.append(compute_moments(gas, cells, t))
        return moment_residuals(snapshots).continuity

    coarse, fine = residual(20_000), residual(80_000)
    ratio = coarse / fine
    print(f"   continuity residual {coarse:.4g} -> {fine:.4g} (ratio {ratio:.3f})")
    assert 1.0 < ratio < 4.0
    print("✅ Continuity refinement passed")


def test_rotating_ring_residuals_below_noise_floor():
    """A warm ring on Kepler orbits balances momentum within the bootstrap floor"""
    print("\n🪐 Testing rotating ring residuals...")

    config = kinetic_scenario(
        ensemble={"size": 20000},
        integrator={"dt": 1e-3},
        features={"self_gravity": False, "collisions": False, "moons": False},
        kinetic={"cells": 40, "temperature": 1e-4, "snapshots": 5, "snapshot_every": 10, "bootstrap": 20},
    )
    result = run_kinetic(config)
    floor = result.noise_floor
    assert floor is not None
    print(f"   momentum_r {result.residuals.momentum_radial:.4g} (floor {floor.momentum_radial:.4g})")
    assert result.residuals.momentum_radial < floor.momentum_radial
    assert result.residuals.momentum_azimuthal < floor.momentum_azimuthal
    assert result.residuals.continuity < floor.continuity
    assert len(result.collision_log) == 0
    frame = result.residual_frame()
    assert frame["equation"].tolist() == ["continuity", "momentum_radial", "momentum_azimuthal", "energy"]
    assert list(frame.columns) == ["equation", "residual", "noise_floor"]
    print("✅ Rotating ring residuals passed")


def test_edge_flux():
    """Cold rings carry no pressure flux; thin shells cancel; coverage is enforced"""
    print("\n🌊 Testing edge pressure flux...")

    model = ring_model()
    cells = np.linspace(1.0, 2.0, 41)
    cold = compute_moments(annulus_gas(4000, 0.0, seed=6), cells)
    flux = edge_flux_diagnostic(cold, model, [0.05, 0.1, 0.2])
    assert np.all(flux[["inner_flux", "outer_flux", "net_inward"]].to_numpy() == 0.0)
    assert flux["delta"].tolist() == [0.05, 0.1, 0.2]

    warm = compute_moments(annulus_gas(100_000, 1e-2, seed=6), cells)
    inner = circle_flux(warm, 1.5, 1.0)
    outer = circle_flux(warm, 1.5005, -1.0)
    assert inner > 0.0
    assert abs(inner + outer) < 1e-2 * inner

    with pytest.raises(CoverageError):
        circle_flux(warm, 0.5, 1.0)
    with pytest.raises(GeometryError):
        edge_flux_diagnostic(warm, model, [0.1, 0.3])
    with pytest.raises(GeometryError):
        edge_flux_diagnostic(warm, model, [0.1, 0.05])
    print("✅ Edge pressure flux passed")


def test_edge_flux_grows_toward_edges():
    """Warm ring with positive edge density: net inward flux rises strictly as the circles near the edges"""
    print("\n📈 Testing edge flux growth...")

    config = load_config(SCENARIOS / "kinetic-ring.json")
    config = config.model_copy(update={"kinetic": config.kinetic.model_copy(update={"bootstrap": 0})})
    assert config.kinetic.temperature > 0.0
    assert config.model.density.positive_edges() == [1.0, 2.0]
    result = run_kinetic(config)

    flux = result.edge_flux.sort_values("delta", ascending=False)
    fractions = (flux["delta"] / config.model.width).tolist()
    assert fractions == pytest.approx([0.2, 0.1, 0.05, 0.025])
    assert np.all(flux["inner_flux"] > 0.0) and np.all(flux["outer_flux"] < 0.0)
    net = flux["net_inward"].to_numpy()
    assert np.all(np.diff(net) > 0.0), net
    assert net[-1] > 2.0 * net[0]
    for row in flux.itertuples():
        print(f"   delta={row.delta:.3f}: net inward {row.net_inward:.4e}")
    print("✅ Edge flux growth passed")


def test_run_kinetic_pipeline():
    """Inelastic run: collisions happen, snapshots line up, threads change nothing"""
    print("\n🚀 Testing kinetic pipeline...")

    config = kinetic_scenario(
        ensemble={"size": 3000},
        integrator={"dt": 1e-3, "table_points": 60},
        collisions={"restitution": 0.9, "particle_radius": 0.002, "cell_size": 0.05, "particle_weight": 5000.0,
                    "mass_spectrum": {"kind": "power_law", "m_min": 1.0, "m_max": 10.0, "exponent": -3.0}},
        features={"self_gravity": True, "collisions": True, "moons": False},
        kinetic={"cells": 40, "temperature": 1e-4, "snapshots": 4, "snapshot_every": 5, "bootstrap": 0},
    )
    result = run_kinetic(config)
    assert len(result.snapshots) == 4
    assert [s.time for s in result.snapshots] == pytest.approx([0.0, 0.005, 0.01, 0.015])
    assert len(result.zeta) == 4 and all(z.shape == (40,) for z in result.zeta)
    assert list(result.collision_log.columns) == ["t", "collisions", "dE", "zeta_hat", "lambda_hat"]
    assert len(result.collision_log) == 15
    assert result.stats.collisions > 0
    assert result.stats.momentum_residual < 1e-12
    assert result.noise_floor is None
    assert list(result.edge_flux["delta"]) == pytest.approx([0.025, 0.05, 0.1, 0.2])
    total = float(np.sum(result.snapshots[0].mass))
    assert total == pytest.approx(config.model.ring_mass(), rel=1e-9)

    with ThreadPoolExecutor(max_workers=4) as pool:
        threaded = run_kinetic(config, executor=pool)
    pd.testing.assert_frame_equal(result.collision_log, threaded.collision_log, check_exact=True)
    pd.testing.assert_frame_equal(result.snapshots[-1].to_frame(), threaded.snapshots[-1].to_frame(),
                                  check_exact=True)
    print(f"   {result.stats.collisions} collisions, free-run time {result.stats.free_run_time:.4g}")
    print("✅ Kinetic pipeline passed")


def test_stationarity_trend():
    """A flat series has no trend; a clean ramp is significant with the right slope"""
    print("\n📉 Testing stationarity trend...")

    t = np.arange(1000) * 0.01
    flat = stationarity_trend(t, np.full(t.size, 0.7), seed=3)
    assert flat.slope == pytest.approx(0.0, abs=1e-12)
    assert flat.standard_error == pytest.approx(0.0, abs=1e-12)
    assert not flat.significant
    assert flat.block == 20

    wiggle = 1e-4 * np.where(np.arange(t.size) % 2 == 0, 1.0, -1.0)
    ramp = stationarity_trend(t, 1.0 + 0.05 * t + wiggle, block=10, seed=3)
    assert ramp.slope == pytest.approx(0.05, rel=1e-3)
    assert ramp.significant
    assert ramp.drift == pytest.approx(0.05 * t[-1], rel=1e-3)
    assert list(ramp.summary_frame().columns)[:3] == ["slope", "intercept", "standard_error"]

    with pytest.raises(InsufficientDataError):
        stationarity_trend([0.0, 1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        stationarity_trend(t, np.ones(t.size), block=0)
    print("✅ Stationarity trend passed")


def test_periodic_box_equilibrium():
    """Elastic box: 10^4 steps with no temperature trend; an inelastic box cools significantly"""
    print("\n📦 Testing periodic-box equilibrium...")

    config = load_config(SCENARIOS / "equilibrium-box.json")
    assert config.box.steps == 10_000 and config.collisions.restitution == 1.0
    result = run_periodic_box(config)
    assert result.times.size == 10_001
    assert result.times[-1] == pytest.approx(100.0)
    assert int(result.collisions.sum()) > 10_000
    np.testing.assert_allclose(result.kinetic_energy, result.kinetic_energy[0], rtol=1e-9)
    # each cell's bulk motion is excluded from its temperature
    assert result.trend.mean == pytest.approx(1.0, rel=0.15)
    assert result.trend.mean == pytest.approx(result.temperature[0], rel=0.03)
    assert not result.trend.significant
    assert abs(result.trend.slope) < 3.0 * result.trend.standard_error
    print(f"   T slope {result.trend.slope:.3g} +/- {result.trend.standard_error:.3g} over {result.times[-1]:g}")

    inelastic = config.model_copy(update={
        "collisions": config.collisions.model_copy(update={"restitution": 0.5}),
        "box": config.box.model_copy(update={"steps": 2000}),
    })
    cooling = run_periodic_box(inelastic)
    assert cooling.trend.significant and cooling.trend.slope < 0.0
    assert cooling.temperature[-1] < 0.5 * cooling.temperature[0]

    skewed = config.model_copy(update={"box": config.box.model_copy(update={"size": 1.1})})
    with pytest.raises(ConfigValidationError):
        run_periodic_box(skewed)

    gas = box_ensemble(1.0, 500, 2.0, config.collisions, seed=5)
    moved = stream_periodic(gas, 10.0, 1.0)
    assert np.all((moved.positions >= 0.0) & (moved.positions < 1.0))
    assert np.array_equal(moved.velocities, gas.velocities)
    print("✅ Periodic-box equilibrium passed")


def main():
    """Run kinetic model tests"""
    print("🚀 Starting Ring Lab - Kinetic Model Testing")
    print("=" * 70)

    try:
        test_sample_maxwellian()
        test_single_particle_moments()
        test_maxwellian_moments_recovered()
        test_collide_pair()
        test_dsmc_conservation_and_cooling()
        test_dsmc_errors_and_determinism()
        test_collision_rate_independent_of_dt()
        test_static_residuals_vanish()
        test_continuity_residual_scales_with_sample_size()
        test_rotating_ring_residuals_below_noise_floor()
        test_edge_flux()
        test_edge_flux_grows_toward_edges()
        test_run_kinetic_pipeline()
        test_stationarity_trend()
        test_periodic_box_equilibrium()

        print("\n" + "=" * 70)
        print("🎉 ALL KINETIC TESTS PASSED!")
    except Exception as e:
        print(f"\n❌ Test failed with error: {str(e)}")
        import traceback
        traceback.print_exc()
        return False

    return True


if __name__ == "__main__":
    main()
