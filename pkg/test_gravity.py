#!/usr/bin/env python3
"""
Test script for Ring Lab - Gravity
Tests point-mass and wire forces, the annulus quadrature, libration circles and edge fits
against independent quadrature and root-finding oracles
"""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss
from scipy import integrate, optimize, special

from ringlab.elliptic import agm, complete_elliptic_e, complete_elliptic_k, elliptic_ke, elliptic_ke_array
from ringlab.errors import GeometryError, InsufficientDataError, SingularityError
from ringlab.gravity import (
    EdgeKernel,
    RadialForceProfile,
    Stability,
    annulus_force,
    annulus_radial_force,
    edge_asymptotics_fit,
    find_librations,
    graded_grid,
    net_radial_force,
    net_radial_profile,
    ring_wire_force_agm,
    ring_wire_potential_agm,
    saturn_force,
    strip_edge_force,
)
from ringlab.models import DensityProfile, RingModel

LIBRATION_SIGMA = 1.0 / (3.0 * math.pi)


def ring_model(sigma: float, saturn_mass: float = 1.0) -> RingModel:
    return RingModel(saturn_mass=saturn_mass, inner_radius=1.0, outer_radius=2.0,
                     density=DensityProfile.uniform(sigma, 1.0, 2.0))


def brute_force_annulus(sigma: float, lo: float, hi: float, r: float, n_s: int = 96, n_theta: int = 512) -> float:
    """Radial attraction at (r, 0): Gauss-Legendre in s times the periodic trapezoid rule in theta."""
    nodes, weights = leggauss(n_s)
    s = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * weights
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    S, TH = np.meshgrid(s, theta, indexing="ij")
    dx = S * np.cos(TH) - r
    dy = S * np.sin(TH)
    inner = np.sum(sigma * S * dx / (dx ** 2 + dy ** 2) ** 1.5, axis=1) * (2.0 * np.pi / n_theta)
    return float(np.sum(w * inner))


def wire_by_quad(linear_density: float, a: float, point) -> np.ndarray:
    px, py = point

    def component(index):
        def integrand(theta):
            qx, qy = a * math.cos(theta) - px, a * math.sin(theta) - py
            return linear_density * a * (qx, qy)[index] / (qx * qx + qy * qy) ** 1.5
        return integrate.quad(integrand, 0.0, 2.0 * math.pi, epsabs=1e-14, epsrel=1e-13, limit=400)[0]

    return np.array([component(0), component(1)])


def test_saturn_force():
    """Inverse-square attraction of the central mass"""
    print("🪐 Testing Saturn's point-mass force...")

    np.testing.assert_allclose(saturn_force(ring_model(0.0), (1.0, 0.0)), [-1.0, 0.0])
    np.testing.assert_allclose(saturn_force(ring_model(0.0, saturn_mass=4.0), (0.0, 2.0)), [0.0, -1.0])
    np.testing.assert_allclose(saturn_force(ring_model(0.0), (-1.0, 0.0)), [1.0, 0.0])
    with pytest.raises(SingularityError):
        saturn_force(ring_model(0.0), (0.0, 0.0))
    print("✅ Saturn force passed")


def test_elliptic_integrals():
    """AGM elliptic integrals against scipy.special"""
    print("\n🔢 Testing AGM elliptic integrals...")

    assert agm(1.0, math.sqrt(2.0)) == pytest.approx(1.1981402347355922074, rel=1e-15)
    assert agm(0.0, 3.0) == 0.0

    kprimes = np.array([1e-8, 1e-3, 0.1, 0.5, 0.9, 1.0])
    for kp in kprimes:
        big_k, big_e = elliptic_ke(float(kp))
        assert big_k == pytest.approx(special.ellipkm1(kp * kp), rel=2e-14)
        assert big_e == pytest.approx(special.ellipe(1.0 - kp * kp), rel=2e-14)
        assert complete_elliptic_k(float(kp)) == big_k
        assert complete_elliptic_e(float(kp)) == big_e

    array_k, array_e = elliptic_ke_array(kprimes)
    np.testing.assert_allclose(array_k, [elliptic_ke(float(kp))[0] for kp in kprimes], rtol=1e-15)
    np.testing.assert_allclose(array_e, [elliptic_ke(float(kp))[1] for kp in kprimes], rtol=1e-15)

    assert elliptic_ke(0.0) == (math.inf, 1.0)
    with pytest.raises(ValueError):
        elliptic_ke(1.5)
    print("✅ Elliptic integrals passed")


def test_ring_wire_force():
    """Circle-wire attraction by AGM against quadrature along the wire"""
    print("\n⭕ Testing circle-wire force...")

    np.testing.assert_array_equal(ring_wire_force_agm(1.0, 1.0, (0.0, 0.0)), [0.0, 0.0])
    for point in [(0.5, 0.0), (1.2, 0.9), (0.0, -0.97), (3.0, 4.0)]:
        expected = wire_by_quad(0.7, 1.0, point)
        got = ring_wire_force_agm(0.7, 1.0, point)
        np.testing.assert_allclose(got, expected, rtol=1e-10, atol=1e-13)
        print(f"   P={point}: F={got}")

    with pytest.raises(SingularityError):
        ring_wire_force_agm(1.0, 1.0, (0.6, 0.8))
    print("✅ Circle-wire force passed")


def test_ring_wire_potential():
    """The AGM potential differentiates to the wire force"""
    print("\n📉 Testing circle-wire potential...")

    h = 1e-6
    for r in (0.3, 0.8, 1.4, 2.5):
        derivative = (ring_wire_potential_agm(0.7, 1.0, (r + h, 0.0))
                      - ring_wire_potential_agm(0.7, 1.0, (r - h, 0.0))) / (2.0 * h)
        radial = ring_wire_force_agm(0.7, 1.0, (r, 0.0))[0]
        assert -derivative == pytest.approx(radial, rel=1e-7)

    # far away the circle looks like a point mass
    far = ring_wire_potential_agm(0.7, 1.0, (1e4, 0.0))
    assert far == pytest.approx(-2.0 * math.pi * 0.7 / 1e4, rel=1e-8)
    print("✅ Circle-wire potential passed")


def test_annulus_against_brute_force():
    """Annulus force in the hole and outside the ring against a 2D grid oracle"""
    print("\n🧮 Testing annulus force against brute-force quadrature...")

    density = DensityProfile.uniform(1.0, 1.0, 2.0)
    assert annulus_radial_force(density, 0.0) == 0.0
    for r in (0.5, 0.2, 3.0):
        expected = brute_force_annulus(1.0, 1.0, 2.0, r)
        got = annulus_radial_force(density, r, tol=1e-12)
        assert got == pytest.approx(expected, rel=1e-8)
        print(f"   R={r}: F={got:.15g} (oracle {expected:.15g})")

    assert annulus_radial_force(density, 0.5) > 0.0
    assert annulus_radial_force(density, 3.0) < 0.0
    np.testing.assert_allclose(annulus_force(density, (0.0, 0.5)), [0.0, annulus_radial_force(density, 0.5)])
    print("✅ Brute-force comparison passed")


def test_annulus_inside_support():
    """Principal-value evaluation inside the ring against a Cauchy-weight quadrature"""
    print("\n🎯 Testing annulus force inside the ring...")

    density = DensityProfile.uniform(1.0, 1.0, 2.0)
    for r in (1.3, 1.5, 1.8):
        def e_term(s):
            return 2.0 * s * special.ellipe(4.0 * s * r / (s + r) ** 2) / r

        def k_term(s):
            return 2.0 * s * special.ellipkm1(((s - r) / (s + r)) ** 2) / (r * (s + r))

        pv = integrate.quad(e_term, 1.0, 2.0, weight="cauchy", wvar=r, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
        log_part = integrate.quad(k_term, 1.0, 2.0, points=[r], epsabs=1e-13, epsrel=1e-12, limit=400)[0]
        expected = pv - log_part
        got = annulus_radial_force(density, r, tol=1e-12)
        assert got == pytest.approx(expected, rel=1e-6)
        print(f"   R={r}: F={got:.12g}")
    print("✅ Inside-support evaluation passed")


def test_edge_divergence_per_decade():
    """Force magnitude grows by 2 sigma ln(10) per decade next to an edge"""
    print("\n📈 Testing logarithmic edge divergence...")

    density = DensityProfile.uniform(1.0, 1.0, 2.0)
    forces = [abs(annulus_radial_force(density, 1.0 - eps)) for eps in (1e-3, 1e-4, 1e-5)]
    assert forces[0] < forces[1] < forces[2]
    for a, b in zip(forces[:-1], forces[1:]):
        assert (b - a) == pytest.approx(2.0 * math.log(10.0), rel=0.05)

    with pytest.raises(SingularityError):
        annulus_radial_force(density, 1.0)
    with pytest.raises(GeometryError):
        annulus_radial_force(density, -0.5)
    print("✅ Edge divergence passed")


def test_profile_without_ring():
    """A massless ring leaves the pure Saturn profile with no librations"""
    print("\n🕳  Testing Saturn-only profile...")

    model = RingModel(saturn_mass=1.0, inner_radius=1.0, outer_radius=2.0, density=DensityProfile.zero(1.0, 2.0))
    grid = np.linspace(0.1, 4.0, 60)
    profile = net_radial_profile(model, grid)
    np.testing.assert_array_equal(profile.net_force, -1.0 / profile.radii ** 2)
    assert profile.roots == []
    assert list(profile.to_frame().columns) == ["R", "F_net", "F_saturn", "F_ring"]
    print("✅ Saturn-only profile passed")


def test_libration_sign_pattern_and_roots():
    """Sign pattern of F and libration circles against a sign-scan plus brentq oracle"""
    print("\n🔄 Testing libration circles...")

    model = ring_model(LIBRATION_SIGMA)
    grid = graded_grid(model, 0.05, 4.0, 400)
    profile = net_radial_profile(model, grid, tol=1e-10, refine_tol=1e-10)
    np.testing.assert_array_equal(profile.net_force, profile.saturn_force + profile.ring_force)

    r, f = profile.radii, profile.net_force
    hole, ring, outside = r < 1.0, (r > 1.0) & (r < 2.0), r > 2.0
    assert f[hole][0] < 0.0 and f[hole][-1] > 0.0
    assert f[ring][0] > 0.0 and f[ring][-1] < 0.0
    assert np.all(f[outside] < 0.0)
    assert abs(f[outside][-1]) < abs(f[outside][0])

    assert len(profile.roots) == 2
    a, b = profile.roots
    assert 0.0 < a.radius < 1.0 and a.stability is Stability.UNSTABLE
    assert 1.0 < b.radius < 2.0 and b.stability is Stability.STABLE

    def oracle(lo, hi):
        scan = np.linspace(lo, hi, 201)
        values = np.array([net_radial_force(model, x, 1e-10) for x in scan])
        i = int(np.nonzero(np.sign(values[:-1]) != np.sign(values[1:]))[0][0])
        return optimize.brentq(lambda x: net_radial_force(model, x, 1e-10), scan[i], scan[i + 1], xtol=1e-14)

    expected_a = oracle(0.5, 1.0 - 1e-7)
    expected_b = oracle(1.0 + 1e-7, 2.0 - 1e-7)
    assert a.radius == pytest.approx(expected_a, abs=1e-8)
    assert b.radius == pytest.approx(expected_b, abs=1e-8)
    print(f"   a={a.radius:.12g} (unstable), b={b.radius:.12g} (stable)")

    frame = profile.libration_frame()
    assert frame["stability"].tolist() == ["unstable", "stable"]
    print("✅ Libration circles passed")


def test_find_librations_on_tabulated_force():
    """Bisection and slope classification on a synthetic force with known roots"""
    print("\n📍 Testing libration search...")

    def force(r):
        return (r - 1.23) * (r - 1.77)

    radii = np.linspace(1.0, 2.0, 11)
    values = np.array([force(r) for r in radii])
    profile = RadialForceProfile(radii=radii, net_force=values, saturn_force=values, ring_force=np.zeros_like(values),
                                 quad_tolerance=1e-10, force_at=force)
    inner, outer = find_librations(profile, refine_tol=1e-12)
    assert inner.radius == pytest.approx(1.23, abs=1e-11) and inner.stability is Stability.STABLE
    assert outer.radius == pytest.approx(1.77, abs=1e-11) and outer.stability is Stability.UNSTABLE

    # a bracket straddling a density edge is a jump, not a root
    edged = RadialForceProfile(radii=radii, net_force=values, saturn_force=values, ring_force=np.zeros_like(values),
                               quad_tolerance=1e-10, singular_radii=(1.25,), force_at=force)
    assert [c.radius for c in find_librations(edged, refine_tol=1e-12)] == [pytest.approx(1.77, abs=1e-11)]

    with pytest.raises(ValueError):
        find_librations(RadialForceProfile(radii=radii, net_force=values, saturn_force=values,
                                           ring_force=np.zeros_like(values), quad_tolerance=1e-10))
    print("✅ Libration search passed")


def test_light_ring_has_no_resolvable_root():
    """With ring mass 1/150 the edge pull only beats Saturn far below double precision"""
    print("\n🪶 Testing light ring sign pattern...")

    model = ring_model(0.02 / (3.0 * math.pi))
    profile = net_radial_profile(model, graded_grid(model, 0.05, 4.0, 200))
    assert np.all(profile.net_force < 0.0)
    assert profile.roots == []
    print("✅ Light ring passed")


def test_parallel_profile_is_bitwise_identical():
    """Thread count never changes a tabulated profile"""
    print("\n🧵 Testing threaded profile determinism...")

    model = ring_model(LIBRATION_SIGMA)
    grid = graded_grid(model, 0.05, 4.0, 80)
    serial = net_radial_profile(model, grid)
    with ThreadPoolExecutor(max_workers=4) as pool:
        threaded = net_radial_profile(model, grid, executor=pool)
    np.testing.assert_array_equal(serial.net_force, threaded.net_force)
    assert [c.radius for c in serial.roots] == [c.radius for c in threaded.roots]
    print("✅ Threaded determinism passed")


def test_strip_closed_form():
    """Closed-form strip attraction against direct double quadrature"""
    print("\n📏 Testing straight-strip surrogate...")

    eps = 0.1
    expected = integrate.dblquad(lambda y, x: (x + eps) / ((x + eps) ** 2 + y ** 2) ** 1.5,
                                 0.0, 1.0, -1.0, 1.0, epsabs=1e-13, epsrel=1e-12)[0]
    assert strip_edge_force(1.0, eps) == pytest.approx(expected, rel=1e-9)
    assert strip_edge_force(0.5, eps) == pytest.approx(0.5 * expected, rel=1e-9)
    print("✅ Strip closed form passed")


def test_edge_asymptotics_fit():
    """Fitted log slope approaches 2 sigma for the strip and the annulus"""
    print("\n📐 Testing edge asymptotics fit...")

    density = DensityProfile.uniform(1.0, 1.0, 2.0)
    epsilons = np.logspace(-6.0, -3.0, 13)

    strip = edge_asymptotics_fit(density, "inner", epsilons, kernel=EdgeKernel.STRIP)
    assert abs(strip.slope - 2.0) < 1e-3
    assert strip.r_squared > 0.999999

    inner = edge_asymptotics_fit(density, "inner", epsilons)
    outer = edge_asymptotics_fit(density, "outer", epsilons)
    for fit in (inner, outer):
        assert fit.slope == pytest.approx(2.0, rel=0.02)
        assert fit.r_squared > 0.9999
        print(f"   {fit.side}: slope={fit.slope:.6f} r2={fit.r_squared:.8f}")
    assert list(inner.to_frame().columns) == ["epsilon", "force", "fit_value"]
    assert inner.summary_frame()["strip_slope"].iloc[0] == 2.0

    with pytest.raises(InsufficientDataError):
        edge_asymptotics_fit(density, "inner", [1e-6, 1e-5, 1e-4])
    with pytest.raises(GeometryError):
        edge_asymptotics_fit(density, "inner", [1e-4, 1e-3, 1e-2, 0.5])
    with pytest.raises(InsufficientDataError):
        edge_asymptotics_fit(density, "inner", [1e-4, 2e-4, 3e-4, 4e-4])
    print("✅ Edge asymptotics fit passed")


def main():
    """Run gravity tests"""
    print("🚀 Starting Ring Lab - Gravity Testing")
    print("=" * 70)

    try:
        test_saturn_force()
        test_elliptic_integrals()
        test_ring_wire_force()
        test_ring_wire_potential()
        test_annulus_against_brute_force()
        test_annulus_inside_support()
        test_edge_divergence_per_decade()
        test_profile_without_ring()
        test_libration_sign_pattern_and_roots()
        test_find_librations_on_tabulated_force()
        test_light_ring_has_no_resolvable_root()
        test_parallel_profile_is_bitwise_identical()
        test_strip_closed_form()
        test_edge_asymptotics_fit()

        print("\n" + "=" * 70)
        print("🎉 ALL GRAVITY TESTS PASSED!")
    except Exception as e:
        print(f"\n❌ Test failed with error: {str(e)}")
        import traceback
        traceback.print_exc()
        return False

    return True


if __name__ == "__main__":
    main()
