"""
Ring Lab - Gravity
Saturn's point-mass field, the flat annulus attraction, circle-wire forces via the
arithmetic-geometric mean, tabulated net radial profiles with libration circles,
and the logarithmic edge-asymptotics fit.
"""

import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, stats

from .elliptic import agm, elliptic_ke
from .errors import GeometryError, InsufficientDataError, QuadratureError, SingularityError
from .models import DensityProfile, RingModel
from .parallel import ordered_map

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10
DEFAULT_SUBDIVISIONS = 400
MAX_BUDGET_DOUBLINGS = 3
WIRE_RTOL = 1e-14
EDGE_NUDGE = 1e-12
CENTER_RADIUS = 1e-12


class Stability(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"


class EdgeKernel(Enum):
    """Force model used by edge_asymptotics_fit."""
    ANNULUS = "annulus"
    STRIP = "strip"


@dataclass(frozen=True)
class LibrationCircle:
    radius: float
    stability: Stability
    force: float = 0.0


@dataclass(frozen=True)
class RadialForceProfile:
    """Tabulated net radial force F(R) per unit mass, positive outward."""
    radii: np.ndarray
    net_force: np.ndarray
    saturn_force: np.ndarray
    ring_force: np.ndarray
    quad_tolerance: float
    roots: List[LibrationCircle] = field(default_factory=list)
    singular_radii: Tuple[float, ...] = ()
    force_at: Optional[Callable[[float], float]] = field(default=None, repr=False, compare=False)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "R": self.radii,
            "F_net": self.net_force,
            "F_saturn": self.saturn_force,
            "F_ring": self.ring_force,
        })

    def libration_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "radius": [c.radius for c in self.roots],
            "stability": [c.stability.value for c in self.roots],
            "force": [c.force for c in self.roots],
        })


@dataclass(frozen=True)
class EdgeFit:
    """Least-squares fit of |F| against ln(1/epsilon) next to a density edge."""
    edge_radius: float
    side: str
    epsilons: np.ndarray
    forces: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    kernel: EdgeKernel = EdgeKernel.ANNULUS
    edge_density: float = 0.0

    def fit_values(self) -> np.ndarray:
        return self.intercept + self.slope * np.log(1.0 / self.epsilons)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "epsilon": self.epsilons,
            "force": self.forces,
            "fit_value": self.fit_values(),
        })

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{
            "edge_radius": self.edge_radius,
            "side": self.side,
            "kernel": self.kernel.value,
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "strip_slope": 2.0 * self.edge_density,
        }])


# ---------------------------------------------------------------------------
# Point mass and wire


def saturn_force(model: RingModel, point: Sequence[float]) -> np.ndarray:
    """Newtonian attraction of the central mass, G = 1."""
    x = np.asarray(point, dtype=float)
    r = float(np.hypot(x[0], x[1]))
    if r == 0.0:
        raise SingularityError("Saturn's force is singular at the origin")
    return -model.saturn_mass * x / r ** 3


def saturn_radial_force(model: RingModel, radius: float) -> float:
    return -model.saturn_mass / radius ** 2


def _wire_radial(linear_density: float, circle_radius: float, r: float) -> float:
    a = circle_radius
    if r < CENTER_RADIUS * a:
        return 0.0
    total = a + r
    kprime = abs(a - r) / total
    k = 2.0 * math.sqrt(a * r) / total
    big_k, big_e = elliptic_ke(kprime, k)
    return (2.0 * a * linear_density / r) * (big_e / (a - r) - big_k / total)


def _check_off_wire(circle_radius: float, r: float) -> None:
    if abs(r - circle_radius) <= WIRE_RTOL * circle_radius:
        raise SingularityError(f"point at R={r!r} lies on the wire of radius {circle_radius!r}")


def ring_wire_force_agm(linear_density: float, circle_radius: float, point: Sequence[float]) -> np.ndarray:
    """Planar attraction of a uniform circle, elliptic integrals by the AGM."""
    x = np.asarray(point, dtype=float)
    r = float(np.hypot(x[0], x[1]))
    _check_off_wire(circle_radius, r)
    if r < CENTER_RADIUS * circle_radius:
        return np.zeros(2)
    return _wire_radial(linear_density, circle_radius, r) * x / r


def ring_wire_potential_agm(linear_density: float, circle_radius: float, point: Sequence[float]) -> float:
    """Potential of a uniform circle: minus its mass over the AGM of the farthest
    and nearest distances from the point to the circle."""
    x = np.asarray(point, dtype=float)
    r = float(np.hypot(x[0], x[1]))
    _check_off_wire(circle_radius, r)
    mass = 2.0 * math.pi * circle_radius * linear_density
    return -mass / agm(circle_radius + r, abs(circle_radius - r))


# ---------------------------------------------------------------------------
# Annulus


def _breakpoints(center: float, lo: float, hi: float, scale: float) -> List[float]:
    """Geometrically graded points around center, clipped to (lo, hi)."""
    points = []
    step = scale
    while step < hi - lo:
        for p in (center - step, center + step):
            if lo < p < hi:
                points.append(p)
        step *= 4.0
    return points


def _quad(integrand, lo: float, hi: float, points: List[float], tol: float, scale: float,
          subdivisions: int, radius: float) -> float:
    points = sorted(set(p for p in points if lo < p < hi))
    limit = max(subdivisions, 4 * len(points) + 50)
    estimate, error = math.nan, math.inf
    for attempt in range(MAX_BUDGET_DOUBLINGS + 1):
        out = integrate.quad(integrand, lo, hi, points=points or None, epsabs=tol * scale,
                             epsrel=tol, limit=limit, full_output=1)
        estimate, error = out[0], out[1]
        if len(out) == 3:
            return estimate
        logger.debug(f"quad at R={radius!r} stopped after limit={limit}: {out[3]}")
        limit *= 2
    logger.error(f"Annulus quadrature failed at R={radius!r}: estimate={estimate!r} error={error!r}")
    raise QuadratureError("annulus quadrature did not converge", estimate, error, radius)


def annulus_radial_force(density: DensityProfile, radius: float, tol: float = DEFAULT_TOLERANCE,
                         subdivisions: int = DEFAULT_SUBDIVISIONS) -> float:
    """Radial force per unit mass of a flat axisymmetric annulus at radius R.

    The annulus is integrated as a stack of circle wires. When R lies inside the
    support the 1/(s-R) part is handled by subtracting its value at s = R and
    adding the principal-value logarithm back analytically.
    """
    if radius < 0:
        raise GeometryError(f"radius must be nonnegative, got {radius!r}")
    lo, hi = density.support
    knots = density.knots_array
    values = density.values_array
    peak = float(values.max()) if values.size else 0.0
    if peak == 0.0 or radius < CENTER_RADIUS * lo:
        return 0.0
    r = float(radius)
    if (r == lo and values[0] > 0.0) or (r == hi and values[-1] > 0.0):
        raise SingularityError(f"annulus force diverges at the density edge R={r!r}")

    def sigma(s: float) -> float:
        return float(np.interp(s, knots, values))

    interior = [float(k) for k in knots[1:-1]]
    width = hi - lo

    if lo < r < hi:
        h_r = 2.0 * sigma(r)

        def integrand(s: float) -> float:
            if s == r:
                return 0.0
            total = s + r
            big_k, big_e = elliptic_ke(abs(s - r) / total, 2.0 * math.sqrt(s * r) / total)
            weight = 2.0 * s * sigma(s) / r
            return (weight * big_e - h_r) / (s - r) - weight * big_k / total

        points = interior + [r] + _breakpoints(r, lo, hi, 1e-8 * width)
        value = _quad(integrand, lo, hi, points, tol, peak, subdivisions, r)
        return value + h_r * math.log((hi - r) / (r - lo))

    def integrand(s: float) -> float:
        total = s + r
        big_k, big_e = elliptic_ke(abs(s - r) / total, 2.0 * math.sqrt(s * r) / total)
        return (2.0 * s * sigma(s) / r) * (big_e / (s - r) - big_k / total)

    edge = lo if r < lo else hi
    gap = abs(r - edge)
    points = interior + _breakpoints(edge, lo, hi, max(gap, 1e-12 * width))
    return _quad(integrand, lo, hi, points, tol, peak, subdivisions, r)


def annulus_force(density: DensityProfile, point: Sequence[float], tol: float = DEFAULT_TOLERANCE) -> np.ndarray:
    """Planar annulus force; purely radial for an axisymmetric density."""
    x = np.asarray(point, dtype=float)
    r = float(np.hypot(x[0], x[1]))
    if r == 0.0:
        return np.zeros(2)
    return annulus_radial_force(density, r, tol) * x / r


def net_radial_force(model: RingModel, radius: float, tol: float = DEFAULT_TOLERANCE) -> float:
    return saturn_radial_force(model, radius) + annulus_radial_force(model.density, radius, tol)


# ---------------------------------------------------------------------------
# Profiles and librations


def graded_grid(model: RingModel, r_min: float, r_max: float, points: int) -> np.ndarray:
    """Uniform grid plus points clustered geometrically on both sides of each
    density edge where the force diverges."""
    base = np.linspace(r_min, r_max, points)
    offsets = np.logspace(-6.0, -1.0, 16) * model.width
    extra = [e + s * offsets for e in model.density.positive_edges() for s in (-1.0, 1.0)]
    grid = np.unique(np.concatenate([base] + extra))
    grid = grid[(grid >= r_min) & (grid <= r_max) & (grid > 0.0)]
    edges = model.density.positive_edges()
    return np.array([g for g in grid if all(g != e for e in edges)])


def _nudged(model: RingModel, grid: np.ndarray) -> np.ndarray:
    nudge = EDGE_NUDGE * model.width
    edges = {model.inner_radius, model.outer_radius, *model.density.positive_edges()}
    out = grid.copy()
    for i, g in enumerate(grid):
        if g in edges:
            logger.warning(f"Grid point R={g!r} sits on a ring edge; nudged by {nudge:.3g}")
            out[i] = g + nudge
    return out


def net_radial_profile(model: RingModel, grid: Sequence[float], tol: float = DEFAULT_TOLERANCE,
                       refine_tol: float = DEFAULT_TOLERANCE, executor: Optional[Executor] = None) -> RadialForceProfile:
    """Tabulate Saturn + annulus radial force on an ascending grid and locate its roots."""
    radii = np.asarray(grid, dtype=float)
    if radii.ndim != 1 or radii.size < 2:
        raise GeometryError("force profile grid needs at least two radii")
    if np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise GeometryError("force profile grid must be positive and strictly ascending")
    radii = _nudged(model, radii)

    def ring_term(r: float) -> float:
        try:
            return annulus_radial_force(model.density, float(r), tol)
        except QuadratureError as e:
            raise e.at_radius(float(r)) from e

    ring = np.array(ordered_map(ring_term, radii, executor))
    saturn = -model.saturn_mass / radii ** 2
    net = saturn + ring

    logger.info(f"Tabulated net radial force at {radii.size} radii (tol={tol:g})")
    profile = RadialForceProfile(
        radii=radii,
        net_force=net,
        saturn_force=saturn,
        ring_force=ring,
        quad_tolerance=tol,
        singular_radii=tuple(model.density.positive_edges()),
        force_at=lambda r: net_radial_force(model, r, tol),
    )
    return replace(profile, roots=find_librations(profile, refine_tol))


def find_librations(profile: RadialForceProfile, refine_tol: float = DEFAULT_TOLERANCE) -> List[LibrationCircle]:
    """Bracket every sign change of the tabulated force, bisect it with fresh
    force evaluations and classify the root by the slope of F."""
    radii, force = profile.radii, profile.net_force
    if radii.size < 2:
        raise GeometryError("need at least two grid points to look for librations")
    if profile.force_at is None:
        raise ValueError("profile carries no force evaluator; build it with net_radial_profile")
    evaluate = profile.force_at
    circles: List[LibrationCircle] = []
    for i in range(radii.size - 1):
        f_lo, f_hi = force[i], force[i + 1]
        if not f_lo * f_hi < 0.0:
            continue
        lo, hi = float(radii[i]), float(radii[i + 1])
        if any(lo < e < hi for e in profile.singular_radii):
            logger.warning(f"Sign change across the singular edge in [{lo!r}, {hi!r}] skipped")
            continue
        while hi - lo > refine_tol:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            f_mid = evaluate(mid)
            if f_mid == 0.0:
                lo = hi = mid
                f_lo = f_hi = 0.0
                break
            if (f_mid < 0.0) == (f_lo < 0.0):
                lo, f_lo = mid, f_mid
            else:
                hi, f_hi = mid, f_mid
        root, f_root = (lo, f_lo) if abs(f_lo) <= abs(f_hi) else (hi, f_hi)

        step = 10.0 * refine_tol
        slope = evaluate(root + step) - evaluate(root - step)
        if slope == 0.0:
            slope = force[i + 1] - force[i]
        stability = Stability.STABLE if slope < 0.0 else Stability.UNSTABLE
        circles.append(LibrationCircle(radius=root, stability=stability, force=float(f_root)))
        logger.info(f"Libration circle at R={root:.12g} ({stability.value})")
    return circles


# ---------------------------------------------------------------------------
# Edge asymptotics


def strip_edge_force(sigma: float, epsilon, half_length: float = 1.0, width: float = 1.0):
    """Attraction of a uniform straight strip (|y| <= half_length, 0 <= x <= width)
    at distance epsilon outside its edge."""
    eps = np.asarray(epsilon, dtype=float)
    value = 2.0 * sigma * (np.arcsinh(half_length / eps) - np.arcsinh(half_length / (eps + width)))
    return float(value) if value.ndim == 0 else value


def edge_asymptotics_fit(density: DensityProfile, edge: str, epsilons: Sequence[float],
                         kernel: EdgeKernel = EdgeKernel.ANNULUS, tol: float = DEFAULT_TOLERANCE,
                         strip_half_length: float = 1.0, strip_width: float = 1.0) -> EdgeFit:
    """Fit |F(edge -/+ eps)| = C ln(1/eps) + c0 just outside a density edge."""
    eps = np.sort(np.asarray(epsilons, dtype=float))
    if eps.size < 4:
        raise InsufficientDataError(f"edge fit needs at least 4 epsilons, got {eps.size}")
    if np.any(eps <= 0):
        raise GeometryError("epsilons must be positive")
    if np.unique(eps).size != eps.size:
        raise GeometryError("epsilons must be distinct")
    if eps[-1] / eps[0] < 100.0:
        raise InsufficientDataError("epsilons must span at least two decades")
    kernel = EdgeKernel(kernel)
    lo, hi = density.support
    if eps[-1] >= (hi - lo) / 10.0:
        raise GeometryError(f"largest epsilon {eps[-1]!r} is not below a tenth of the ring width")

    if edge == "inner":
        edge_radius, sign = lo, -1.0
    elif edge == "outer":
        edge_radius, sign = hi, 1.0
    else:
        raise ValueError(f"edge must be 'inner' or 'outer', got {edge!r}")
    edge_density = float(density.evaluate(edge_radius))

    if kernel is EdgeKernel.STRIP:
        forces = np.asarray(strip_edge_force(edge_density, eps, strip_half_length, strip_width))
    else:
        forces = np.array([abs(annulus_radial_force(density, edge_radius + sign * e, tol)) for e in eps])

    fit = stats.linregress(np.log(1.0 / eps), forces)
    r_squared = min(1.0, max(0.0, float(fit.rvalue) ** 2))
    logger.info(f"Edge fit at R={edge_radius:g} ({edge}, {kernel.value}): slope={fit.slope:.6g} r2={r_squared:.6f}")
    return EdgeFit(
        edge_radius=edge_radius,
        side=edge,
        epsilons=eps,
        forces=forces,
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=r_squared,
        kernel=kernel,
        edge_density=edge_density,
    )
