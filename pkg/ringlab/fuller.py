"""
Ring Lab - Fuller Synthesis
Chattering feedback for minimizing the integral of x^2 under x' = y, y' = u,
|u| <= 1. Arcs between switches are propagated exactly, switch times are
located by root-finding on the switching function, and the switching constant
is calibrated from the self-similar solution of the maximum principle.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from numpy.polynomial import Polynomial
from scipy import optimize

from .errors import CalibrationError, InsufficientDataError, SwitchingError

logger = logging.getLogger(__name__)

DEFAULT_EVENT_TOLERANCE = 1e-13
MAX_ARCS = 100000
SWITCH_COEFFICIENT_GUESS = 0.44
CONTRACTION_GUESS = 0.24


class Control(IntEnum):
    NEGATIVE = -1
    TERMINAL = 0
    POSITIVE = 1


class TerminationReason(Enum):
    REACHED_BALL = "reached origin ball"
    TIME_BUDGET = "time budget"
    ARC_LIMIT = "arc limit"


@dataclass(frozen=True)
class FullerSynthesis:
    """Feedback u = -sign(x + C y |y|) with control bound fixed to 1."""
    switch_coefficient: float
    control_bound: float = 1.0
    event_tolerance: float = DEFAULT_EVENT_TOLERANCE

    def __post_init__(self):
        if not self.switch_coefficient > 0:
            raise ValueError(f"switch coefficient must be positive, got {self.switch_coefficient!r}")
        if self.control_bound != 1.0:
            raise ValueError("the synthesis is normalized to control bound 1")

    def switching_function(self, x: float, y: float) -> float:
        return x + self.switch_coefficient * y * abs(y)


@dataclass
class FullerTrajectory:
    times: List[float] = field(default_factory=list)
    states: List[Tuple[float, float]] = field(default_factory=list)
    controls: List[int] = field(default_factory=list)
    costs: List[float] = field(default_factory=list)
    switch_times: List[float] = field(default_factory=list)
    switch_states: List[Tuple[float, float]] = field(default_factory=list)
    termination: Optional[TerminationReason] = None
    synthesis: Optional[FullerSynthesis] = None

    @property
    def cost(self) -> float:
        return self.costs[-1] if self.costs else 0.0

    @property
    def switches(self) -> int:
        return len(self.switch_times)

    def switch_frame(self) -> pd.DataFrame:
        t = np.asarray(self.switch_times, dtype=float)
        states = np.asarray(self.switch_states, dtype=float).reshape(-1, 2)
        interval = np.full(t.size, np.nan)
        ratio = np.full(t.size, np.nan)
        if t.size > 1:
            interval[1:] = np.diff(t)
        if t.size > 2:
            ratio[2:] = interval[2:] / interval[1:-1]
        return pd.DataFrame({
            "k": np.arange(1, t.size + 1),
            "t_k": t,
            "x_k": states[:, 0],
            "y_k": states[:, 1],
            "interval": interval,
            "ratio": ratio,
        })

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{
            "C": self.synthesis.switch_coefficient if self.synthesis else math.nan,
            "cost": self.cost,
            "switches": self.switches,
            "termination": self.termination.value if self.termination else "",
        }])


def fuller_control(state: Sequence[float], synthesis: FullerSynthesis) -> Control:
    x, y = float(state[0]), float(state[1])
    tol = synthesis.event_tolerance
    if abs(x) < tol and abs(y) < tol:
        return Control.TERMINAL
    s = synthesis.switching_function(x, y)
    if s == 0.0:
        # on the switching curve: steer along the branch toward y = 0
        return Control.POSITIVE if y < 0 else Control.NEGATIVE
    return Control.NEGATIVE if s > 0 else Control.POSITIVE


def arc_state(x: float, y: float, u: float, tau: float) -> Tuple[float, float]:
    return x + y * tau + 0.5 * u * tau * tau, y + u * tau


def arc_cost(x: float, y: float, u: float, tau: float) -> float:
    """Integral of x(s)^2 over one constant-control arc."""
    position = Polynomial([x, y, 0.5 * u])
    return float((position ** 2).integ()(tau))


def _next_switch(x: float, y: float, u: int, synthesis: FullerSynthesis) -> float:
    """First tau > 0 at which the switching function changes sign along the arc."""
    c = synthesis.switch_coefficient
    scale = abs(y) + math.sqrt(abs(x))
    floor = 1e-9 * scale

    pieces = []
    turn = -y / u
    if y != 0.0 and turn > 0.0:
        pieces.append((0.0, turn, math.copysign(1.0, y)))
        pieces.append((turn, math.inf, float(u)))
    else:
        pieces.append((0.0, math.inf, math.copysign(1.0, y) if y != 0.0 else float(u)))

    def s(tau: float) -> float:
        xt, yt = arc_state(x, y, u, tau)
        return synthesis.switching_function(xt, yt)

    for lo, hi, sigma in pieces:
        # on this piece y|y| = sigma * y^2, so s(tau) is quadratic
        a2 = 0.5 * u + c * sigma
        a1 = y + 2.0 * c * sigma * y * u
        a0 = x + c * sigma * y * y
        roots = np.roots([a2, a1, a0]) if a2 != 0.0 else np.roots([a1, a0])
        real = sorted(float(r.real) for r in roots if abs(r.imag) <= 1e-12 * max(1.0, abs(r.real)))
        for root in real:
            if root <= max(lo, floor) or root > hi:
                continue
            left, right = root * (1.0 - 1e-7), min(root * (1.0 + 1e-7), hi)
            if s(left) * s(right) < 0.0:
                root = optimize.brentq(s, left, right, xtol=synthesis.event_tolerance * max(scale, 1e-300),
                                       rtol=4.0 * np.finfo(float).eps)
            return root
    raise SwitchingError(f"no switch found along the arc from ({x!r}, {y!r})")


def simulate_fuller(x0: float, y0: float, synthesis: FullerSynthesis, stop_radius: float,
                    time_budget: float, max_arcs: int = MAX_ARCS) -> FullerTrajectory:
    """Closed-loop trajectory from (x0, y0) until the stop ball or the time budget."""
    if not stop_radius > 0:
        raise ValueError(f"stop radius must be positive, got {stop_radius!r}")
    traj = FullerTrajectory(synthesis=synthesis)
    x, y, t, cost = float(x0), float(y0), 0.0, 0.0
    traj.times.append(t)
    traj.states.append((x, y))
    traj.costs.append(cost)

    u = fuller_control((x, y), synthesis)
    for _ in range(max_arcs):
        if u is Control.TERMINAL or math.hypot(x, y) <= stop_radius:
            traj.termination = TerminationReason.REACHED_BALL
            break
        tau = _next_switch(x, y, int(u), synthesis)
        budget_hit = t + tau >= time_budget
        if budget_hit:
            tau = time_budget - t
        cost += arc_cost(x, y, int(u), tau)
        x, y = arc_state(x, y, int(u), tau)
        t = time_budget if budget_hit else t + tau
        traj.times.append(t)
        traj.states.append((x, y))
        traj.controls.append(int(u))
        traj.costs.append(cost)
        if budget_hit:
            traj.termination = TerminationReason.TIME_BUDGET
            break
        traj.switch_times.append(t)
        traj.switch_states.append((x, y))
        # the switch point sits on the curve up to rounding, so flip rather than re-evaluate
        u = Control(-int(u))
    else:
        traj.termination = TerminationReason.ARC_LIMIT
        logger.warning(f"Fuller run stopped after {max_arcs} arcs")

    logger.debug(f"Fuller run from ({x0!r}, {y0!r}): {traj.switches} switches, cost={cost:.12g}")
    return traj


# ---------------------------------------------------------------------------
# Calibration


def _shooting_residual(unknowns: np.ndarray) -> np.ndarray:
    """One arc with u = -1 from (-C, 1) to (k^2 C, -k), costate from psi2(0) = 0.

    psi1' = 2x and psi2' = -psi1; self-similarity maps psi1 to -k^3 psi1.
    """
    c, psi1_0, tau, k = unknowns
    x_end = -c + tau - 0.5 * tau ** 2
    y_end = 1.0 - tau
    psi1_end = psi1_0 + 2.0 * (-c * tau + 0.5 * tau ** 2 - tau ** 3 / 6.0)
    psi2_end = -(psi1_0 * tau + 2.0 * (-0.5 * c * tau ** 2 + tau ** 3 / 6.0 - tau ** 4 / 24.0))
    return np.array([
        x_end - k * k * c,
        y_end + k,
        psi2_end,
        psi1_end + k ** 3 * psi1_0,
    ])


def calibrate_fuller_constant(tolerance: float = 1e-12, control_bound: float = 1.0, cross_check: bool = True,
                              cross_check_tolerance: float = 1e-3) -> float:
    """Switching constant C of the self-similar optimal synthesis, by shooting.

    With `cross_check` the shooting value must agree with the constant that
    minimizes the exact closed-loop cost to within `cross_check_tolerance`.
    """
    if not tolerance > 0:
        raise ValueError(f"tolerance must be positive, got {tolerance!r}")
    if not control_bound > 0:
        raise CalibrationError(f"control bound {control_bound!r} allows no motion")

    c, k = SWITCH_COEFFICIENT_GUESS, CONTRACTION_GUESS
    tau = 1.0 + k
    psi1_0 = -2.0 * (-0.5 * c * tau + tau ** 2 / 6.0 - tau ** 3 / 24.0)
    solution = optimize.root(_shooting_residual, np.array([c, psi1_0, tau, k]), method="hybr",
                             options={"xtol": tolerance})
    c, psi1_0, tau, k = solution.x
    residual = float(np.max(np.abs(_shooting_residual(solution.x))))
    if not solution.success or not (c > 0 and 0 < k < 1) or residual > 1e3 * tolerance + 1e-12:
        logger.error(f"Fuller calibration failed: {solution.message} (C={c!r}, k={k!r}, residual={residual:.3g})")
        raise CalibrationError(f"no self-similar fixed point found: {solution.message}")
    if cross_check:
        by_cost = calibrate_by_cost()
        gap = abs(by_cost - c)
        if not gap <= cross_check_tolerance:
            logger.error(f"Fuller calibration disagrees with the cost minimum: C={c!r} vs {by_cost!r}")
            raise CalibrationError(f"shooting constant {c:.9g} and cost-minimizing constant {by_cost:.9g} "
                                   f"differ by {gap:.3g}")
        logger.debug(f"Cost-minimizing constant agrees to {gap:.3g}")
    logger.info(f"Calibrated Fuller switching constant C={c:.12g} (contraction k={k:.9g})")
    return float(c) / control_bound


def closed_loop_cost(switch_coefficient: float, x0: float = 1.0, y0: float = 0.0,
                     stop_radius: float = 1e-8, time_budget: float = 100.0) -> float:
    synthesis = FullerSynthesis(switch_coefficient)
    return simulate_fuller(x0, y0, synthesis, stop_radius, time_budget).cost


def calibrate_by_cost(bounds: Tuple[float, float] = (0.3, 0.49), x0: float = 1.0, y0: float = 0.0,
                      stop_radius: float = 1e-8, xatol: float = 1e-7) -> float:
    """Switching constant minimizing the exact closed-loop cost from (x0, y0)."""
    result = optimize.minimize_scalar(
        lambda c: closed_loop_cost(c, x0, y0, stop_radius),
        bounds=bounds,
        method="bounded",
        options={"xatol": xatol},
    )
    if not result.success:
        raise CalibrationError(f"closed-loop cost minimization failed: {result.message}")
    lo, hi = bounds
    if min(result.x - lo, hi - result.x) < 10.0 * xatol:
        raise CalibrationError(f"cost minimum C={result.x!r} sits on the search bound")
    logger.info(f"Cost-minimizing switching constant C={result.x:.9g} (J={result.fun:.12g})")
    return float(result.x)


def switch_ratio(trajectory, last: Optional[int] = None) -> Tuple[float, float]:
    """Mean and max absolute deviation of successive switch-interval ratios.

    Accepts a FullerTrajectory or a plain sequence of switch times; `last`
    restricts the statistics to the final intervals.
    """
    times = np.asarray(getattr(trajectory, "switch_times", trajectory), dtype=float)
    if times.size < 4:
        raise InsufficientDataError(f"need at least 4 switch times, got {times.size}")
    intervals = np.diff(times)
    if last is not None:
        intervals = intervals[-last:]
    if intervals.size < 2:
        raise InsufficientDataError("need at least two intervals for a ratio")
    ratios = intervals[1:] / intervals[:-1]
    mean = float(np.mean(ratios))
    return mean, float(np.max(np.abs(ratios - mean)))
