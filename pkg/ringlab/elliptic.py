"""
Arithmetic-geometric mean and complete elliptic integrals.

K and E are evaluated by the AGM iteration with the Gauss–Legendre c_n sum,
parametrised by the complementary modulus k' so that the near-wire limit
k' -> 0 keeps full relative precision. Scalar routines drive adaptive
quadrature integrands; the array routines freeze each element at its own
convergence step so results never depend on what else is in the batch.
"""

import math
from typing import Optional, Tuple

import numpy as np

AGM_RTOL = 4.0 * np.finfo(float).eps
AGM_MAX_ITER = 64


def agm(a: float, b: float, rtol: float = AGM_RTOL) -> float:
    """Arithmetic-geometric mean of two nonnegative numbers."""
    if a < 0 or b < 0:
        raise ValueError(f"AGM needs nonnegative arguments, got {a!r}, {b!r}")
    if a == 0 or b == 0:
        return 0.0
    for _ in range(AGM_MAX_ITER):
        if abs(a - b) <= rtol * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return a


def elliptic_ke(kprime: float, k: Optional[float] = None) -> Tuple[float, float]:
    """Complete elliptic integrals (K, E) for complementary modulus k'.

    k may be passed when it is known more accurately than sqrt(1 - k'^2).
    """
    if not 0.0 <= kprime <= 1.0:
        raise ValueError(f"complementary modulus must lie in [0, 1], got {kprime!r}")
    if k is None:
        k = math.sqrt((1.0 - kprime) * (1.0 + kprime))
    if kprime == 0.0:
        return math.inf, 1.0
    a, b, c = 1.0, kprime, k
    weight = 0.5
    total = weight * c * c
    for _ in range(AGM_MAX_ITER):
        if abs(a - b) <= AGM_RTOL * a:
            break
        a_next = 0.5 * (a + b)
        c = c * c / (4.0 * a_next)
        b = math.sqrt(a * b)
        a = a_next
        weight *= 2.0
        total += weight * c * c
    big_k = math.pi / (2.0 * a)
    return big_k, big_k * (1.0 - total)


def complete_elliptic_k(kprime: float) -> float:
    return elliptic_ke(kprime)[0]


def complete_elliptic_e(kprime: float) -> float:
    return elliptic_ke(kprime)[1]


def elliptic_ke_array(kprime: np.ndarray, k: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Elementwise (K, E); same recurrence as elliptic_ke."""
    kprime = np.asarray(kprime, dtype=float)
    if k is None:
        k = np.sqrt((1.0 - kprime) * (1.0 + kprime))
    a = np.ones_like(kprime)
    b = kprime.copy()
    c = np.asarray(k, dtype=float).copy()
    weight = np.full_like(kprime, 0.5)
    total = weight * c * c
    active = np.abs(a - b) > AGM_RTOL * a
    for _ in range(AGM_MAX_ITER):
        if not active.any():
            break
        a_next = 0.5 * (a + b)
        c_next = c * c / (4.0 * a_next)
        b_next = np.sqrt(a * b)
        weight_next = 2.0 * weight
        a = np.where(active, a_next, a)
        b = np.where(active, b_next, b)
        c = np.where(active, c_next, c)
        weight = np.where(active, weight_next, weight)
        total = np.where(active, total + weight * c * c, total)
        active = active & (np.abs(a - b) > AGM_RTOL * a)
    with np.errstate(divide="ignore"):
        big_k = np.where(kprime > 0.0, np.pi / (2.0 * a), np.inf)
        big_e = np.where(kprime > 0.0, big_k * (1.0 - total), 1.0)
    return big_k, big_e
