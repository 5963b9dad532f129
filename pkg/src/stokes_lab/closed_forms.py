"""Closed-form direction-moment profiles for the standard state families.

These serve as analytic oracles against the matrix route Tr(rho S_n^r).
Each family's profile is a polynomial in the direction, evaluated here
without building any operator.
"""

from __future__ import annotations

import math

from .errors import TruncationError
from .factorials import q_polynomial, second_kind_even_closed_form
from .fock import as_direction

TAIL_TOL = 1e-10

FAMILIES = ("su2_coherent", "two_mode_coherent", "twin_fock", "tmsv", "noon")


def su2_coherent_pole_profile(n_photons: int, order: int, n) -> float:
    """Moment of n.S for the polar spin coherent state (all photons horizontal).

    Binomial average of (N-2k)^r with splitting ratio set by the polar angle.
    """
    d = as_direction(n)
    theta = math.acos(min(1.0, max(-1.0, d.z)))
    s2, c2 = math.sin(theta / 2.0) ** 2, math.cos(theta / 2.0) ** 2
    return float(
        sum(
            (n_photons - 2 * k) ** order * math.comb(n_photons, k) * s2**k * c2 ** (n_photons - k)
            for k in range(n_photons + 1)
        )
    )


def two_mode_coherent_profile(mean_photons: float, order: int, n, n_max: int = 80) -> float:
    """Poisson-weighted mixture of polar spin-coherent profiles."""
    if mean_photons < 0:
        raise ValueError("mean photon number must be non-negative")
    if mean_photons == 0:
        return 0.0 if order >= 1 else 1.0
    log_w = -mean_photons
    total = 0.0
    mass = 0.0
    for nn in range(n_max + 1):
        if nn > 0:
            log_w += math.log(mean_photons) - math.log(nn)
        w = math.exp(log_w)
        mass += w
        if w > 0.0:
            total += w * su2_coherent_pole_profile(nn, order, n)
    if 1.0 - mass > TAIL_TOL:
        raise TruncationError(f"Poisson tail beyond {n_max} still holds {1.0 - mass:.3e}")
    return total


def _double_factorial_odd(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def twin_fock_profile(pairs: int, order: int, n) -> float:
    """Even-order moments of the twin Fock state; odd orders vanish identically.

    Expansion over even powers of sin(theta) with second-kind central
    factorial numbers at even arguments.
    """
    if order % 2 == 1:
        return 0.0
    d = as_direction(n)
    sin_sq = max(0.0, 1.0 - d.z * d.z)
    total = 0.0
    for j in range(order // 2 + 1):
        coeff = float(second_kind_even_closed_form(order, j))
        if coeff == 0.0:
            continue
        total += _double_factorial_odd(2 * j - 1) ** 2 * coeff * math.comb(pairs + j, 2 * j) * sin_sq**j
    return 2.0**order * total


def tmsv_profile(mean_photons: float, order: int, n, m_max: int = 60) -> float:
    """Thermal-pair-weighted mixture of twin Fock profiles.

    This is the manifold-weighted average prescribed by the sector
    decomposition; it matches the direct matrix expectation on the lattice
    state exactly.
    """
    if mean_photons < 0:
        raise ValueError("mean photon number must be non-negative")
    if order % 2 == 1:
        return 0.0
    q = mean_photons / (2.0 + mean_photons)
    if q ** (m_max + 1) > TAIL_TOL:
        raise TruncationError(f"pair tail beyond {m_max} still holds {q ** (m_max + 1):.3e}")
    total = 0.0
    for m in range(m_max + 1):
        w = 2.0 * mean_photons**m / (2.0 + mean_photons) ** (m + 1)
        if w == 0.0:
            continue
        total += w * twin_fock_profile(m, order, n)
    return total


def noon_profile(n_photons: int, order: int, n) -> float:
    """Direction moments of the equal H/V superposition.

    Odd orders vanish for even photon number; otherwise the azimuthal
    oscillation at the photon-number frequency appears explicitly.
    """
    if n_photons < 1:
        raise ValueError("the superposition needs at least one photon")
    d = as_direction(n)
    theta = math.acos(min(1.0, max(-1.0, d.z)))
    phi = math.atan2(d.y, d.x)
    nn = n_photons
    if order % 2 == 1 and nn % 2 == 0:
        return 0.0
    if order % 2 == 1:
        alt = sum((nn - 2 * k) ** order * math.comb(nn, k) * (-1) ** k for k in range((nn - 1) // 2 + 1))
        return math.cos(nn * phi) * math.sin(theta) ** nn / 4.0 ** ((nn - 1) // 2) * alt
    c2, s2 = math.cos(theta / 2.0), math.sin(theta / 2.0)
    total = 0.0
    for k in range(nn + 1):
        total += (nn - 2 * k) ** order * math.comb(nn, k) * (
            c2 ** (2 * k) * s2 ** (2 * (nn - k))
            + (-1) ** k * math.cos(nn * phi) * c2**nn * s2**nn
        )
    return total


def noon_equatorial_value(n_photons: int, order_equals_photons_phi: float) -> float:
    """The order-N moment in the horizontal plane as a function of azimuth.

    N! cos(N phi), plus a constant offset for even photon numbers given by
    the Q polynomial at half the photon number.
    """
    nn = n_photons
    phi = order_equals_photons_phi
    base = math.factorial(nn) * math.cos(nn * phi)
    if nn % 2 == 0:
        base += 2.0 ** (nn // 2) * float(q_polynomial(nn // 2, nn // 2))
    return base


def closed_form_profile(family: str, params: dict, order: int, n) -> float:
    """Dispatch a family profile oracle by name.

    family is one of FAMILIES; params carries the family parameters
    (n_photons, pairs, mean_photons, and optional truncation bounds).
    """
    if family == "su2_coherent":
        return su2_coherent_pole_profile(params["n_photons"], order, n)
    if family == "two_mode_coherent":
        return two_mode_coherent_profile(
            params["mean_photons"], order, n, n_max=params.get("n_max", 80)
        )
    if family == "twin_fock":
        return twin_fock_profile(params["pairs"], order, n)
    if family == "tmsv":
        return tmsv_profile(params["mean_photons"], order, n, m_max=params.get("m_max", 60))
    if family == "noon":
        return noon_profile(params["n_photons"], order, n)
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
