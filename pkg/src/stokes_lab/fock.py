"""Exact Stokes-operator matrices and SU(2) transformations on photon-number manifolds.

The N-photon manifold of two polarization modes is spanned by the basis
|N-k, k> (horizontal count, vertical count) for k = 0..N, ordered by
decreasing horizontal occupation so that the photon-number-difference
operator is diagonal with descending eigenvalues N, N-2, ..., -N.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

DEFAULT_MANIFOLD_CAP = 32
UNIT_NORM_TOL = 1e-12

_CAP_ENV_VAR = "STOKES_LAB_NMAX"


def manifold_cap() -> int:
    """Largest accepted total photon number (env STOKES_LAB_NMAX overrides)."""
    raw = os.environ.get(_CAP_ENV_VAR)
    if raw is None:
        return DEFAULT_MANIFOLD_CAP
    cap = int(raw)
    if cap < 0:
        raise ValueError(f"{_CAP_ENV_VAR} must be non-negative, got {cap}")
    return cap


def check_manifold(n_photons: int) -> int:
    """Validate a manifold label against the overflow guard."""
    n = int(n_photons)
    if n != n_photons or n < 0:
        raise ValueError(f"photon number must be a non-negative integer, got {n_photons!r}")
    cap = manifold_cap()
    if n > cap:
        raise ValueError(
            f"manifold {n} exceeds the cap {cap}; raise {_CAP_ENV_VAR} to override"
        )
    return n


class EulerAngles(NamedTuple):
    """Euler angles (phi, theta, xi) of a two-mode linear-optics transformation."""

    phi: float
    theta: float
    xi: float


@dataclass(frozen=True)
class Direction:
    """Unit vector on the polarization sphere.

    The norm must be 1 within 1e-12; use from_vector(..., normalize=True)
    to build one from unnormalized data.
    """

    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"direction must be a unit vector, got norm {norm!r}")

    @classmethod
    def from_vector(cls, vec, normalize: bool = False) -> "Direction":
        v = np.asarray(vec, dtype=float)
        if v.shape != (3,):
            raise ValueError(f"direction needs 3 components, got shape {v.shape}")
        if normalize:
            norm = np.linalg.norm(v)
            if norm == 0.0:
                raise ValueError("cannot normalize the zero vector")
            v = v / norm
        return cls(float(v[0]), float(v[1]), float(v[2]))

    @classmethod
    def from_spherical(cls, theta: float, phi: float) -> "Direction":
        """Polar angle theta from the z-axis, azimuth phi in the xy-plane."""
        st = math.sin(theta)
        return cls(st * math.cos(phi), st * math.sin(phi), math.cos(theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def spherical(self) -> tuple[float, float]:
        """(theta, phi) with theta = arccos(z)."""
        return math.acos(min(1.0, max(-1.0, self.z))), math.atan2(self.y, self.x)

    def euler_angles(self) -> EulerAngles:
        """Euler angles (phi, theta, 0) that rotate the z-axis onto this direction."""
        theta, phi = self.spherical()
        return EulerAngles(phi, theta, 0.0)

    def opposite(self) -> "Direction":
        return Direction(-self.x, -self.y, -self.z)


def as_direction(n) -> Direction:
    """Coerce a Direction or 3-vector (validated, not normalized) to Direction."""
    if isinstance(n, Direction):
        return n
    return Direction.from_vector(n)


@lru_cache(maxsize=None)
def _stokes_cached(index: int, n_photons: int) -> np.ndarray:
    dim = n_photons + 1
    op = np.zeros((dim, dim), dtype=complex)
    if index == 0:
        np.fill_diagonal(op, float(n_photons))
    elif index == 3:
        for k in range(dim):
            op[k, k] = n_photons - 2 * k
    else:
        # Two-mode ladder action restricted to the manifold:
        # a_H a_V^dag |N-k,k> = sqrt((N-k)(k+1)) |N-k-1,k+1>
        # a_H^dag a_V |N-k,k> = sqrt((N-k+1)k)   |N-k+1,k-1>
        for k in range(dim):
            if k + 1 <= n_photons:
                amp = math.sqrt((n_photons - k) * (k + 1))
                op[k + 1, k] = amp if index == 1 else 1j * amp
            if k >= 1:
                amp = math.sqrt((n_photons - k + 1) * k)
                op[k - 1, k] = amp if index == 1 else -1j * amp
    op.setflags(write=False)
    return op


def stokes_operator(index: int, n_photons: int) -> np.ndarray:
    """Matrix of the Stokes operator with the given index (0..3) on one manifold.

    Index 0 is the total photon number, 3 the photon-number difference,
    1 and 2 the mode-exchange quadratures.  The returned array is a cached
    read-only view.
    """
    if index not in (0, 1, 2, 3):
        raise ValueError(f"Stokes index must be 0..3, got {index}")
    return _stokes_cached(index, check_manifold(n_photons))


def stokes_vector_operators(n_photons: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three generators (indices 1, 2, 3) on one manifold."""
    return tuple(stokes_operator(j, n_photons) for j in (1, 2, 3))


def stokes_in_direction(n, n_photons: int) -> np.ndarray:
    """n . S restricted to one manifold; spectrum is {N-2k : k=0..N}."""
    d = as_direction(n)
    s1, s2, s3 = stokes_vector_operators(n_photons)
    return d.x * s1 + d.y * s2 + d.z * s3


@lru_cache(maxsize=None)
def _generator_eigensystem(index: int, n_photons: int):
    evals, evecs = np.linalg.eigh(_stokes_cached(index, n_photons))
    evals.setflags(write=False)
    evecs.setflags(write=False)
    return evals, evecs


def _half_angle_exp(index: int, angle: float, n_photons: int) -> np.ndarray:
    """exp(-i * angle * S_index / 2) via spectral decomposition of the generator."""
    if index == 3:
        diag = np.exp(-0.5j * angle * np.array([n_photons - 2 * k for k in range(n_photons + 1)]))
        return np.diag(diag)
    evals, evecs = _generator_eigensystem(index, n_photons)
    return (evecs * np.exp(-0.5j * angle * evals)) @ evecs.conj().T


def su2_unitary(angles, n_photons: int) -> np.ndarray:
    """Linear-optics unitary exp(-i phi S3/2) exp(-i theta S2/2) exp(-i xi S3/2)."""
    phi, theta, xi = angles
    n = check_manifold(n_photons)
    return _half_angle_exp(3, phi, n) @ _half_angle_exp(2, theta, n) @ _half_angle_exp(3, xi, n)


def rotation_matrix(axis: int, angle: float) -> np.ndarray:
    """Proper rotation by angle around coordinate axis 1, 2 or 3."""
    c, s = math.cos(angle), math.sin(angle)
    if axis == 1:
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    if axis == 2:
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    if axis == 3:
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    raise ValueError(f"rotation axis must be 1, 2 or 3, got {axis}")


def euler_rotation_matrix(angles) -> np.ndarray:
    """R3(phi) R2(theta) R3(xi): the sphere rotation induced by su2_unitary."""
    phi, theta, xi = angles
    return rotation_matrix(3, phi) @ rotation_matrix(2, theta) @ rotation_matrix(3, xi)


def direction_from_euler(angles) -> Direction:
    """Image of the z-axis under the Euler rotation: where S3 is carried."""
    phi, theta, _ = angles
    return Direction.from_spherical(theta, phi)


def conjugate_stokes(angles, n, n_photons: int) -> np.ndarray:
    """U S_n U^dag, equal to the Stokes operator along the rotated direction."""
    u = su2_unitary(angles, n_photons)
    return u @ stokes_in_direction(n, n_photons) @ u.conj().T


def rotated_direction(angles, n) -> Direction:
    """The direction R3(phi) R2(theta) R3(xi) n."""
    v = euler_rotation_matrix(angles) @ as_direction(n).as_array()
    return Direction.from_vector(v, normalize=True)
