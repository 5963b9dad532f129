"""Shared oracles kept independent of the package's construction paths.

The lattice oracle builds Stokes operators on the full two-mode Fock
lattice with Kronecker products of single-mode ladders and projects onto a
manifold afterwards; the package builds manifold matrices directly, so
agreement between the two cross-checks basis order and ladder amplitudes.
"""

import numpy as np
import pytest


def single_mode_ladder(dim):
    a = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        a[n - 1, n] = np.sqrt(n)
    return a


def lattice_stokes(index, n_photons):
    """Stokes operator on manifold n_photons via the full-lattice route."""
    dim = n_photons + 1
    a = single_mode_ladder(dim)
    eye = np.eye(dim)
    a_h = np.kron(a, eye)
    a_v = np.kron(eye, a)
    if index == 0:
        big = a_h.conj().T @ a_h + a_v.conj().T @ a_v
    elif index == 1:
        big = a_h @ a_v.conj().T + a_h.conj().T @ a_v
    elif index == 2:
        big = 1j * (a_h @ a_v.conj().T - a_h.conj().T @ a_v)
    elif index == 3:
        big = a_h.conj().T @ a_h - a_v.conj().T @ a_v
    else:
        raise ValueError(index)
    # isometry onto the manifold basis |N-k, k>, k = 0..N
    proj = np.zeros((dim * dim, dim), dtype=complex)
    for k in range(dim):
        proj[(n_photons - k) * dim + k, k] = 1.0
    return proj.conj().T @ big @ proj


def series_expm(matrix, terms=60):
    """Plain power-series exponential, independent of eigendecompositions."""
    out = np.eye(matrix.shape[0], dtype=complex)
    term = np.eye(matrix.shape[0], dtype=complex)
    for n in range(1, terms):
        term = term @ matrix / n
        out = out + term
    return out


def random_direction(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_density(n_photons, rng):
    dim = n_photons + 1
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_pure(n_photons, rng):
    v = rng.normal(size=n_photons + 1) + 1j * rng.normal(size=n_photons + 1)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(20230917)
