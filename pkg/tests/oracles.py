"""Independent reference computations used by the tests.

Nothing here imports reslab: each function is a separate derivation of a
quantity the package computes another way.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np


def eig2_symmetric(a: complex, b: complex, d: complex, dps: int = 40) -> tuple[complex, complex]:
    """Eigenvalues of [[a, b], [b, d]] from the characteristic quadratic at high precision."""
    with mpmath.workdps(dps):
        a, b, d = mpmath.mpc(a), mpmath.mpc(b), mpmath.mpc(d)
        mean = (a + d) / 2
        root = mpmath.sqrt(((a - d) / 2) ** 2 + b * b)
        hi, lo = complex(mean + root), complex(mean - root)
    return tuple(sorted((hi, lo), key=lambda z: (z.real, -z.imag)))


def biorthogonality_2x2(a: complex, b: complex, d: complex) -> float:
    """Mean of v^H v over the two c-normalized eigenvectors (v^T v = 1), by hand."""
    vals = []
    for lam in eig2_symmetric(a, b, d):
        # (a - lam) x + b y = 0 -> v = (b, lam - a) unless that vanishes
        v = np.array([b, lam - a], dtype=complex)
        if np.linalg.norm(v) < 1e-14:
            v = np.array([lam - d, b], dtype=complex)
        v = v / np.sqrt(v @ v)
        vals.append(float(np.vdot(v, v).real))
    return float(np.mean(vals))


def rectangle_fd_levels(width: float, height: float, hx: float, hy: float, count: int) -> np.ndarray:
    """Lowest Dirichlet eigenvalues of the 5-point Laplacian on a rectangle."""
    nx, ny = round(width / hx), round(height / hy)
    lx = 2.0 / hx**2 * (1.0 - np.cos(np.arange(1, nx) * math.pi / nx))
    ly = 2.0 / hy**2 * (1.0 - np.cos(np.arange(1, ny) * math.pi / ny))
    return np.sort((lx[:, None] + ly[None, :]).ravel())[:count]


def rectangle_levels(width: float, height: float, count: int) -> np.ndarray:
    n = np.arange(1, 40)
    e = (n[:, None] * math.pi / width) ** 2 + (n[None, :] * math.pi / height) ** 2
    return np.sort(e.ravel())[:count]


def count_rectangle_modes(width: float, height: float, lo: float, hi: float) -> int:
    n = 0
    for i in range(1, 100):
        for j in range(1, 100):
            e = (i * math.pi / width) ** 2 + (j * math.pi / height) ** 2
            n += lo < e < hi
    return n


def lattice_wavenumber(E: float, hx: float, hs: float, m: int) -> float:
    """Propagating wave number of the lowest mode in a lattice lead of ``m`` cells."""
    t1 = 2.0 / hx**2 * (1.0 - math.cos(math.pi / m))
    return math.acos(1.0 - 0.5 * hs**2 * (E - t1)) / hs


def breit_wigner_phase(E, e_r: float, gamma: float, phi0: float = 0.0, slope: float = 0.0):
    return phi0 + slope * (E - e_r) + 2.0 * np.arctan((np.asarray(E) - e_r) / (0.5 * gamma))


def two_level_s_direct(eps, coupling, V, E: float) -> np.ndarray:
    """i V^T (E - H)^-1 V for a 2x2 H by the explicit adjugate inverse."""
    (a, d), b = eps, coupling
    det = (E - a) * (E - d) - b * b
    G = np.array([[E - d, b], [b, E - a]], dtype=complex) / det
    V = np.asarray(V, dtype=complex).reshape(2, -1)
    return 1j * V.T @ G @ V
