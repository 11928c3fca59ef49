"""Closed-cavity spectra and S-matrix poles by exterior complex scaling."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..core import ComplexEnergy, ResonanceSet, ResonanceState, attach_mixing
from ..errors import NoConvergence
from .geometry import BilliardGeometry, DiscretizationParams
from .grid import Lattice, assemble, build_lattice, check_resolution, symmetric_operator

log = logging.getLogger(__name__)

THETA_PROBE = 0.1
DEFAULT_DEPTH = 6.0


@dataclass
class ClosedSpectrum:
    energies: np.ndarray
    fields: list[np.ndarray]  # (nx-1, ny-1) arrays, sum |u|^2 hx hy = 1
    vectors: np.ndarray  # columns, symmetric representation over cavity unknowns
    lattice: Lattice


def _v0(n: int) -> np.ndarray:
    # fixed start vector keeps ARPACK runs reproducible
    return np.cos(0.37 * np.arange(n)) + 1j * np.sin(0.11 * np.arange(n)) + 1.0


def eigs_in_disk(H, center: complex, radius: float, k0: int = 12, hermitian: bool = False):
    """All eigenpairs of sparse ``H`` within ``radius`` of ``center``.

    Shift-invert about ``center``; ``k`` doubles until the farthest returned
    eigenvalue lies outside the disk, which guarantees none inside is missed.
    """
    n = H.shape[0]
    k = min(k0, n - 2)
    if hermitian:
        op = (H - center.real * sp.identity(n, format="csc")).tocsc()
        lu = spla.splu(op)
    else:
        op = (H - center * sp.identity(n, dtype=complex, format="csc")).tocsc()
        lu = spla.splu(op)
    dtype = float if hermitian else complex
    opinv = spla.LinearOperator((n, n), matvec=lu.solve, dtype=dtype)
    while True:
        try:
            if hermitian:
                w, V = spla.eigsh(
                    H, k=k, sigma=center.real, OPinv=opinv, v0=_v0(n).real, which="LM"
                )
            else:
                w, V = spla.eigs(H, k=k, sigma=center, OPinv=opinv, v0=_v0(n), which="LM")
        except spla.ArpackNoConvergence as exc:
            raise NoConvergence(str(exc), shift=center) from exc
        dist = np.abs(w - center)
        if dist.max() > radius or k >= n - 2:
            keep = dist <= radius
            return w[keep], V[:, keep]
        k = min(2 * k, n - 2)


def _chunks(lo: float, hi: float, spacing: float) -> list[tuple[float, float]]:
    n = max(1, math.ceil((hi - lo) / spacing))
    edges = np.linspace(lo, hi, n + 1)
    return list(zip(edges[:-1], edges[1:]))


def _weyl_count(area: float, e: float) -> float:
    return area * e / (4.0 * math.pi)


def closed_spectrum(
    geom: BilliardGeometry,
    disc: DiscretizationParams,
    window: tuple[float, float],
) -> ClosedSpectrum:
    """Dirichlet eigenvalues of the sealed cavity inside ``window``."""
    e_lo, e_hi = window
    lat = build_lattice(geom, disc, "closed")
    check_resolution(lat.hx, lat.hy, e_hi)
    K, M = assemble(lat)
    H, D = symmetric_operator(K, M)
    H = H.real.tocsr()
    n = H.shape[0]
    expected = _weyl_count(geom.area, e_hi) - _weyl_count(geom.area, e_lo)
    pieces = max(1, math.ceil(expected / 25.0))
    ws, vs = [], []
    for a, b in _chunks(e_lo, e_hi, (e_hi - e_lo) / pieces):
        c = 0.5 * (a + b)
        k0 = int(1.5 * (_weyl_count(geom.area, b) - _weyl_count(geom.area, a))) + 8
        w, V = eigs_in_disk(H, complex(c), 0.5 * (b - a), k0=k0, hermitian=True)
        keep = (w >= a) & (w < b) if b < e_hi else (w >= a) & (w <= b)
        ws.append(w[keep])
        vs.append(V[:, keep])
    w = np.concatenate(ws) if ws else np.zeros(0)
    V = np.concatenate(vs, axis=1) if vs else np.zeros((n, 0))
    order = np.argsort(w)
    w, V = w[order], V[:, order]
    V = V / np.linalg.norm(V, axis=0)
    for c in range(V.shape[1]):
        k = int(np.argmax(np.abs(V[:, c])))
        if V[k, c] < 0:
            V[:, c] = -V[:, c]
    cav = lat.cavity_index()
    fields = []
    for c in range(V.shape[1]):
        u = np.zeros(cav.shape)
        mask = cav >= 0
        u[mask] = V[cav[mask], c] * D[cav[mask]].real
        fields.append(u)
    return ClosedSpectrum(w, fields, V, lat)


def ecs_operator(geom, disc, theta: float):
    lat = build_lattice(geom, disc, "ecs", theta=theta)
    K, M = assemble(lat)
    H, D = symmetric_operator(K, M)
    return lat, H.tocsr(), D


def ecs_eigenvalues(
    geom: BilliardGeometry,
    disc: DiscretizationParams,
    window: tuple[float, float],
    theta: float,
    depth: float = DEFAULT_DEPTH,
    vectors: bool = True,
):
    """Eigenvalues of the complex-scaled operator with ``Re`` in ``window``
    and ``-depth <= Im <= 0`` (plus a small margin above the axis)."""
    lat, H, D = ecs_operator(geom, disc, theta)
    e_lo, e_hi = window
    spacing = max(2.0, 4.0 * math.pi / geom.area * 4.0)
    ws, vs, failed = [], [], []
    for a, b in _chunks(e_lo, e_hi, spacing):
        center = complex(0.5 * (a + b), -0.5 * depth)
        radius = math.hypot(0.5 * (b - a), 0.5 * depth) + 1e-6
        k0 = int(1.5 * (_weyl_count(geom.area, b) - _weyl_count(geom.area, a))) + 10
        try:
            w, V = eigs_in_disk(H, center, radius, k0=k0)
        except NoConvergence as exc:
            log.warning("no convergence for shift %s: %s", center, exc)
            failed.append(center)
            continue
        keep = (w.real >= a) & ((w.real < b) if b < e_hi else (w.real <= b))
        keep &= (w.imag >= -depth) & (w.imag <= 1e-6 * max(1.0, abs(center)))
        ws.append(w[keep])
        vs.append(V[:, keep])
    w = np.concatenate(ws) if ws else np.zeros(0, dtype=complex)
    V = np.concatenate(vs, axis=1) if vs else np.zeros((H.shape[0], 0), dtype=complex)
    return lat, H, D, w, (V if vectors else None), failed


def _c_normalize(v: np.ndarray) -> np.ndarray:
    v = v / np.sqrt(v @ v)
    k = int(np.argmax(np.abs(v)))
    return -v if v[k].real < 0 else v


def open_window(lat: Lattice, window: tuple[float, float]) -> tuple[float, float]:
    """Clip ``window`` to the one-channel range of the discrete lead.

    On the lattice the channel thresholds sit slightly below ``(c*pi)^2``;
    above the second one a second scaled continuum appears and its rotated
    eigenvalues are hard to tell from poles.
    """
    t = lat.thresholds()
    hi = min(window[1], t[1]) if t.size > 1 else window[1]
    return max(window[0], t[0]), hi


def theta_tolerance(e: complex) -> float:
    return max(1e-3, 1e-3 * abs(e))


def find_poles(
    geom: BilliardGeometry,
    disc: DiscretizationParams,
    window: tuple[float, float] = (math.pi**2, 4 * math.pi**2),
    *,
    depth: float = DEFAULT_DEPTH,
    tol_imag: float = 1e-10,
    theta_probe: float = THETA_PROBE,
    basis: ClosedSpectrum | None = None,
    with_fields: bool = True,
) -> ResonanceSet:
    """S-matrix poles in ``window`` from the complex-scaled eigenproblem.

    An eigenvalue is accepted when it lies on or below the real axis (up to
    ``tol_imag``) and moves by less than ``max(1e-3, 1e-3*|E|)`` when the
    scaling angle grows by ``theta_probe``; rotated-continuum eigenvalues
    fail this test.  Pass ``basis`` (a closed spectrum on the same grid) to
    attach mixing coefficients.  The window is clipped to the range
    between the first two discrete channel thresholds.
    """
    theta = disc.ecs_theta
    probe = build_lattice(geom, disc, "closed")
    check_resolution(probe.hx, probe.hy, window[1])
    window = open_window(probe, window)
    lat, H, D, w, V, failed = ecs_eigenvalues(geom, disc, window, theta, depth)
    _, _, _, w2, _, failed2 = ecs_eigenvalues(
        geom, disc, window, theta + theta_probe, depth + 1.0, vectors=False
    )
    states = []
    cav = lat.cavity_index()
    cmask = cav >= 0
    for e, v in zip(w, V.T):
        if e.imag > tol_imag:
            continue
        if w2.size == 0 or np.min(np.abs(w2 - e)) > theta_tolerance(e):
            continue
        v = _c_normalize(v)
        state = ResonanceState(
            ComplexEnergy.from_complex(e), v, float(np.vdot(v, v).real)
        )
        states.append(state)
    states.sort(key=lambda s: (s.energy.re, -s.energy.im))
    nsq = [s.norm_sq for s in states]
    rset = ResonanceSet(states, float(np.mean(nsq)) if nsq else 1.0)
    rset.meta = {
        "hx": lat.hx,
        "hy": lat.hy,
        "window": window,
        "theta": theta,
        "n_unknowns": lat.n,
        "failed_shifts": [complex(c) for c in failed + failed2],
    }
    if with_fields:
        fields = []
        for s in states:
            u = np.zeros(cav.shape, dtype=complex)
            u[cmask] = s.vector[cav[cmask]] * D[cav[cmask]]
            fields.append(u)
        rset.meta["fields"] = fields
        rset.meta["lattice"] = lat
    if basis is not None:
        rset = attach_mixing(rset, basis.vectors)
    return rset
