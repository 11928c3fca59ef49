"""Lattice, unknown numbering and finite-volume assembly of ``-Laplacian``.

All three problems (sealed cavity, complex-scaled open system, real-energy
scattering) share one lattice.  Node ``(i, j)`` sits at
``x = -1.5 + i*hx``; row ``j`` is ``y = y_d + j*hy`` inside the cavity
(``0 <= j <= ny``), continues upward into lead 1 for ``j > ny`` and
downward into lead 2 for ``j < 0``.  Nodes that are walls, slide, scatterer
or outside a lead are Dirichlet and carry no unknown.

The five-point stencil is written in finite-volume form: every unknown has a
mass ``hx * m_j`` (``m_j`` the mean of the two vertical link lengths at its
row) and the stiffness matrix is symmetric.  Leads use a finer row spacing
``hs = hy / lead_refine`` (a coarse lead row spacing makes broad poles drift
with the scaling angle).  In the complex-scaled part of a lead the vertical
link length becomes ``hs * exp(1j*theta)``, so the
stiffness stays complex symmetric and so does
``H = M^{-1/2} K M^{-1/2}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import GridTooCoarse
from .geometry import LEAD_WIDTH, X_LEFT, BilliardGeometry, DiscretizationParams, snap_spacing


@dataclass
class Lead:
    """Bookkeeping for one lead: lattice columns and explicit rows."""

    number: int
    i_left: int  # lattice column of the left lead wall
    m: int  # cells across the lead
    direction: int  # +1 upward (lead 1), -1 downward (lead 2)
    j_mouth: int  # lattice row of the slide
    n_rows: int  # explicit rows including the slide row

    @property
    def columns(self) -> np.ndarray:
        return np.arange(self.i_left + 1, self.i_left + self.m)

    def row(self, s: int) -> int:
        """Lattice row ``s`` steps away from the slide."""
        return self.j_mouth + self.direction * s


@dataclass
class Lattice:
    geom: BilliardGeometry
    hx: float
    hy: float
    nx: int
    ny: int
    leads: list[Lead]
    j_lo: int
    index: np.ndarray  # (nx+1, n_rows_total) -> unknown id or -1
    n_cavity: int
    scaled_from: int | None = None  # row offset (from a slide) where scaling starts
    theta: float = 0.0
    hs: float = 0.0  # row spacing inside the leads
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return int(self.index.max()) + 1

    def jj(self, j: int) -> int:
        return j - self.j_lo

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Cavity node coordinates, walls included."""
        x = X_LEFT + self.hx * np.arange(self.nx + 1)
        y = self.geom.y_d + self.hy * np.arange(self.ny + 1)
        return x, y

    def thresholds(self) -> np.ndarray:
        """Lead channel thresholds ``t_c`` of the discrete lead."""
        m = round(LEAD_WIDTH / self.hx)
        return 2.0 / self.hx**2 * transverse_modes(m)[1]

    def cavity_index(self) -> np.ndarray:
        """Unknown ids of the interior cavity nodes, shape (nx-1, ny-1)."""
        return self.index[1 : self.nx, self.jj(1) : self.jj(self.ny)]

    def lead_row(self, lead: Lead, s: int) -> np.ndarray:
        return self.index[lead.columns, self.jj(lead.row(s))]

    def link_length(self, j: int) -> complex:
        """Vertical link between rows ``j`` and ``j + 1``."""
        for lead in self.leads:
            if lead.direction > 0 and j >= lead.j_mouth:
                s = j - lead.j_mouth
            elif lead.direction < 0 and j + 1 <= lead.j_mouth:
                s = lead.j_mouth - (j + 1)
            else:
                continue
            if self.scaled_from is not None and s >= self.scaled_from:
                return self.hs * np.exp(1j * self.theta)
            return self.hs
        return self.hy


def grid_spacing(geom: BilliardGeometry, disc: DiscretizationParams) -> tuple[float, float]:
    hx = snap_spacing(X_LEFT, list(geom.x_marks()) + list(disc.align_x), disc.h)
    ny = math.ceil(geom.height / disc.h - 1e-9)
    return hx, geom.height / ny


def check_resolution(hx: float, hy: float, e_hi: float) -> None:
    h_max = 2.0 * math.pi / (8.0 * math.sqrt(e_hi))
    if max(hx, hy) > h_max:
        raise GridTooCoarse(
            f"spacing {max(hx, hy):.4g} exceeds {h_max:.4g} (8 points per wavelength at E={e_hi:g})"
        )


def build_lattice(
    geom: BilliardGeometry,
    disc: DiscretizationParams,
    kind: str,
    theta: float | None = None,
) -> Lattice:
    """Number the unknowns for ``kind`` in {"closed", "ecs", "scatter"}."""
    hx, hy = grid_spacing(geom, disc)
    nx = round(geom.width / hx)
    ny = round(geom.height / hy)
    m = round(LEAD_WIDTH / hx)

    hs = hy / disc.lead_refine
    if kind == "closed":
        rows = 0
    elif kind == "ecs":
        rows = round(disc.ecs_start / hs) + round(disc.lead_length / hs) + 1
    elif kind == "scatter":
        rows = max(round(disc.ecs_start / hs), 1) + 1
    else:
        raise ValueError(f"unknown lattice kind {kind!r}")

    leads = []
    if rows:
        leads.append(Lead(1, 0, m, +1, ny, rows))
        if geom.lead2_enabled:
            leads.append(Lead(2, nx - m, m, -1, 0, rows))
    j_lo = -(rows - 1) if (rows and geom.lead2_enabled) else 0
    j_hi = ny + rows - 1 if rows else ny
    mask = np.zeros((nx + 1, j_hi - j_lo + 1), dtype=bool)

    x = X_LEFT + hx * np.arange(nx + 1)
    y = geom.y_d + hy * np.arange(ny + 1)
    inner = np.zeros((nx + 1, ny + 1), dtype=bool)
    inner[1:nx, 1:ny] = True
    if geom.scatterer_radius > 0:
        cx, cy = geom.scatterer_center
        X, Y = np.meshgrid(x, y, indexing="ij")
        inner &= np.hypot(X - cx, Y - cy) >= geom.scatterer_radius
    mask[:, -j_lo : -j_lo + ny + 1] = inner

    eps = 1e-9 * hx
    for lead, (a, b) in zip(leads, geom.openings()):
        cols = lead.columns
        xs = x[cols]
        mask[cols, lead.j_mouth - j_lo] = (xs > a + eps) & (xs < b - eps)
        for s in range(1, lead.n_rows):
            mask[cols, lead.row(s) - j_lo] = True

    index = np.full(mask.shape, -1, dtype=np.int64)
    # cavity unknowns first so that the cavity block is a leading slice
    cav = np.zeros_like(mask)
    cav[1:nx, 1 - j_lo : ny - j_lo] = mask[1:nx, 1 - j_lo : ny - j_lo]
    n_cav = int(cav.sum())
    index[cav] = np.arange(n_cav)
    rest = mask & ~cav
    index[rest] = n_cav + np.arange(int(rest.sum()))

    lat = Lattice(geom, hx, hy, nx, ny, leads, j_lo, index, n_cav, hs=hs)
    if kind == "ecs":
        lat.scaled_from = round(disc.ecs_start / hs)
        lat.theta = disc.ecs_theta if theta is None else theta
    lat.meta = {"hx": hx, "hy": hy, "hs": hs, "kind": kind, "n_unknowns": lat.n}
    return lat


def assemble(lat: Lattice) -> tuple[sp.csr_matrix, np.ndarray]:
    """Stiffness ``K`` (complex symmetric) and diagonal mass ``M``."""
    idx = lat.index
    ncol = idx.shape[1]
    links = np.array([lat.link_length(j) for j in range(lat.j_lo - 1, lat.j_lo + ncol)])
    below = links[:-1]  # link (j-1, j) for every lattice row
    above = links[1:]  # link (j, j+1)
    row_mass = 0.5 * (below + above)
    hx = lat.hx

    present = idx >= 0
    ii, jj = np.nonzero(present)
    ids = idx[ii, jj]
    diag = 2.0 * row_mass[jj] / hx + hx / below[jj] + hx / above[jj]
    mass = hx * row_mass[jj]

    rows = [ids]
    cols = [ids]
    vals = [diag.astype(complex)]
    # horizontal neighbours
    a = idx[:-1, :]
    b = idx[1:, :]
    both = (a >= 0) & (b >= 0)
    w = np.broadcast_to(row_mass[None, :] / hx, a.shape)[both]
    rows += [a[both], b[both]]
    cols += [b[both], a[both]]
    vals += [-w.astype(complex), -w.astype(complex)]
    # vertical neighbours
    a = idx[:, :-1]
    b = idx[:, 1:]
    both = (a >= 0) & (b >= 0)
    w = np.broadcast_to(hx / links[1:ncol][None, :], a.shape)[both]
    rows += [a[both], b[both]]
    cols += [b[both], a[both]]
    vals += [-w.astype(complex), -w.astype(complex)]

    n = lat.n
    M = np.empty(n, dtype=complex)
    M[ids] = mass
    K = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    return K, M


def symmetric_operator(K: sp.spmatrix, M: np.ndarray) -> tuple[sp.csr_matrix, np.ndarray]:
    """``H = D K D`` with ``D = M^{-1/2}``; returns ``(H, D)``."""
    D = 1.0 / np.sqrt(M)
    Dm = sp.diags(D)
    return (Dm @ K @ Dm).tocsr(), D


def transverse_modes(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Discrete lead modes: columns ``chi_c`` and thresholds ``t_c`` times hx^2/2."""
    i = np.arange(1, m)
    c = np.arange(1, m)
    chi = np.sqrt(2.0 / m) * np.sin(np.pi * np.outer(i, c) / m)
    return chi, 1.0 - np.cos(np.pi * c / m)
