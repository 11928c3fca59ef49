"""Real-energy scattering: reflection, two-lead S-matrix, conductance, time delay.

The leads are kept explicit for ``ecs_start`` units past each slide and then
closed by the exact discrete Dirichlet-to-Neumann map of a semi-infinite
lattice lead.  In a full-width lead row the transverse modes ``chi_c``
decouple, and mode ``c`` obeys ``phi[s+1] + phi[s-1] = 2*eta_c*phi[s]``
with ``eta_c = 1 - hs^2 (E - t_c) / 2``; its outgoing solution is
``lambda_c**s``.  Every channel, evanescent or not, is matched exactly, so
the truncated problem reproduces the infinite lattice and the S-matrix is
unitary to rounding.

Amplitudes refer to the slide row of each lead.  With an incoming wave
``exp(-i k y) u(x)`` in lead 1 (``y`` pointing away from the cavity), the
reflection amplitude follows the sign convention
``Phi = (exp(-i k y) - R exp(i k y)) u``, i.e. ``R_amp = -S[0, 0]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import curve_fit

from ..errors import SingularSystem, ValidationError
from .geometry import BilliardGeometry, DiscretizationParams
from .grid import assemble, build_lattice, transverse_modes


@dataclass
class ScatteringSolution:
    """Solution at one real energy.

    ``k`` is the continuum wave number ``sqrt(E - pi^2)``; ``k_lattice`` the
    wave number of the discrete lead at the same energy.  ``field`` holds
    the cavity interior for a unit incoming wave in lead 1, scaled so that
    the incoming wave reads ``exp(-i k y) * sqrt(2) * sin(pi * xi)``.
    """

    E: float
    k: float
    R_amp: complex
    S: np.ndarray
    field: np.ndarray
    k_lattice: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def conductance(self) -> float:
        if self.S.shape[0] < 2:
            raise ValidationError("lead2_enabled", "conductance needs two leads")
        return float(abs(self.S[1, 0]) ** 2)

    def unitarity_defect(self) -> float:
        S = self.S
        return float(np.max(np.abs(S.conj().T @ S - np.eye(S.shape[0]))))


def _lead_root(eta: np.ndarray) -> np.ndarray:
    """Outgoing or decaying root of ``lam + 1/lam = 2 eta`` (real ``eta``)."""
    lam = np.empty(eta.shape, dtype=complex)
    prop = np.abs(eta) < 1.0
    lam[prop] = eta[prop] + 1j * np.sqrt(1.0 - eta[prop] ** 2)
    up = eta >= 1.0
    lam[up] = eta[up] - np.sqrt(eta[up] ** 2 - 1.0)
    down = eta <= -1.0
    lam[down] = eta[down] + np.sqrt(eta[down] ** 2 - 1.0)
    return lam


class Scatterer:
    """Lattice, stiffness and lead data of one geometry, reused across energies."""

    def __init__(self, geom: BilliardGeometry, disc: DiscretizationParams, extra_rows: int = 0):
        if extra_rows:
            # moving the matching plane steps off a spurious singularity
            disc = disc.with_(ecs_start=disc.ecs_start + extra_rows * _hs(geom, disc))
        self.geom = geom
        self.disc = disc
        self.lat = lat = build_lattice(geom, disc, "scatter")
        self.K, self.M = assemble(lat)
        self.K = self.K.real.tocsr()
        self.M = self.M.real
        m = lat.leads[0].m
        self.chi, t = transverse_modes(m)
        self.thresholds = 2.0 / lat.hx**2 * t
        n_modes = disc.n_modes if disc.n_modes is not None else m - 1
        self.n_modes = min(n_modes, m - 1)
        self.rows = [lat.lead_row(lead, lead.n_rows - 1) for lead in lat.leads]
        self.depth = [lead.n_rows - 1 for lead in lat.leads]

    @property
    def one_channel_range(self) -> tuple[float, float]:
        t = self.thresholds
        return float(t[0]), float(t[1]) if t.size > 1 else math.inf

    def _check_energy(self, E: float) -> None:
        lo, hi = self.one_channel_range
        gap = 1e-9 * max(1.0, abs(E))
        if not (lo + gap < E < hi - gap):
            raise ValidationError(
                "E", f"{E:g} outside the one-channel range ({lo:.6g}, {hi:.6g}) of the lattice lead"
            )

    def solve(self, E: float) -> ScatteringSolution:
        E = float(E)
        self._check_energy(E)
        lat = self.lat
        hx, hs = lat.hx, lat.hs
        nc = self.n_modes
        chi = self.chi[:, :nc]
        eta = 1.0 - 0.5 * hs**2 * (E - self.thresholds[:nc])
        lam = _lead_root(eta)
        g = hx / hs

        A = (self.K - E * sp.diags(self.M)).astype(complex).tocoo()
        rows, cols, vals = [A.row], [A.col], [A.data]
        block = -g * (chi * lam) @ chi.T
        for ids in self.rows:
            r, c = np.meshgrid(ids, ids, indexing="ij")
            rows.append(r.ravel())
            cols.append(c.ravel())
            vals.append(block.ravel())
        A = sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=A.shape
        )
        try:
            lu = spla.splu(A)
        except RuntimeError as exc:
            raise SingularSystem(f"singular scattering system at E={E}: {exc}") from exc

        lam_out = lam[0]
        lam_in = 1.0 / lam_out
        nl = len(lat.leads)
        S = np.zeros((nl, nl), dtype=complex)
        u1 = None
        for a in range(nl):
            Ja = self.depth[a]
            amp_J = lam_in**Ja  # unit amplitude at the slide row
            b = np.zeros(lat.n, dtype=complex)
            b[self.rows[a]] = g * (lam_in - lam_out) * amp_J * chi[:, 0]
            u = lu.solve(b)
            if not np.all(np.isfinite(u)):
                raise SingularSystem(f"singular scattering system at E={E}")
            for o in range(nl):
                Jo = self.depth[o]
                phi = chi[:, 0] @ u[self.rows[o]]
                out_J = phi - (amp_J if o == a else 0.0)
                S[o, a] = out_J / lam_out**Jo
            if a == 0:
                u1 = u
        cav = lat.cavity_index()
        fld = np.zeros(cav.shape, dtype=complex)
        mask = cav >= 0
        fld[mask] = u1[cav[mask]] / math.sqrt(hx)
        kh = float(np.angle(lam_out))
        return ScatteringSolution(
            E=E,
            k=math.sqrt(E - math.pi**2) if E > math.pi**2 else 0.0,
            R_amp=complex(-S[0, 0]),
            S=S,
            field=fld,
            k_lattice=kh / hs,
            meta={"hx": hx, "hy": lat.hy, "hs": hs, "n_unknowns": lat.n},
        )

    def reflection(self, E: float) -> complex:
        return self.solve(E).R_amp


def _hs(geom, disc) -> float:
    ny = math.ceil(geom.height / disc.h - 1e-9)
    return geom.height / ny / disc.lead_refine


def scattering_solve(
    geom: BilliardGeometry, disc: DiscretizationParams, E: float
) -> ScatteringSolution:
    """Solve the Helmholtz problem at real ``E`` with a unit wave incoming in lead 1.

    Raises
    ------
    SingularSystem
        If the system stays singular after moving the matching plane by
        one lead row.
    """
    try:
        return Scatterer(geom, disc).solve(E)
    except SingularSystem:
        return Scatterer(geom, disc, extra_rows=1).solve(E)


def conductance(geom: BilliardGeometry, disc: DiscretizationParams, E: float) -> float:
    """Two-lead transmission probability ``|S_21|^2``."""
    if not geom.lead2_enabled:
        raise ValidationError("lead2_enabled", "conductance needs two leads")
    return scattering_solve(geom, disc, E).conductance


def phase_derivative(sc: Scatterer, E: float, dE: float | None = None) -> float:
    """Centered difference of ``arg R`` with step ``1e-4 * E``."""
    dE = 1e-4 * E if dE is None else dE
    r_hi = sc.solve(E + dE).R_amp
    r_lo = sc.solve(E - dE).R_amp
    # the ratio keeps the difference on the principal branch (unwrapped)
    return float(np.angle(r_hi / r_lo) / (2.0 * dE))


def time_delay(geom: BilliardGeometry, disc: DiscretizationParams, E: float) -> float:
    """Wigner-Smith delay ``d arg R / dE`` for a single-lead cavity."""
    if geom.lead2_enabled:
        raise ValidationError("lead2_enabled", "time delay is defined here for one lead")
    sc = Scatterer(geom, disc)
    dE = 1e-4 * E
    lo, hi = sc.one_channel_range
    if E - 3 * dE <= lo or E + 3 * dE >= hi:
        raise ValidationError("E", "too close to a channel threshold")
    return phase_derivative(sc, E, dE)


def reflection_phase(sc: Scatterer, energies) -> np.ndarray:
    """Unwrapped ``arg R`` on an ascending energy grid."""
    r = np.array([sc.solve(e).R_amp for e in energies])
    return np.unwrap(np.angle(r))


def _bw_phase(E, phi0, slope, e_r, gamma):
    return phi0 + slope * (E - e_r) + 2.0 * np.arctan((E - e_r) / (0.5 * gamma))


@dataclass(frozen=True)
class BreitWignerFit:
    E_R: float
    Gamma: float
    phi0: float
    slope: float
    rms: float


def fit_breit_wigner(energies, phase, E_guess: float, Gamma_guess: float) -> BreitWignerFit:
    """Fit ``phi0 + a (E - E_R) + 2 arctan((E - E_R) / (Gamma / 2))`` to a phase curve."""
    E = np.asarray(energies, dtype=float)
    phase = np.unwrap(np.asarray(phase, dtype=float))
    i0 = int(np.argmin(np.abs(E - E_guess)))
    p0 = [phase[i0], 0.0, E_guess, max(Gamma_guess, 1e-12)]
    popt, _ = curve_fit(_bw_phase, E, phase, p0=p0, maxfev=20000)
    rms = float(np.sqrt(np.mean((_bw_phase(E, *popt) - phase) ** 2)))
    return BreitWignerFit(float(popt[2]), abs(float(popt[3])), float(popt[0]), float(popt[1]), rms)
