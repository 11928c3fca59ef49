"""Schematic effective Hamiltonians.

Two-level models with an internal (real) coupling ``v_in`` and an external
coupling ``i*w_ex`` through the continuum, their closed-form eigenvalues and
branch-point conditions, the N-state form ``Re(H) - i V V^T``, and the
resonance part of the S-matrix built from poles and dressed couplings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ComplexEnergy, ResonanceSet, eig_complex_symmetric
from .errors import DimensionMismatch, PoleOnAxis, SymmetryViolation, ValidationError

CLASSES = (
    "complex-avoided",
    "real-axis-crossing-allowed",
    "imag-axis-crossing-allowed",
    "branch-point",
)


@dataclass(frozen=True)
class TwoLevelParams:
    E1: float
    E2: float
    Gamma1: float = 0.0
    Gamma2: float = 0.0
    v_in: float = 0.0
    w_ex: float = 0.0

    def __post_init__(self):
        for name in ("E1", "E2", "Gamma1", "Gamma2", "v_in", "w_ex"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(name, "must be finite")
        for name in ("Gamma1", "Gamma2"):
            if getattr(self, name) < 0:
                raise ValidationError(name, "width must be >= 0")

    @property
    def eps1(self) -> complex:
        return complex(self.E1, -0.5 * self.Gamma1)

    @property
    def eps2(self) -> complex:
        return complex(self.E2, -0.5 * self.Gamma2)

    def with_(self, **changes) -> "TwoLevelParams":
        d = dict(self.__dict__)
        d.update(changes)
        return TwoLevelParams(**d)


@dataclass(frozen=True)
class StatisticalParams:
    """Closed-system part ``H0``, user-supplied ``ReW`` and channel couplings ``V``."""

    H0: np.ndarray
    ReW: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        H0 = np.atleast_2d(np.asarray(self.H0, dtype=float))
        ReW = np.asarray(self.ReW, dtype=float)
        if ReW.ndim == 0:
            ReW = np.full_like(H0, float(ReW))
        V = np.asarray(self.V, dtype=float)
        if V.ndim == 1:
            V = V[:, None]
        n = H0.shape[0]
        if H0.shape != (n, n) or ReW.shape != (n, n):
            raise DimensionMismatch("H0 and ReW must be square and of equal size")
        if V.ndim != 2 or V.shape[0] != n or V.shape[1] < 1:
            raise DimensionMismatch(f"V must be {n} x Lambda with Lambda >= 1")
        for name, M in (("H0", H0), ("ReW", ReW)):
            scale = max(float(np.max(np.abs(M))), 1.0) if M.size else 1.0
            if np.max(np.abs(M - M.T), initial=0.0) > 1e-12 * scale:
                raise SymmetryViolation(f"{name} is not symmetric")
        object.__setattr__(self, "H0", H0)
        object.__setattr__(self, "ReW", ReW)
        object.__setattr__(self, "V", V)

    @property
    def n_states(self) -> int:
        return self.H0.shape[0]

    @property
    def n_channels(self) -> int:
        return self.V.shape[1]


@dataclass(frozen=True)
class CrossingReport:
    R_value: float
    I_value: float
    classification: str


def build_two_level(p: TwoLevelParams) -> np.ndarray:
    c = complex(p.v_in, p.w_ex)
    return np.array([[p.eps1, c], [c, p.eps2]], dtype=complex)


def _pair(center: complex, root: complex) -> tuple[ComplexEnergy, ComplexEnergy]:
    return (
        ComplexEnergy.from_complex(center + 0.5 * root),
        ComplexEnergy.from_complex(center - 0.5 * root),
    )


def eigenvalues_v(p: TwoLevelParams) -> tuple[ComplexEnergy, ComplexEnergy]:
    """``(E+, E-)`` of the model with real internal coupling only."""
    if p.w_ex != 0:
        raise ValueError("eigenvalues_v requires w_ex == 0")
    d = p.eps1 - p.eps2
    root = np.sqrt(complex(d * d + 4.0 * p.v_in**2))
    return _pair(0.5 * (p.eps1 + p.eps2), root)


def eigenvalues_w(p: TwoLevelParams) -> tuple[ComplexEnergy, ComplexEnergy]:
    """``(E+, E-)`` of the model coupled through the continuum only."""
    if p.v_in != 0:
        raise ValueError("eigenvalues_w requires v_in == 0")
    d = p.eps1 - p.eps2
    root = np.sqrt(complex(d * d - 4.0 * p.w_ex**2))
    return _pair(0.5 * (p.eps1 + p.eps2), root)


def _rscale(p: TwoLevelParams) -> float:
    s = max(abs(p.E1 - p.E2), 0.5 * abs(p.Gamma1 - p.Gamma2), abs(p.v_in), abs(p.w_ex))
    # below this the squared scale underflows; such tiny splittings count as zero
    return s if s > 1e-150 else 1.0


def crossing_conditions(p: TwoLevelParams, tol: float = 1e-10) -> CrossingReport:
    """Branch-point functions R and I and the crossing type they imply.

    ``tol`` applies to R and I divided by the square of the largest of
    ``|E1-E2|, |Gamma1-Gamma2|/2, |v_in|, |w_ex|``.
    """
    dE = p.E1 - p.E2
    dG = p.Gamma1 - p.Gamma2
    R = dE**2 - 0.25 * dG**2 + 4.0 * (p.v_in**2 - p.w_ex**2)
    I = dE * dG + 8.0 * p.v_in * p.w_ex
    s2 = _rscale(p) ** 2
    r0 = abs(R) / s2 <= tol
    i0 = abs(I) / s2 <= tol
    if r0 and i0:
        cls = "branch-point"
    elif i0 and R < 0:
        cls = "real-axis-crossing-allowed"
    elif i0 and R > 0:
        cls = "imag-axis-crossing-allowed"
    else:
        cls = "complex-avoided"
    return CrossingReport(float(R), float(I), cls)


def _eigen_gap(p: TwoLevelParams) -> float:
    c = complex(p.v_in, p.w_ex)
    d = p.eps1 - p.eps2
    return abs(np.sqrt(d * d + 4.0 * c * c))


def find_critical_coupling(p: TwoLevelParams, free: str, tol: float = 1e-10) -> list[float]:
    """Values of the free coupling at which R = I = 0.

    The system is quadratic in either coupling and is solved in closed form.
    Each root is kept only if the two eigenvalues of the model coincide
    there (gap below ``1e-8 * scale``).
    """
    if free not in ("v_in", "w_ex"):
        raise ValueError("free must be 'v_in' or 'w_ex'")
    dE = p.E1 - p.E2
    dG = p.Gamma1 - p.Gamma2
    s = max(abs(dE), 0.5 * abs(dG), abs(p.v_in), abs(p.w_ex), 1e-300)
    fixed = p.v_in if free == "w_ex" else p.w_ex
    # R = base + sign * 4 x^2 ; I = dE*dG + 8*fixed*x
    if free == "w_ex":
        base, sign = dE**2 - 0.25 * dG**2 + 4.0 * p.v_in**2, -1.0
    else:
        base, sign = dE**2 - 0.25 * dG**2 - 4.0 * p.w_ex**2, 1.0

    candidates: list[float] = []
    if fixed != 0:
        candidates.append(-dE * dG / (8.0 * fixed))
    else:
        if abs(dE * dG) > tol * s * s:
            return []
        x2 = -base / (4.0 * sign)
        if x2 > tol * s * s:
            r = math.sqrt(x2)
            candidates += [-r, r]
        elif x2 > -tol * s * s:
            candidates.append(0.0)

    roots = []
    for x in candidates:
        q = p.with_(**{free: x})
        rep = crossing_conditions(q, tol)
        if rep.classification == "branch-point" and _eigen_gap(q) < 1e-8 * _rscale(q):
            roots.append(float(x))
    return sorted(roots)


def build_statistical(p: StatisticalParams) -> np.ndarray:
    return p.H0 + p.ReW - 1j * (p.V @ p.V.T)


def dressed_couplings(rset: ResonanceSet, V) -> np.ndarray:
    """Couplings of the resonance states to the channels, ``phi_R^T V``."""
    V = np.asarray(V)
    if V.ndim == 1:
        V = V[:, None]
    return np.array([s.vector @ V for s in rset.states]).reshape(len(rset), V.shape[1])


def resonance_s_matrix(poles, couplings, E: float, coupling_tol: float = 1e-12) -> np.ndarray:
    """Resonance part of the S-matrix, ``i sum_R g_Rc' g_Rc / (E - E_R + i Gamma_R / 2)``.

    Parameters
    ----------
    poles : sequence of ComplexEnergy or complex
    couplings : (N, Lambda) array_like
        Dressed couplings of each pole to each channel.
    E : float
        Real scattering energy.

    Poles whose couplings all vanish (below ``coupling_tol``) are skipped:
    they are decoupled bound states and contribute nothing.
    """
    z = np.array([complex(p) for p in poles], dtype=complex)
    g = np.asarray(couplings, dtype=complex)
    if g.ndim == 1:
        g = g[:, None]
    if g.shape[0] != len(z):
        raise DimensionMismatch("one row of couplings per pole required")
    S = np.zeros((g.shape[1], g.shape[1]), dtype=complex)
    for zr, gr in zip(z, g):
        if np.max(np.abs(gr), initial=0.0) < coupling_tol:
            continue
        if abs(E - zr.real) < 1e-12 and -2.0 * zr.imag < 1e-12:
            raise PoleOnAxis(f"pole {zr} sits on the real axis at E={E}")
        S += np.outer(gr, gr) / (E - zr)
    return 1j * S


def s_matrix_direct(H, V, E: float) -> np.ndarray:
    """``i V^T (E - H)^-1 V`` by direct inversion."""
    H = np.asarray(H, dtype=complex)
    V = np.asarray(V)
    if V.ndim == 1:
        V = V[:, None]
    G = np.linalg.solve(E * np.eye(H.shape[0]) - H, V.astype(complex))
    return 1j * (V.T @ G)


def two_level_resonances(p: TwoLevelParams) -> ResonanceSet:
    return eig_complex_symmetric(build_two_level(p))


def statistical_resonances(p: StatisticalParams) -> ResonanceSet:
    return eig_complex_symmetric(build_statistical(p))
