"""Complex-symmetric eigenproblem services.

Non-Hermitian effective Hamiltonians built from real couplings are complex
symmetric (H == H.T).  Their right eigenvectors double as left eigenvectors
after transposition, so the natural inner product is the bilinear c-product
``u.T @ v`` rather than the Hermitian one.  Everything here works with
c-normalized vectors (``v.T @ v == 1``); the Hermitian self-overlap of such a
vector is >= 1 and measures how far the set is from orthogonality.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .errors import DefectiveMatrix, DimensionMismatch, NonSymmetric

CNORM_TOL = 1e-12
# relative eigenvalue gap below which two roots are treated as one cluster
CLUSTER_TOL = 1e-10
# coalescing eigenvectors at an exceptional point: numerically the pair is
# split by O(sqrt(eps)) yet the vectors stay parallel to this accuracy
PARALLEL_TOL = 1e-10


@dataclass(frozen=True)
class ComplexEnergy:
    """Pole position ``re + 1j*im`` with ``im = -Gamma/2``."""

    re: float
    im: float

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexEnergy":
        z = complex(z)
        return cls(z.real, z.imag)

    def width(self) -> float:
        return -2.0 * self.im

    def is_physical(self, tol_imag: float = 1e-10) -> bool:
        return self.im <= tol_imag

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def __abs__(self) -> float:
        return abs(complex(self))


@dataclass
class ResonanceState:
    energy: ComplexEnergy
    vector: np.ndarray
    norm_sq: float
    mixing: np.ndarray | None = None
    degenerate: bool = False

    @property
    def width(self) -> float:
        return self.energy.width()


@dataclass
class ResonanceSet:
    """Eigenpairs sorted by energy (ties: larger imaginary part first)."""

    states: list[ResonanceState]
    biorthogonality: float
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, i):
        return self.states[i]

    @property
    def energies(self) -> np.ndarray:
        return np.array([complex(s.energy) for s in self.states], dtype=complex)

    @property
    def widths(self) -> np.ndarray:
        return np.array([s.width for s in self.states], dtype=float)

    @property
    def degenerate(self) -> list[int]:
        return [i for i, s in enumerate(self.states) if s.degenerate]

    def subset(self, indices: Iterable[int]) -> "ResonanceSet":
        states = [self.states[i] for i in indices]
        return ResonanceSet(states, _mean_norm_sq(states), dict(self.meta))


class MixingResult(NamedTuple):
    coefficients: np.ndarray
    total_weight: float


def _scale(H: np.ndarray) -> float:
    return float(np.max(np.abs(H))) if H.size else 0.0


def check_complex_symmetric(H, tol: float = 1e-12) -> np.ndarray:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {H.shape}")
    scale = _scale(H)
    if scale > 0 and np.max(np.abs(H - H.T)) > tol * scale:
        raise NonSymmetric(
            f"max|H - H.T| = {np.max(np.abs(H - H.T)):.3e} exceeds {tol:g}*max|H|"
        )
    return H


def _phase_fix(v: np.ndarray) -> np.ndarray:
    # c-normalization leaves only a sign free; make the dominant entry Re > 0
    k = int(np.argmax(np.abs(v)))
    if v[k].real < 0 or (v[k].real == 0 and v[k].imag < 0):
        return -v
    return v


def _mean_norm_sq(states: Sequence[ResonanceState]) -> float:
    vals = [s.norm_sq for s in states if not s.degenerate]
    if not vals:
        return float("inf") if states else 1.0
    return float(np.mean(vals))


def _clusters(w: np.ndarray, tol: float) -> list[list[int]]:
    order = np.lexsort((w.imag, w.real))
    groups: list[list[int]] = []
    for i in order:
        for g in groups:
            if abs(w[g[0]] - w[i]) <= tol:
                g.append(int(i))
                break
        else:
            groups.append([int(i)])
    return groups


def _normalize_columns(H: np.ndarray, w: np.ndarray, V: np.ndarray):
    """c-normalize eigenvectors; returns (eigenvalues, vectors, degenerate flags).

    A coalesced pair is returned at its mean: rounding splits a defective
    eigenvalue by ~sqrt(eps) while the mean stays accurate to ~eps.
    """
    n = len(w)
    scale = max(_scale(H), 1e-300)
    V = V / np.linalg.norm(V, axis=0)
    w = w.copy()
    degenerate = np.zeros(n, dtype=bool)
    out = V.astype(complex, copy=True)

    # pairs that coalesced numerically at an exceptional point
    gap_tol = 1e-6 * scale
    for i in range(n):
        for j in range(i + 1, n):
            if abs(w[i] - w[j]) < gap_tol:
                if 1.0 - abs(np.vdot(V[:, i], V[:, j])) < PARALLEL_TOL:
                    degenerate[i] = degenerate[j] = True
                    w[i] = w[j] = 0.5 * (w[i] + w[j])

    for group in _clusters(w, CLUSTER_TOL * scale):
        group = [g for g in group if not degenerate[g]]
        # c-Gram-Schmidt inside exactly degenerate eigenspaces
        basis: list[np.ndarray] = []
        for g in group:
            v = out[:, g].copy()
            for b in basis:
                v = v - (b @ v) * b
            c = v @ v
            if abs(c) < CNORM_TOL * max(np.vdot(v, v).real, 1e-300):
                degenerate[g] = True
                out[:, g] = v / np.linalg.norm(v)
                continue
            v = _phase_fix(v / np.sqrt(c))
            basis.append(v)
            out[:, g] = v
    return w, out, degenerate


def eig_complex_symmetric(
    H,
    *,
    symmetry_tol: float = 1e-12,
    on_defective: str = "flag",
) -> ResonanceSet:
    """Diagonalize a complex-symmetric matrix.

    Parameters
    ----------
    H : (N, N) array_like
        Complex-symmetric matrix.
    symmetry_tol : float
        Relative tolerance of the ``H == H.T`` check.
    on_defective : {"flag", "raise"}
        What to do when eigenvectors coalesce (c-norm vanishes).  With
        ``"flag"`` the affected states carry ``degenerate=True``, keep a
        Hermitian-normalized vector and ``norm_sq = inf``; they are left out
        of the biorthogonality average.

    Returns
    -------
    ResonanceSet
        c-normalized eigenpairs sorted by real part.
    """
    H = check_complex_symmetric(np.asarray(H), symmetry_tol)
    n = H.shape[0]
    if n == 0:
        return ResonanceSet([], 1.0)

    if np.all(np.imag(H) == 0):
        w, V = scipy.linalg.eigh(np.real(H))
        w = w.astype(complex)
        V = np.array([_phase_fix(V[:, i]) for i in range(n)]).T.astype(complex)
        degenerate = np.zeros(n, dtype=bool)
    else:
        w, V = scipy.linalg.eig(H.astype(complex))
        w, V, degenerate = _normalize_columns(H, w, V)

    if degenerate.any() and on_defective == "raise":
        idx = tuple(int(i) for i in np.flatnonzero(degenerate))
        raise DefectiveMatrix(
            f"eigenvectors {idx} coalesce (exceptional point)", indices=idx
        )

    order = np.lexsort((-w.imag, w.real))
    states = []
    for i in order:
        v = V[:, i]
        if degenerate[i]:
            nsq = float("inf")
        else:
            nsq = float(np.vdot(v, v).real)
        states.append(
            ResonanceState(ComplexEnergy.from_complex(w[i]), v, nsq, None, bool(degenerate[i]))
        )
    return ResonanceSet(states, _mean_norm_sq(states))


def mixing_coefficients(state: ResonanceState, basis) -> MixingResult:
    """Expansion coefficients ``b_j = basis[:, j]^H v`` of one state.

    ``basis`` holds reference eigenvectors (orthonormal columns).  It may be
    shorter than the state vector, in which case only the leading entries
    of the vector are projected (for example the cavity part of a billiard
    state that also lives in the leads).
    """
    basis = np.asarray(basis)
    v = np.asarray(state.vector)
    if basis.ndim != 2 or basis.shape[0] > v.shape[0]:
        raise DimensionMismatch(
            f"basis of shape {basis.shape} does not fit a vector of length {v.shape[0]}"
        )
    b = basis.conj().T @ v[: basis.shape[0]]
    return MixingResult(b, float(np.sum(np.abs(b) ** 2)))


def attach_mixing(rset: ResonanceSet, basis) -> ResonanceSet:
    states = [replace(s, mixing=mixing_coefficients(s, basis).coefficients) for s in rset]
    return ResonanceSet(states, rset.biorthogonality, dict(rset.meta))


def biorthogonality_measure(rset: ResonanceSet) -> float:
    """Average Hermitian self-overlap of the c-normalized states.

    Degenerate states are skipped; an empty set gives 1 and a set with only
    degenerate states gives ``inf``.
    """
    return _mean_norm_sq(rset.states)


def _as_energies(x) -> np.ndarray:
    if isinstance(x, ResonanceSet):
        return x.energies
    return np.asarray([complex(e) for e in x], dtype=complex)


def match_states(prev, next, max_cost: float | None = None) -> np.ndarray:
    """Optimal assignment of ``prev`` states onto ``next`` states.

    Returns ``perm`` with ``perm[i]`` the index in ``next`` continuing state
    ``i`` of ``prev``, or -1 if the state leaves (no partner, or the best
    partner is farther than ``max_cost``).  Indices of ``next`` missing from
    ``perm`` are entering states.
    """
    a = _as_energies(prev)
    b = _as_energies(next)
    perm = np.full(len(a), -1, dtype=int)
    if len(a) == 0 or len(b) == 0:
        return perm
    cost = np.abs(a[:, None] - b[None, :])
    positive = cost[cost > 0]
    # tiny index-distance penalty makes exact ties resolve in index order
    eps = 1e-9 * (positive.min() if positive.size else 1.0)
    ii, jj = np.indices(cost.shape)
    tied = cost + eps * np.abs(ii - jj) / max(cost.shape)
    n, m = cost.shape
    if max_cost is None:
        rows, cols = linear_sum_assignment(tied)
    else:
        # leave/enter slots at max_cost/2 each: a pair is kept only when it
        # beats one departure plus one arrival, i.e. cost <= max_cost
        big = 1e6 * (max_cost + cost.max() + 1.0)
        aug = np.full((n + m, m + n), big)
        aug[:n, :m] = tied
        aug[:n, m:][np.diag_indices(n)] = 0.5 * max_cost
        aug[n:, :m][np.diag_indices(m)] = 0.5 * max_cost
        aug[n:, m:] = 0.0
        rows, cols = linear_sum_assignment(aug)
    for r, c in zip(rows, cols):
        if r < n and c < m and cost[r, c] <= (np.inf if max_cost is None else max_cost):
            perm[r] = c
    return perm
