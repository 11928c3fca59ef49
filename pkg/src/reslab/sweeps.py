"""Parameter sweeps: pole trajectories, width sums, crossings, integrated conductance.

A sweep evaluates the pole set at every parameter value, then links the
sets step by step with an optimal assignment.  States that find no partner
within the matching gate end their trajectory; unmatched new states start
one.  Steps are independent and may run in worker processes; matching is
always done afterwards, in step order, so the result does not depend on
the number of workers.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .billiard.geometry import BilliardGeometry, DiscretizationParams, slide_alignment
from .billiard.scattering import Scatterer
from .billiard.spectra import closed_spectrum, find_poles
from .core import ResonanceSet, attach_mixing, eig_complex_symmetric, match_states
from .errors import EmptyWindow, ReslabError, ValidationError
from .schematic import StatisticalParams, TwoLevelParams, build_statistical, build_two_level

log = logging.getLogger(__name__)

BILLIARD_PARAMS = ("y_d", "x_r", "slide_w")
TWO_LEVEL_PARAMS = ("v_in", "w_ex", "E1", "E2", "Gamma1", "Gamma2")
# statistical model: scale factors of V (coupling strength) and of ReW
STATISTICAL_PARAMS = ("w_ex", "rew_scale")
ONE_CHANNEL = (math.pi**2, 4 * math.pi**2)
CONTINUITY_FACTOR = 10.0
# relative size below which a component's sign is treated as rounding noise
SIGN_NOISE = 1e-4


@dataclass(frozen=True)
class SweepSpec:
    """One-parameter sweep ``start : step : stop`` (inclusive) over ``target``."""

    parameter: str
    start: float
    stop: float
    step: float
    target: TwoLevelParams | StatisticalParams | BilliardGeometry
    window: tuple[float, float] = ONE_CHANNEL
    disc: DiscretizationParams | None = None
    match_gate: float | None = None
    mixing: bool = False

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.start, self.stop, self.step)):
            raise ValidationError("sweep", "start, step and stop must be finite")
        if self.step == 0:
            raise ValidationError("sweep", "step must be nonzero")
        if (self.stop - self.start) / self.step <= 1:
            raise ValidationError("sweep", "(stop - start)/step must exceed 1")
        allowed = {
            BilliardGeometry: BILLIARD_PARAMS,
            TwoLevelParams: TWO_LEVEL_PARAMS,
            StatisticalParams: STATISTICAL_PARAMS,
        }[type(self.target)]
        if self.parameter not in allowed:
            raise ValidationError("sweep", f"parameter {self.parameter!r} not one of {allowed}")
        if self.kind == "billiard":
            for v in self.values():
                self.target.with_(**{self.parameter: float(v)})  # validates

    @property
    def kind(self) -> str:
        if isinstance(self.target, BilliardGeometry):
            return "billiard"
        if isinstance(self.target, StatisticalParams):
            return "statistical"
        return "two-level"

    def values(self) -> np.ndarray:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9))
        vals = self.start + self.step * np.arange(n + 1)
        # strip accumulated binary noise so that e.g. 0.15 stays 0.15
        return np.round(vals, 12) + 0.0

    def reversed(self) -> "SweepSpec":
        v = self.values()
        return replace(self, start=float(v[-1]), stop=float(v[0]), step=-self.step)


@dataclass
class Trajectory:
    """Matched sequence of poles over steps ``first .. first + len - 1``."""

    id: int
    first: int
    energies: list[complex] = field(default_factory=list)
    state_index: list[int] = field(default_factory=list)  # -1 at failed steps

    @property
    def last(self) -> int:
        return self.first + len(self.energies) - 1

    def at(self, step: int) -> complex | None:
        if self.first <= step <= self.last:
            e = self.energies[step - self.first]
            return None if np.isnan(e) else e
        return None

    @property
    def widths(self) -> np.ndarray:
        return -2.0 * np.imag(np.asarray(self.energies))


@dataclass
class SweepResult:
    spec: SweepSpec
    values: np.ndarray
    sets: list[ResonanceSet | None]
    trajectories: list[Trajectory]
    labels: list[np.ndarray]  # per step: trajectory id of every state
    width_sum: np.ndarray
    state_count: np.ndarray
    biorthogonality: np.ndarray
    flags: list[str]
    errors: dict[int, str] = field(default_factory=dict)
    integrated_conductance: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def parameter(self) -> str:
        return self.spec.parameter


@dataclass(frozen=True)
class CrossingEvent:
    parameter_value: float
    step: int
    pair: tuple[int, int]
    min_gap: float
    classification: str
    branch_point_candidate: bool = False


CROSSING_CLASSES = (
    "energy-repulsion",
    "width-bifurcation",
    "free-energy-crossing",
    "free-width-crossing",
)


# -- step evaluation ----------------------------------------------------------


def _schematic_set(spec: SweepSpec, value: float) -> ResonanceSet:
    t = spec.target
    if isinstance(t, TwoLevelParams):
        rset = eig_complex_symmetric(build_two_level(t.with_(**{spec.parameter: value})))
        return attach_mixing(rset, np.eye(2))
    if spec.parameter == "w_ex":
        p = StatisticalParams(t.H0, t.ReW, value * t.V)
    else:
        p = StatisticalParams(t.H0, value * t.ReW, t.V)
    rset = eig_complex_symmetric(build_statistical(p))
    _, basis = np.linalg.eigh(t.H0)
    return attach_mixing(rset, basis)


def billiard_disc(spec: SweepSpec) -> DiscretizationParams:
    """Discretization used for every step; slide sweeps share one x grid."""
    disc = spec.disc or DiscretizationParams()
    if spec.parameter == "slide_w":
        disc = disc.with_(align_x=tuple(disc.align_x) + slide_alignment(spec.values()))
    return disc


def _billiard_step(args) -> tuple[ResonanceSet | None, str]:
    geom, disc, window, mixing = args
    try:
        basis = None
        if mixing:
            basis = closed_spectrum(geom.with_(slide_w=0.5), disc, window)
        rset = find_poles(geom, disc, window, basis=basis, with_fields=False)
        return rset, ""
    except ReslabError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def _evaluate(spec: SweepSpec, threads: int) -> tuple[list, list[str]]:
    vals = spec.values()
    if spec.kind != "billiard":
        return [_schematic_set(spec, float(v)) for v in vals], [""] * len(vals)
    disc = billiard_disc(spec)
    jobs = [
        (spec.target.with_(**{spec.parameter: float(v)}), disc, spec.window, spec.mixing)
        for v in vals
    ]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(_billiard_step, jobs))
    else:
        out = [_billiard_step(j) for j in jobs]
    return [o[0] for o in out], [o[1] for o in out]


# -- matching -----------------------------------------------------------------


def _in_window(rset: ResonanceSet, window) -> np.ndarray:
    e = rset.energies.real
    return (e >= window[0]) & (e <= window[1])


def _default_gate(spec: SweepSpec, sets) -> float | None:
    if spec.match_gate is not None:
        return spec.match_gate
    if spec.kind != "billiard":
        return None
    spacings = []
    for s in sets:
        if s is not None and len(s) > 1:
            spacings.append(np.median(np.diff(np.sort(s.energies.real))))
    return 1.5 * float(np.median(spacings)) if spacings else None


def link_trajectories(sets: Sequence[ResonanceSet | None], gate: float | None):
    """Trajectories and per-step labels from a list of pole sets."""
    trajs: list[Trajectory] = []
    labels: list[np.ndarray] = []
    prev_set, prev_labels = None, None
    for step, rset in enumerate(sets):
        if rset is None:
            labels.append(np.zeros(0, dtype=int))
            continue
        lab = np.full(len(rset), -1, dtype=int)
        if prev_set is not None:
            perm = match_states(prev_set, rset, max_cost=gate)
            for i, j in enumerate(perm):
                if j >= 0:
                    lab[j] = prev_labels[i]
        # continuing trajectories: pad failed steps with nan
        for j in range(len(rset)):
            if lab[j] < 0:
                lab[j] = len(trajs)
                trajs.append(Trajectory(len(trajs), step))
        for j, t in enumerate(lab):
            tr = trajs[t]
            while tr.last < step - 1:
                tr.energies.append(complex(np.nan, np.nan))
                tr.state_index.append(-1)
            tr.energies.append(complex(rset[j].energy))
            tr.state_index.append(j)
        labels.append(lab)
        prev_set, prev_labels = rset, lab
    return trajs, labels


def _continuity_flags(trajs: list[Trajectory], n_steps: int) -> list[str]:
    disp = [[] for _ in range(n_steps)]
    for t in trajs:
        e = np.asarray(t.energies)
        for k in range(1, len(e)):
            if np.isfinite(e[k]) and np.isfinite(e[k - 1]):
                disp[t.first + k].append(abs(e[k] - e[k - 1]))
    allv = np.concatenate([np.asarray(d) for d in disp if d]) if any(disp) else np.zeros(0)
    med = float(np.median(allv)) if allv.size else 0.0
    flags = []
    for d in disp:
        bad = med > 0 and d and max(d) > CONTINUITY_FACTOR * med
        flags.append("discontinuous" if bad else "")
    return flags


def run_sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """Evaluate the pole set at every sweep value and link the trajectories.

    A billiard step that fails is recorded in ``errors`` and flagged; the
    sweep continues and trajectories bridge the gap.
    """
    vals = spec.values()
    sets, errs = _evaluate(spec, threads)
    gate = _default_gate(spec, sets)
    trajs, labels = link_trajectories(sets, gate)
    flags = _continuity_flags(trajs, len(vals))
    errors = {}
    wsum, count, bio = [], [], []
    for k, (rset, err) in enumerate(zip(sets, errs)):
        if rset is None:
            errors[k] = err
            flags[k] = "failed"
            wsum.append(np.nan)
            count.append(0)
            bio.append(np.nan)
            continue
        inside = _in_window(rset, spec.window) if spec.kind == "billiard" else np.ones(len(rset), bool)
        wsum.append(float(np.sum(rset.widths[inside])))
        count.append(int(np.sum(inside)))
        bio.append(rset.biorthogonality)
    meta = {"match_gate": gate}
    if spec.kind == "billiard":
        good = [s for s in sets if s is not None]
        if good:
            meta["hx"] = sorted({s.meta["hx"] for s in good})
            meta["hy"] = sorted({s.meta["hy"] for s in good})
            meta["theta"] = good[0].meta["theta"]
    return SweepResult(
        spec, vals, sets, trajs, labels, np.array(wsum), np.array(count), np.array(bio), flags, errors,
        meta=meta,
    )


# -- diagnostics --------------------------------------------------------------


def width_sum_diagnostic(result: SweepResult) -> tuple[float, float]:
    """Mean of the per-step width sums and the largest ``|deviation| / mean``."""
    s = result.width_sum[np.isfinite(result.width_sum)]
    if s.size == 0 or not np.any(result.state_count > 0):
        raise EmptyWindow("no step has states in the window")
    mean = float(np.mean(s))
    if mean < 1e-6:
        return mean, 0.0
    return mean, float(np.max(np.abs(s - mean)) / mean)


def _median_spacing(result: SweepResult) -> float:
    # nearest-neighbour distance in the complex plane: equals the level
    # spacing for narrow states and stays finite when real parts coincide
    sp = []
    for rset in result.sets:
        if rset is not None and len(rset) > 1:
            e = rset.energies
            d = np.abs(e[:, None] - e[None, :])
            np.fill_diagonal(d, np.inf)
            sp.extend(d.min(axis=1))
    return float(np.median(sp)) if sp else 1.0


def _classify(d: np.ndarray, k: int, reach: int, ratio: float) -> str:
    """Crossing type of the pair difference ``d`` (complex) around index ``k``."""
    lo, hi = max(0, k - reach), min(len(d) - 1, k + reach)
    dre, dim = d.real, d.imag
    # a genuine sign change leaves both ends clear of the noise floor
    ends = SIGN_NOISE * max(abs(d[lo]), abs(d[hi]))

    def crosses(x):
        return x[lo] * x[hi] < 0 and min(abs(x[lo]), abs(x[hi])) > ends

    if crosses(dre) and np.min(np.abs(dre[lo : hi + 1])) < ratio * abs(dim[k]):
        return "free-energy-crossing"
    if crosses(dim) and np.min(np.abs(dim[lo : hi + 1])) < ratio * abs(dre[k]):
        return "free-width-crossing"
    grow_re = abs(dre[hi]) - abs(dre[lo])
    grow_im = abs(dim[hi]) - abs(dim[lo])
    return "width-bifurcation" if grow_im > grow_re else "energy-repulsion"


def detect_crossings(
    result: SweepResult,
    g_max: float | None = None,
    ratio: float = 0.1,
    reach: int = 3,
) -> list[CrossingEvent]:
    """Close approaches of trajectory pairs and their type.

    Every interior local minimum of ``|E_i - E_j|`` below ``g_max`` (default
    twice the median nearest-neighbour pole distance) is an event.  It is classified from the
    pair difference ``reach`` steps before and after the minimum, in sweep
    direction: a sign change of ``Re`` with ``|dRe|`` dipping below
    ``ratio * |dIm|`` is a free energy crossing (the mirror rule gives a free
    width crossing); otherwise the gap component that grows more through the
    minimum names it (``Re``: energy repulsion, ``Im``: width bifurcation).
    Gaps below ``1e-6`` times the pole scale flag a branch-point candidate.
    """
    if len(result.values) < 3:
        return []
    g_max = 2.0 * _median_spacing(result) if g_max is None else g_max
    n = len(result.values)
    series = []
    for t in result.trajectories:
        e = np.full(n, np.nan, dtype=complex)
        e[t.first : t.last + 1] = t.energies
        series.append(e)
    events = []
    for a in range(len(series)):
        for b in range(a + 1, len(series)):
            d = series[a] - series[b]
            ok = np.isfinite(d)
            if ok.sum() < 3:
                continue
            idx = np.flatnonzero(ok)
            # contiguous coexistence runs
            runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
            for run in runs:
                if run.size < 3:
                    continue
                dd = d[run]
                g = np.abs(dd)
                for k in range(1, run.size - 1):
                    if g[k] < g_max and g[k] <= g[k - 1] and g[k] < g[k + 1]:
                        scale = max(abs(series[a][run[k]]), abs(series[b][run[k]]), 1e-300)
                        events.append(
                            CrossingEvent(
                                float(result.values[run[k]]),
                                int(run[k]),
                                (a, b),
                                float(g[k]),
                                _classify(dd, k, reach, ratio),
                                bool(g[k] < 1e-6 * scale),
                            )
                        )
    events.sort(key=lambda ev: (ev.step, ev.pair))
    return events


# -- integrated conductance ---------------------------------------------------


@dataclass
class ConductanceTable:
    w_values: np.ndarray
    bands: list[tuple[float, float]]
    values: np.ndarray  # (n_w, n_bands)
    evaluations: np.ndarray  # energies evaluated per w
    meta: dict = field(default_factory=dict)


class _Cached:
    def __init__(self, sc: Scatterer):
        self.sc = sc
        self.cache: dict[float, float] = {}

    def __call__(self, e: float) -> float:
        v = self.cache.get(e)
        if v is None:
            v = self.cache[e] = self.sc.solve(e).conductance
        return v


def _simpson(a, b, fa, fm, fb):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _adaptive(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = _simpson(a, m, fa, flm, fm)
    right = _simpson(m, b, fm, frm, fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    return _adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + _adaptive(
        f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1
    )


def band_breakpoints(band, poles: Sequence[complex], n0: int = 64) -> np.ndarray:
    """Uniform grid of ``n0`` panels plus points around each pole in the band."""
    lo, hi = band
    pts = list(np.linspace(lo, hi, n0 + 1))
    for z in poles:
        g = max(-2.0 * z.imag, 1e-9)
        for s in (-4, -2, -1, -0.5, 0, 0.5, 1, 2, 4):
            e = z.real + s * g
            if lo < e < hi:
                pts.append(e)
    return np.unique(np.round(pts, 12))


def integrate_band(f, breaks: np.ndarray, rel_tol: float = 0.01, max_depth: int = 12) -> float:
    """Composite adaptive Simpson of ``f`` over consecutive breakpoints.

    The coarse composite Simpson value sets the absolute tolerance; the
    adaptive pass is repeated with a tenfold tighter tolerance until two
    successive values agree to ``rel_tol``.
    """
    fb = [f(float(e)) for e in breaks]
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    fm = [f(float(e)) for e in mids]
    coarse = [_simpson(a, b, x, y, z) for a, b, x, y, z in zip(breaks[:-1], breaks[1:], fb[:-1], fm, fb[1:])]
    total = float(sum(coarse))
    tol = 1e-3 * max(abs(total), 1e-6)
    prev = total
    for _ in range(4):
        width = breaks[-1] - breaks[0]
        val = 0.0
        for (a, b, x, y, z, whole) in zip(breaks[:-1], breaks[1:], fb[:-1], fm, fb[1:], coarse):
            val += _adaptive(f, a, b, x, y, z, whole, tol * (b - a) / width, max_depth)
        if abs(val - prev) <= rel_tol * max(abs(val), 1e-12):
            return float(val)
        prev = val
        tol *= 0.1
    return float(val)


def _conductance_row(args):
    geom, disc, bands, rel_tol, window = args
    poles = []
    if geom.slide_w < 0.5:
        rset = find_poles(geom, disc, window, with_fields=False)
        poles = list(rset.energies)
    sc = Scatterer(geom, disc)
    lo, hi = sc.one_channel_range
    f = _Cached(sc)
    row = []
    for a, b in bands:
        a, b = max(a, lo + 1e-6), min(b, hi - 1e-6)
        if b <= a:
            row.append(0.0)
            continue
        row.append(integrate_band(f, band_breakpoints((a, b), poles), rel_tol))
    return row, len(f.cache), (lo, hi)


def integrated_conductance(
    geom: BilliardGeometry,
    disc: DiscretizationParams,
    w_values: Sequence[float],
    bands: Sequence[tuple[float, float]],
    *,
    rel_tol: float = 0.01,
    threads: int = 1,
) -> ConductanceTable:
    """``int G(E) dE`` per slide opening and energy band (two-lead cavity).

    Bands are clipped to the one-channel range of the lattice lead.  All
    openings share one x grid.
    """
    if not geom.lead2_enabled:
        raise ValidationError("lead2_enabled", "integrated conductance needs two leads")
    w_values = np.asarray(w_values, dtype=float)
    disc = disc.with_(align_x=tuple(disc.align_x) + slide_alignment(w_values))
    bands = [(float(a), float(b)) for a, b in bands]
    window = (min(a for a, _ in bands), max(b for _, b in bands))
    window = (max(window[0], ONE_CHANNEL[0]), min(window[1], ONE_CHANNEL[1]))
    jobs = [(geom.with_(slide_w=float(w)), disc, bands, rel_tol, window) for w in w_values]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(_conductance_row, jobs))
    else:
        out = [_conductance_row(j) for j in jobs]
    vals = np.array([o[0] for o in out], dtype=float).reshape(len(w_values), len(bands))
    return ConductanceTable(
        w_values,
        bands,
        vals,
        np.array([o[1] for o in out]),
        meta={"one_channel_range": out[0][2] if out else None},
    )


def rise_interval(w_values, values, lo: float = 0.1, hi: float = 0.9) -> tuple[float, float]:
    """Openings where a curve, followed from its first to its last point,
    first reaches ``lo`` and ``hi`` of its total change (linear interpolation)."""
    w = np.asarray(w_values, dtype=float)
    v = np.asarray(values, dtype=float)
    total = v[-1] - v[0]
    if total == 0:
        return float(w[0]), float(w[0])
    frac = (v - v[0]) / total
    out = []
    for level in (lo, hi):
        k = int(np.argmax(frac >= level))
        if k == 0:
            out.append(float(w[0]))
            continue
        t = (level - frac[k - 1]) / (frac[k] - frac[k - 1])
        out.append(float(w[k - 1] + t * (w[k] - w[k - 1])))
    return out[0], out[1]
