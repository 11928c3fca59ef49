import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reslab import EmptyWindow, StatisticalParams, TwoLevelParams, ValidationError, eigenvalues_w, find_critical_coupling
from reslab.billiard import BilliardGeometry, DiscretizationParams
from reslab.sweeps import (
    SweepSpec,
    band_breakpoints,
    detect_crossings,
    integrate_band,
    integrated_conductance,
    link_trajectories,
    rise_interval,
    run_sweep,
    width_sum_diagnostic,
)


def trajectory_table(res):
    """(step, trajectory) -> energy, the comparison key for two sweeps."""
    return np.array([[t.at(k) if t.at(k) is not None else np.nan for k in range(len(res.values))]
                     for t in res.trajectories], dtype=complex)


def test_spec_validation():
    p = TwoLevelParams(0, 1)
    with pytest.raises(ValidationError):
        SweepSpec("v_in", 0, 1, 0.0, p)
    with pytest.raises(ValidationError):
        SweepSpec("v_in", 0, 1, -0.1, p)
    with pytest.raises(ValidationError):
        SweepSpec("v_in", 0, 0.1, 0.1, p)
    with pytest.raises(ValidationError):
        SweepSpec("slide_w", 0, 1, 0.1, p)
    with pytest.raises(ValidationError):
        SweepSpec("slide_w", 0.4, 0.7, 0.1, BilliardGeometry())
    s = SweepSpec("y_d", -3.6, -3.0, 0.02, BilliardGeometry())
    v = s.values()
    assert len(v) == 31 and v[0] == -3.6 and v[-1] == -3.0
    assert s.reversed().values().tolist() == v[::-1].tolist()


def test_continuum_coupling_sweep_matches_closed_form():
    p = TwoLevelParams(0, 0, 1, 1)
    res = run_sweep(SweepSpec("w_ex", 0.0, 1.0, 0.01, p))
    for k, w in enumerate(res.values):
        ref = np.array([complex(e) for e in eigenvalues_w(p.with_(w_ex=float(w)))])
        got = res.sets[k].energies
        err = min(np.abs(got - ref).max(), np.abs(got - ref[::-1]).max())
        assert err < 1e-10
    # the bifurcation row: one trapped state and one with width 2
    k = int(np.flatnonzero(np.isclose(res.values, 0.5))[0])
    assert sorted(res.sets[k].widths) == pytest.approx([0.0, 2.0], abs=1e-12)
    assert len(res.trajectories) == 2


@pytest.mark.parametrize(
    "param, p, expected",
    [
        ("v_in", TwoLevelParams(0, 0, 0, 2), "energy-repulsion"),
        ("w_ex", TwoLevelParams(0, 1, 0.5, 0.5), "width-bifurcation"),
    ],
)
def test_crossing_detector_on_two_level_ground_truth(param, p, expected):
    crit = [x for x in find_critical_coupling(p, param) if x > 0][0]
    step = 0.01
    res = run_sweep(SweepSpec(param, 0.0, 1.0, step, p))
    events = detect_crossings(res)
    assert len(events) == 1
    ev = events[0]
    assert ev.classification == expected
    assert abs(ev.parameter_value - crit) <= step + 1e-12
    assert ev.branch_point_candidate


def test_free_crossing_classified():
    # uncoupled levels pass through each other in energy with different widths
    p = TwoLevelParams(-1.0, 0.0, 0.2, 0.6)
    res = run_sweep(SweepSpec("E1", -1.0, 1.0, 0.05, p))
    ev = detect_crossings(res)
    assert [e.classification for e in ev] == ["free-energy-crossing"]
    assert ev[0].parameter_value == pytest.approx(0.0, abs=0.05)
    p = TwoLevelParams(0.0, 2.0, 0.2, 0.6)
    res = run_sweep(SweepSpec("Gamma1", 0.2, 1.0, 0.05, p))
    assert [e.classification for e in detect_crossings(res)] == ["free-width-crossing"]


def test_trajectories_continuous_across_critical_coupling():
    p = TwoLevelParams(0, 1, 0.5, 0.5)
    coarse = run_sweep(SweepSpec("w_ex", 0.3, 0.7, 0.005, p))
    fine = run_sweep(SweepSpec("w_ex", 0.3, 0.7, 0.0005, p))
    assert len(coarse.trajectories) == len(fine.trajectories) == 2
    fine_step = np.max(np.abs(np.diff(trajectory_table(fine), axis=1)))
    jumps = np.max(np.abs(np.diff(trajectory_table(coarse), axis=1)))
    # ten fine steps per coarse step; a mismatch would jump across the gap
    assert jumps <= 10 * 10 * fine_step
    assert all(f == "" for f in coarse.flags)


def test_reversal_symmetry():
    p = TwoLevelParams(0, 1, 0.3, 0.9, v_in=0.1)
    spec = SweepSpec("w_ex", 0.0, 1.2, 0.02, p)
    fwd = trajectory_table(run_sweep(spec))
    bwd = trajectory_table(run_sweep(spec.reversed()))[:, ::-1]
    assert fwd.shape == bwd.shape
    assert any(np.allclose(fwd, bwd[perm]) for perm in ([0, 1], [1, 0]))


def test_determinism():
    rng = np.random.default_rng(5)
    A = rng.normal(size=(4, 4))
    p = StatisticalParams(np.diag(np.arange(4.0)), A + A.T, rng.normal(size=(4, 2)))
    spec = SweepSpec("w_ex", 0.1, 3.0, 0.1, p)
    a, b = run_sweep(spec), run_sweep(spec)
    assert np.array_equal(trajectory_table(a), trajectory_table(b), equal_nan=True)
    assert np.array_equal(a.width_sum, b.width_sum)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 5), st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_width_sum_conserved_under_rew_sweep(n, lam, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    p = StatisticalParams(np.diag(rng.normal(size=n)), A + A.T, rng.normal(size=(n, lam)))
    res = run_sweep(SweepSpec("rew_scale", 0.0, 2.0, 0.1, p))
    mean, fluct = width_sum_diagnostic(res)
    assert mean == pytest.approx(2 * np.sum(p.V**2))
    assert fluct <= 1e-10


def test_statistical_trapping_sweep():
    p = StatisticalParams(np.diag([0.0, 0.2, 0.5]), 0.0, np.ones(3) / math.sqrt(3))
    res = run_sweep(SweepSpec("w_ex", 0.1, 10.0, 0.1, p))
    last = np.sort(res.sets[-1].widths)
    assert last[:2].max() / last[2] < 1e-2
    b = res.biorthogonality
    assert b[0] == pytest.approx(1.0, abs=1e-2) and b[-1] == pytest.approx(1.0, abs=1e-2)
    assert np.nanmax(b) > 1.0


def test_link_gates_and_failed_steps():
    from reslab import eig_complex_symmetric

    s = lambda *e: eig_complex_symmetric(np.diag(e))
    sets = [s(1.0, 2.0), None, s(1.01, 2.01), s(1.02, 7.0)]
    trajs, labels = link_trajectories(sets, gate=0.5)
    assert len(trajs) == 3
    assert np.isnan(trajs[0].energies[1])
    assert trajs[0].at(1) is None and trajs[0].at(3) == pytest.approx(1.02)
    assert trajs[1].last == 2 and trajs[2].first == 3


def test_width_sum_errors():
    p = TwoLevelParams(0, 1)
    res = run_sweep(SweepSpec("v_in", 0, 1, 0.1, p))
    res.state_count[:] = 0
    with pytest.raises(EmptyWindow):
        width_sum_diagnostic(res)


def test_sealed_billiard_width_sum_is_zero():
    spec = SweepSpec("y_d", -3.0, -3.1, -0.05, BilliardGeometry(slide_w=0.5))
    res = run_sweep(spec)
    mean, fluct = width_sum_diagnostic(res)
    assert mean < 1e-6 and fluct == 0.0
    assert not res.errors
    assert res.meta["hx"] == [0.05]


def test_integrate_band_lorentzian():
    e0, g = 20.0, 0.01
    calls = []

    def f(E):
        calls.append(E)
        return (g / 2) ** 2 / ((E - e0) ** 2 + (g / 2) ** 2)

    a, b = 15.0, 25.0
    exact = g / 2 * (math.atan((b - e0) / (g / 2)) - math.atan((a - e0) / (g / 2)))
    val = integrate_band(f, band_breakpoints((a, b), [complex(e0, -g / 2)]), rel_tol=1e-4)
    assert val == pytest.approx(exact, rel=1e-3)
    # without pole-aware breakpoints the coarse grid would miss the peak
    pts = band_breakpoints((a, b), [complex(e0, -g / 2)])
    assert np.any(np.isclose(pts, e0)) and pts[0] == a and pts[-1] == b


def test_rise_interval():
    w = np.linspace(0.4, 0.0, 9)
    v = 1 / (1 + np.exp((w - 0.2) / 0.02))
    lo, hi = rise_interval(w, v)
    assert lo > hi and lo - hi < 0.15
    assert rise_interval(w, np.ones(9)) == (0.4, 0.4)


def test_integrated_conductance_sealed_is_zero():
    g = BilliardGeometry(lead2_enabled=True, slide_w=0.5)
    tab = integrated_conductance(g, DiscretizationParams(), [0.5], [(25.0, 40.0), (10.0, 25.0)])
    assert np.all(tab.values == 0)
    with pytest.raises(ValidationError):
        integrated_conductance(BilliardGeometry(), DiscretizationParams(), [0.5], [(25.0, 40.0)])
