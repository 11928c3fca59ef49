import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reslab import (
    DimensionMismatch,
    PoleOnAxis,
    StatisticalParams,
    SymmetryViolation,
    TwoLevelParams,
    ValidationError,
    build_statistical,
    build_two_level,
    crossing_conditions,
    dressed_couplings,
    eig_complex_symmetric,
    eigenvalues_v,
    eigenvalues_w,
    find_critical_coupling,
    resonance_s_matrix,
    s_matrix_direct,
)
from reslab.schematic import statistical_resonances, two_level_resonances

from oracles import eig2_symmetric, two_level_s_direct

energies = st.floats(-3, 3, allow_nan=False)
widths = st.floats(0, 3, allow_nan=False)
couplings = st.floats(-2, 2, allow_nan=False)


def as_complex(pair):
    return sorted((complex(e) for e in pair), key=lambda z: (z.real, -z.imag))


def test_build_two_level():
    assert np.allclose(build_two_level(TwoLevelParams(0, 1)), np.diag([0, 1]))
    H = build_two_level(TwoLevelParams(0, 0, 1, 1, w_ex=0.5))
    assert np.allclose(H, [[-0.5j, 0.5j], [0.5j, -0.5j]])


def test_params_validated():
    with pytest.raises(ValidationError):
        TwoLevelParams(0, 1, Gamma1=-1)
    with pytest.raises(ValidationError):
        TwoLevelParams(0, math.nan)
    assert TwoLevelParams(0, 1).with_(v_in=0.3).v_in == 0.3


def test_real_coupling_worked_values():
    e = as_complex(eigenvalues_v(TwoLevelParams(-1, 1, 1, 1, v_in=1)))
    assert np.allclose(e, [-math.sqrt(2) - 0.5j, math.sqrt(2) - 0.5j], atol=1e-12)
    assert abs(e[1].real - 1.41421) < 1e-5
    e = as_complex(eigenvalues_v(TwoLevelParams(0, 0, 1, 0, v_in=1)))
    r = math.sqrt(15) / 4
    assert np.allclose(e, [-r - 0.25j, r - 0.25j], atol=1e-12)
    assert abs(r - 0.96825) < 1e-5
    # equal widths after coupling
    assert e[0].imag == pytest.approx(e[1].imag)


def test_continuum_coupling_worked_values():
    e = as_complex(eigenvalues_w(TwoLevelParams(0, 0, 1, 1, w_ex=0.5)))
    assert np.allclose(e, [-1j, 0], atol=1e-12) or np.allclose(e, [0, -1j], atol=1e-12)
    widths = sorted(-2 * z.imag for z in e)
    assert widths == pytest.approx([0, 2], abs=1e-12)
    e = as_complex(eigenvalues_w(TwoLevelParams(0, 1, w_ex=0.5)))
    assert np.allclose(e, [0.5, 0.5], atol=1e-7)


def test_decoupled_limits():
    p = TwoLevelParams(0.3, -0.7, 0.2, 0.9)
    ref = as_complex([p.eps1, p.eps2])
    assert as_complex(eigenvalues_v(p)) == pytest.approx(ref)
    assert as_complex(eigenvalues_w(p)) == pytest.approx(ref)
    with pytest.raises(ValueError):
        eigenvalues_v(p.with_(w_ex=1))
    with pytest.raises(ValueError):
        eigenvalues_w(p.with_(v_in=1))


@settings(max_examples=200, deadline=None)
@given(energies, energies, widths, widths, couplings, st.booleans())
def test_closed_forms_match_eig(E1, E2, G1, G2, c, internal):
    p = TwoLevelParams(E1, E2, G1, G2, v_in=c if internal else 0.0, w_ex=0.0 if internal else c)
    closed = as_complex((eigenvalues_v if internal else eigenvalues_w)(p))
    H = build_two_level(p)
    ref = eig2_symmetric(H[0, 0], H[0, 1], H[1, 1])
    scale = max(abs(E1), abs(E2), G1, G2, abs(c), 1.0)
    if abs(ref[0] - ref[1]) < 1e-4 * scale:
        return
    err = min(np.abs(np.array(closed) - ref).max(), np.abs(np.array(closed)[::-1] - ref).max())
    assert err < 1e-10 * scale
    num = two_level_resonances(p).energies
    err = min(np.abs(num - ref).max(), np.abs(num[::-1] - ref).max())
    assert err < 1e-10 * scale


def test_crossing_conditions_cases():
    r = crossing_conditions(TwoLevelParams(0, 1, 0.5, 0.5, w_ex=0.5))
    assert (r.R_value, r.I_value, r.classification) == (0.0, 0.0, "branch-point")
    r = crossing_conditions(TwoLevelParams(1, 0, 2, 0, v_in=0.25, w_ex=-1))
    assert r.I_value == pytest.approx(0.0)
    assert r.R_value == pytest.approx(-3.75)
    assert r.classification == "real-axis-crossing-allowed"
    r = crossing_conditions(TwoLevelParams(0, 0, 1, 1, v_in=1))
    assert (r.R_value, r.classification) == (4.0, "imag-axis-crossing-allowed")
    r = crossing_conditions(TwoLevelParams(0, 1, 0, 2, v_in=0.3, w_ex=0.1))
    assert r.classification == "complex-avoided"


@settings(max_examples=200, deadline=None)
@given(energies, energies, widths, widths, couplings, couplings)
def test_conditions_agree_with_discriminant(E1, E2, G1, G2, v, w):
    # squared eigenvalue gap of the matrix with coupling v + i w is R - i I
    # once w is mirrored, so both conditions hold exactly at coalescence
    p = TwoLevelParams(E1, E2, G1, G2, v_in=v, w_ex=w)
    rep = crossing_conditions(p.with_(w_ex=-w))
    a, b = p.eps1, p.eps2
    c = complex(v, w)
    disc = (a - b) ** 2 + 4 * c * c
    assert disc.real == pytest.approx(rep.R_value, abs=1e-9 * (1 + abs(rep.R_value)))
    assert disc.imag == pytest.approx(-rep.I_value, abs=1e-9 * (1 + abs(rep.I_value)))


def test_critical_coupling_cases():
    assert find_critical_coupling(TwoLevelParams(0, 1, 0.5, 0.5), "w_ex") == pytest.approx([-0.5, 0.5])
    assert find_critical_coupling(TwoLevelParams(0, 0, 0, 2), "v_in") == pytest.approx([-0.5, 0.5])
    assert find_critical_coupling(TwoLevelParams(0, 1, 0, 2), "v_in") == []
    with pytest.raises(ValueError):
        find_critical_coupling(TwoLevelParams(0, 1), "E1")


def test_critical_coupling_with_fixed_partner():
    # I = dE dG + 8 v w = 0 puts the root at w = -0.5, but the matrix with
    # coupling v + i w coalesces at w = +0.5, so the root fails verification
    p = TwoLevelParams(0, 1, 0, 2, v_in=0.5)
    assert crossing_conditions(p.with_(w_ex=-0.5)).classification == "branch-point"
    assert find_critical_coupling(p, "w_ex") == []
    r = eig_complex_symmetric(build_two_level(p.with_(w_ex=0.5)))
    assert abs(r.energies[0] - r.energies[1]) < 1e-6


@settings(max_examples=100, deadline=None)
@given(energies, energies, widths)
def test_critical_coupling_gives_coalescence(E1, E2, G):
    p = TwoLevelParams(E1, E2, G, G)
    for w in find_critical_coupling(p, "w_ex"):
        r = eig_complex_symmetric(build_two_level(p.with_(w_ex=w)))
        scale = max(abs(E1 - E2), 1e-3)
        assert abs(r.energies[0] - r.energies[1]) < 1e-6 * scale


def test_statistical_builder():
    V = np.array([1, 1]) / math.sqrt(2)
    p = StatisticalParams(np.zeros((2, 2)), 0.0, V)
    H = build_statistical(p)
    assert np.allclose(H, -0.5j * np.ones((2, 2)))
    w = statistical_resonances(p).energies
    assert sorted(-2 * w.imag) == pytest.approx([0, 2], abs=1e-12)
    p0 = StatisticalParams(np.diag([1.0, 2.0]), np.zeros((2, 2)), np.zeros(2))
    assert np.allclose(statistical_resonances(p0).widths, 0)
    assert p.n_states == 2 and p.n_channels == 1


def test_statistical_validation():
    with pytest.raises(DimensionMismatch):
        StatisticalParams(np.eye(2), np.eye(3), np.ones(2))
    with pytest.raises(DimensionMismatch):
        StatisticalParams(np.eye(2), 0.0, np.ones(3))
    with pytest.raises(SymmetryViolation):
        StatisticalParams(np.array([[0, 1], [0, 0]]), 0.0, np.ones(2))


def test_trapped_state_count():
    rng = np.random.default_rng(7)
    H0 = np.diag([0.0, 0.3, 0.7])
    V = rng.normal(size=(3, 1))
    for s in (10.0, 100.0):
        w = np.sort(statistical_resonances(StatisticalParams(H0, 0.0, s * V)).widths)
        assert w[:2].max() / w[2] < 1e-2 / s
    # two channels leave one trapped state
    V2 = rng.normal(size=(3, 2))
    w = np.sort(statistical_resonances(StatisticalParams(H0, 0.0, 100 * V2)).widths)
    assert w[0] / w[1] < 1e-4


def test_trace_identity():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(4, 4))
    V = rng.normal(size=(4, 2))
    for scale in (0.0, 0.5, 3.0):
        p = StatisticalParams(np.diag(np.arange(4.0)), scale * (A + A.T), V)
        assert statistical_resonances(p).widths.sum() == pytest.approx(2 * np.sum(V**2), rel=1e-12)


def test_single_pole_s_matrix():
    # resonance part alone reaches modulus 2 at the centre when g^2 = Gamma
    S = resonance_s_matrix([5 - 0.25j], [[math.sqrt(0.5)]], 5.0)
    assert abs(S[0, 0]) == pytest.approx(2.0)
    far = resonance_s_matrix([5 - 0.25j], [[math.sqrt(0.5)]], 5e6)
    assert abs(far[0, 0]) < 1e-6
    with pytest.raises(PoleOnAxis):
        resonance_s_matrix([5 + 0j], [[1.0]], 5.0)
    # decoupled bound states are skipped
    assert resonance_s_matrix([5 + 0j], [[0.0]], 5.0)[0, 0] == 0
    with pytest.raises(DimensionMismatch):
        resonance_s_matrix([1 - 1j, 2 - 1j], [[1.0]], 0.0)


@pytest.mark.parametrize("E", [0.0, -0.7, 1.3])
def test_pole_expansion_equals_direct(E):
    V = np.array([1, 1]) / math.sqrt(2)
    p = StatisticalParams(np.diag([0.0, 0.2]), 0.0, V)
    rset = statistical_resonances(p)
    S = resonance_s_matrix(rset.energies, dressed_couplings(rset, V), E)
    H = build_statistical(p)
    assert np.allclose(S, s_matrix_direct(H, V, E), atol=1e-10)
    assert np.allclose(S, two_level_s_direct((H[0, 0], H[1, 1]), H[0, 1], V, E), atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.integers(1, 3), st.integers(0, 2**32 - 1), st.floats(-3, 3))
def test_pole_expansion_property(n, lam, seed, E):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    V = rng.normal(size=(n, lam))
    p = StatisticalParams(np.diag(rng.normal(size=n)), 0.1 * (A + A.T), V)
    rset = statistical_resonances(p)
    if rset.degenerate or rset.biorthogonality > 1e4:
        return
    S = resonance_s_matrix(rset.energies, dressed_couplings(rset, V), E)
    D = s_matrix_direct(build_statistical(p), V, E)
    assert np.allclose(S, D, atol=1e-8 * max(1.0, np.abs(D).max()))
    # unitarity of 1 - S_res for the rank-Lambda coupling
    U = np.eye(lam) - 2 * D
    assert np.allclose(U.conj().T @ U, np.eye(lam), atol=1e-8)
