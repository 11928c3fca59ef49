import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reslab import GridTooCoarse, ValidationError
from reslab.billiard import BilliardGeometry, DiscretizationParams
from reslab.billiard.geometry import slide_alignment, snap_spacing
from reslab.billiard.grid import (
    assemble,
    build_lattice,
    check_resolution,
    grid_spacing,
    symmetric_operator,
    transverse_modes,
)

from oracles import count_rectangle_modes, rectangle_fd_levels

EMPTY = dict(scatterer_radius=0.0)


def test_geometry_defaults_and_area():
    g = BilliardGeometry()
    assert (g.width, g.height, g.area) == (3.0, 3.0, 9.0)
    assert g.openings() == [(-1.35, -0.65)]
    assert g.opening == pytest.approx(0.7)
    g2 = g.with_(lead2_enabled=True, x_r=2.0)
    assert g2.openings()[1] == pytest.approx((1.15, 1.85))


@pytest.mark.parametrize(
    "changes, key",
    [
        (dict(slide_w=0.6), "slide_w"),
        (dict(slide_w=-0.1), "slide_w"),
        (dict(y_d=-2.9), "y_d"),
        (dict(x_r=1.4), "x_r"),
        (dict(scatterer_radius=-1.0), "scatterer_radius"),
        (dict(scatterer_center=(1.3, -1.2)), "scatterer_center"),
        (dict(y_d=math.nan), "y_d"),
    ],
)
def test_geometry_validation(changes, key):
    with pytest.raises(ValidationError) as info:
        BilliardGeometry(**changes)
    assert info.value.key == key


def test_minimum_area_accepted():
    assert BilliardGeometry(y_d=-3.0, x_r=1.5).area == 9.0


@pytest.mark.parametrize(
    "changes", [dict(h=0.0), dict(h=0.2), dict(ecs_theta=2.0), dict(ecs_start=0.0),
                dict(lead_length=2.0), dict(lead_refine=0), dict(lead_refine=1.5), dict(n_modes=2)]
)
def test_discretization_validation(changes):
    with pytest.raises(ValidationError):
        DiscretizationParams(**changes)


def test_snap_spacing():
    assert snap_spacing(-1.5, [1.5, -0.5, -1.35, -0.65], 0.05) == pytest.approx(0.05)
    assert snap_spacing(-1.5, [1.5, -1.475], 0.05) == pytest.approx(0.025)
    assert snap_spacing(0.0, [], 0.07) == 0.07
    assert slide_alignment([0.0, 0.2, 0.5]) == (-1.3, -0.7)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 50), st.sampled_from([0.1, 0.05, 0.04]))
def test_grid_puts_marks_on_lines(k, h):
    w = round(0.01 * k, 2)
    g = BilliardGeometry(slide_w=w, lead2_enabled=True, x_r=1.5 + 0.01 * (k % 7))
    hx, hy = grid_spacing(g, DiscretizationParams(h=h))
    assert hx <= h + 1e-12 and hy <= h + 1e-12
    for m in g.x_marks():
        n = (m + 1.5) / hx
        assert abs(n - round(n)) < 1e-6


def test_resolution_guard():
    check_resolution(0.05, 0.05, 4 * math.pi**2)
    with pytest.raises(GridTooCoarse):
        check_resolution(0.1, 0.1, 100.0)


def test_transverse_modes_orthonormal():
    chi, t = transverse_modes(20)
    assert np.allclose(chi.T @ chi, np.eye(19))
    assert t[0] == pytest.approx(1 - math.cos(math.pi / 20))


def test_closed_operator_matches_rectangle_oracle():
    g = BilliardGeometry(slide_w=0.5, **EMPTY)
    lat = build_lattice(g, DiscretizationParams(h=0.1), "closed")
    K, M = assemble(lat)
    H, _ = symmetric_operator(K, M)
    w = np.sort(np.linalg.eigvalsh(H.real.toarray()))[:12]
    ref = rectangle_fd_levels(3.0, 3.0, lat.hx, lat.hy, 12)
    assert np.allclose(w, ref, atol=1e-10)


def test_mode_count_in_band():
    # the lattice counts every (n, m) with 9 < n^2 + m^2 < 36; the
    # permutation pairs (n, m), (m, n) are distinct states
    assert count_rectangle_modes(3.0, 3.0, math.pi**2, 4 * math.pi**2) == 18


def test_stiffness_symmetric_and_mass_positive():
    g = BilliardGeometry(lead2_enabled=True)
    for kind in ("closed", "ecs", "scatter"):
        lat = build_lattice(g, DiscretizationParams(), kind)
        K, M = assemble(lat)
        assert abs(K - K.T).max() == 0
        assert np.all(M.real > 0)
        assert lat.n == K.shape[0]


def test_ecs_lattice_rows_and_scaling():
    disc = DiscretizationParams()
    lat = build_lattice(BilliardGeometry(), disc, "ecs")
    lead = lat.leads[0]
    assert lat.hs == pytest.approx(lat.hy / disc.lead_refine)
    assert lead.n_rows == round(2.0 / lat.hs) + round(6.0 / lat.hs) + 1
    j = lead.j_mouth + lat.scaled_from
    assert lat.link_length(j - 1) == pytest.approx(lat.hs)
    assert lat.link_length(j) == pytest.approx(lat.hs * np.exp(0.35j))
    assert lat.link_length(0) == pytest.approx(lat.hy)
    K, _ = assemble(lat)
    assert np.abs(K.imag).max() > 0


def test_sealed_slide_disconnects_lead():
    g = BilliardGeometry(slide_w=0.5)
    lat = build_lattice(g, DiscretizationParams(), "scatter")
    K, _ = assemble(lat)
    n_cav = lat.n_cavity
    assert abs(K[:n_cav, n_cav:]).max() == 0


def test_thresholds():
    lat = build_lattice(BilliardGeometry(), DiscretizationParams(), "closed")
    t = lat.thresholds()
    assert t[0] == pytest.approx(math.pi**2, rel=5e-3)
    assert t[1] == pytest.approx(39.1548, abs=1e-4)


def test_closed_operator_is_hermitian_positive():
    lat = build_lattice(BilliardGeometry(), DiscretizationParams(h=0.1), "closed")
    K, M = assemble(lat)
    H, _ = symmetric_operator(K, M)
    A = H.toarray()
    assert np.allclose(A, A.conj().T)
    assert np.linalg.eigvalsh(A.real).min() > 0
