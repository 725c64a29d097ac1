import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qesurf.chart import ChartGrid, OneForm
from qesurf.errors import DomainError, ParameterError
from qesurf.ew import (MobiusMap, WarpedProductSpec, constcurv_residual, frame_change,
                       frame_distance, gauduchon_s2xs1, gauduchon_s2xs1_frame, kw_residual,
                       mobius_sphere_structure, mobius_u, s2xs1_direct_residual, s2xs1_structure,
                       sphere_metric, warped_residual)
from qesurf.qee import QEParams, qee_residual


@pytest.fixture(scope="module")
def g65():
    return ChartGrid((-1.2, 1.2), (-1.2, 1.2), 65, 65)


@pytest.fixture(scope="module")
def g129():
    return ChartGrid((-1.2, 1.2), (-1.2, 1.2), 129, 129)


def test_mobius_normalization_and_json():
    f = MobiusMap(2, 1, 0, 3)
    assert abs(f.a * f.d - f.b * f.c - 1) < 1e-14
    z = 0.3 + 0.2j
    assert abs(f(z) - (2 * z + 1) / 3) < 1e-14
    assert MobiusMap.from_json(f.to_json()) == f
    with pytest.raises(ParameterError):
        MobiusMap(1, 2, 2, 4)


def test_mobius_compose_and_other_chart():
    f, g = MobiusMap(2, 0.3, 0.1, 1), MobiusMap(1, 0.2j, 0, 1)
    z = 0.1 - 0.4j
    assert abs(f.compose(g)(z) - f(g(z))) < 1e-13
    w = 0.7 + 0.2j  # w = 1/z on both sides
    assert abs(f.other_chart()(w) - 1 / f(1 / w)) < 1e-13


def test_mobius_u_identity(g65):
    for lam in (0.5, 1.0, 3.0):
        u = mobius_u(MobiusMap.identity(), lam, g65).real
        assert np.max(np.abs(np.exp(u) - 1 / lam)) < 1e-14


def test_mobius_u_scaling_formula(g65):
    z2 = np.abs(g65.z) ** 2
    u = mobius_u(MobiusMap.scaling(2.0), 1.0, g65).real
    assert np.max(np.abs(np.exp(u) - ((1 + z2) * 2 / (1 + 4 * z2)) ** 2)) < 1e-13


def test_constcurv_mobius(g129):
    for patch in ("north", "south"):
        u = mobius_u(MobiusMap.scaling(2.0), 1.0, g129, patch)
        assert constcurv_residual(u, 1.0).sup < 1e-8


def test_constcurv_inversion_on_annulus_patch():
    g = ChartGrid((0.6, 1.4), (-0.4, 0.4), 65, 65)
    u = mobius_u(MobiusMap(0, 1, 1, 0), 1.0, g)
    assert constcurv_residual(u, 1.0).sup < 1e-8


def test_pole_in_chart(g65):
    with pytest.raises(DomainError):
        mobius_u(MobiusMap(1, 0, 1, -0.5), 1.0, g65)


def test_constcurv_trivial(g65):
    for lam in (0.5, 2.0):
        assert constcurv_residual(np.full(g65.shape, -np.log(lam)), lam, g65).sup < 1e-12
    assert abs(constcurv_residual(np.zeros(g65.shape), 2.0, g65).sup - 2.0) < 1e-12


def test_mobius_group_action():
    # translation by an integer number of cells so u_F∘G is a shifted sample
    g = ChartGrid((-0.5, 0.5), (-0.5, 0.5), 33, 33)
    shift = 0.25
    gs = ChartGrid((-0.5 + shift, 0.5 + shift), (-0.5, 0.5), 33, 33)
    F, G = MobiusMap(2, 0.3, 0.1, 1), MobiusMap(1, shift, 0, 1)
    lhs = mobius_u(F.compose(G), 1.0, g).real
    rhs = mobius_u(F, 1.0, gs).real + mobius_u(G, 1.0, g).real
    assert np.max(np.abs(lhs - rhs)) < 1e-8


def test_kw_residual(g129):
    u = mobius_u(MobiusMap.scaling(2.0), 1.0, g129).real
    assert kw_residual(u, np.ones(g129.shape), 1.0, grid=g129).sup < 1e-8
    bad = u + 0.1 * np.sin(g129.X)
    assert kw_residual(bad, np.ones(g129.shape), 1.0, grid=g129).sup > 1e-2
    c = 0.3
    K = OneForm(g129, 1.0, -2.0)
    r = kw_residual(np.full(g129.shape, c), np.full(g129.shape, 2.0 * np.exp(c)), 2.0, K, grid=g129)
    assert r.sup < 1e-12


def _frame(g):
    return gauduchon_s2xs1_frame(g)


def test_frame_change_trivial(g65):
    f = _frame(g65)
    assert frame_distance(frame_change(f, np.zeros(g65.shape)), f) < 1e-14
    k = 0.4
    f2 = frame_change(f, np.full(g65.shape, k))
    assert np.max(np.abs(f2.Lambda - np.exp(-k) * f.Lambda)) < 1e-10
    assert np.allclose(f2.omega.ax, f.omega.ax) and np.allclose(f2.omega.ay, f.omega.ay)


@settings(max_examples=6, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(0.5, 2.0), st.floats(-0.5, 0.5))
def test_frame_change_cocycle(a, k, b):
    g = ChartGrid((-0.5, 0.5), (-0.5, 0.5), 33, 33)
    u1 = a * np.sin(k * g.X) * np.cos(g.Y)
    u2 = b * np.exp(-(g.X**2 + g.Y**2)) + 0.1 * g.X * g.Y
    f = _frame(g)
    assert frame_distance(frame_change(frame_change(f, u1), u2), frame_change(f, u1 + u2)) < 1e-7
    assert frame_distance(frame_change(frame_change(f, u1), -u1), f) < 1e-7


def test_quasi_einstein_frame_has_constant_lambda():
    g = ChartGrid((-0.6, 0.6), (-0.6, 0.6), 65, 65)
    for patch in ("north", "south"):
        u = mobius_u(MobiusMap.scaling(2.0), 1.0, g, patch).real
        L = frame_change(_frame(g), u).Lambda[g.interior(2)]
        assert np.ptp(L) < 1e-7 and abs(L.mean() - 1.0) < 1e-7


def test_s2xs1_trivial_map(g65):
    s = s2xs1_structure(MobiusMap.identity(), 1.0, g65)
    assert np.max(np.abs(s.u)) < 1e-14
    assert np.allclose(s.g0.gxx, sphere_metric(g65).gxx)
    s = s2xs1_structure(MobiusMap.identity(), 2.0, g65)
    assert np.ptp(s.u) < 1e-14


def test_s2xs1_warped_blocks(g129):
    s = s2xs1_structure(MobiusMap.scaling(2.0), 1.0, g129)
    r = warped_residual(s)
    assert set(r.parts) == {"tangential", "tt", "normalization"}
    assert r.sup < 1e-7
    assert abs(r.meta["u_shift"]) < 1e-8
    d = s2xs1_direct_residual(s)
    assert d.sup < 1e-7
    assert max(r.sup, d.sup) <= 10 * min(r.sup, d.sup)


def test_shift_sensitivity(g129):
    s = s2xs1_structure(MobiusMap.scaling(2.0), 1.0, g129)
    r = warped_residual(s, 0.3)
    assert r["normalization"].sup > 0.1
    assert r["tangential"].sup < 1e-7
    assert abs(r.meta["u_shift"] + 0.3) < 1e-6


def test_constant_u_product():
    m, lam = -2.0, 1.5
    g = ChartGrid((-0.5, 0.5), (-0.5, 0.5), 65, 65)
    u = np.full(g.shape, 0.5 * m * np.log(-m * lam))
    spec = WarpedProductSpec.from_metric(sphere_metric(g).scaled(1 / lam), u, m, lam)
    assert warped_residual(spec).sup < 1e-9
    with pytest.raises(ParameterError):
        WarpedProductSpec.from_metric(sphere_metric(g), u, 0.0, lam)


def test_gauduchon_on_s2xs1(g129):
    s = s2xs1_structure(MobiusMap.scaling(2.0), 1.0, g129)
    A, dev = gauduchon_s2xs1(s)
    assert dev < 1e-6
    assert abs(A.real[g129.interior(2)].mean() + 1.0) < 1e-6


def test_mobius_sphere_structure_solves_qee():
    m = -1.0
    for patch, r in (("north", 0.2), ("south", 0.6)):
        g = ChartGrid((-r, r), (-r, r), 65, 65)
        s = mobius_sphere_structure(MobiusMap.scaling(2.0), m, g, patch)
        assert qee_residual(s, QEParams(m, 1 + m)).sup < 1e-8
    with pytest.raises(DomainError):
        mobius_sphere_structure(MobiusMap.scaling(2.0), m, ChartGrid((-1, 1), (-1, 1), 33, 33))
