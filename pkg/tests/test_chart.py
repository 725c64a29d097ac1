import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from qesurf.chart import (ChartGrid, Metric2D, OneForm, ScalarField, diff, fornberg_weights,
                          hodge_star, line_integrate, scalar_curvature, stencil_table, wirtinger,
                          cumulative_integrate)
from qesurf.errors import DomainError, GeometryError, StencilError

from conftest import sphere_H


def test_fornberg_matches_exact_table():
    w = fornberg_weights(2.0, np.arange(5.0), 2)
    assert np.allclose(w[1], [1 / 12, -2 / 3, 0, 2 / 3, -1 / 12])
    assert np.allclose(w[2], [-1 / 12, 4 / 3, -5 / 2, 4 / 3, -1 / 12])
    table, starts = stencil_table(9, 1, 4)
    assert np.allclose(table[4, :5], w[1]) and starts[4] == 2


@pytest.mark.parametrize("order", [4, 6, 8])
def test_polynomial_exactness(order):
    g = ChartGrid((-1, 2), (0, 1), 17, 13, order=order)
    f = ScalarField(g, g.X**3 + g.X * g.Y**2)
    fx = diff(f, "x").values
    assert np.max(np.abs(fx - (3 * g.X**2 + g.Y**2))) < 1e-11
    fyy = diff(f, "y", 2).values
    assert np.max(np.abs(fyy - 2 * g.X)) < 1e-9


def test_constant_has_zero_derivatives():
    g = ChartGrid((0, 1), (0, 1), 13, 13)
    f = ScalarField(g, np.full(g.shape, 3.5))
    for d in ("x", "y"):
        for k in (1, 2):
            assert np.max(np.abs(diff(f, d, k).values)) < 1e-11


def _sin_error(n, order=None):
    g = ChartGrid((0, np.pi), (0, 1), n, 5, **({} if order is None else {"order": order}))
    return np.max(np.abs(diff(ScalarField(g, np.sin(g.X)), "x").values - np.cos(g.X)))


def test_sin_derivative_accuracy_and_rate():
    assert _sin_error(65) < 1e-7
    e33, e65, e129 = (_sin_error(n, order=4) for n in (33, 65, 129))
    assert 14 < e33 / e65 < 18 and 14 < e65 / e129 < 18


def test_grid_validation():
    with pytest.raises(StencilError):
        ChartGrid((0, 1), (0, 1), 4, 9)
    with pytest.raises(DomainError):
        ChartGrid((1, 1), (0, 1), 9, 9)
    with pytest.raises(StencilError):
        ChartGrid((0, 1), (0, 1), 9, 9, order=5)


def test_masked_gap_raises():
    g0 = ChartGrid((0, 1), (0, 1), 21, 21)
    mask = np.ones(g0.shape, bool)
    mask[10, 10] = False
    g = ChartGrid((0, 1), (0, 1), 21, 21, mask=mask)
    with pytest.raises(DomainError):
        diff(ScalarField(g, g.X), "x")


def test_wirtinger_monomials():
    g = ChartGrid((-1, 1), (-1, 1), 33, 33)
    dz, dzb = wirtinger(ScalarField(g, g.z**2))
    assert np.max(np.abs(dzb.values)) < 1e-10
    assert np.max(np.abs(dz.values - 2 * g.z)) < 1e-10
    dz, _ = wirtinger(ScalarField(g, np.abs(g.z) ** 2))
    assert np.max(np.abs(dz.values - np.conj(g.z))) < 1e-10


def test_wirtinger_log_against_symbolic_derivative():
    x, y = sp.symbols("x y", real=True)
    f = sp.log(2 * sp.I * y)  # ln(z − z̄)
    dzb_expr = sp.Rational(1, 2) * (sp.diff(f, x) + sp.I * sp.diff(f, y))
    dzb_num = sp.lambdify((x, y), dzb_expr, "numpy")
    g = ChartGrid((0, 1), (1, 2), 65, 65)
    z = g.z
    _, dzb = wirtinger(ScalarField(g, np.log(z - np.conj(z))))
    expected = dzb_num(g.X, g.Y) * np.ones(g.shape)
    assert np.max(np.abs(dzb.values - expected)) < 1e-9
    assert np.max(np.abs(dzb.values + 1 / (z - np.conj(z)))) < 1e-9


@settings(max_examples=15, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.2, 1.5))
def test_wirtinger_consistency(a, b, k):
    g = ChartGrid((0, 1), (0, 1), 21, 21)
    f = ScalarField(g, np.exp(a * g.X + 1j * b * g.Y) * np.cos(k * g.Y))
    dz, dzb = wirtinger(f)
    fx, fy = diff(f, "x").values, diff(f, "y").values
    scale = max(1.0, np.max(np.abs(fx)), np.max(np.abs(fy)))
    assert np.max(np.abs(dz.values + dzb.values - fx)) < 1e-12 * scale
    assert np.max(np.abs(1j * (dz.values - dzb.values) - fy)) < 1e-12 * scale


def test_curvature_constants():
    g = ChartGrid((-1, 1), (-1, 1), 65, 65)
    R = scalar_curvature(Metric2D.conformal(g, sphere_H(g))).real
    assert np.max(np.abs(R - 2)) < 1e-6
    R = scalar_curvature(Metric2D.conformal(g, np.full(g.shape, -np.log(2)))).real
    assert np.max(np.abs(R)) < 1e-10
    h = ChartGrid((0, 1), (1, 2), 65, 65)
    R = scalar_curvature(Metric2D.diagonal(h, 1 / h.Y**2, 1 / h.Y**2)).real
    # nested stencils: skip the one-sided collar
    assert np.max(np.abs(R + 2)[h.interior(1)]) < 1e-8
    R = scalar_curvature(Metric2D.conformal(h, -np.log(2) - 2 * np.log(h.Y))).real
    assert np.max(np.abs(R + 2)) < 1e-8


def test_sphere_curvature_convergence_slope():
    errs = []
    for n in (33, 65):
        g = ChartGrid((-1, 1), (-1, 1), n, n)
        R = scalar_curvature(Metric2D.conformal(g, sphere_H(g))).real
        errs.append(np.max(np.abs(R - 2)))
    assert np.log2(errs[0] / errs[1]) >= 3.5


def test_curvature_oracle_conformal_vs_christoffel():
    g = ChartGrid((-0.5, 0.5), (-0.5, 0.5), 65, 65)
    met = Metric2D.conformal(g, sphere_H(g))
    a = scalar_curvature(met, "conformal").real
    b = scalar_curvature(met, "christoffel").real
    assert np.max(np.abs(a - b)) < 1e-6
    g = ChartGrid((-1, 1), (-1, 1), 65, 65)
    met = Metric2D.conformal(g, sphere_H(g))
    d = np.abs(scalar_curvature(met, "conformal").real - scalar_curvature(met, "christoffel").real)
    assert np.max(d[g.interior(1)]) < 1e-6


def test_non_positive_metric():
    g = ChartGrid((0, 1), (0, 1), 9, 9)
    with pytest.raises(GeometryError):
        Metric2D(g, 1.0, 2.0, 1.0)


def test_hodge_star_examples():
    g = ChartGrid((0, 1), (1, 2), 17, 17)
    flat = Metric2D.conformal(g, np.full(g.shape, -np.log(2)))
    s = hodge_star(OneForm(g, 1.0, 0.0), flat)
    assert np.allclose(s.ax, 0) and np.allclose(s.ay, 1)
    a = OneForm(g, np.sin(g.X), g.Y**2)
    ss = hodge_star(hodge_star(a, flat), flat)
    assert np.allclose(ss.ax, -a.ax) and np.allclose(ss.ay, -a.ay)
    for H in (np.zeros(g.shape), np.sin(g.X * g.Y)):
        s = hodge_star(OneForm(g, 0.0, 1 / g.Y), Metric2D.conformal(g, H))
        assert np.max(np.abs(s.ax + 1 / g.Y)) < 1e-14 and np.max(np.abs(s.ay)) < 1e-14


def test_hodge_star_general_metric_component_formula():
    g = ChartGrid((0, 1), (0, 1), 9, 9)
    met = Metric2D(g, 2 + g.X, 0.3 * g.Y, 1 + g.Y)
    a = OneForm(g, 1.0, 0.0)
    s = hodge_star(a, met)
    # ⋆α satisfies β∧⋆α = ⟨β, α⟩ vol for every β; test with β = dx, dy
    ixx, ixy, iyy = met.inverse()
    sq = met.sqrt_det
    assert np.allclose(1 * s.ay - 0 * s.ax, ixx * sq)
    assert np.allclose(0 * s.ay - 1 * s.ax, ixy * sq)


@settings(max_examples=10, deadline=None)
@given(st.floats(-1, 1), st.floats(0.1, 2))
def test_conformal_star_independent_of_factor(c, k):
    g = ChartGrid((0, 1), (1, 2), 9, 9)
    a = OneForm(g, np.cos(g.X), g.X * g.Y)
    s1 = hodge_star(a, Metric2D.conformal(g, np.zeros(g.shape)))
    s2 = hodge_star(a, Metric2D.conformal(g, c + k * np.sin(g.X + g.Y)))
    assert np.max(np.abs(s1.ax - s2.ax)) < 1e-13 and np.max(np.abs(s1.ay - s2.ay)) < 1e-13


def test_line_integrals():
    g = ChartGrid((0, 1), (0, 1), 33, 33)
    exact = OneForm(g, 2 * g.X, 0.0)
    assert abs(line_integrate(exact, [(0, 0), (1, 0)]) - 1) < 1e-10
    loop = [(0.1, 0.1), (0.9, 0.1), (0.9, 0.8), (0.1, 0.8), (0.1, 0.1)]
    closed = OneForm(g, 2 * g.X * g.Y, g.X**2 + np.cos(g.Y))
    assert abs(line_integrate(closed, loop)) < 1e-9
    h = ChartGrid((0, 1), (1, np.e), 33, 33)
    assert abs(line_integrate(OneForm(h, 0.0, 1 / h.Y), [(0, 1), (0, np.e)]) - 1) < 1e-8
    with pytest.raises(DomainError):
        line_integrate(exact, [(0, 0), (2, 0)])


def test_cumulative_integrate_recovers_potential():
    g = ChartGrid((0, 1), (1, 2), 33, 33)
    phi = np.sin(g.X) * np.log(g.Y)
    form = OneForm(g, np.cos(g.X) * np.log(g.Y), np.sin(g.X) / g.Y)
    F = cumulative_integrate(form, base=(0, 0), value0=phi[0, 0])
    assert np.max(np.abs(F - phi)) < 1e-10


def test_extended_precision_grid():
    g = ChartGrid((0, 1), (1, 2), 17, 17, precision="extended")
    assert g.X.dtype == np.longdouble
    f = ScalarField(g, g.X**2)
    assert f.values.dtype == np.clongdouble
    assert np.max(np.abs(diff(f, "x").values - 2 * g.X)) < 1e-15


def test_descriptor_round_trip():
    g = ChartGrid((0, 1), (1, 2), 9, 11)
    assert ChartGrid.from_descriptor(g.descriptor()) == g
    assert set(g.descriptor()) == {"x_min", "x_max", "y_min", "y_max", "nx", "ny", "mask"}
