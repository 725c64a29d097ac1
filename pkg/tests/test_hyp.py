import mpmath as mp
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from qesurf.errors import (ContractError, DomainError, ParameterError, SignatureError,
                           SingularityError, UnsupportedRegimeError)
from qesurf.hitchin import curvature_certificate
from qesurf.hyp import (HypParams, SampledFunction, SeriesSpec, alpha1_C, alpha1_in_t,
                        alpha1_solution, b1_operator, basis, basis_derivs, constraint,
                        dalpha_operator, dalpha_residual, eval_3f2, explicit_components,
                        explicit_family, family_coefficients, homothety_integrate,
                        homothety_ode_residual, hyp3f2, hyp3f2_derivs, lalpha_operator,
                        lalpha_residual, nu1_dictionary, nu1_inverse_dictionary)
from qesurf.qee import QEParams, is_gradient, qee_residual


def F(a, b, z):
    return eval_3f2(SeriesSpec(*a, *b, z))


def test_series_at_zero_and_closed_forms():
    assert F((1, 1, 1), (2, 1.5), 0) == 1
    assert abs(F((1, 1, 1), (2, 1.5), 0.25) - np.pi**2 / 9) < 1e-14
    assert abs(F((-0.5, -0.5, 0.5), (-0.5, 0.5), 0.19) - 0.9) < 1e-14


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 2), st.floats(0.3, 3), st.floats(0.3, 3),
       st.floats(-0.85, 0.85))
def test_series_against_mpmath(a1, a2, a3, b1, b2, z):
    ref = complex(mp.hyp3f2(a1, a2, a3, b1, b2, z))
    assert abs(F((a1, a2, a3), (b1, b2), z) - ref) <= 1e-12 * max(1.0, abs(ref))


@pytest.mark.parametrize("z", [1.3, 2.0, 3.5])
def test_continuation_against_mpmath(z):
    a, b = (0.3, 0.7, 1.1), (1.6, 2.2)
    ref = complex(mp.hyp3f2(*a, *b, z))
    assert abs(F(a, b, z) - ref) < 1e-11


@pytest.mark.parametrize("z", [1.2, 2.0, 3.9])
def test_continuation_branch_rules(z):
    assert abs(F((-0.5, -0.5, 0.5), (-0.5, 0.5), z) - 1j * np.sqrt(z - 1)) < 1e-12
    asn = np.pi / 2 - 1j * np.arcsinh(np.sqrt(z - 1))
    assert abs(F((1, 1, 1), (2, 1.5), z) - asn**2 / z) < 1e-12


def test_parameter_errors():
    with pytest.raises(ParameterError):
        SeriesSpec(1, 1, 1, -2, 1.5, 0.3)
    # a terminating numerator cancels first
    assert abs(F((-1, 1, 1), (-2, 1), 0.5) - (1 + 0.5 / 2)) < 1e-14
    with pytest.raises(DomainError):
        hyp3f2((0.3, 0.7, 1.1), (1.6, 2.2), 2.0 + 0.5j)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 1.5), st.floats(-1, 1), st.floats(0.2, 1.5), st.floats(1.2, 2.5),
       st.floats(0.6, 2.5), st.floats(-0.8, 0.8))
def test_contiguous_relations(a1, a2, a3, b1, b2, z):
    a, b = (a1, a2, a3), (b1, b2)
    F0, F1 = hyp3f2_derivs(a, b, z, 1)
    up = hyp3f2((a1 + 1, a2, a3), b, z)
    down = hyp3f2(a, (b1 - 1, b2), z)
    assert abs(z * F1 + a1 * F0 - a1 * up) < 1e-9 * max(1.0, abs(a1 * up))
    assert abs(z * F1 + (b1 - 1) * F0 - (b1 - 1) * down) < 1e-9 * max(1.0, abs(down))


def test_numerical_derivative_matches_identity():
    a, b, z, h = (0.4, -0.3, 1.2), (1.7, 0.9), 0.5, 1e-4
    d = (hyp3f2(a, b, z + h) - hyp3f2(a, b, z - h)) / (2 * h)
    assert abs(d - hyp3f2_derivs(a, b, z, 1)[1]) < 1e-8


def test_nu1_basis_closed_forms():
    z = np.linspace(0.1, 0.9, 17)
    C1, C2, C3 = basis(1.0, z)
    A = np.arcsin(np.sqrt(z))
    S = np.sqrt(z * (1 - z))
    assert np.max(np.abs(C3 - 1 / z)) < 1e-13
    assert np.max(np.abs(C1 - (A + S) / (2 * z))) < 1e-12
    assert np.max(np.abs(C2 - (9 * z - 3 * A * (2 * S + A)) / z)) < 1e-11


@pytest.mark.parametrize("nu", [1.0, 4.0])
def test_basis_solves_b1(nu):
    z = np.linspace(0.1, 0.9, 41)[1:-1]
    for C in basis_derivs(nu, z, 3):
        assert np.max(np.abs(b1_operator(nu, z, C))) < 1e-8


def test_negative_nu_and_unsupported():
    z = np.linspace(0.2, 0.8, 7)
    for C in basis_derivs(-2.0, z, 3):
        assert np.max(np.abs(b1_operator(-2.0, z, C))) < 1e-8
    with pytest.raises(UnsupportedRegimeError):
        basis(0.25, z)
    with pytest.raises(UnsupportedRegimeError):
        HypParams(0.0).nu


def test_constraint_examples():
    assert constraint(HypParams(1.0, 0.0, 0.0, 5.0)) == 0
    gd = 0.7
    assert abs(constraint(HypParams(1.0, 4.0, 1.0, gd)) - (-4 - 12 * gd)) < 1e-14
    assert abs(constraint(HypParams(1.0, 4.0, 1.0, -1 / 3))) < 1e-14


def test_nu1_dictionary_is_proportional_to_constraint():
    # recover the (linear) dictionary and expand b² − 4ac symbolically
    cols = [nu1_dictionary(*e) for e in np.eye(3)]
    M = sp.Matrix(3, 3, lambda i, j: sp.nsimplify(complex(cols[j][i]).real)
                  + sp.I * sp.nsimplify(complex(cols[j][i]).imag))
    be, ga, de = sp.symbols("beta gamma delta")
    a, b, c = M * sp.Matrix([be, ga, de])
    disc = sp.expand(b**2 - 4 * a * c)
    nu = 1
    b5 = -be**2 / 4 + 4 * nu * (1 - 4 * nu) * ga * de
    ratio = sp.Poly(disc, be, ga, de).coeff_monomial(be**2) / sp.Rational(-1, 4)
    assert abs(complex(ratio)) > 0
    poly = sp.Poly(sp.expand(disc - ratio * b5), be, ga, de)
    assert poly.is_zero or all(abs(complex(cf)) < 1e-12 for cf in poly.coeffs())


@settings(max_examples=20, deadline=None)
@given(st.complex_numbers(max_magnitude=3), st.complex_numbers(max_magnitude=3),
       st.complex_numbers(max_magnitude=3))
def test_nu1_dictionary_round_trip(a, b, c):
    back = nu1_dictionary(*nu1_inverse_dictionary(a, b, c))
    assert np.allclose(back, (a, b, c), atol=1e-12)
    be, ga, de = nu1_inverse_dictionary(a, b, c)
    assert abs((b * b - 4 * a * c) - constraint(HypParams(1.0, be, ga, de))) < 1e-10


def _sample(f, lo, hi, n=513, alpha=1.0):
    return SampledFunction.from_function(f, lo, hi, n, precision="extended", alpha=alpha)


@pytest.mark.parametrize("abc", [(1.0, 0.0, 0.0), (0.3, -1.2, 0.7), (-0.25, 1.0, -1.0)])
def test_dalpha_closed_form(abc):
    C = _sample(lambda x: alpha1_C(*abc, x)[0], 1.25, 4.0)
    assert dalpha_residual(C, 1.0).sup < 1e-7


def test_dalpha_basis_members():
    # stencil third derivatives of double-precision series values floor near 1e-7,
    # so the operator is applied to the exact derivatives of the basis
    x = np.linspace(0.15, 0.85, 57)
    for C in basis_derivs(1.0, x, 3):
        assert np.max(np.abs(dalpha_operator(x, C, 1.0))) < 1e-8
    C = SampledFunction.from_function(lambda x: basis(1.0, x)[1].real, 0.25, 0.75, 129)
    assert dalpha_residual(C, 1.0).sup < 1e-7


def test_dalpha_non_solution():
    alpha = 1.0
    C = _sample(lambda x: x, 1.25, 4.0)
    r = dalpha_residual(C, alpha)
    x = np.asarray(C.x, dtype=float)
    expected = np.abs(x * (2 * x + 1 - 1.5 * alpha) + x / 2)[C.collar(3)].max()
    assert abs(r.sup - expected) < 1e-9


def test_standoff_and_sampling_errors():
    with pytest.raises(DomainError):
        dalpha_residual(_sample(lambda x: x, 1.05, 2.0), 1.0)
    with pytest.raises(DomainError):
        dalpha_residual(SampledFunction(np.linspace(1.5, 2, 6), np.ones(6)), 1.0)
    with pytest.raises(DomainError):
        SampledFunction(np.array([1.0, 1.1, 1.3]), np.ones(3))


def test_lalpha_examples():
    a, b, c = family_coefficients(0.7)
    assert b * b == pytest.approx(4 * a * c)
    assert lalpha_residual(_sample(lambda x: alpha1_C(a, b, c, x)[0], 1.25, 4.0), 1.0).sup < 1e-7
    assert lalpha_residual(_sample(lambda x: 0 * x, 1.25, 4.0), 1.0).sup == 0
    bad = lalpha_residual(_sample(lambda x: alpha1_C(1.0, 0.0, 1.0, x)[0], 1.25, 4.0), 1.0)
    assert bad.sup > 1e-2


def test_lalpha_first_integral():
    r = lalpha_residual(_sample(lambda x: alpha1_C(1.0, 0.0, 1.0, x)[0], 1.25, 4.0), 1.0)
    assert r.sup > 1e-2 and r.meta["deviation"] < 1e-7


def test_lalpha_derivative_identity():
    alpha = 0.5
    C = _sample(lambda x: np.exp(0.3 * x) / x + np.sin(x), 1.0, 3.0, alpha=alpha)
    d = [C.derivative(k) for k in range(4)]
    x = C.x
    L = SampledFunction(x, lalpha_operator(x, d, alpha))
    lhs = L.derivative(1)
    rhs = (3 * d[1] + 2 * x * d[2]) * dalpha_operator(x, d, alpha)
    keep = np.zeros(x.size, bool)
    keep[16:-16] = True
    assert np.max(np.abs(lhs - rhs)[keep]) < 1e-7


@pytest.mark.parametrize("beta", [-1.0, 0.0, 0.5, 2.0])
def test_explicit_family(beta):
    s = explicit_family(beta)
    assert qee_residual(s, QEParams(-1.0)).sup < 1e-8
    assert curvature_certificate(s).sup < 1e-6


def test_explicit_family_parity_and_non_gradient():
    t = np.linspace(-2, 2, 41)
    _, _, Xt, Xy = explicit_components(0.0, t, 0.3)
    assert np.allclose(Xt, -Xt[::-1]) and np.allclose(Xy, Xy[::-1])
    s = explicit_family(0.0)
    assert np.max(np.abs(s.X.exterior_derivative()[s.grid.interior()])) > 0.1
    assert not is_gradient(s.X)


@pytest.mark.parametrize("beta", [-1.0, 0.5, 2.0])
def test_alpha1_matches_explicit_family(beta):
    t = np.linspace(0.5, np.sqrt(3.0), 33)
    T, Y = np.meshgrid(t, np.linspace(0, 1, 9))
    A = alpha1_in_t(*family_coefficients(beta), T, Y)
    E = explicit_components(beta, T, Y)
    for u, v in zip(A, E):
        assert np.max(np.abs(u - v)) < 1e-8


def test_alpha1_solution():
    sol = alpha1_solution(*family_coefficients(0.5))
    assert qee_residual(sol.structure, QEParams(-1.0)).sup < 1e-7
    assert lalpha_residual(sol.C, 1.0).sup < 1e-7
    with pytest.raises(ContractError):
        alpha1_solution(1.0, 0.0, 1.0)
    # (β², 2β, −1) gives b² − 4ac = 8β² and is rejected
    with pytest.raises(ContractError):
        alpha1_solution(0.25, 1.0, -1.0)
    with pytest.raises(SignatureError):
        alpha1_solution(1.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        alpha1_C(1, 0, 0, np.array([0.5]))


def test_homothety_m2():
    sol = homothety_integrate(-2.0, 1.0, 0.3)
    assert qee_residual(sol.structure, QEParams(-2.0)).sup < 1e-6
    h = sol.s[1] - sol.s[0]
    Zpp = np.gradient(sol.Zp, h)
    r = homothety_ode_residual(-2.0, sol.s, sol.Z, sol.Zp, Zpp)
    assert np.max(np.abs(r[5:-5])) < 1e-4


def test_homothety_m1_curvature():
    sol = homothety_integrate(-1.0, 1.0, 0.3)
    assert qee_residual(sol.structure, QEParams(-1.0)).sup < 1e-6
    assert curvature_certificate(sol.structure).sup < 1e-6


def test_homothety_singularity():
    with pytest.raises(SingularityError) as exc:
        homothety_integrate(-1.0, 1.0, 0.3, s_range=(-0.5, 0.6))
    assert 0.5 < exc.value.location < 0.53
    with pytest.raises(ParameterError):
        homothety_integrate(0.0, 1.0, 0.3)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(-2.0, -0.5), st.floats(0.05, 0.45))
def test_no_constant_solutions(Z, m, s):
    r = homothety_ode_residual(m, s, Z, 0.0, 0.0)
    assert r == pytest.approx(Z**2 * (m**2 + 3 * m * s * Z + Z**2 * (2 * s**2 + m)))
