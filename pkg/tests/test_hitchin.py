import numpy as np
import pytest

from qesurf.chart import ChartGrid
from qesurf.errors import (ConvergenceError, DegeneracyError, DomainError, GeometryError,
                           InconsistentThetaError, ParameterError)
from qesurf.hitchin import (HiggsField, HitchinPair, MatrixConnection, ThetaField,
                            canonical_pair, curvature_certificate, curvature_of,
                            curvature_residual, flat_connection, gauge_transform, hitchin_pair,
                            hitchin_residual, imQ_residual, lax_commutator, lax_commutator_field,
                            pair_distance, projective_connection, reconstruct_H, theta_gauge,
                            theta_residual, theta_solve, theta_structure)
from qesurf.hyp import explicit_family
from qesurf.qee import QEParams, QEStructure, qee_residual

from conftest import flat, half_plane, hyperbolic

LAMS = (0.3, -1.2, 2.5)
M1 = QEParams(-1.0, 0.0)


def _noise_init(grid, amp=0.1):
    xh = (grid.X - grid.x_range[0]) / (grid.x_range[1] - grid.x_range[0])
    yh = (grid.Y - grid.y_range[0]) / (grid.y_range[1] - grid.y_range[0])
    return np.pi / 2 + amp * np.sin(np.pi * xh) * np.sin(np.pi * yh)


@pytest.fixture(scope="module")
def solved33():
    g = half_plane(33)
    return theta_solve(g, np.full(g.shape, np.pi / 2), _noise_init(g))


def _perturbed(s, eps=0.1):
    return QEStructure.conformal(s.grid, s.H, s.P * (1 + eps * np.sin(3 * s.grid.X)))


def test_flat_connection(flat65, hyp65):
    for s in (flat65, hyp65):
        assert curvature_residual(flat_connection(s)).sup < 1e-9
    g = flat65.grid
    triv = QEStructure.conformal(g, g.X**2 - g.Y**2, 0.0)
    V = flat_connection(triv)
    assert np.all(V.A_z[..., 1, 0] == 0) and curvature_residual(V).sup < 1e-9


def test_flat_connection_components(flat65):
    V = flat_connection(flat65)
    P = flat65.P
    assert np.allclose(V.A_z[..., 0, 0], -P / 2) and np.allclose(V.A_z[..., 0, 1], -np.conj(P))
    assert np.allclose(V.A_z[..., 1, 0], 0)


def test_curvature_of_examples():
    g = half_plane(65)
    zero = MatrixConnection(g, np.zeros(g.shape + (2, 2)), np.zeros(g.shape + (2, 2)))
    assert np.max(np.abs(curvature_of(zero))) == 0
    A = canonical_pair(g).A
    F = curvature_of(A)
    y = g.Y
    keep = g.interior(1)
    assert np.max(np.abs(F[..., 0, 0] + 1 / (4 * y**2))[keep]) < 1e-10
    assert np.max(np.abs(F[..., 1, 1] - 1 / (4 * y**2))[keep]) < 1e-10


def _sl2(g):
    a = 0.3 * np.sin(g.X + 2 * g.Y)
    f = 0.5 * np.cos(g.X * g.Y) + 0.2j * g.X
    gam = np.zeros(g.shape + (2, 2), dtype=complex)
    gam[..., 0, 0] = np.exp(a)
    gam[..., 0, 1] = f * np.exp(-a)
    gam[..., 1, 1] = np.exp(-a)
    return gam


def _unitary(g):
    phi = 0.4 * np.sin(g.X) * g.Y
    psi = 0.3 * g.X * g.Y
    chi = np.cos(g.X + g.Y)
    a = np.cos(phi) * np.exp(1j * psi)
    b = np.sin(phi) * np.exp(1j * chi)
    gam = np.empty(g.shape + (2, 2), dtype=complex)
    gam[..., 0, 0], gam[..., 0, 1] = a, -np.conj(b)
    gam[..., 1, 0], gam[..., 1, 1] = b, np.conj(a)
    return gam


def test_pure_gauge_is_flat():
    g = half_plane(65)
    z = np.zeros(g.shape + (2, 2))
    triv = HitchinPair(MatrixConnection(g, z, z), HiggsField(g, z))
    A = gauge_transform(triv, _sl2(g)).A
    assert np.max(np.abs(A.A_z)) > 0.1
    assert curvature_residual(A).sup < 1e-7


def test_traceless_and_unitary_invariants():
    g = half_plane(17)
    M = np.zeros(g.shape + (2, 2))
    M[..., 0, 0] = 1.0
    with pytest.raises(GeometryError):
        MatrixConnection(g, M, M)
    with pytest.raises(GeometryError):
        HiggsField(g, M)
    N = np.zeros(g.shape + (2, 2), dtype=complex)
    N[..., 0, 1] = 1.0
    with pytest.raises(GeometryError):
        MatrixConnection(g, N, N, unitary=True)


def test_hitchin_pair(flat65, hyp65):
    for s in (flat65, hyp65):
        p = hitchin_pair(s)
        assert hitchin_residual(p).sup < 1e-9
        Phi = p.Phi.Phi_z
        assert np.max(np.abs(Phi @ Phi)) == 0
    g = flat65.grid
    p = hitchin_pair(QEStructure.conformal(g, np.zeros(g.shape), 0.0))
    assert np.max(np.abs(p.Phi.Phi_z)) == 0
    assert np.max(np.abs(p.A.A_z[..., 0, 1])) == 0 and np.max(np.abs(p.A.A_z[..., 1, 0])) == 0


def test_canonical_pair():
    g = half_plane(65)
    r = hitchin_residual(canonical_pair(g))
    assert r["curvature"].sup < 1e-10 and r["holomorphic"].sup < 1e-10
    p = canonical_pair(g)
    doubled = HitchinPair(p.A, HiggsField(g, 2 * p.Phi.Phi_z))
    assert hitchin_residual(doubled)["curvature"].sup > 0.1
    with pytest.raises(DomainError):
        canonical_pair(ChartGrid((0, 1), (-1, 1), 9, 9))


def test_gauge_identity_and_canonical_to_flat(flat65):
    g = flat65.grid
    p = canonical_pair(g)
    eye = np.broadcast_to(np.eye(2), g.shape + (2, 2))
    assert pair_distance(gauge_transform(p, eye), p) == 0
    t = ThetaField(g, np.full(g.shape, np.pi / 2))
    assert pair_distance(gauge_transform(p, theta_gauge(t)), hitchin_pair(flat65)) < 1e-8


def test_gauge_to_solved_theta(solved33):
    g = solved33.grid
    s = theta_structure(solved33)
    q = gauge_transform(canonical_pair(g), theta_gauge(solved33))
    assert pair_distance(q, hitchin_pair(s), depth=2) < 1e-7


def test_scaling_gauge_maps_projective_to_flat(hyp65):
    g = hyp65.grid
    Uz, Uzb = projective_connection(hyp65)
    gam = np.exp(hyp65.H / 2)[..., None, None] * np.eye(2)
    # γ U γ⁻¹ − dγ γ⁻¹ = U − ½ dH for a scalar γ
    from qesurf.chart import Calculus
    cal = Calculus(g)
    Vz = Uz - 0.5 * cal.dz(hyp65.H)[..., None, None] * np.eye(2)
    Vzb = Uzb - 0.5 * cal.dzb(hyp65.H)[..., None, None] * np.eye(2)
    V = flat_connection(hyp65)
    assert np.max(np.abs(Vz - V.A_z)) < 1e-12 and np.max(np.abs(Vzb - V.A_zbar)) < 1e-12
    assert gam.shape == Uz.shape


def test_gauge_invariance_of_residuals(flat65):
    g = flat65.grid
    for p in (canonical_pair(g), hitchin_pair(flat65)):
        before = hitchin_residual(p)
        after = hitchin_residual(gauge_transform(p, _unitary(g)))
        assert after.sup < 10 * max(before.sup, 1e-9)


def test_lax(flat65, hyp65):
    for s in (flat65, hyp65):
        assert lax_commutator(s, LAMS).sup < 1e-9
    assert lax_commutator(_perturbed(flat65), LAMS).sup > 1e-3
    g = flat65.grid
    assert lax_commutator(QEStructure.conformal(g, np.zeros(g.shape), 0.0), LAMS).sup < 1e-10
    with pytest.raises(ParameterError):
        lax_commutator(flat65, (0.3, 0.3, 1.0))


def test_lax_polynomial_in_spectral_parameter(flat65):
    s = _perturbed(flat65)
    ls = (0.0, 1.0, 2.0)
    F = [lax_commutator_field(s, l) for l in ls]
    l4 = 3.7
    pred = sum(F[k] * np.prod([(l4 - ls[j]) / (ls[k] - ls[j]) for j in range(3) if j != k])
               for k in range(3))
    actual = lax_commutator_field(s, l4)
    assert np.max(np.abs(actual - pred)) < 1e-10 * max(1.0, np.max(np.abs(actual)))


def test_equivalence_chain(flat65, hyp65, solved33):
    tol = 1e-7
    good = [flat65, hyp65, theta_structure(solved33)]
    bad = [_perturbed(s, 0.05) for s in good]

    def certs(s):
        return [qee_residual(s, M1, collar=1).sup, curvature_residual(flat_connection(s)).sup,
                lax_commutator(s, LAMS).sup, hitchin_residual(hitchin_pair(s)).sup]

    for s in good:
        assert all(c < tol for c in certs(s))
    for s in bad:
        assert all(c > 100 * tol for c in certs(s))


def test_theta_residual_constants():
    g = half_plane(33)
    for v, exp in ((np.pi / 2, 0.0), (-np.pi / 2, 0.0), (0.0, 1.0)):
        r = theta_residual(ThetaField(g, np.full(g.shape, v)))
        assert abs(r.sup - exp) < 1e-12
    with pytest.raises(DomainError):
        theta_residual(ThetaField(ChartGrid((0, 1), (0, 1), 9, 9), np.zeros((9, 9))))
    with pytest.raises(GeometryError):
        ThetaField(g, np.full(g.shape, 1j))


def test_theta_solve_noise(solved33):
    assert solved33.meta["iterations"] <= 10
    assert theta_residual(solved33).sup < 1e-10
    assert np.max(np.abs(solved33.Theta - np.pi / 2)) < 1e-8
    assert qee_residual(theta_structure(solved33), M1).sup < 1e-8


def test_theta_solve_fixed_point():
    g = half_plane(33)
    t = theta_solve(g, np.full(g.shape, -np.pi / 2), np.full(g.shape, -np.pi / 2))
    assert t.meta["iterations"] <= 1


def test_theta_solve_profile():
    g = half_plane(33)
    xh = (g.X - g.x_range[0]) / (g.x_range[1] - g.x_range[0])
    prof = np.pi / 2 + 0.05 * xh
    t = theta_solve(g, prof, prof)
    assert theta_residual(t).sup < 1e-9
    _, defect = reconstruct_H(t)
    assert defect < 1e-4
    # Dirichlet corners are incompatible with the equation: skip a collar
    assert qee_residual(theta_structure(t), M1).sup > 1e-6
    assert qee_residual(theta_structure(t), M1, collar=2).sup < 1e-6


def test_theta_solve_nonconvergence():
    g = half_plane(33)
    with pytest.raises(ConvergenceError) as exc:
        theta_solve(g, np.full(g.shape, np.pi / 2), _noise_init(g, 0.3), max_iter=1)
    assert len(exc.value.trace) >= 1


def test_reconstruct_constant_theta():
    g = half_plane(33)
    H, d = reconstruct_H(ThetaField(g, np.full(g.shape, np.pi / 2)), H0=0.2)
    assert np.max(np.abs(H.real - 0.2)) < 1e-12 and d < 1e-12
    H, _ = reconstruct_H(ThetaField(g, np.full(g.shape, -np.pi / 2)), H0=0.2)
    assert np.max(np.abs(H.real - (0.2 - 2 * np.log(g.Y)))) < 1e-10
    s = theta_structure(ThetaField(g, np.full(g.shape, np.pi / 2)))
    f = flat(g)
    assert np.allclose(s.P, f.P) and np.allclose(s.H, f.H)
    s = theta_structure(ThetaField(g, np.full(g.shape, -np.pi / 2)))
    assert np.max(np.abs(s.H - hyperbolic(g).H)) < 1e-10


def test_reconstruct_rejects_non_solution():
    g = half_plane(33)
    with pytest.raises(InconsistentThetaError):
        reconstruct_H(ThetaField(g, 5 * g.X * g.Y))


def test_curvature_certificate(flat65, hyp65):
    for s in (flat65, hyp65):
        assert curvature_certificate(s).sup < 1e-8
    assert curvature_certificate(explicit_family(0.5)).sup < 1e-6
    g = flat65.grid
    with pytest.raises(DegeneracyError):
        curvature_certificate(QEStructure.conformal(g, flat65.H, g.X - 0.5))


def test_imQ(flat65, solved33):
    assert imQ_residual(flat65).sup < 1e-8
    assert imQ_residual(theta_structure(solved33)).sup < 1e-7
    g = flat65.grid
    assert imQ_residual(QEStructure.conformal(g, np.sin(g.X), 0.7)).sup < 1e-14
