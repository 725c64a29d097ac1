"""Gauge-theoretic form of the surface equations at ``(m, λ) = (−1, 0)``.

In the conformal gauge ``g = 2e^H dz dz̄``, ``X♭ = P dz + P̄ dz̄`` the
equations are equivalent to flatness of an ``sl(2)`` connection, to the
commutativity of a Lax pair and to Hitchin's self-duality equations. This
module builds those objects, the Θ-equation obtained from the constant
Higgs-field gauge, a Newton solver for it and the reconstruction of ``H``.

Matrix fields are complex arrays of shape ``(ny, nx, 2, 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .chart import (Calculus, ChartGrid, OneForm, ScalarField, cumulative_integrate,
                    nonvanishing, stencil_table)
from .errors import (BranchError, ConvergenceError, DomainError, GeometryError,
                     InconsistentThetaError, ParameterError)
from .qee import QEStructure
from .report import ResidualReport, combine, field_report

TRACE_TOL = 1e-12


def _matrix_field(grid: ChartGrid, a) -> np.ndarray:
    a = np.asarray(a)
    return np.broadcast_to(a, grid.shape + (2, 2)).astype(grid.cdtype)


def _entrywise(op: Callable, M: np.ndarray) -> np.ndarray:
    out = np.empty_like(M)
    for a in range(2):
        for b in range(2):
            out[..., a, b] = op(M[..., a, b])
    return out


def _dagger(M: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(M, -1, -2))


def _comm(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def _diag(a, b) -> np.ndarray:
    a, b = np.broadcast_arrays(a, b)
    M = np.zeros(a.shape + (2, 2), dtype=np.result_type(a, b, np.complex128))
    M[..., 0, 0] = a
    M[..., 1, 1] = b
    return M


def _upper(a) -> np.ndarray:
    a = np.asarray(a)
    M = np.zeros(a.shape + (2, 2), dtype=np.result_type(a, np.complex128))
    M[..., 0, 1] = a
    return M


def _lower(a) -> np.ndarray:
    a = np.asarray(a)
    M = np.zeros(a.shape + (2, 2), dtype=np.result_type(a, np.complex128))
    M[..., 1, 0] = a
    return M


def _matrix_components(M: np.ndarray):
    return [M[..., a, b] for a in range(2) for b in range(2)]


@dataclass(frozen=True)
class MatrixConnection:
    """``A = A_z dz + A_z̄ dz̄`` with traceless ``2×2`` coefficients.

    Parameters
    ----------
    grid : ChartGrid
    A_z, A_zbar : ndarray, shape (ny, nx, 2, 2)
    unitary : bool
        Require ``A_z̄ = −A_z†`` (unitary gauge).
    """

    grid: ChartGrid
    A_z: np.ndarray
    A_zbar: np.ndarray
    unitary: bool = False

    def __post_init__(self):
        object.__setattr__(self, "A_z", _matrix_field(self.grid, self.A_z))
        object.__setattr__(self, "A_zbar", _matrix_field(self.grid, self.A_zbar))
        ok = self.grid.valid
        scale = max(1.0, float(np.max(np.abs(self.A_z[ok]))), float(np.max(np.abs(self.A_zbar[ok]))))
        for M in (self.A_z, self.A_zbar):
            tr = np.abs(np.trace(M, axis1=-2, axis2=-1))[ok]
            if tr.size and tr.max() > TRACE_TOL * scale:
                raise GeometryError("connection coefficients must be traceless")
        if self.unitary:
            dev = np.abs(self.A_zbar + _dagger(self.A_z))[ok]
            if dev.size and dev.max() > TRACE_TOL * scale:
                raise GeometryError("unitary gauge requires A_zbar = −A_z†")


@dataclass(frozen=True)
class HiggsField:
    """``Φ = Φ_z dz`` with traceless coefficient."""

    grid: ChartGrid
    Phi_z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Phi_z", _matrix_field(self.grid, self.Phi_z))
        ok = self.grid.valid
        scale = max(1.0, float(np.max(np.abs(self.Phi_z[ok]))))
        tr = np.abs(np.trace(self.Phi_z, axis1=-2, axis2=-1))[ok]
        if tr.size and tr.max() > TRACE_TOL * scale:
            raise GeometryError("Higgs field must be traceless")


@dataclass(frozen=True)
class HitchinPair:
    """Unitary connection with Higgs field, optionally tagged with ``H``."""

    A: MatrixConnection
    Phi: HiggsField
    H: Optional[np.ndarray] = None

    @property
    def grid(self) -> ChartGrid:
        return self.A.grid


@dataclass(frozen=True)
class ThetaField:
    """Real angle ``Θ`` on an upper half-plane chart, with solver metadata."""

    grid: ChartGrid
    Theta: np.ndarray
    meta: Dict[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        T = np.asarray(self.Theta)
        if np.iscomplexobj(T) and np.max(np.abs(T.imag)) > 1e-12:
            raise GeometryError("Θ must be real")
        object.__setattr__(self, "Theta", self.grid.real_array(T))


def _require_hitchin_case(s: QEStructure):
    if s.gauge != "conformal":
        raise GeometryError("this construction needs the conformal gauge")


def flat_connection(s: QEStructure) -> MatrixConnection:
    """The traceless connection whose flatness is equivalent to the equations.

    ``V_z = [[½(∂zH − P), −P̄], [0, ½(P − ∂zH)]]`` and
    ``V_z̄ = [[½(P̄ − ∂z̄H), 0], [−P, ½(∂z̄H − P̄)]]``.
    """
    _require_hitchin_case(s)
    cal = Calculus(s.grid)
    P, Pb = s.P, np.conj(s.P)
    Hz, Hzb = cal.dz(s.H), cal.dzb(s.H)
    a = 0.5 * (Hz - P)
    b = 0.5 * (Pb - Hzb)
    return MatrixConnection(s.grid, _diag(a, -a) + _upper(-Pb), _diag(b, -b) + _lower(-P))


def projective_connection(s: QEStructure) -> MatrixConnection:
    """The connection before the scaling gauge ``γ = e^{H/2} Id``.

    ``U_z = [[∂zH − ½P, −P̄], [0, ½P]]``, ``U_z̄ = [[½P̄, 0], [−P, ∂z̄H − ½P̄]]``.
    It has trace ``d H`` so it is returned as raw coefficient arrays.
    """
    _require_hitchin_case(s)
    cal = Calculus(s.grid)
    P, Pb = s.P, np.conj(s.P)
    Hz, Hzb = cal.dz(s.H), cal.dzb(s.H)
    Uz = _diag(Hz - 0.5 * P, 0.5 * P) + _upper(-Pb)
    Uzb = _diag(0.5 * Pb, Hzb - 0.5 * Pb) + _lower(-P)
    return Uz, Uzb


def curvature_of(A: MatrixConnection) -> np.ndarray:
    """``F = ∂zA_z̄ − ∂z̄A_z + [A_z, A_z̄]``, the ``dz∧dz̄`` coefficient."""
    cal = Calculus(A.grid)
    return (_entrywise(cal.dz, A.A_zbar) - _entrywise(cal.dzb, A.A_z)
            + _comm(A.A_z, A.A_zbar))


def curvature_residual(A: MatrixConnection) -> ResidualReport:
    """Sup-norm of the curvature over the interior."""
    return field_report("curvature", A.grid, _matrix_components(curvature_of(A)), 1)


def hitchin_pair(s: QEStructure) -> HitchinPair:
    """``A_z = diag(½(∂zH − P), −½(∂zH − P))``, ``A_z̄ = −A_z†``, ``Φ_z = [[0, P̄], [0, 0]]``."""
    _require_hitchin_case(s)
    cal = Calculus(s.grid)
    a = 0.5 * (cal.dz(s.H) - s.P)
    Az = _diag(a, -a)
    A = MatrixConnection(s.grid, Az, -_dagger(Az), unitary=True)
    return HitchinPair(A, HiggsField(s.grid, _upper(np.conj(s.P))), s.H)


def canonical_pair(grid: ChartGrid) -> HitchinPair:
    """The pair ``A = diag(i, −i) dx/(2y)``, ``Φ = [[0, 1/(2y)], [0, 0]] dz`` on ``y > 0``."""
    y = grid.Y
    if not np.all(y[grid.valid] > 0):
        raise DomainError("the canonical pair lives on y > 0")
    a = 1j / (4 * y)
    Az = _diag(a, -a)
    return HitchinPair(MatrixConnection(grid, Az, Az, unitary=True),
                       HiggsField(grid, _upper(1 / (2 * y))))


def hitchin_residual(p: HitchinPair) -> ResidualReport:
    """The two self-duality defects.

    Parts ``curvature`` (``F + [Φ_z, Φ_z†]``) and ``holomorphic``
    (``∂z̄Φ_z + [A_z̄, Φ_z]``).
    """
    grid = p.grid
    cal = Calculus(grid)
    Phi = p.Phi.Phi_z
    r1 = curvature_of(p.A) + _comm(Phi, _dagger(Phi))
    r2 = _entrywise(cal.dzb, Phi) + _comm(p.A.A_zbar, Phi)
    return combine("hitchin", {
        "curvature": field_report("hitchin.curvature", grid, _matrix_components(r1), 1),
        "holomorphic": field_report("hitchin.holomorphic", grid, _matrix_components(r2), 1),
    })


def _inverse(M: np.ndarray) -> np.ndarray:
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    if np.min(np.abs(det)) < 1e-14:
        raise GeometryError("gauge transformation is singular")
    inv = np.empty_like(M)
    inv[..., 0, 0] = M[..., 1, 1]
    inv[..., 1, 1] = M[..., 0, 0]
    inv[..., 0, 1] = -M[..., 0, 1]
    inv[..., 1, 0] = -M[..., 1, 0]
    return inv / det[..., None, None]


def _traceless(M: np.ndarray) -> np.ndarray:
    tr = 0.5 * np.trace(M, axis1=-2, axis2=-1)
    return M - tr[..., None, None] * np.eye(2)


def gauge_transform(p: HitchinPair, gamma, dgamma=None) -> HitchinPair:
    """Apply ``A ↦ γAγ⁻¹ − dγ γ⁻¹`` and ``Φ ↦ γΦγ⁻¹``.

    Parameters
    ----------
    p : HitchinPair
    gamma : ndarray, shape (ny, nx, 2, 2)
    dgamma : tuple of ndarray, optional
        Exact ``(∂zγ, ∂z̄γ)``; computed with stencils otherwise.
    """
    grid = p.grid
    g = _matrix_field(grid, gamma)
    gi = _inverse(g)
    if dgamma is None:
        cal = Calculus(grid)
        gz, gzb = _entrywise(cal.dz, g), _entrywise(cal.dzb, g)
    else:
        gz, gzb = (_matrix_field(grid, d) for d in dgamma)
    Az = g @ p.A.A_z @ gi - gz @ gi
    Azb = g @ p.A.A_zbar @ gi - gzb @ gi
    # tr(dγ γ⁻¹) = d log det γ; drop the stencil error of a unimodular γ
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    if np.allclose(det, 1.0, atol=1e-12):
        Az, Azb = _traceless(Az), _traceless(Azb)
    unitary = bool(np.allclose(g @ _dagger(g), np.eye(2), atol=1e-12))
    return HitchinPair(MatrixConnection(grid, Az, Azb, unitary=p.A.unitary and unitary),
                       HiggsField(grid, g @ p.Phi.Phi_z @ gi), p.H)


def theta_gauge(t: ThetaField) -> np.ndarray:
    """``γ = diag(e^{iΘ/2}, e^{−iΘ/2})``."""
    h = np.exp(0.5j * t.Theta)
    return _diag(h, np.conj(h))


def pair_distance(p: HitchinPair, q: HitchinPair, depth: int = 1) -> float:
    """Sup-norm distance between the coefficients of two pairs."""
    grid = p.grid
    diff = (_matrix_components(p.A.A_z - q.A.A_z) + _matrix_components(p.A.A_zbar - q.A.A_zbar)
            + _matrix_components(p.Phi.Phi_z - q.Phi.Phi_z))
    return field_report("pair.distance", grid, diff, depth).sup


# Lax pair --------------------------------------------------------------


def lax_matrices(s: QEStructure, lam: complex):
    """Potentials ``a(λ)``, ``b(λ)`` of ``L = ∂z̄ + a`` and ``M = λ∂z + b``."""
    _require_hitchin_case(s)
    cal = Calculus(s.grid)
    P, Pb = s.P, np.conj(s.P)
    u = 0.5 * (Pb - cal.dzb(s.H))
    v = 0.5 * (cal.dz(s.H) - P)
    a = _diag(u, -u) + lam * _lower(P)
    b = _upper(Pb) + lam * _diag(v, -v)
    return a, b


def _sections(grid: ChartGrid):
    z = grid.z
    one = np.ones(grid.shape, dtype=grid.cdtype)
    zero = np.zeros(grid.shape, dtype=grid.cdtype)
    return [np.stack([one, one], axis=-1), np.stack([z, zero], axis=-1),
            np.stack([zero, np.conj(z)], axis=-1)]


def _apply_vec(op, psi):
    return np.stack([op(psi[..., 0]), op(psi[..., 1])], axis=-1)


def lax_commutator_field(s: QEStructure, lam: complex) -> np.ndarray:
    """``[L, M]ψ`` on the three test sections, shape ``(3, ny, nx, 2)``."""
    cal = Calculus(s.grid)
    a, b = lax_matrices(s, lam)

    def L(psi):
        return _apply_vec(cal.dzb, psi) + np.einsum("...ij,...j->...i", a, psi)

    def M(psi):
        return lam * _apply_vec(cal.dz, psi) + np.einsum("...ij,...j->...i", b, psi)

    return np.stack([L(M(psi)) - M(L(psi)) for psi in _sections(s.grid)])


def lax_commutator(s: QEStructure, lambda_samples: Sequence[complex]) -> ResidualReport:
    """Sup over spectral samples of ``[L, M]`` applied to test sections.

    ``[L, M]`` is quadratic in ``λ``, so at least three distinct samples are
    needed to certify it for every ``λ``.

    Raises
    ------
    ParameterError
        If fewer than three distinct samples are given.
    """
    lams = list(dict.fromkeys(complex(v) for v in lambda_samples))
    if len(lams) < 3:
        raise ParameterError("need at least three distinct spectral samples")
    parts = {}
    for k, lam in enumerate(lams):
        F = lax_commutator_field(s, lam)
        comps = [F[i, ..., c] for i in range(F.shape[0]) for c in range(2)]
        parts[f"lambda{k}"] = field_report(f"lax[{lam}]", s.grid, comps, 2,
                                           meta={"lambda": lam})
    return combine("lax", parts, {"samples": lams})


# Θ-equation ------------------------------------------------------------


def _check_upper(grid: ChartGrid):
    if not np.all(grid.Y[grid.valid] > 0):
        raise DomainError("the Θ-equation needs y > 0 on every valid node")


def theta_operator(grid: ChartGrid, T: np.ndarray) -> np.ndarray:
    """Pointwise ``y²ΔΘ + y(sinΘ ∂yΘ + cosΘ ∂xΘ) + cosΘ``."""
    cal = Calculus(grid)
    y = grid.Y
    T = grid.real_array(T)
    return (y**2 * cal.lap(T).real + y * (np.sin(T) * cal.dy(T).real + np.cos(T) * cal.dx(T).real)
            + np.cos(T))


def theta_residual(t: ThetaField) -> ResidualReport:
    """Sup-norm of the Θ-equation over the interior."""
    _check_upper(t.grid)
    return field_report("theta", t.grid, theta_operator(t.grid, t.Theta), 1)


def _diff_matrix(n: int, h, order: int, deriv: int) -> sp.csr_matrix:
    weights, starts = stencil_table(n, deriv, order)
    weights = np.asarray(weights, dtype=float) / float(h) ** deriv
    w = weights.shape[1]
    rows = np.repeat(np.arange(n), w)
    cols = (starts[:, None] + np.arange(w)[None, :]).ravel()
    return sp.csr_matrix((weights.ravel(), (rows, cols)), shape=(n, n))


def _theta_jacobian(grid: ChartGrid, T: np.ndarray, ops) -> sp.csr_matrix:
    Dx, Dy, Lap = ops
    cal = Calculus(grid)
    y = grid.Y.astype(float).ravel()
    Tf = T.astype(float)
    Tx, Ty = cal.dx(T).real.astype(float).ravel(), cal.dy(T).real.astype(float).ravel()
    s, c = np.sin(Tf).ravel(), np.cos(Tf).ravel()
    J = (sp.diags(y**2) @ Lap + sp.diags(y * s) @ Dy + sp.diags(y * c) @ Dx
         + sp.diags(y * (c * Ty - s * Tx) - s))
    return J.tocsr()


def _edge_mask(grid: ChartGrid) -> np.ndarray:
    edge = np.zeros(grid.shape, dtype=bool)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
    return edge


def theta_solve(grid: ChartGrid, boundary, init, max_iter: int = 50, tol: float = 1e-10,
                max_halvings: int = 8) -> ThetaField:
    """Damped Newton iteration for the Θ-equation with Dirichlet data.

    Parameters
    ----------
    grid : ChartGrid
        Unmasked chart with ``y > 0``.
    boundary : ndarray or ThetaField
        Values whose edge nodes are imposed.
    init : ndarray or ThetaField
        Initial iterate; its edge values are replaced by the boundary data.
    max_iter : int
    tol : float
        Target sup-norm of the discrete equation on the non-edge nodes.
    max_halvings : int
        Backtracking steps on the residual 2-norm.

    Returns
    -------
    ThetaField
        ``meta`` holds ``iterations`` and the residual ``trace``.

    Raises
    ------
    ConvergenceError
        If the tolerance is not reached within ``max_iter`` steps.
    """
    _check_upper(grid)
    if grid.mask is not None and not grid.mask.all():
        raise DomainError("theta_solve needs an unmasked chart")
    bnd = boundary.Theta if isinstance(boundary, ThetaField) else grid.real_array(boundary)
    T = (init.Theta if isinstance(init, ThetaField) else grid.real_array(init)).copy()
    edge = _edge_mask(grid)
    T[edge] = bnd[edge]
    nx, ny = grid.nx, grid.ny
    Ix, Iy = sp.identity(nx), sp.identity(ny)
    Dx = sp.kron(Iy, _diff_matrix(nx, grid.hx, grid.order, 1))
    Dy = sp.kron(_diff_matrix(ny, grid.hy, grid.order, 1), Ix)
    Lap = (sp.kron(Iy, _diff_matrix(nx, grid.hx, grid.order, 2))
           + sp.kron(_diff_matrix(ny, grid.hy, grid.order, 2), Ix))
    ops = (Dx.tocsr(), Dy.tocsr(), Lap.tocsr())
    edge_idx = np.flatnonzero(edge.ravel())
    keep = ~edge.ravel()
    # rows of the edge nodes become identity rows
    R_keep = sp.diags(keep.astype(float))
    R_edge = sp.csr_matrix((np.ones(edge_idx.size), (edge_idx, edge_idx)), shape=(nx * ny,) * 2)

    def F(T):
        r = theta_operator(grid, T)
        r[edge] = 0.0
        return r

    r = F(T)
    trace = [float(np.max(np.abs(r)))]
    it = 0
    while trace[-1] > tol:
        if it >= max_iter:
            raise ConvergenceError(f"Θ-solver stalled at residual {trace[-1]:.3e}", trace)
        J = R_keep @ _theta_jacobian(grid, T, ops) + R_edge
        step = spla.spsolve(J.tocsc(), -r.astype(float).ravel()).reshape(grid.shape)
        norm0 = float(np.linalg.norm(r))
        t = 1.0
        for _ in range(max_halvings + 1):
            Tn = T + grid.real_array(t * step)
            rn = F(Tn)
            if np.isfinite(rn).all() and (float(np.linalg.norm(rn)) < norm0
                                          or float(np.max(np.abs(rn))) <= tol):
                break
            t *= 0.5
        else:
            raise ConvergenceError("line search failed to reduce the Θ residual", trace)
        T, r = Tn, rn
        it += 1
        trace.append(float(np.max(np.abs(r))))
    return ThetaField(grid, T, {"iterations": it, "trace": trace, "tol": tol,
                                "boundary": "dirichlet"})


def theta_P(t: ThetaField) -> np.ndarray:
    """``P = e^{−iΘ}/(2y)``."""
    return np.exp(-1j * t.Theta) / (2 * t.grid.Y)


def reconstruct_H(t: ThetaField, base_point=(0, 0), H0: float = -np.log(2.0),
                  max_defect: float = 1e-4):
    """Integrate ``dH`` determined by ``Θ``.

    ``∂xH = −∂yΘ + cosΘ/y`` and ``∂yH = ∂xΘ + sinΘ/y − 1/y``.

    Parameters
    ----------
    t : ThetaField
    base_point : tuple of int
        Anchor node ``(j, i)`` where ``H = H0``.
    H0 : float
    max_defect : float
        Allowed mixed-partial defect of the integrated 1-form.

    Returns
    -------
    H : ScalarField
    defect : float
        Sup of ``∂y(∂xH) − ∂x(∂yH)`` over the interior.

    Raises
    ------
    InconsistentThetaError
        If the defect exceeds ``max_defect``.
    """
    grid = t.grid
    _check_upper(grid)
    cal = Calculus(grid)
    T, y = t.Theta, grid.Y
    Hx = -cal.dy(T).real + np.cos(T) / y
    Hy = cal.dx(T).real + np.sin(T) / y - 1 / y
    form = OneForm(grid, Hx, Hy)
    defect = float(np.max(np.abs(form.exterior_derivative()[grid.interior(2)])))
    if defect > max_defect:
        raise InconsistentThetaError(f"dH is not closed (defect {defect:.3e})")
    H = cumulative_integrate(form, tuple(base_point), H0).real
    return ScalarField(grid, H), defect


def theta_structure(t: ThetaField, base_point=(0, 0), H0: float = -np.log(2.0)) -> QEStructure:
    """Conformal structure ``(H, P = e^{−iΘ}/(2y))`` rebuilt from ``Θ``."""
    H, _ = reconstruct_H(t, base_point, H0)
    return QEStructure.conformal(t.grid, H.real, theta_P(t))


# certificates ----------------------------------------------------------


def curvature_certificate(s: QEStructure) -> ResidualReport:
    """``sup |R_h + 2|`` for ``h = |X|² g``.

    Raises
    ------
    DegeneracyError
        If ``X`` vanishes on the chart.
    """
    from .chart import Geometry

    X2 = s.metric.norm2(s.X).real
    nonvanishing(X2, s.grid, "|X|²")
    h = s.metric.scaled(X2)
    geo = Geometry(h)
    return field_report("curvature_certificate", s.grid, geo.R + 2.0, geo.depth_R,
                        meta={"gauge": h.gauge})


def continuous_log(P: np.ndarray, grid: ChartGrid, base=None) -> np.ndarray:
    """Branch of ``log P`` obtained by integrating ``dP/P`` from a base node."""
    nonvanishing(P, grid, "P")
    cal = Calculus(grid)
    j0, i0 = base if base is not None else (grid.ny // 2, grid.nx // 2)
    form = OneForm(grid, cal.dx(P) / P, cal.dy(P) / P)
    Q = cumulative_integrate(form, (j0, i0), np.log(complex(P[j0, i0])))
    ok = grid.valid
    rel = np.abs(np.exp(Q) - P)[ok] / np.abs(P[ok])
    if rel.max() > 1e-6:
        raise BranchError("integrated logarithm drifted from P (branch cut or aliasing)")
    return Q


def imQ_residual(s: QEStructure) -> ResidualReport:
    """Defect of ``∂z∂z̄(Q − Q̄) = e^{Q̄}∂zQ̄ − e^{Q}∂z̄Q`` for ``Q = log P``."""
    _require_hitchin_case(s)
    grid = s.grid
    cal = Calculus(grid)
    P = s.P
    Q = continuous_log(P, grid)
    Qb = np.conj(Q)
    lhs = cal.dzdzb(Q - Qb)
    rhs = np.exp(Qb) * cal.dz(Qb) - np.exp(Q) * cal.dzb(Q)
    return field_report("imQ", grid, lhs - rhs, 1)
