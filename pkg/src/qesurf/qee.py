"""Residual engines for quasi-Einstein structures on surfaces.

A quasi-Einstein structure is a metric ``g`` with a vector field ``X``
satisfying ``Ric = (1/m) X♭⊗X♭ − ½ L_X g + λ g``. The functions here
evaluate that tensor equation, its prolongation, the horizon form of
the equations, the Killing-vector identity and the zero-index data.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import RectBivariateSpline

from .chart import (Calculus, ChartGrid, Geometry, Metric2D, OneForm, ScalarField,
                    cumulative_integrate, stencil_table)
from .errors import (ContractError, DegeneracyError, DomainError, GeometryError,
                     ParameterError, AccuracyError)
from .report import ResidualReport, combine, field_report

GRADIENT_TOL = 1e-8


@dataclass(frozen=True)
class QEParams:
    """Constants of the quasi-Einstein equations.

    Parameters
    ----------
    m : float
        Nonzero coupling.
    lam : float
        Cosmological constant ``λ``.
    n : int
        Dimension (2 or 3).
    """

    m: float
    lam: float = 0.0
    n: int = 2

    def __post_init__(self):
        if self.m == 0:
            raise ParameterError("m must be nonzero")
        if self.n not in (2, 3):
            raise ParameterError("only dimensions 2 and 3 are handled")


@dataclass(frozen=True)
class GEHEParams:
    """Constant ``c`` and function ``Λ`` of the horizon equations."""

    c: float
    Lambda: np.ndarray

    def __post_init__(self):
        if self.c == 0:
            raise ParameterError("c must be nonzero")


@dataclass(frozen=True)
class QEStructure:
    """Metric and vector field on a chart in one of three gauges.

    Use the constructors :meth:`conformal`, :meth:`diagonal` and
    :meth:`general` rather than the raw fields.

    Attributes
    ----------
    gauge : {"conformal", "diagonal", "general"}
    grid : ChartGrid
    metric : Metric2D
    X : OneForm
        The 1-form ``X♭``.
    H, P : ndarray, optional
        Conformal data ``g = 2e^H dz dz̄``, ``X♭ = P dz + P̄ dz̄``.
    U : ndarray, optional
        Potential of the diagonal gauge.
    """

    gauge: str
    grid: ChartGrid
    metric: Metric2D
    X: OneForm
    H: Optional[np.ndarray] = None
    P: Optional[np.ndarray] = None
    U: Optional[np.ndarray] = None

    @classmethod
    def conformal(cls, grid: ChartGrid, H, P) -> "QEStructure":
        H = np.asarray(H)
        if np.iscomplexobj(H) and np.max(np.abs(H.imag)) > 1e-12 * max(1.0, np.max(np.abs(H))):
            raise GeometryError("conformal potential H must be real")
        H = grid.real_array(H)
        P = grid.complex_array(P)
        return cls("conformal", grid, Metric2D.conformal(grid, H), OneForm.from_complex(grid, P),
                   H=H, P=P)

    @classmethod
    def diagonal(cls, grid: ChartGrid, U, m: float) -> "QEStructure":
        """``g = U_y e^{−2U/m} dx² + U_y dy²`` with ``X♭ = U_y dy``."""
        U = grid.real_array(U)
        Uy = Calculus(grid).dy(U).real
        if not np.all(Uy[grid.valid] > 0):
            raise GeometryError("diagonal gauge needs ∂yU > 0")
        metric = Metric2D.diagonal(grid, Uy * np.exp(-2.0 * U / m), Uy)
        return cls("diagonal", grid, metric, OneForm(grid, 0.0, Uy), U=U)

    @classmethod
    def general(cls, metric: Metric2D, X: OneForm) -> "QEStructure":
        return cls("general", metric.grid, metric, X)

    def with_X(self, X: OneForm) -> "QEStructure":
        """Same metric, different vector field (general-gauge copy if needed)."""
        if self.gauge == "conformal":
            return QEStructure.conformal(self.grid, self.H, X.to_complex())
        return QEStructure("general", self.grid, self.metric, X)

    def geometry(self) -> Geometry:
        return Geometry(self.metric)


def _tensor_parts(T):
    return [T[0][0], np.sqrt(2.0) * T[0][1], T[1][1]]


def _sym(T):
    return [[T[0][0], 0.5 * (T[0][1] + T[1][0])], [0.5 * (T[0][1] + T[1][0]), T[1][1]]]


def qee_tensor(s: QEStructure, p: QEParams, geo: Optional[Geometry] = None):
    """Pointwise components of ``Ric − (1/m)X♭X♭ + ½L_X g − λg`` and the stencil depth."""
    geo = geo or s.geometry()
    X = (s.X.ax, s.X.ay)
    nab = geo.nabla1(X)
    S = _sym(nab)
    T = [[0.5 * geo.R * geo.g(i, j) - X[i] * X[j] / p.m + S[i][j] - p.lam * geo.g(i, j)
          for j in range(2)] for i in range(2)]
    return T, max(geo.depth_R, geo.depth_gamma)


def conformal_scalar_residuals(s: QEStructure):
    """The three scalar equations of the conformal gauge at ``(m, λ) = (−1, 0)``."""
    cal = Calculus(s.grid)
    H, P = s.H, s.P
    Pb = np.conj(P)
    zz = cal.dz(P) - P * cal.dz(H) + P**2
    zzb = cal.dzdzb(H) - 0.5 * (cal.dz(Pb) + cal.dzb(P)) - np.abs(P) ** 2
    zbzb = cal.dzb(Pb) - Pb * cal.dzb(H) + Pb**2
    return zz, zzb, zbzb


def qee_residual(s: QEStructure, p: QEParams, collar: int = 0) -> ResidualReport:
    """Residual of the quasi-Einstein equations on a surface.

    Parameters
    ----------
    s : QEStructure
    p : QEParams
        ``p.n`` must be 2.
    collar : int
        Extra stencil half-widths excluded at the chart edge, for data with
        edge singularities such as Dirichlet corners.

    Returns
    -------
    ResidualReport
        ``parts["tensor"]`` holds the tensor defect; for the conformal gauge
        with ``(m, λ) = (−1, 0)`` the parts ``zz``, ``zzbar`` and
        ``zbarzbar`` hold the scalar equations as well.
    """
    if p.n != 2:
        raise ParameterError("qee_residual handles surfaces only")
    T, depth = qee_tensor(s, p)
    parts = {"tensor": field_report("qee.tensor", s.grid, _tensor_parts(T), depth + collar)}
    if s.gauge == "conformal" and p.m == -1 and p.lam == 0:
        zz, zzb, zbzb = conformal_scalar_residuals(s)
        parts["zz"] = field_report("qee.zz", s.grid, zz, 1 + collar)
        parts["zzbar"] = field_report("qee.zzbar", s.grid, zzb, 1 + collar)
        parts["zbarzbar"] = field_report("qee.zbarzbar", s.grid, zbzb, 1 + collar)
    meta = {"m": p.m, "lambda": p.lam, "gauge": s.gauge}
    if collar:
        meta["collar"] = collar
    return combine("qee", parts, meta)


def gehe_tensor(s: QEStructure, gp: GEHEParams, geo: Optional[Geometry] = None):
    geo = geo or s.geometry()
    X = (s.X.ax, s.X.ay)
    S = _sym(geo.nabla1(X))
    Lam = s.grid.real_array(gp.Lambda)
    return [[2.0 * S[i][j] + gp.c * X[i] * X[j] + Lam * geo.g(i, j) for j in range(2)]
            for i in range(2)]


def gehe_residual(s: QEStructure, gp: GEHEParams) -> ResidualReport:
    """Residual of ``L_X g + c X♭⊗X♭ + Λ g = 0``."""
    T = gehe_tensor(s, gp)
    return field_report("gehe", s.grid, _tensor_parts(T), 1, meta={"c": gp.c})


def gehe_params_from_qee(s: QEStructure, p: QEParams) -> GEHEParams:
    """``c = −2/m`` and ``Λ = R − 2λ`` for a surface solution."""
    geo = s.geometry()
    return GEHEParams(-2.0 / p.m, geo.R - 2.0 * p.lam)


@dataclass(frozen=True)
class ProlongedState:
    """``(X♭, Ω, R)`` with ``Ω = ⋆dX♭`` on a metric."""

    X_flat: OneForm
    Omega: np.ndarray
    R: np.ndarray
    metric: Metric2D
    depth: int = 1


def prolong(s: QEStructure) -> ProlongedState:
    """Adjoin ``Ω = ⋆dX♭`` and the scalar curvature to a structure."""
    geo = s.geometry()
    Omega = (s.X.exterior_derivative() / geo.sqrt_det).real
    return ProlongedState(s.X, Omega, geo.R, s.metric, max(1, geo.depth_R))


def prolongation_residuals(st: ProlongedState, p: QEParams) -> ResidualReport:
    """The closed first-order system and the two algebraic constraints.

    Returns
    -------
    ResidualReport
        Parts ``closed1`` (∇X♭ equation), ``closed2`` (dΩ equation),
        ``constraint1`` (scalar) and ``constraint2`` (1-form).
    """
    geo = Geometry(st.metric)
    m, lam = p.m, p.lam
    X = (st.X_flat.ax.real, st.X_flat.ay.real)
    Om, R = st.Omega, st.R
    dR = geo.d(R)
    g = geo.g
    X2 = geo.inner(X, X)
    XdR = geo.inner(X, dR)
    E = 2 * lam - (m + 1) * R
    dpt = max(st.depth, geo.depth_gamma)

    nab = geo.nabla1(X)
    T1 = [[nab[i][j] - (X[i] * X[j] / m + (lam - 0.5 * R) * g(i, j) + 0.5 * Om * geo.vol(i, j))
           for j in range(2)] for i in range(2)]
    c1 = field_report("closed1", st.metric.grid, [T1[0][0], T1[0][1], T1[1][0], T1[1][1]], dpt + 1)

    dOm = geo.d(Om)
    # The closed system is consistent with the ∇X♭ equation only when its
    # 1-form star is the opposite rotation to ``hodge_star`` (⋆dx = −dy),
    # while Ω keeps ⋆vol = 1. Differentiating the first equation confirms it.
    sdR = tuple(-c for c in geo.star(dR))
    sX = tuple(-c for c in geo.star(X))
    T2 = [dOm[i] - (3 / m * Om * X[i] + sdR[i] + E / m * sX[i]) for i in range(2)]
    c2 = field_report("closed2", st.metric.grid, T2, dpt + 1)

    lapR = geo.lap(R, dR)
    a2a = (-lapR + (1 + 4 / m) * XdR + 3 / m * Om**2
           + E * (2 * X2 - 2 * lam * m + m * R) / m**2)
    c3 = field_report("constraint1", st.metric.grid, a2a, dpt + 2)

    dlap = geo.d(lapR)
    HR = geo.hess(R, dR)
    Xu = geo.raise1(X)
    HRX = [HR[i][0] * Xu[0] + HR[i][1] * Xu[1] for i in range(2)]
    bracket = -2 / m * (1 + 1 / m) * X2 - (2.5 + 4 / m) * R + lam * (3 + 8 / m)
    a2b = [-dlap[i] + (1 / m) * (1 + 4 / m) * XdR * X[i] + (1 + 4 / m) * HRX[i]
           + (0.5 + 8 / m) * Om * sdR[i] + bracket * dR[i] + 18 / m**2 * Om**2 * X[i]
           + 4 / m**2 * E * ((lam - 0.5 * R) * X[i] + 2 * Om * sX[i] + X2 * X[i] / m)
           for i in range(2)]
    c4 = field_report("constraint2", st.metric.grid, a2b, dpt + 3)
    return combine("prolongation", {"closed1": c1, "closed2": c2, "constraint1": c3,
                                    "constraint2": c4})


@dataclass(frozen=True)
class KillingAnsatzData:
    """Positive weight ``Γ`` and the 1-form ``K♭ = (2/m)Γ X♭ + dΓ``."""

    Gamma: np.ndarray
    K: OneForm


def killing_ansatz(s: QEStructure, Gamma, p: QEParams, dGamma=None) -> KillingAnsatzData:
    """Build ``K♭ = (2/m) Γ X♭ + dΓ``.

    Parameters
    ----------
    s : QEStructure
    Gamma : ndarray or ScalarField
        Positive weight.
    p : QEParams
    dGamma : tuple of ndarray, optional
        Exact gradient of ``Γ``; differentiated on the grid if omitted.
    """
    G = Gamma.values if isinstance(Gamma, ScalarField) else np.asarray(Gamma)
    G = s.grid.real_array(G)
    if not np.all(G[s.grid.valid] > 0):
        raise ParameterError("Γ must be positive")
    cal = Calculus(s.grid)
    gx, gy = dGamma if dGamma is not None else (cal.dx(G).real, cal.dy(G).real)
    K = OneForm(s.grid, 2.0 / p.m * G * s.X.ax + gx, 2.0 / p.m * G * s.X.ay + gy)
    return KillingAnsatzData(G, K)


def _identity_sides(s: QEStructure, k: KillingAnsatzData, p: QEParams):
    m, lam = p.m, p.lam
    geo = s.geometry()
    G = k.Gamma
    Kf = (k.K.ax.real, k.K.ay.real)
    Ku = geo.raise1(Kf)
    S = _sym(geo.nabla1(Kf))
    Su = [[sum(geo.gi(i, a) * geo.gi(j, b) * S[a][b] for a in range(2) for b in range(2))
           for j in range(2)] for i in range(2)]
    S2 = sum(S[i][j] * Su[i][j] for i in range(2) for j in range(2))
    divK = S[0][0] * geo.gi(0, 0) + 2 * S[0][1] * geo.gi(0, 1) + S[1][1] * geo.gi(1, 1)
    dG = geo.d(G)
    dG = (dG[0].real, dG[1].real)
    gradG2 = geo.inner(dG, dG)
    lapG = geo.lap(G, dG).real
    K2 = geo.inner(Kf, Kf)
    q = m / 2 - 1
    Gq = G**q
    lhs = Gq * S2 + Gq * divK**2 / (m - 2)
    SK = [Su[a][0] * Kf[0] + Su[a][1] * Kf[1] for a in range(2)]
    W = [Gq * SK[a] - 0.25 * (m - 2) * gradG2 * G ** (q - 1) * Ku[a]
         - 0.5 * Gq * divK * Ku[a] - 0.5 * Gq * lapG * Ku[a] - lam * G ** (q + 1) * Ku[a]
         for a in range(2)]
    divW = geo.div(W).real
    divGK = geo.div([Gq * Ku[0], Gq * Ku[1]]).real
    B = (-K2 / (2 * G) + 0.5 * lapG + 0.25 * (m - 2) * gradG2 / G
         + m / (2 * (m - 2)) * divK + lam * G)
    rhs = divW + divGK * B
    return lhs, rhs


def identity_residual(s: QEStructure, k: KillingAnsatzData, p: QEParams) -> ResidualReport:
    """Pointwise defect of the divergence identity satisfied by ``K`` and ``Γ``.

    The quadratic side ``Γ^{m/2−1}(|∇_(a K_b)|² + (div K)²/(m−2))`` is
    compared with the divergence block plus the trace block; all
    divergences use chart stencils.

    Raises
    ------
    ParameterError
        If ``m = 2``.
    """
    if p.m == 2:
        raise ParameterError("the identity needs m ≠ 2")
    lhs, rhs = _identity_sides(s, k, p)
    return field_report("identity", s.grid, lhs - rhs, 3,
                        meta={"lhs_sup": float(np.max(np.abs(lhs[s.grid.interior(3)])))})


def gauduchon_constant(s: QEStructure, k: KillingAnsatzData, p: QEParams,
                       tol: float = 1e-6):
    """The function ``A = −|K|²/(2Γ) + ½ΔΓ + λΓ + ((m−2)/(4Γ))|∇Γ|²``.

    Parameters
    ----------
    s : QEStructure
    k : KillingAnsatzData
    p : QEParams
    tol : float
        Threshold for ``K ≡ 0`` and for the Killing test.

    Returns
    -------
    A : ScalarField
    deviation : float
        Max deviation of ``A`` from its mean over the interior.

    Raises
    ------
    ContractError
        If ``K`` is neither zero nor a Killing field preserving ``Γ``.
    """
    m, lam = p.m, p.lam
    geo = s.geometry()
    G = k.Gamma
    Kf = (k.K.ax.real, k.K.ay.real)
    inner = s.grid.interior(2)
    scale = max(1.0, float(np.max(np.abs(G[inner]))))
    K2 = geo.inner(Kf, Kf)
    if float(np.sqrt(np.max(np.abs(K2[inner])))) > tol * scale:
        S = _sym(geo.nabla1(Kf))
        kill = max(float(np.max(np.abs(S[i][j][inner]))) for i in range(2) for j in range(2))
        dG = geo.d(G)
        LKG = geo.inner(Kf, (dG[0].real, dG[1].real))
        if kill > tol * scale or float(np.max(np.abs(LKG[inner]))) > tol * scale:
            raise ContractError("K is neither zero nor a Killing field preserving Γ")
    dG = geo.d(G)
    dG = (dG[0].real, dG[1].real)
    A = (-K2 / (2 * G) + 0.5 * geo.lap(G, dG).real + lam * G
         + (m - 2) / (4 * G) * geo.inner(dG, dG))
    vals = A[inner]
    return ScalarField(s.grid, A), float(np.max(np.abs(vals - vals.mean())))


def is_gradient(X: OneForm, tol: float = GRADIENT_TOL) -> bool:
    """Numeric closedness test ``sup|dX♭| < tol · scale``."""
    g = X.grid
    inner = g.interior(1)
    scale = max(1.0, float(np.max(np.abs(X.ax[inner]))), float(np.max(np.abs(X.ay[inner]))))
    return float(np.max(np.abs(X.exterior_derivative()[inner]))) < tol * scale


def zero_index(X: OneForm, g: Metric2D, center, radius: float, samples: int = 512) -> int:
    """Winding number of the vector ``X`` (index raised) around a circle.

    Parameters
    ----------
    X : OneForm
    g : Metric2D
    center : tuple of float
    radius : float
    samples : int
        Number of points on the circle (at least 256).

    Raises
    ------
    DegeneracyError
        If ``X`` vanishes on the circle.
    AccuracyError
        If the accumulated angle is not within 0.1 of an integer.
    """
    grid = X.grid
    samples = max(int(samples), 256)
    cx, cy = center
    for px, py in ((cx - radius, cy - radius), (cx + radius, cy + radius)):
        if not grid.contains(px, py):
            raise DomainError("circle leaves the chart")
    vx, vy = g.raise_index(X)
    kx = min(5, grid.nx - 1, grid.ny - 1)
    gx, gy = grid.x.astype(float), grid.y.astype(float)
    sx = RectBivariateSpline(gx, gy, np.ascontiguousarray(vx.real.T, dtype=float), kx=kx, ky=kx)
    sy = RectBivariateSpline(gx, gy, np.ascontiguousarray(vy.real.T, dtype=float), kx=kx, ky=kx)
    t = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    xs, ys = cx + radius * np.cos(t), cy + radius * np.sin(t)
    u, v = sx.ev(xs, ys), sy.ev(xs, ys)
    mag = np.hypot(u, v)
    scale = max(float(np.max(np.abs(vx))), float(np.max(np.abs(vy))), 1e-300)
    if mag.min() <= 1e-10 * scale:
        raise DegeneracyError("X vanishes on the circle")
    ang = np.arctan2(v, u)
    steps = np.diff(np.concatenate([ang, ang[:1]]))
    steps = (steps + np.pi) % (2 * np.pi) - np.pi
    w = steps.sum() / (2 * np.pi)
    k = int(np.rint(w))
    if abs(w - k) > 0.1:
        raise AccuracyError(f"winding {w:.3f} is not close to an integer")
    return k


def _dirichlet_poisson(grid: ChartGrid, rhs: np.ndarray) -> np.ndarray:
    """Solve ``Δφ = rhs`` with ``φ = 0`` on the boundary."""
    nx, ny = grid.nx, grid.ny
    Dx = _stencil_matrix(nx, float(grid.hx), grid.order)
    Dy = _stencil_matrix(ny, float(grid.hy), grid.order)
    L = sp.kron(sp.identity(ny), Dx) + sp.kron(Dy, sp.identity(nx))
    L = L.tolil()
    b = np.asarray(rhs).astype(complex).ravel()
    edge = np.zeros(grid.shape, dtype=bool)
    edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
    for idx in np.flatnonzero(edge.ravel()):
        L.rows[idx] = [idx]
        L.data[idx] = [1.0]
        b[idx] = 0.0
    lu = spla.splu(L.tocsc())
    phi = lu.solve(np.ascontiguousarray(b.real)) + 1j * lu.solve(np.ascontiguousarray(b.imag))
    return grid.complex_array(phi.reshape(grid.shape))


def _stencil_matrix(n: int, h: float, order: int, deriv: int = 2):
    weights, starts = stencil_table(n, deriv, order)
    weights = np.asarray(weights) / h**deriv
    w = weights.shape[1]
    rows = np.repeat(np.arange(n), w)
    cols = (starts[:, None] + np.arange(w)[None, :]).ravel()
    return sp.csr_matrix((weights.ravel(), (rows, cols)), shape=(n, n))


def holomorphy_test(s: QEStructure, c: float, method: str = "auto") -> ResidualReport:
    """Check that ``e^{cF/2 − H} P̄`` is holomorphic, where ``∂z̄F = P̄``.

    For gradient ``X♭`` the function ``F`` is the real potential of ``X♭``;
    otherwise ``F = ∂zφ`` with ``Δφ = 4P̄`` solved under zero Dirichlet data.

    Parameters
    ----------
    s : QEStructure
        Conformal gauge.
    c : float
    method : {"auto", "potential", "poisson"}
    """
    if s.gauge != "conformal":
        raise GeometryError("holomorphy_test needs the conformal gauge")
    grid = s.grid
    if grid.mask is not None and not grid.mask.all():
        raise DomainError("holomorphy_test needs a simply connected, unmasked chart")
    cal = Calculus(grid)
    Pb = np.conj(s.P)
    if method == "auto":
        method = "potential" if is_gradient(s.X) else "poisson"
    if method == "potential":
        F = cumulative_integrate(s.X, (grid.ny // 2, grid.nx // 2)).real
        depth = 1
    elif method == "poisson":
        phi = _dirichlet_poisson(grid, 4.0 * Pb)
        F = cal.dz(phi)
        depth = 2
    else:
        raise ParameterError(f"unknown method {method!r}")
    Q = np.exp(0.5 * c * F - s.H) * Pb
    return field_report("holomorphy", grid, cal.dzb(Q), depth,
                        meta={"method": method, "closure": float(np.max(np.abs(
                            (cal.dzb(F) - Pb)[grid.interior(depth)])))})
