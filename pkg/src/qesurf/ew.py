"""Einstein–Weyl frames, the Möbius family on S² and warped products.

Three-dimensional geometry is never discretized: every Ricci component of
the product and warped metrics is written through 2D chart calculus on the
base.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .chart import Calculus, ChartGrid, Geometry, Metric2D, OneForm, ScalarField
from .errors import DomainError, GeometryError, ParameterError
from .qee import QEStructure
from .report import ResidualReport, combine, field_report


def _arr(grid: ChartGrid, f) -> np.ndarray:
    v = f.values if isinstance(f, ScalarField) else f
    return grid.real_array(v)


# sphere charts ---------------------------------------------------------


def sphere_metric(grid: ChartGrid) -> Metric2D:
    """Round metric ``4|dz|²/(1+|z|²)²`` in a stereographic chart."""
    r2 = grid.X**2 + grid.Y**2
    return Metric2D.conformal(grid, np.log(2.0) - 2.0 * np.log1p(r2))


def sphere_laplacian(grid: ChartGrid, u) -> np.ndarray:
    """``Δ_{S²} u = ((1+|z|²)²/4)(∂x² + ∂y²)u``."""
    r2 = grid.X**2 + grid.Y**2
    return 0.25 * (1.0 + r2) ** 2 * Calculus(grid).lap(_arr(grid, u)).real


@dataclass(frozen=True)
class MobiusMap:
    """``f(z) = (az + b)/(cz + d)`` normalized to ``ad − bc = 1``."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = (complex(v) for v in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if abs(det) < 1e-14:
            raise ParameterError("Möbius map needs ad − bc ≠ 0")
        r = np.sqrt(det)
        for name, v in zip("abcd", (a, b, c, d)):
            object.__setattr__(self, name, complex(v / r))

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(1, 0, 0, 1)

    @classmethod
    def scaling(cls, k: complex) -> "MobiusMap":
        """``f(z) = k z``."""
        return cls(k, 0, 0, 1)

    def __call__(self, z):
        return (self.a * z + self.b) / (self.c * z + self.d)

    def derivative(self, z):
        return 1.0 / (self.c * z + self.d) ** 2

    def pole(self) -> Optional[complex]:
        return None if self.c == 0 else -self.d / self.c

    def compose(self, other: "MobiusMap") -> "MobiusMap":
        """``self ∘ other``."""
        M = np.array([[self.a, self.b], [self.c, self.d]]) @ np.array([[other.a, other.b],
                                                                        [other.c, other.d]])
        return MobiusMap(*M.ravel())

    def other_chart(self) -> "MobiusMap":
        """The same map written in the chart ``w = 1/z`` on both sides."""
        return MobiusMap(self.d, self.c, self.b, self.a)

    def to_json(self) -> dict:
        return {k: [getattr(self, k).real, getattr(self, k).imag] for k in "abcd"}

    @classmethod
    def from_json(cls, d: dict) -> "MobiusMap":
        def cplx(v):
            return complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
        return cls(*(cplx(d[k]) for k in "abcd"))


def _chart_map(f: MobiusMap, patch: str) -> MobiusMap:
    if patch == "north":
        return f
    if patch == "south":
        return f.other_chart()
    raise DomainError(f"unknown sphere patch {patch!r}")


def _check_pole(f: MobiusMap, grid: ChartGrid, margin: float = 1e-3):
    p = f.pole()
    if p is None:
        return
    z = grid.z[grid.valid]
    if np.min(np.abs(z - p)) < margin:
        raise DomainError(f"pole of the Möbius map at {p} lies in the chart")
    x0, x1 = grid.x_range
    y0, y1 = grid.y_range
    if grid.mask is None and x0 <= p.real <= x1 and y0 <= p.imag <= y1:
        raise DomainError(f"pole of the Möbius map at {p} lies in the chart")


def mobius_u(f: MobiusMap, lam: float, grid: ChartGrid, patch: str = "north") -> ScalarField:
    """Conformal factor of a Möbius map with ``e^u = λ⁻¹((1+|z|²)|f′|/(1+|f|²))²``.

    Parameters
    ----------
    f : MobiusMap
        Written in the north chart; the south chart ``w = 1/z`` is handled
        by conjugating ``f``.
    lam : float
        Positive curvature constant.
    grid : ChartGrid
    patch : {"north", "south"}

    Raises
    ------
    DomainError
        If the pole of ``f`` lies inside the chart.
    """
    if lam <= 0:
        raise ParameterError("λ must be positive")
    fc = _chart_map(f, patch)
    _check_pole(fc, grid)
    z = grid.z
    fz = fc(z)
    ratio = (1.0 + np.abs(z) ** 2) / (1.0 + np.abs(fz) ** 2) * np.abs(fc.derivative(z))
    return ScalarField(grid, 2.0 * np.log(ratio) - np.log(lam))


def mobius_sphere_structure(f: MobiusMap, m: float, grid: ChartGrid,
                            patch: str = "north") -> QEStructure:
    """Gradient quasi-Einstein structure on the round sphere pulled back by ``f``.

    On the unit sphere with height function ``w = (1−|z|²)/(1+|z|²)`` the
    pair ``(g_{S²}, X♭ = −m d ln|w|)`` solves the equations with
    ``λ = 1 + m``; its zeros are the two poles, each of index one. The
    structure is pulled back by ``f`` so that the zeros sit at ``f⁻¹(0)``
    and ``f⁻¹(∞)``.

    Raises
    ------
    DomainError
        If the pole of ``f`` or the equator ``|f| = 1`` meets the chart.
    """
    if m == 0:
        raise ParameterError("m must be nonzero")
    fc = _chart_map(f, patch)
    _check_pole(fc, grid)
    z = grid.z
    w = fc(z)
    dw = fc.derivative(z)
    r2 = np.abs(w) ** 2
    if np.min(np.abs(1.0 - r2[grid.valid])) < 1e-3:
        raise DomainError("the equator of the height function meets the chart")
    H = np.log(2.0) - 2.0 * np.log1p(r2) + np.log(np.abs(dw) ** 2)
    P = 2.0 * m * np.conj(w) / (1.0 - r2 ** 2) * dw
    return QEStructure.conformal(grid, H, P)


def constcurv_residual(u, lam: float, grid: Optional[ChartGrid] = None) -> ResidualReport:
    """Defect of ``Δ_{S²}u = 2 − 2λe^u`` in a stereographic chart."""
    grid = grid or u.grid
    u = _arr(grid, u)
    r = sphere_laplacian(grid, u) - 2.0 + 2.0 * lam * np.exp(u)
    return field_report("constcurv", grid, r, 1, meta={"lambda": lam})


def kw_residual(u, Lambda, lam: float, K_dir: Optional[OneForm] = None,
                metric: Optional[Metric2D] = None, grid: Optional[ChartGrid] = None
                ) -> ResidualReport:
    """Defect of ``Δu = 2Λ + L_K u − 2λe^u``.

    Parameters
    ----------
    u, Lambda : ScalarField or ndarray
    lam : float
    K_dir : OneForm, optional
        ``K♭`` on the chart; zero if omitted.
    metric : Metric2D, optional
        Background metric; the round sphere chart metric by default.
    """
    grid = grid or (u.grid if isinstance(u, ScalarField) else metric.grid)
    metric = metric or sphere_metric(grid)
    geo = Geometry(metric)
    u = _arr(grid, u)
    du = geo.d(u)
    du = (du[0].real, du[1].real)
    LKu = 0.0 if K_dir is None else geo.inner((K_dir.ax.real, K_dir.ay.real), du)
    r = geo.lap(u, du).real - 2.0 * _arr(grid, Lambda) - LKu + 2.0 * lam * np.exp(u)
    return field_report("kazdan_warner", grid, r, 2, meta={"lambda": lam})


# Weyl frames -----------------------------------------------------------


@dataclass(frozen=True)
class WeylFrame:
    """A frame ``(g, ω)`` of a Weyl structure on ``N × F``.

    ``g = e^φ(g₀ ⊕ g_F)`` with ``g₀`` a chart metric and ``g_F`` a flat
    factor of dimension ``n − 2``; all fields depend on the chart only.
    The 1-form ``ω`` may carry a constant fiber component
    ``omega_fiber`` which pairs trivially with chart gradients.

    Attributes
    ----------
    g0 : Metric2D
    phi : ndarray
    omega : OneForm
    Lambda : ndarray
    n : int
    omega_fiber : float
    """

    g0: Metric2D
    phi: np.ndarray
    omega: OneForm
    Lambda: np.ndarray
    n: int = 3
    omega_fiber: float = 0.0

    def __post_init__(self):
        grid = self.g0.grid
        object.__setattr__(self, "phi", _arr(grid, self.phi))
        object.__setattr__(self, "Lambda", _arr(grid, self.Lambda))
        if self.n < 3:
            raise ParameterError("Weyl frames need total dimension n ≥ 3")

    @property
    def grid(self) -> ChartGrid:
        return self.g0.grid

    @property
    def g(self) -> Metric2D:
        """Chart block ``e^φ g₀``."""
        return self.g0.scaled(np.exp(self.phi))

    @property
    def X(self) -> OneForm:
        """``X♭ = ((n − 2)/2) ω``."""
        return self.omega.scaled((self.n - 2) / 2.0)

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """Laplacian of ``e^φ(g₀ ⊕ g_F)`` on functions of the chart."""
        geo = Geometry(self.g0)
        df = geo.d(f)
        df = (df[0].real, df[1].real)
        dphi = geo.d(self.phi)
        dphi = (dphi[0].real, dphi[1].real)
        return np.exp(-self.phi) * (geo.lap(f, df).real
                                    + 0.5 * (self.n - 2) * geo.inner(dphi, df))

    def derivative_along_X(self, f: np.ndarray) -> np.ndarray:
        """``L_X f = g^{-1}(X♭, df)``."""
        geo = Geometry(self.g0)
        df = geo.d(f)
        X = self.X
        return np.exp(-self.phi) * geo.inner((X.ax.real, X.ay.real), (df[0].real, df[1].real))


def frame_change(f: WeylFrame, u) -> WeylFrame:
    """Move to the frame ``(e^u g, ω + du)``.

    The new proportionality function is
    ``Λ′ = e^{−u}(Λ + ½(−Δu + L_X u))`` with ``Δ`` and ``X`` of the old frame.
    """
    grid = f.grid
    u = _arr(grid, u)
    du = Calculus(grid).grad(u)
    Lam = np.exp(-u) * (f.Lambda + 0.5 * (-f.laplacian(u) + f.derivative_along_X(u)))
    omega = OneForm(grid, f.omega.ax + du[0].real, f.omega.ay + du[1].real)
    return WeylFrame(f.g0, f.phi + u, omega, Lam, f.n, f.omega_fiber)


def frame_distance(f1: WeylFrame, f2: WeylFrame, depth: int = 2) -> float:
    """Sup-norm distance of the conformal factors, 1-forms and ``Λ``."""
    grid = f1.grid
    return field_report("frame.distance", grid, [
        f1.phi - f2.phi, f1.omega.ax - f2.omega.ax, f1.omega.ay - f2.omega.ay,
        f1.Lambda - f2.Lambda], depth).sup


def gauduchon_s2xs1_frame(grid: ChartGrid) -> WeylFrame:
    """The frame ``(g_{S²} ⊕ dt², ω = 2dt)`` with ``Λ = 1`` on ``S² × S¹``."""
    z = np.zeros(grid.shape)
    return WeylFrame(sphere_metric(grid), z, OneForm(grid, z, z), np.ones(grid.shape), 3, 2.0)


# warped products -------------------------------------------------------


@dataclass(frozen=True)
class WarpedProductSpec:
    """``g̃ = g_N ⊕ e^{−2u/m} dt²`` with ``X̃♭ = dt + du``.

    Attributes
    ----------
    base : QEStructure
        ``g_N`` with ``X_N♭ = ((m+1)/m) du``.
    u : ndarray
    m, lam : float
    meta : dict
    """

    base: QEStructure
    u: np.ndarray
    m: float
    lam: float
    meta: Dict[str, object] = field(default_factory=dict, compare=False)

    @classmethod
    def from_metric(cls, metric: Metric2D, u, m: float, lam: float,
                    meta: Optional[dict] = None) -> "WarpedProductSpec":
        if m == 0:
            raise ParameterError("m must be nonzero")
        grid = metric.grid
        u = _arr(grid, u)
        du = Calculus(grid).grad(u)
        k = (m + 1.0) / m
        XN = OneForm(grid, k * du[0].real, k * du[1].real)
        base = QEStructure(metric.gauge if metric.gauge != "diagonal" else "general", grid,
                           metric, XN, H=metric.H)
        return cls(base, u, m, lam, dict(meta or {}))

    @property
    def grid(self) -> ChartGrid:
        return self.base.grid


@dataclass(frozen=True)
class WarpedStructure3D:
    """``g = e^u(g₀ ⊕ dt²)`` with ``X♭ = dt + ½du`` (``m = −1``, ``n = 3``)."""

    g0: Metric2D
    u: np.ndarray
    lam: float
    mobius: Optional[MobiusMap] = None
    patch: str = "north"

    @property
    def grid(self) -> ChartGrid:
        return self.g0.grid

    @property
    def m(self) -> float:
        return -1.0

    def normal_form(self) -> WarpedProductSpec:
        """``g_N = e^u g₀`` and ``v = u/2`` so that ``g = g_N ⊕ e^{2v}dt²``."""
        return WarpedProductSpec.from_metric(self.g0.scaled(np.exp(self.u)), 0.5 * self.u, -1.0,
                                             self.lam, {"source": "s2xs1"})


def s2xs1_structure(f: MobiusMap, lam: float, grid: ChartGrid,
                    patch: str = "north") -> WarpedStructure3D:
    """Quasi-Einstein structure on ``S² × S¹`` from a Möbius conformal factor."""
    u = mobius_u(f, lam, grid, patch)
    return WarpedStructure3D(sphere_metric(grid), u.real, lam, f, patch)


def _warped_blocks(spec: WarpedProductSpec, u_offset: float = 0.0):
    m, lam = spec.m, spec.lam
    geo = spec.base.geometry()
    u = spec.u + u_offset
    du = geo.d(u)
    du = (du[0].real, du[1].real)
    H = geo.hess(u, du)
    du2 = geo.inner(du, du)
    lap = geo.lap(u, du).real
    g = geo.g
    k = (m + 1.0) / m
    tang = [[0.5 * geo.R * g(i, j) - k / m * du[i] * du[j] + k * H[i][j] - lam * g(i, j)
             for j in range(2)] for i in range(2)]
    phi2 = np.exp(-2.0 * u / m)
    tt = phi2 / m * (lap - du2 / m) - (1.0 / m + phi2 * du2 / m + lam * phi2)
    norm_defect = lap - m * lam - np.exp(2.0 * u / m) - k * du2
    depth = max(2, geo.depth_R)
    return tang, tt, norm_defect, depth


def optimal_shift(spec: WarpedProductSpec) -> float:
    """Constant ``s`` making the interior mean of the normalizing equation's defect zero.

    The defect is ``Δu − mλ − e^{2(u+s)/m} − ((m+1)/m)|du|²``, so the
    shift solves ``e^{2s/m} mean(e^{2u/m}) = mean(Δu − mλ − ((m+1)/m)|du|²)``.
    """
    m, lam = spec.m, spec.lam
    geo = spec.base.geometry()
    du = geo.d(spec.u)
    du = (du[0].real, du[1].real)
    keep = spec.grid.interior(2)
    rest = (geo.lap(spec.u, du).real - m * lam - (m + 1.0) / m * geo.inner(du, du))[keep].mean()
    e = np.exp(2.0 * spec.u / m)[keep].mean()
    if rest <= 0:
        return float("nan")
    return float(0.5 * m * np.log(rest / e))


def warped_residual(spec, u_offset: float = 0.0) -> ResidualReport:
    """The three blocks of the quasi-Einstein equations of a warped product.

    Parameters
    ----------
    spec : WarpedProductSpec or WarpedStructure3D
        The latter is converted to the normal form first.
    u_offset : float
        Constant added to ``u`` with ``g_N`` held fixed.

    Returns
    -------
    ResidualReport
        Parts ``tangential``, ``tt`` and ``normalization``. The defect is
        evaluated literally; the constant shift that would zero its mean is
        reported as ``meta["u_shift"]``.
    """
    if isinstance(spec, WarpedStructure3D):
        spec = spec.normal_form()
    if spec.m == 0:
        raise ParameterError("m must be nonzero")
    if spec.base.metric.gauge == "diagonal":
        raise GeometryError("base must be in the conformal or general gauge")
    grid = spec.grid
    tang, tt, norm_defect, depth = _warped_blocks(spec, u_offset)
    parts = {
        "tangential": field_report("warped.tangential", grid,
                                   [tang[0][0], np.sqrt(2.0) * tang[0][1], tang[1][1]], depth),
        "tt": field_report("warped.tt", grid, tt, depth),
        "normalization": field_report("warped.normalization", grid, norm_defect, depth),
    }
    shifted = WarpedProductSpec(spec.base, spec.u + u_offset, spec.m, spec.lam)
    return combine("warped", parts, {"m": spec.m, "lambda": spec.lam, "u_offset": u_offset,
                                     "u_shift": optimal_shift(shifted)})


def s2xs1_direct_residual(s: WarpedStructure3D) -> ResidualReport:
    """QEE blocks of ``e^u(g₀ ⊕ dt²)``, ``X♭ = dt + ½du`` from conformal-change formulas.

    Uses ``Ric(e^u g̃) = Ric(g̃) − ¼(2Hess u − du du) − ¼(2Δu + |du|²)g̃`` in
    dimension three with the product background ``g̃``.
    """
    grid = s.grid
    geo = Geometry(s.g0)
    u = grid.real_array(s.u)
    du = geo.d(u)
    du = (du[0].real, du[1].real)
    H = geo.hess(u, du)
    du2 = geo.inner(du, du)
    lap = geo.lap(u, du).real
    g = geo.g
    lam, m = s.lam, s.m
    eu = np.exp(u)
    # X♭ = α with α_N = ½du, α_t = 1
    aN = (0.5 * du[0], 0.5 * du[1])
    SNN = [[0.5 * H[i][j] - 0.5 * du[i] * du[j] + 0.25 * du2 * g(i, j) for j in range(2)]
           for i in range(2)]
    RicNN = [[0.5 * geo.R * g(i, j) - 0.25 * (2 * H[i][j] - du[i] * du[j])
              - 0.25 * (2 * lap + du2) * g(i, j) for j in range(2)] for i in range(2)]
    NN = [[RicNN[i][j] - aN[i] * aN[j] / m + SNN[i][j] - lam * eu * g(i, j) for j in range(2)]
          for i in range(2)]
    tN = [-aN[i] / m - 0.5 * du[i] for i in range(2)]
    tt = -0.25 * (2 * lap + du2) - 1.0 / m + 0.25 * du2 - lam * eu
    depth = max(2, geo.depth_R)
    return combine("s2xs1.direct", {
        "NN": field_report("s2xs1.NN", grid, [NN[0][0], np.sqrt(2.0) * NN[0][1], NN[1][1]], depth),
        "tN": field_report("s2xs1.tN", grid, [np.sqrt(2.0) * tN[0], np.sqrt(2.0) * tN[1]], depth),
        "tt": field_report("s2xs1.tt", grid, tt, depth),
    })


def gauduchon_s2xs1(s: WarpedStructure3D):
    """Constant ``A`` of the Killing field ``K = −2∂t`` for ``Γ = e^u``, ``m = −1``.

    With ``K♭ = (2/m)ΓX♭ + dΓ = −2e^u dt`` the quantity
    ``A = −|K|²/(2Γ) + ½ΔΓ + λΓ + ((m−2)/(4Γ))|∇Γ|²`` uses the three
    dimensional metric, whose Laplacian on chart functions is
    ``e^{−u}(Δ₀ + ½⟨du, ·⟩₀)``.

    Returns
    -------
    A : ScalarField
    deviation : float
        Max deviation from the interior mean.
    """
    grid = s.grid
    geo = Geometry(s.g0)
    u = grid.real_array(s.u)
    m = s.m
    G = np.exp(u)
    dG = geo.d(G)
    dG = (dG[0].real, dG[1].real)
    du = geo.d(u)
    du = (du[0].real, du[1].real)
    K2 = 4.0 * np.exp(2 * u) * np.exp(-u)
    lapG = np.exp(-u) * (geo.lap(G, dG).real + 0.5 * geo.inner(du, dG))
    gradG2 = np.exp(-u) * geo.inner(dG, dG)
    A = -K2 / (2 * G) + 0.5 * lapG + s.lam * G + (m - 2) / (4 * G) * gradG2
    keep = grid.interior(2)
    return ScalarField(grid, A), float(np.max(np.abs(A[keep] - A[keep].mean())))
