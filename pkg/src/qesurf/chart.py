"""Discretized coordinate charts and the field calculus built on them.

Arrays sampled on a :class:`ChartGrid` have shape ``(ny, nx)``: axis 0 is
``y`` and axis 1 is ``x``. Fields are stored complex; real fields carry a
zero imaginary part.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import DegeneracyError, DomainError, GeometryError, StencilError
from .kernels import apply_stencil_axis

DEFAULT_ORDER = 8
SUPPORTED_ORDERS = (4, 6, 8)
_REAL = {"double": np.float64, "extended": np.longdouble}
_COMPLEX = {"double": np.complex128, "extended": np.clongdouble}


def fornberg_weights(x0: float, nodes: np.ndarray, max_deriv: int) -> np.ndarray:
    """Finite-difference weights on arbitrary nodes (Fornberg's recursion).

    Parameters
    ----------
    x0 : float
        Evaluation point.
    nodes : ndarray, shape (n,)
        Distinct stencil nodes.
    max_deriv : int
        Highest derivative order requested.

    Returns
    -------
    ndarray, shape (max_deriv + 1, n)
        Row ``k`` holds the weights of the ``k``-th derivative.
    """
    nodes = np.asarray(nodes, dtype=float)
    n = nodes.size
    c = np.zeros((max_deriv + 1, n))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = nodes[0] - x0
    for i in range(1, n):
        mn = min(i, max_deriv)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def _exact_weights(x0, nodes, deriv):
    """Fornberg weights in exact rational arithmetic."""
    x0 = Fraction(x0)
    nodes = [Fraction(v) for v in nodes]
    n = len(nodes)
    c = [[Fraction(0)] * n for _ in range(deriv + 1)]
    c[0][0] = Fraction(1)
    c1 = Fraction(1)
    c4 = nodes[0] - x0
    for i in range(1, n):
        mn = min(i, deriv)
        c2 = Fraction(1)
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2
            for k in range(mn, 0, -1):
                c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3
            c[0][j] = c4 * c[0][j] / c3
        c1 = c2
    return c[deriv]


@functools.lru_cache(maxsize=256)
def stencil_table(n: int, deriv: int, order: int, precision: str = "double"):
    """Per-node stencil weights for a uniform 1D grid of unit spacing.

    Interior nodes use centered stencils of ``order + 1`` points; nodes
    within the half-width of an end use a shifted window of
    ``order + deriv`` points so the formal order is kept. Weights are
    exact rationals rounded once to the requested precision; divide by
    ``h**deriv`` for spacing ``h``.

    Returns
    -------
    weights : ndarray, shape (n, w)
    starts : ndarray, shape (n,)
    """
    if order not in SUPPORTED_ORDERS:
        raise StencilError(f"unsupported stencil order {order}")
    dtype = _REAL[precision]
    hw = order // 2
    width = order + deriv
    if n < width:
        raise StencilError(
            f"{n} points cannot carry an order-{order} stencil for derivative {deriv}")
    weights = np.zeros((n, width), dtype=dtype)
    starts = np.zeros(n, dtype=np.int64)
    cache = {}
    for i in range(n):
        if hw <= i < n - hw:
            lo, size = i - hw, order + 1
        else:
            lo, size = min(max(i - hw, 0), n - width), width
        s = min(lo, n - width)
        key = (i - lo, size)
        if key not in cache:
            w = _exact_weights(i - lo, range(size), deriv)
            cache[key] = np.array([dtype(f.numerator) / dtype(f.denominator) for f in w],
                                  dtype=dtype)
        starts[i] = s
        weights[i, lo - s: lo - s + size] = cache[key]
    weights.setflags(write=False)
    starts.setflags(write=False)
    return weights, starts


@functools.lru_cache(maxsize=64)
def _interval_integration_table(n: int, order: int):
    """Weights giving the integral over each unit cell ``[k, k+1]``."""
    width = min(order + 1, n)
    gx, gw = np.polynomial.legendre.leggauss(order // 2 + 2)
    table = np.zeros((n - 1, n))
    for k in range(n - 1):
        s = min(max(k - width // 2 + 1, 0), n - width)
        nodes = np.arange(s, s + width, dtype=float)
        for xq, wq in zip(k + 0.5 * (gx + 1.0), 0.5 * gw):
            table[k, s:s + width] += wq * fornberg_weights(xq, nodes, 0)[0]
    return table


@dataclass(frozen=True)
class ChartGrid:
    """Rectangular discretized coordinate patch.

    Parameters
    ----------
    x_range, y_range : tuple of float
        Closed coordinate intervals.
    nx, ny : int
        Number of nodes along each axis (at least 5).
    mask : ndarray of bool, optional
        Validity flags with shape ``(ny, nx)``; ``None`` means all valid.
    order : int
        Formal accuracy of the finite-difference stencils (4, 6 or 8).
    precision : {"double", "extended"}
        Floating-point type of coordinates and sampled fields. Extended
        (x87 long double) keeps round-off low enough for the fourth and
        fifth derivatives used by the prolongation constraints.
    """

    x_range: tuple
    y_range: tuple
    nx: int
    ny: int
    mask: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    order: int = DEFAULT_ORDER
    precision: str = "double"

    def __post_init__(self):
        object.__setattr__(self, "x_range", (float(self.x_range[0]), float(self.x_range[1])))
        object.__setattr__(self, "y_range", (float(self.y_range[0]), float(self.y_range[1])))
        if self.nx < 5 or self.ny < 5:
            raise StencilError("a chart needs at least 5 nodes per axis")
        if not self.x_range[1] > self.x_range[0] or not self.y_range[1] > self.y_range[0]:
            raise DomainError("coordinate ranges must have positive length")
        if self.order not in SUPPORTED_ORDERS:
            raise StencilError(f"unsupported stencil order {self.order}")
        if self.precision not in _REAL:
            raise StencilError(f"unknown precision {self.precision!r}")
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != (self.ny, self.nx):
                raise DomainError("mask shape must be (ny, nx)")
            mask.setflags(write=False)
            object.__setattr__(self, "mask", mask)

    @property
    def dtype(self):
        return _REAL[self.precision]

    @property
    def cdtype(self):
        return _COMPLEX[self.precision]

    @property
    def hx(self):
        d = self.dtype
        return (d(self.x_range[1]) - d(self.x_range[0])) / d(self.nx - 1)

    @property
    def hy(self):
        d = self.dtype
        return (d(self.y_range[1]) - d(self.y_range[0])) / d(self.ny - 1)

    @property
    def x(self) -> np.ndarray:
        return self.dtype(self.x_range[0]) + np.arange(self.nx, dtype=self.dtype) * self.hx

    @property
    def y(self) -> np.ndarray:
        return self.dtype(self.y_range[0]) + np.arange(self.ny, dtype=self.dtype) * self.hy

    @functools.cached_property
    def XY(self):
        return np.meshgrid(self.x, self.y)

    @property
    def X(self) -> np.ndarray:
        return self.XY[0]

    @property
    def Y(self) -> np.ndarray:
        return self.XY[1]

    @property
    def z(self) -> np.ndarray:
        return self.X + 1j * self.Y

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def halfwidth(self) -> int:
        return self.order // 2

    @property
    def valid(self) -> np.ndarray:
        if self.mask is None:
            return np.ones(self.shape, dtype=bool)
        return self.mask

    def coords(self, j: int, i: int):
        """Coordinates of node ``(j, i)`` (row ``j`` along y, column ``i`` along x)."""
        return (float(self.x_range[0] + i * float(self.hx)),
                float(self.y_range[0] + j * float(self.hy)))

    def interior(self, depth: int = 1) -> np.ndarray:
        """Valid nodes at least ``depth`` stencil half-widths from the edge."""
        c = depth * self.halfwidth
        keep = np.zeros(self.shape, dtype=bool)
        if 2 * c < self.nx and 2 * c < self.ny:
            keep[c:self.ny - c, c:self.nx - c] = True
        return keep & self.valid

    def with_order(self, order: int) -> "ChartGrid":
        return ChartGrid(self.x_range, self.y_range, self.nx, self.ny, self.mask, order,
                         self.precision)

    def with_precision(self, precision: str) -> "ChartGrid":
        return ChartGrid(self.x_range, self.y_range, self.nx, self.ny, self.mask, self.order,
                         precision)

    def refined(self, factor: int = 2) -> "ChartGrid":
        """Same patch with spacing divided by ``factor`` (mask dropped)."""
        return ChartGrid(self.x_range, self.y_range, factor * (self.nx - 1) + 1,
                         factor * (self.ny - 1) + 1, None, self.order, self.precision)

    def complex_array(self, a) -> np.ndarray:
        """Broadcast ``a`` to the grid shape in the grid's complex type."""
        return np.broadcast_to(np.asarray(a), self.shape).astype(self.cdtype)

    def real_array(self, a) -> np.ndarray:
        """Real part of ``a`` broadcast to the grid shape in the grid's real type."""
        return np.broadcast_to(np.real(np.asarray(a)), self.shape).astype(self.dtype)

    def descriptor(self) -> dict:
        """JSON grid descriptor."""
        return {
            "x_min": self.x_range[0], "x_max": self.x_range[1],
            "y_min": self.y_range[0], "y_max": self.y_range[1],
            "nx": self.nx, "ny": self.ny,
            "mask": None if self.mask is None else self.mask.astype(int).tolist(),
        }

    @classmethod
    def from_descriptor(cls, d: dict, order: int = DEFAULT_ORDER,
                        precision: str = "double") -> "ChartGrid":
        mask = d.get("mask")
        return cls((d["x_min"], d["x_max"]), (d["y_min"], d["y_max"]), int(d["nx"]),
                   int(d["ny"]), None if mask is None else np.asarray(mask, dtype=bool), order,
                   precision)

    def contains(self, x: float, y: float) -> bool:
        tol = 1e-12 * max(1.0, abs(x), abs(y))
        return (self.x_range[0] - tol <= x <= self.x_range[1] + tol
                and self.y_range[0] - tol <= y <= self.y_range[1] + tol)

    def sample(self, func) -> np.ndarray:
        """Evaluate ``func(x, y)`` on the grid as a complex array."""
        return self.complex_array(func(self.X, self.Y))


def _check_mask_axis(grid: ChartGrid, axis: int, deriv: int):
    if grid.mask is None:
        return
    n = grid.shape[axis]
    weights, starts = stencil_table(n, deriv, grid.order)
    valid = grid.mask if axis == 1 else grid.mask.T
    w = weights.shape[1]
    idx = starts[:, None] + np.arange(w)[None, :]
    touched = valid[:, idx] | (weights[None, :, :] == 0)
    gap = valid & ~touched.all(axis=2)
    if gap.any():
        raise DomainError("stencil of a valid node reaches a masked node")


def diff_array(values: np.ndarray, grid: ChartGrid, axis: str, deriv: int = 1) -> np.ndarray:
    """Finite-difference derivative of a sampled array.

    Parameters
    ----------
    values : ndarray, shape (ny, nx)
    grid : ChartGrid
    axis : {"x", "y"}
    deriv : {1, 2}

    Returns
    -------
    ndarray, same shape and dtype kind as ``values``
    """
    if deriv not in (1, 2):
        raise StencilError("only first and second derivatives are provided")
    if axis == "x":
        weights, starts = stencil_table(grid.nx, deriv, grid.order, grid.precision)
        _check_mask_axis(grid, 1, deriv)
        return apply_stencil_axis(values, weights, starts) / grid.hx**deriv
    if axis == "y":
        weights, starts = stencil_table(grid.ny, deriv, grid.order, grid.precision)
        _check_mask_axis(grid, 0, deriv)
        out = apply_stencil_axis(np.swapaxes(values, 0, 1), weights, starts).swapaxes(0, 1)
        return out / grid.hy**deriv
    raise StencilError(f"unknown axis {axis!r}")


class Calculus:
    """Derivative shortcuts on raw arrays bound to one grid."""

    def __init__(self, grid: ChartGrid):
        self.grid = grid

    def dx(self, f):
        return diff_array(f, self.grid, "x", 1)

    def dy(self, f):
        return diff_array(f, self.grid, "y", 1)

    def dxx(self, f):
        return diff_array(f, self.grid, "x", 2)

    def dyy(self, f):
        return diff_array(f, self.grid, "y", 2)

    def dxy(self, f):
        return self.dx(self.dy(f))

    def lap(self, f):
        """Flat Laplacian ``f_xx + f_yy``."""
        return self.dxx(f) + self.dyy(f)

    def dz(self, f):
        return 0.5 * (self.dx(f) - 1j * self.dy(f))

    def dzb(self, f):
        return 0.5 * (self.dx(f) + 1j * self.dy(f))

    def dzdzb(self, f):
        """``∂z∂z̄ f`` as a quarter of the flat Laplacian."""
        return 0.25 * self.lap(f)

    def grad(self, f):
        return self.dx(f), self.dy(f)


@dataclass(frozen=True)
class ScalarField:
    """Complex samples of a function on a chart."""

    grid: ChartGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise DomainError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        v = v.astype(self.grid.cdtype)
        if not np.isfinite(v[self.grid.valid]).all():
            raise DomainError("field is not finite at every valid node")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: ChartGrid, func) -> "ScalarField":
        return cls(grid, grid.sample(func))

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def is_real(self, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.values[self.grid.valid]))))
        return float(np.max(np.abs(self.values.imag[self.grid.valid]))) <= tol * scale


@dataclass(frozen=True)
class OneForm:
    """A 1-form ``a_x dx + a_y dy`` with complex components."""

    grid: ChartGrid
    ax: np.ndarray
    ay: np.ndarray

    def __post_init__(self):
        for name in ("ax", "ay"):
            v = self.grid.complex_array(getattr(self, name))
            if not np.isfinite(v[self.grid.valid]).all():
                raise DomainError(f"component {name} is not finite")
            object.__setattr__(self, name, v)

    @classmethod
    def from_complex(cls, grid: ChartGrid, P: np.ndarray) -> "OneForm":
        """Real form ``P dz + P̄ dz̄`` expressed in ``dx, dy`` components."""
        P = grid.complex_array(P)
        return cls(grid, 2 * P.real, -2 * P.imag)

    def to_complex(self) -> np.ndarray:
        """The ``dz`` coefficient ``½(a_x − i a_y)``."""
        return 0.5 * (self.ax - 1j * self.ay)

    def exterior_derivative(self) -> np.ndarray:
        """Coefficient of ``dx∧dy`` in ``d`` of this form."""
        cal = Calculus(self.grid)
        return cal.dx(self.ay) - cal.dy(self.ax)

    def scaled(self, t) -> "OneForm":
        return OneForm(self.grid, t * self.ax, t * self.ay)


@dataclass(frozen=True)
class Metric2D:
    """Symmetric 2-tensor ``gxx dx² + 2 gxy dx dy + gyy dy²``.

    For the conformal gauge ``g = 2e^H dz dz̄`` the potential ``H`` is kept
    so curvature can use the Liouville form.
    """

    grid: ChartGrid
    gxx: np.ndarray
    gxy: np.ndarray
    gyy: np.ndarray
    gauge: str = "general"
    H: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("gxx", "gxy", "gyy"):
            object.__setattr__(self, name, self.grid.real_array(getattr(self, name)))
        if self.gauge not in ("conformal", "diagonal", "general"):
            raise GeometryError(f"unknown gauge {self.gauge!r}")
        ok = self.grid.valid
        if not (np.all(self.gxx[ok] > 0) and np.all(self.det[ok] > 0)):
            raise GeometryError("metric is not positive definite")

    @classmethod
    def conformal(cls, grid: ChartGrid, H) -> "Metric2D":
        H = grid.real_array(H)
        phi = 2 * np.exp(H)
        return cls(grid, phi, 0, phi, "conformal", H)

    @classmethod
    def diagonal(cls, grid: ChartGrid, gxx, gyy) -> "Metric2D":
        return cls(grid, gxx, 0, gyy, "diagonal")

    @property
    def det(self) -> np.ndarray:
        return self.gxx * self.gyy - self.gxy**2

    @property
    def sqrt_det(self) -> np.ndarray:
        return np.sqrt(self.det)

    def inverse(self):
        d = self.det
        return self.gyy / d, -self.gxy / d, self.gxx / d

    def components(self):
        return self.gxx, self.gxy, self.gyy

    def raise_index(self, form: OneForm):
        """Vector components ``(α^x, α^y)``."""
        ixx, ixy, iyy = self.inverse()
        return ixx * form.ax + ixy * form.ay, ixy * form.ax + iyy * form.ay

    def norm2(self, form: OneForm) -> np.ndarray:
        """Pointwise ``|α|²_g`` (bilinear, no conjugation)."""
        vx, vy = self.raise_index(form)
        return form.ax * vx + form.ay * vy

    def scaled(self, factor) -> "Metric2D":
        """Conformally rescaled metric ``factor · g``."""
        factor = self.grid.real_array(factor)
        if self.gauge == "conformal":
            return Metric2D.conformal(self.grid, self.H + np.log(factor))
        gauge = "diagonal" if self.gauge == "diagonal" else "general"
        return Metric2D(self.grid, factor * self.gxx, factor * self.gxy, factor * self.gyy, gauge)


def christoffel(metric: Metric2D):
    """Christoffel symbols ``Γ[k][i][j]`` of the second kind (axis 0 = x)."""
    cal = Calculus(metric.grid)
    g = [[metric.gxx, metric.gxy], [metric.gxy, metric.gyy]]
    dg = [[[cal.dx(g[i][j]).real, cal.dy(g[i][j]).real] for j in range(2)] for i in range(2)]
    ginv = metric.inverse()
    gi = [[ginv[0], ginv[1]], [ginv[1], ginv[2]]]
    gam = [[[None, None], [None, None]] for _ in range(2)]
    for k in range(2):
        for i in range(2):
            for j in range(2):
                acc = 0.0
                for l in range(2):
                    acc = acc + 0.5 * gi[k][l] * (dg[l][i][j] + dg[l][j][i] - dg[i][j][l])
                gam[k][i][j] = acc
    return gam


def gaussian_curvature_christoffel(metric: Metric2D) -> np.ndarray:
    """Gaussian curvature from ``R^x_{yxy}`` built out of Christoffel symbols."""
    cal = Calculus(metric.grid)
    G = christoffel(metric)
    # R^x_{yxy} = ∂x Γ^x_yy − ∂y Γ^x_xy + Γ^x_xk Γ^k_yy − Γ^x_yk Γ^k_xy
    r = cal.dx(G[0][1][1]).real - cal.dy(G[0][0][1]).real
    for k in range(2):
        r = r + G[0][0][k] * G[k][1][1] - G[0][1][k] * G[k][0][1]
    # R_{xyxy} = g_xl R^l_{yxy}; R^y_{yxy} needed for the off-diagonal part
    ry = cal.dx(G[1][1][1]).real - cal.dy(G[1][0][1]).real
    for k in range(2):
        ry = ry + G[1][0][k] * G[k][1][1] - G[1][1][k] * G[k][0][1]
    R_xyxy = metric.gxx * r + metric.gxy * ry
    return R_xyxy / metric.det


def scalar_curvature(metric: Metric2D, method: str = "auto") -> ScalarField:
    """Scalar curvature ``R = 2K`` of a 2D metric.

    Parameters
    ----------
    metric : Metric2D
    method : {"auto", "conformal", "christoffel"}
        ``auto`` uses ``R = −2 e^{−H} ∂z∂z̄ H`` when the metric is in the
        conformal gauge and the Christoffel path otherwise.

    Returns
    -------
    ScalarField
    """
    if method == "auto":
        method = "conformal" if metric.gauge == "conformal" and metric.H is not None else "christoffel"
    if method == "conformal":
        if metric.H is None:
            raise GeometryError("conformal curvature needs the potential H")
        cal = Calculus(metric.grid)
        R = -2.0 * np.exp(-metric.H) * cal.dzdzb(metric.H).real
    elif method == "christoffel":
        R = 2.0 * gaussian_curvature_christoffel(metric)
    else:
        raise GeometryError(f"unknown curvature method {method!r}")
    return ScalarField(metric.grid, R)


def hodge_star(form: OneForm, metric: Metric2D) -> OneForm:
    """Hodge star of a 1-form for the orientation ``dx∧dy > 0``.

    With ``vol = √det g dx∧dy`` the components are
    ``(⋆α)_x = −√g α^y`` and ``(⋆α)_y = √g α^x``, so ``⋆dx = dy`` for any
    conformal metric.
    """
    vx, vy = metric.raise_index(form)
    s = metric.sqrt_det
    return OneForm(form.grid, -s * vy, s * vx)


def diff(field: ScalarField, direction: str, order: int = 1) -> ScalarField:
    """Partial derivative of a field along ``"x"`` or ``"y"`` (order 1 or 2)."""
    return ScalarField(field.grid, diff_array(field.values, field.grid, direction, order))


def wirtinger(field: ScalarField):
    """Return ``(∂z f, ∂z̄ f)`` for the complex coordinate ``z = x + iy``."""
    cal = Calculus(field.grid)
    fx, fy = cal.dx(field.values), cal.dy(field.values)
    return (ScalarField(field.grid, 0.5 * (fx - 1j * fy)),
            ScalarField(field.grid, 0.5 * (fx + 1j * fy)))


def _component_splines(form: OneForm, degree: int = 5):
    g = form.grid
    k = min(degree, g.nx - 1, g.ny - 1)
    # RectBivariateSpline expects values indexed (x, y)
    x, y = g.x.astype(float), g.y.astype(float)
    return [RectBivariateSpline(x, y, np.ascontiguousarray(part.T, dtype=float), kx=k, ky=k)
            for part in (form.ax.real, form.ax.imag, form.ay.real, form.ay.imag)]


def line_integrate(form: OneForm, path: Sequence, nodes_per_segment: int = 0) -> complex:
    """Integral of ``a_x dx + a_y dy`` along a polyline.

    Components are interpolated with quintic tensor splines and each segment
    is integrated by Gauss–Legendre quadrature.

    Parameters
    ----------
    form : OneForm
    path : sequence of (x, y)
        Polyline vertices, at least two.
    nodes_per_segment : int, optional
        Quadrature nodes per segment; chosen from the grid spacing if 0.

    Returns
    -------
    complex
    """
    grid = form.grid
    pts = np.asarray(path, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
        raise DomainError("path must be a sequence of at least two (x, y) vertices")
    for x, y in pts:
        if not grid.contains(x, y):
            raise DomainError(f"path vertex ({x}, {y}) lies outside the chart")
    axr, axi, ayr, ayi = _component_splines(form)
    total = 0.0 + 0.0j
    h = float(min(grid.hx, grid.hy))
    for p, q in zip(pts[:-1], pts[1:]):
        length = float(np.hypot(*(q - p)))
        if length == 0.0:
            continue
        npts = nodes_per_segment or max(24, int(np.ceil(4 * length / h)))
        t, w = np.polynomial.legendre.leggauss(npts)
        t = 0.5 * (t + 1.0)
        xs = p[0] + t * (q[0] - p[0])
        ys = p[1] + t * (q[1] - p[1])
        if grid.mask is not None:
            ii = np.rint((xs - grid.x_range[0]) / float(grid.hx)).astype(int)
            jj = np.rint((ys - grid.y_range[0]) / float(grid.hy)).astype(int)
            if not grid.mask[jj, ii].all():
                raise DomainError("path crosses a masked region")
        ax = axr.ev(xs, ys) + 1j * axi.ev(xs, ys)
        ay = ayr.ev(xs, ys) + 1j * ayi.ev(xs, ys)
        total += 0.5 * np.sum(w * (ax * (q[0] - p[0]) + ay * (q[1] - p[1])))
    return complex(total)


def cumulative_integrate(form: OneForm, base: tuple = (0, 0), value0: complex = 0.0) -> np.ndarray:
    """Potential of a closed 1-form on the whole grid.

    Integrates ``a_x`` along the base row and then ``a_y`` up and down each
    column, using high-order cell quadrature.

    Parameters
    ----------
    form : OneForm
    base : tuple of int
        Anchor node as ``(j, i)``.
    value0 : complex
        Potential value at the anchor.

    Returns
    -------
    ndarray, shape (ny, nx), complex
    """
    grid = form.grid
    j0, i0 = base
    tx = _interval_integration_table(grid.nx, grid.order).astype(grid.dtype) * grid.hx
    ty = _interval_integration_table(grid.ny, grid.order).astype(grid.dtype) * grid.hy
    row = _cumulative(tx, form.ax[j0, :], i0)
    cols = _cumulative(ty, form.ay, j0)
    return value0 + row[None, :] + cols


def _cumulative(table, values, anchor):
    cells = table @ values
    acc = np.concatenate([np.zeros((1,) + cells.shape[1:]), np.cumsum(cells, axis=0)])
    return acc - acc[anchor]


def nonvanishing(values: np.ndarray, grid: ChartGrid, what: str, rel: float = 1e-10):
    """Raise :class:`DegeneracyError` if ``values`` touches zero on valid nodes."""
    a = np.abs(values[grid.valid])
    if a.min() <= rel * max(1.0, a.max()):
        raise DegeneracyError(f"{what} vanishes on the chart")


class Geometry:
    """Levi-Civita calculus of one metric on its chart.

    In the conformal gauge the Christoffel symbols come from first
    derivatives of ``H`` and the curvature from the Liouville form, so both
    need a single stencil application. Otherwise they are built from the
    metric components.

    Attributes
    ----------
    depth_gamma, depth_R : int
        Stencil nesting depth of the Christoffel symbols and of ``R``.
    """

    def __init__(self, metric: Metric2D):
        self.metric = metric
        self.grid = metric.grid
        self.cal = Calculus(metric.grid)
        self.ginv = metric.inverse()
        self.sqrt_det = metric.sqrt_det
        cal = self.cal
        if metric.gauge == "conformal" and metric.H is not None:
            Hx, Hy = cal.dx(metric.H).real, cal.dy(metric.H).real
            dl = (Hx, Hy)
            G = [[[None] * 2 for _ in range(2)] for _ in range(2)]
            for k in range(2):
                for i in range(2):
                    for j in range(2):
                        G[k][i][j] = 0.5 * ((k == i) * dl[j] + (k == j) * dl[i] - (i == j) * dl[k])
            self.gamma = G
            self.depth_gamma = 1
            self.R = scalar_curvature(metric, "conformal").values.real
            self.depth_R = 1
        elif metric.gauge == "diagonal":
            self.gamma = christoffel(metric)
            self.depth_gamma = 1
            E, Gm = metric.gxx, metric.gyy
            Ex, Ey, Gx, Gy = cal.dx(E).real, cal.dy(E).real, cal.dx(Gm).real, cal.dy(Gm).real
            Eyy, Gxx = cal.dyy(E).real, cal.dxx(Gm).real
            EG = E * Gm
            # orthogonal-coordinate curvature expanded to pure second derivatives
            K = (-(Gxx + Eyy) / (2 * EG)
                 + (Gx * (E * Gx + Gm * Ex)) / (4 * EG**2)
                 + (Ey * (E * Gy + Gm * Ey)) / (4 * EG**2))
            self.R = 2.0 * K
            self.depth_R = 1
        else:
            self.gamma = christoffel(metric)
            self.depth_gamma = 1
            self.R = 2.0 * gaussian_curvature_christoffel(metric)
            self.depth_R = 2

    # index gymnastics -----------------------------------------------------
    def g(self, i, j):
        m = self.metric
        return (m.gxx, m.gxy, m.gyy)[i + j]

    def gi(self, i, j):
        return self.ginv[i + j]

    def raise1(self, a):
        """Raise the index of a 1-form given as a pair of arrays."""
        return (self.ginv[0] * a[0] + self.ginv[1] * a[1],
                self.ginv[1] * a[0] + self.ginv[2] * a[1])

    def lower1(self, v):
        m = self.metric
        return (m.gxx * v[0] + m.gxy * v[1], m.gxy * v[0] + m.gyy * v[1])

    def inner(self, a, b):
        """``g^{ij} a_i b_j`` for 1-forms given as pairs."""
        ra = self.raise1(a)
        return ra[0] * b[0] + ra[1] * b[1]

    def star(self, a):
        """Hodge star of a 1-form pair (orientation ``dx∧dy``)."""
        v = self.raise1(a)
        return (-self.sqrt_det * v[1], self.sqrt_det * v[0])

    def vol(self, i, j):
        return (0 if i == j else (1 if i < j else -1)) * self.sqrt_det

    # derivatives ------------------------------------------------------------
    def d(self, f):
        return (self.cal.dx(f), self.cal.dy(f))

    def partial2(self, f):
        """Coordinate second derivatives ``[[f_xx, f_xy], [f_xy, f_yy]]``."""
        fxy = self.cal.dxy(f)
        return [[self.cal.dxx(f), fxy], [fxy, self.cal.dyy(f)]]

    def hess(self, f, df=None):
        """Covariant Hessian ``∂i∂j f − Γ^k_ij ∂k f``."""
        df = self.d(f) if df is None else df
        p2 = self.partial2(f)
        G = self.gamma
        return [[p2[i][j] - G[0][i][j] * df[0] - G[1][i][j] * df[1] for j in range(2)]
                for i in range(2)]

    def lap(self, f, df=None):
        """Laplace-Beltrami operator ``div grad f`` as the trace of the Hessian."""
        df = self.d(f) if df is None else df
        G = self.gamma
        gi = self.ginv
        acc = gi[0] * (self.cal.dxx(f) - G[0][0][0] * df[0] - G[1][0][0] * df[1])
        acc = acc + gi[2] * (self.cal.dyy(f) - G[0][1][1] * df[0] - G[1][1][1] * df[1])
        if np.any(gi[1] != 0):
            acc = acc + 2 * gi[1] * (self.cal.dxy(f) - G[0][0][1] * df[0] - G[1][0][1] * df[1])
        return acc

    def nabla1(self, a):
        """Covariant derivative ``(∇α)_ij = ∂_i α_j − Γ^k_ij α_k``."""
        da = [self.d(a[0]), self.d(a[1])]
        G = self.gamma
        return [[da[j][i] - G[0][i][j] * a[0] - G[1][i][j] * a[1] for j in range(2)]
                for i in range(2)]

    def div(self, v):
        """Divergence of a vector field ``(1/√g) ∂_i(√g v^i)``."""
        s = self.sqrt_det
        return (self.cal.dx(s * v[0]) + self.cal.dy(s * v[1])) / s
