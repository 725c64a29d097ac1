"""Hypergeometric solutions and homothety reductions for ``m = −1``.

Covers the series ``₃F₂`` with its continuation beyond the unit disk, the
three-function basis of the third-order linear operator ``D_α``, the
quadratic first integral ``L_α``, the closed form at ``α = 1`` and the
second-order ODE satisfied by homothety-invariant solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .chart import ChartGrid, Metric2D, OneForm, stencil_table
from .errors import (AccuracyError, ContractError, DomainError, ParameterError,
                     SignatureError, SingularityError, UnsupportedRegimeError)
from .kernels import apply_stencil_axis, hyp3f2_series
from .qee import QEParams, QEStructure, qee_residual
from .report import ResidualReport

SERIES_RTOL = 1e-14
SERIES_MAX_TERMS = 500
ODE_RTOL = 1e-13
STANDOFF = 0.1


def _nonpos_int(v: complex, tol: float = 1e-12) -> Optional[int]:
    """``k`` if ``v = −k`` for an integer ``k ≥ 0``, else ``None``."""
    if abs(v.imag) > tol or v.real > tol:
        return None
    k = round(-v.real)
    return int(k) if abs(v.real + k) <= tol else None


@dataclass(frozen=True)
class SeriesSpec:
    """Parameters and argument of ``₃F₂(a₁, a₂, a₃; b₁, b₂; z)``."""

    a1: complex
    a2: complex
    a3: complex
    b1: complex
    b2: complex
    z: complex = 0.0

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "b1", "b2", "z"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        check_parameters(self.a, self.b)

    @property
    def a(self) -> Tuple[complex, complex, complex]:
        return (self.a1, self.a2, self.a3)

    @property
    def b(self) -> Tuple[complex, complex]:
        return (self.b1, self.b2)


def terminating_degree(a: Sequence[complex]) -> Optional[int]:
    """Degree of the polynomial when some ``a_i`` is a nonpositive integer."""
    ks = [k for k in (_nonpos_int(complex(v)) for v in a) if k is not None]
    return min(ks) if ks else None


def check_parameters(a: Sequence[complex], b: Sequence[complex]):
    """Reject denominator poles that a terminating numerator does not cancel first.

    Raises
    ------
    ParameterError
    """
    deg = terminating_degree(a)
    for v in b:
        k = _nonpos_int(complex(v))
        if k is not None and (deg is None or deg > k):
            raise ParameterError(f"denominator parameter {v} hits a pole of the series")


def _series(a, b, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    vals, nterms = hyp3f2_series(a, b, z.ravel(), SERIES_RTOL, SERIES_MAX_TERMS)
    if np.any(np.asarray(nterms) < 0):
        raise AccuracyError(f"series did not converge in {SERIES_MAX_TERMS} terms")
    return np.asarray(vals).reshape(z.shape)


def _pochhammer(v: complex, k: int) -> complex:
    out = 1.0 + 0.0j
    for j in range(k):
        out *= v + j
    return out


def _series_derivs(a, b, z, k: int):
    """``[F, F′, …, F^(k)]`` from ``F^(j) = ((a)_j/(b)_j) ₃F₂(a + j; b + j; z)``."""
    out = []
    for j in range(k + 1):
        num = _pochhammer(a[0], j) * _pochhammer(a[1], j) * _pochhammer(a[2], j)
        if num == 0:
            out.append(np.zeros(np.shape(z), dtype=complex))
            continue
        den = _pochhammer(b[0], j) * _pochhammer(b[1], j)
        aj = tuple(v + j for v in a)
        bj = tuple(v + j for v in b)
        check_parameters(aj, bj)
        out.append(num / den * _series(aj, bj, z))
    return out


def _ode_coefficients(a, b):
    """Coefficients of ``z³(1−z)F‴ + (…)F″ + (…)F′ − z a₁a₂a₃ F = 0``."""
    s1 = (b[0] - 1) + (b[1] - 1)
    p1 = (b[0] - 1) * (b[1] - 1)
    e1 = a[0] + a[1] + a[2]
    e2 = a[0] * a[1] + a[0] * a[2] + a[1] * a[2]
    e3 = a[0] * a[1] * a[2]

    def rhs(z, F, F1, F2):
        c2 = z**2 * (3 + s1) - z**3 * (3 + e1)
        c1 = z * (1 + s1 + p1) - z**2 * (1 + e1 + e2)
        c0 = -z * e3
        return -(c2 * F2 + c1 * F1 + c0 * F) / (z**3 * (1 - z))

    return rhs


def continuation_path(z: float):
    """Vertices of the integration path from the series anchor to real ``z``.

    Arguments above 1 are reached through the lower half-plane, which gives
    ``√(1 − z) = i√(z − 1)`` and ``arcsin√z = π/2 − i arcsinh√(z − 1)``.
    """
    z = float(z)
    if z > 1:
        if z - 1 < STANDOFF:
            raise DomainError("argument too close to the singular point z = 1")
        return [0.5, 1.0 - 0.5j, complex(z)]
    if z < 0:
        return [-0.5, complex(z)]
    return [0.5, complex(z)]


def _continue(a, b, z: float, k: int = 2):
    path = continuation_path(z)
    z0 = path[0]
    y = np.array([d for d in _series_derivs(a, b, z0, 2)], dtype=complex).ravel()
    rhs = _ode_coefficients(a, b)
    for p, q in zip(path[:-1], path[1:]):
        dz = q - p

        def f(t, Y, p=p, dz=dz):
            zz = p + t * dz
            return np.array([Y[1], Y[2], rhs(zz, Y[0], Y[1], Y[2])]) * dz

        sol = solve_ivp(f, (0.0, 1.0), y, method="DOP853", rtol=ODE_RTOL, atol=1e-15)
        if not sol.success:
            raise AccuracyError(f"continuation failed: {sol.message}")
        y = sol.y[:, -1]
    out = list(y)
    if k >= 3:
        out.append(rhs(complex(z), *y))
    return out[:k + 1]


def hyp3f2_derivs(a, b, z, k: int = 0):
    """``₃F₂`` and its first ``k ≤ 3`` derivatives at real or in-disk ``z``.

    Returns
    -------
    list of ndarray
    """
    if k > 3:
        raise ParameterError("at most three derivatives are available")
    a = tuple(complex(v) for v in a)
    b = tuple(complex(v) for v in b)
    check_parameters(a, b)
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    out = [np.empty(flat.shape, dtype=complex) for _ in range(k + 1)]
    terminating = terminating_degree(a) is not None
    inside = (np.abs(flat) < 0.9) | terminating
    if inside.any():
        vals = _series_derivs(a, b, flat[inside], k)
        for j in range(k + 1):
            out[j][inside] = vals[j]
    for idx in np.flatnonzero(~inside):
        zi = flat[idx]
        if abs(zi.imag) > 0:
            if abs(zi) < 1:
                vals = _series_derivs(a, b, np.array([zi]), k)
                for j in range(k + 1):
                    out[j][idx] = vals[j][0]
                continue
            raise DomainError("continuation is only provided along the real axis")
        vals = _continue(a, b, zi.real, k)
        for j in range(k + 1):
            out[j][idx] = vals[j]
    return [o.reshape(z.shape) for o in out]


def eval_3f2(spec: SeriesSpec) -> complex:
    """Value of ``₃F₂(a; b; z)``.

    Uses the series inside the disk and integrates the hypergeometric ODE
    along an indented path for real arguments outside it.

    Raises
    ------
    ParameterError
        Uncancelled denominator pole.
    AccuracyError
        Series not converged within 500 terms.
    """
    z = spec.z
    if abs(z) < 1 or terminating_degree(spec.a) is not None:
        try:
            return complex(_series(spec.a, spec.b, np.array([z]))[0])
        except AccuracyError:
            if abs(z.imag) > 0:
                raise
    if abs(z.imag) > 0:
        raise DomainError("continuation is only provided along the real axis")
    return complex(_continue(spec.a, spec.b, z.real, 0)[0])


def hyp3f2(a, b, z) -> np.ndarray:
    """Vectorized :func:`eval_3f2`."""
    return hyp3f2_derivs(a, b, z, 0)[0]


# basis of D_α ----------------------------------------------------------


@dataclass(frozen=True)
class HypParams:
    """``C = βC₁ + γC₂ + δC₃`` for ``ν = 1/α``."""

    alpha: float
    beta: complex = 0.0
    gamma: complex = 0.0
    delta: complex = 0.0

    @property
    def nu(self) -> float:
        if self.alpha == 0:
            raise UnsupportedRegimeError("α = 0 needs Meijer G-functions")
        return 1.0 / self.alpha


def sqrt_nu(nu: complex) -> complex:
    """``√ν`` with ``√ν = i√(−ν)`` for negative ``ν``."""
    nu = complex(nu)
    if abs(nu.imag) == 0 and nu.real < 0:
        return 1j * math.sqrt(-nu.real)
    return complex(np.sqrt(nu))


def basis_parameters(nu: complex):
    """Parameters and prefactor exponents of ``C₁, C₂, C₃``."""
    r = sqrt_nu(nu)
    if abs(r.imag) < 1e-14 and abs(2 * r.real - round(2 * r.real)) < 1e-12 \
            and round(2 * r.real) % 2 == 1:
        raise UnsupportedRegimeError("√ν is a half-integer; Meijer G-functions are needed")
    return [
        (-0.5, (-0.5, -0.5, 0.5), (0.5 - r, 0.5 + r)),
        (r, (r, r, 1 + r), (1 + 2 * r, 1.5 + r)),
        (-r, (-r, -r, 1 - r), (1 - 2 * r, 1.5 - r)),
    ]


def _falling(s: complex, j: int) -> complex:
    out = 1.0 + 0.0j
    for i in range(j):
        out *= s - i
    return out


def basis_derivs(nu: complex, z, k: int = 0):
    """``C_i^(j)`` for ``i = 1, 2, 3`` and ``j ≤ k``.

    Returns
    -------
    list of 3 lists of ndarray
    """
    if nu == 0 or not np.isfinite(complex(nu)):
        raise UnsupportedRegimeError("ν must be finite and nonzero")
    z = np.asarray(z, dtype=complex)
    out = []
    for s, a, b in basis_parameters(nu):
        F = hyp3f2_derivs(a, b, z, k)
        C = []
        for n in range(k + 1):
            acc = np.zeros(z.shape, dtype=complex)
            for j in range(n + 1):
                acc = acc + math.comb(n, j) * _falling(s, j) * z ** (s - j) * F[n - j]
            C.append(acc)
        out.append(C)
    return out


def basis(nu: complex, z):
    """``(C₁, C₂, C₃)`` at ``z``.

    Raises
    ------
    UnsupportedRegimeError
        For half-integer ``√ν`` or ``α = 0``.
    """
    C = basis_derivs(nu, z, 0)
    return C[0][0], C[1][0], C[2][0]


def b1_operator(nu: complex, z, C) -> np.ndarray:
    """``2z³(z−1)C‴ + z²(8z−7)C″ + z(4z−3+2ν)C′ + νC`` for ``C = [C, C′, C″, C‴]``."""
    z = np.asarray(z, dtype=complex)
    return (2 * z**3 * (z - 1) * C[3] + z**2 * (8 * z - 7) * C[2]
            + z * (4 * z - 3 + 2 * nu) * C[1] + nu * C[0])


def constraint(p: HypParams) -> complex:
    """``−β²/4 + 4ν(1 − 4ν)γδ``."""
    nu = p.nu
    return -0.25 * p.beta**2 + 4 * nu * (1 - 4 * nu) * p.gamma * p.delta


def nu1_dictionary(beta: complex, gamma: complex, delta: complex):
    """``(a, b, c)`` of the ``α = 1`` closed form from basis coefficients."""
    a = delta + np.pi / 4 * beta - 0.75 * np.pi**2 * gamma
    b = 1j * (0.5 * beta - 3 * np.pi * gamma)
    c = 3 * gamma
    return complex(a), complex(b), complex(c)


def nu1_inverse_dictionary(a: complex, b: complex, c: complex):
    """``(β, γ, δ)`` reproducing the ``α = 1`` closed form with constants ``(a, b, c)``."""
    gamma = c / 3
    beta = -2j * b + 2 * np.pi * c
    delta = a - np.pi / 4 * beta + np.pi**2 * c / 4
    return complex(beta), complex(gamma), complex(delta)


# sampled 1D functions and the operators D_α, L_α ------------------------


@dataclass(frozen=True)
class SampledFunction:
    """Samples of a function on a uniform grid."""

    x: np.ndarray
    values: np.ndarray
    order: int = 8
    meta: Dict[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x)
        if x.dtype != np.longdouble:
            x = x.astype(float)
        v = np.asarray(self.values)
        if x.ndim != 1 or v.shape != x.shape:
            raise DomainError("samples must be one-dimensional and match x")
        if x.size >= 2:
            h = np.diff(x)
            if np.max(np.abs(h - h[0])) > 1e-9 * abs(h[0]):
                raise DomainError("samples must be uniformly spaced")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, func, lo: float, hi: float, n: int, order: int = 8,
                      precision: str = "double", **meta) -> "SampledFunction":
        """Sample ``func`` at ``n`` uniform nodes; ``extended`` uses long double."""
        dtype = np.longdouble if precision == "extended" else float
        x = dtype(lo) + (dtype(hi) - dtype(lo)) * np.arange(n, dtype=dtype) / dtype(n - 1)
        return cls(x, func(x), order, meta)

    @property
    def precision(self) -> str:
        return "extended" if self.x.dtype == np.longdouble else "double"

    @property
    def h(self):
        return self.x[1] - self.x[0]

    def derivative(self, k: int) -> np.ndarray:
        if k == 0:
            return self.values
        w, s = stencil_table(self.x.size, k, self.order, self.precision)
        return apply_stencil_axis(self.values[None, :], w, s)[0] / self.h**k

    def collar(self, k: int) -> np.ndarray:
        """Nodes away from the one-sided stencils of derivative ``k``."""
        keep = np.zeros(self.x.size, dtype=bool)
        c = self.order // 2
        keep[c:self.x.size - c] = True
        return keep


def _check_standoff(x: np.ndarray, alpha: float):
    for p in {0.0, float(alpha)}:
        if np.min(np.abs(x.astype(float) - p)) < STANDOFF:
            raise DomainError(f"samples come within {STANDOFF} of the singular point {p}")


def _line_report(name: str, x: np.ndarray, r: np.ndarray, keep: np.ndarray,
                 meta: Optional[dict] = None) -> ResidualReport:
    a = np.abs(r)
    a = np.where(keep, a, -np.inf)
    i = int(np.argmax(a))
    vals = np.abs(r[keep]).astype(float)
    return ResidualReport(name, float(vals.max()), float(np.sqrt(np.mean(vals**2))),
                          {"x": float(x[i])}, {"nx": int(x.size)}, meta=dict(meta or {}))


def _needs(C: SampledFunction, npts: int = 9):
    if C.x.size < max(npts, C.order + 3):
        raise DomainError("too few samples for third-derivative stencils")


def dalpha_operator(x, C, alpha: float):
    """``x³(x−α)C‴ + (4x³ − 7αx²/2)C″ + x(2x + 1 − 3α/2)C′ + C/2``."""
    return (x**3 * (x - alpha) * C[3] + (4 * x**3 - 3.5 * alpha * x**2) * C[2]
            + x * (2 * x + 1 - 1.5 * alpha) * C[1] + 0.5 * C[0])


def lalpha_operator(x, C, alpha: float):
    """``x⁴(x−α)C″² + 3x³(x−α)C′C″ + x²(2x + 1 − 9α/4)C′² + xCC′ + C²/4``."""
    return (x**4 * (x - alpha) * C[2] ** 2 + 3 * x**3 * (x - alpha) * C[1] * C[2]
            + x**2 * (2 * x + 1 - 2.25 * alpha) * C[1] ** 2 + x * C[0] * C[1] + 0.25 * C[0] ** 2)


def dalpha_residual(C: SampledFunction, alpha: float) -> ResidualReport:
    """Sup-norm of ``D_α C`` from stencil derivatives of the samples."""
    _needs(C)
    _check_standoff(C.x, alpha)
    d = [C.derivative(k) for k in range(4)]
    return _line_report("dalpha", C.x, dalpha_operator(C.x, d, alpha), C.collar(3),
                        {"alpha": alpha})


def lalpha_residual(C: SampledFunction, alpha: float) -> ResidualReport:
    """Sup-norm of ``L_α C`` from stencil derivatives of the samples."""
    _needs(C)
    _check_standoff(C.x, alpha)
    d = [C.derivative(k) for k in range(3)]
    r = lalpha_operator(C.x, d, alpha)
    keep = C.collar(2)
    rep = _line_report("lalpha", C.x, r, keep, {"alpha": alpha})
    rep.meta["deviation"] = float(np.max(np.abs(r[keep] - np.mean(r[keep]))))
    return rep


# α = 1 closed form and its structure ----------------------------------


def alpha1_C(a, b, c, x, k: int = 0):
    """Closed-form ``C`` for ``α = 1`` and its first ``k ≤ 2`` derivatives, ``x > 1``."""
    x = np.asarray(x)
    if x.dtype != np.longdouble:
        x = x.astype(float)
    if np.any(x <= 1):
        raise DomainError("the α = 1 closed form needs x > 1")
    S = np.sqrt(x * (x - 1))
    A = np.arcsinh(np.sqrt(x - 1))
    q = np.sqrt((x - 1) / x)
    N = a + b * (S - A) + c * (3 * x + A**2 - 2 * S * A)
    N1 = b * q + c * (2 - 2 * q * A)
    N2 = (b - 2 * c * A) / (2 * q * x**2) - c / x
    out = [N / x, N1 / x - N / x**2, N2 / x - 2 * N1 / x**2 + 2 * N / x**3]
    return out[:k + 1]


def structure_from_C(C, C1, C2, x, y, alpha: float):
    """Metric and 1-form components of the ``(x, y)`` homothety ansatz.

    ``g = e^y C′(dx²/(x−α) + x²dy²)`` and
    ``X♭ = ((3C′ + 2xC″)dx + (2xC′ + C)dy)/(2xC′)``.
    """
    gxx = np.exp(y) * C1 / (x - alpha)
    gyy = np.exp(y) * C1 * x**2
    Xx = (3 * C1 + 2 * x * C2) / (2 * x * C1)
    Xy = (2 * x * C1 + C) / (2 * x * C1)
    return gxx, gyy, Xx, Xy


@dataclass(frozen=True)
class Alpha1Solution:
    """Closed-form ``C`` with its assembled structure."""

    a: float
    b: float
    c: float
    C: SampledFunction
    structure: QEStructure


def alpha1_solution(a: float, b: float, c: float, x_range=(1.25, 4.0),
                    y_range=(0.0, 1.0), n=(257, 65), precision: str = "double",
                    samples: int = 513, check_constraint: bool = True) -> Alpha1Solution:
    """Assemble the ``α = 1`` solution on an ``(x, y)`` chart.

    ``C`` is also returned as ``samples`` long-double values on ``x_range``
    so the third-order operator can be checked with stencils.

    Raises
    ------
    ContractError
        If ``b² ≠ 4ac`` and ``check_constraint`` is set.
    SignatureError
        If ``C′ ≤ 0`` somewhere on the range.
    """
    disc = b * b - 4 * a * c
    if check_constraint and abs(disc) > 1e-12 * max(1.0, b * b, abs(4 * a * c)):
        raise ContractError(f"b² − 4ac = {disc:.3e} ≠ 0; not a quasi-Einstein solution")
    nx, ny = (n, n) if np.isscalar(n) else n
    grid = ChartGrid(x_range, y_range, nx, ny, precision=precision)
    _check_standoff(np.asarray(grid.x, dtype=float), 1.0)
    X, Y = grid.X, grid.Y
    C0, C1, C2 = _alpha1_C_grid(a, b, c, X)
    if np.any(C1 <= 0):
        raise SignatureError("C′ ≤ 0 on the range; the metric is not Riemannian")
    gxx, gyy, Xx, Xy = structure_from_C(C0, C1, C2, X, Y, 1.0)
    s = QEStructure.general(Metric2D.diagonal(grid, gxx, gyy), OneForm(grid, Xx, Xy))
    samp = SampledFunction.from_function(lambda x: alpha1_C(a, b, c, x)[0], x_range[0],
                                         x_range[1], samples, precision="extended", alpha=1.0)
    return Alpha1Solution(a, b, c, samp, s)


def _alpha1_C_grid(a, b, c, X):
    """Closed form evaluated in the grid's precision."""
    S = np.sqrt(X * (X - 1))
    A = np.arcsinh(np.sqrt(X - 1))
    q = np.sqrt((X - 1) / X)
    N = a + b * (S - A) + c * (3 * X + A**2 - 2 * S * A)
    N1 = b * q + c * (2 - 2 * q * A)
    N2 = (b - 2 * c * A) / (2 * q * X**2) - c / X
    return N / X, N1 / X - N / X**2, N2 / X - 2 * N1 / X**2 + 2 * N / X**3


def family_coefficients(beta: float):
    """``(a, b, c) = (−β², 2β, −1)``, the ``c = −1`` solution of ``b² = 4ac``."""
    return -beta * beta, 2.0 * beta, -1.0


def explicit_components(beta: float, t, y):
    """``(g_tt, g_yy, X_t, X_y)`` of the one-parameter family with ``f = arcsinh t + β``."""
    f = np.arcsinh(t) + beta
    F = f**2 + t**2 + 1
    r = np.sqrt(t**2 + 1)
    gtt = np.exp(y) * F * 4 / (1 + t**2) ** 2
    gyy = np.exp(y) * F
    Xt = (-t * f**2 + 2 * f * r + t * (t**2 + 1)) / ((t**2 + 1) * F)
    Xy = (f**2 + 2 * t * f * r - t**2 - 1) / (2 * F)
    return gtt, gyy, Xt, Xy


def alpha1_in_t(a, b, c, t, y):
    """The ``α = 1`` structure rewritten in ``t = √(x − 1)`` (for ``t > 0``)."""
    x = 1 + t**2
    C0, C1, C2 = _alpha1_C_grid(a, b, c, x)
    gxx, gyy, Xx, Xy = structure_from_C(C0, C1, C2, x, y, 1.0)
    dxdt = 2 * t
    return gxx * dxdt**2, gyy, Xx * dxdt, Xy


def explicit_family(beta: float, t_range=(-2.0, 2.0), y_range=(0.0, 1.0), n=(193, 65),
                    precision: str = "double", certify: bool = True,
                    tol: float = 1e-8) -> QEStructure:
    """The one-parameter ``m = −1`` family in ``(t, y)`` coordinates.

    Parameters
    ----------
    beta : float
    t_range, y_range : tuple
    n : int or tuple of int
        Nodes along ``t`` and ``y``.
    precision : {"double", "extended"}
    certify : bool
        Check the quasi-Einstein residual on construction.
    tol : float

    Raises
    ------
    AccuracyError
        If certification fails.
    """
    nt, ny = (n, n) if np.isscalar(n) else n
    grid = ChartGrid(t_range, y_range, nt, ny, precision=precision)
    gtt, gyy, Xt, Xy = explicit_components(beta, grid.X, grid.Y)
    s = QEStructure.general(Metric2D.diagonal(grid, gtt, gyy), OneForm(grid, Xt, Xy))
    if certify:
        r = qee_residual(s, QEParams(-1.0))
        if not r.passes(tol):
            raise AccuracyError(f"family residual {r.sup:.3e} exceeds {tol:.1e}")
    return s


# homothety ODE ---------------------------------------------------------


def homothety_rhs(m: float):
    """``(Z, Z′) ↦ (Z′, Z″)`` for the second-order homothety ODE."""

    def f(s, Y):
        Z, Zp = Y
        w = m + s * Z
        num = (-m * (s**2 + 1) * w * Zp**2 + Z * Zp * w * (2 * m * s - m * Z + 4 * s**2 * Z)
               + Z**2 * (m**2 + 3 * m * s * Z + Z**2 * (2 * s**2 + m)))
        return [Zp, -num / (Z * (s**2 + 1) * w**2)]

    return f


def homothety_ode_residual(m: float, s, Z, Zp, Zpp):
    """Left side of the ODE for given ``Z, Z′, Z″`` samples."""
    w = m + s * Z
    return (Z * (s**2 + 1) * w**2 * Zpp - m * (s**2 + 1) * w * Zp**2
            + Z * Zp * w * (2 * m * s - m * Z + 4 * s**2 * Z)
            + Z**2 * (m**2 + 3 * m * s * Z + Z**2 * (2 * s**2 + m)))


@dataclass(frozen=True)
class HomothetySolution:
    """Integrated ``Z(s)`` with the assembled structure on an ``(r, s)`` chart."""

    m: float
    s_range: Tuple[float, float]
    s: np.ndarray
    Z: np.ndarray
    Zp: np.ndarray
    structure: QEStructure
    meta: Dict[str, object] = field(default_factory=dict, compare=False)


def _integrate_branch(m, Y0, s0, s1, s_eval):
    f = homothety_rhs(m)

    def guard(s, Y):
        return m + s * Y[0]

    def zero(s, Y):
        return Y[0]

    guard.terminal = zero.terminal = True
    sol = solve_ivp(f, (s0, s1), Y0, method="DOP853", rtol=1e-13, atol=1e-14,
                    t_eval=s_eval, events=[guard, zero], dense_output=False)
    for ev, what in zip(sol.t_events, ("m + sZ", "Z")):
        if len(ev):
            raise SingularityError(f"{what} vanishes at s = {ev[0]:.6g}", location=float(ev[0]))
    if not sol.success:
        raise SingularityError(f"integration stopped: {sol.message}", location=float(sol.t[-1]))
    return sol.y


def homothety_integrate(m: float, Z0: float, Zp0: float, s_range=(-0.5, 0.5),
                        r_range=(0.0, 1.0), n=(17, 2049),
                        precision: str = "double") -> HomothetySolution:
    """Integrate the homothety ODE from ``s = 0`` and assemble ``(g, X♭)``.

    ``g = e^r Z((1+s²)dr² + 2(s+V)dr ds + (V²+1)ds²)`` and
    ``X♭ = Z(s dr + ds)`` with ``V = Z/(m + sZ)``; the chart has ``r`` along
    its first axis and ``s`` along the second.

    Raises
    ------
    SingularityError
        If ``m + sZ`` or ``Z`` vanishes on the range.
    """
    if m == 0:
        raise ParameterError("m must be nonzero")
    lo, hi = s_range
    if not lo <= 0 <= hi:
        raise DomainError("s_range must contain the initial point s = 0")
    if m + 0 * Z0 == 0 or Z0 <= 0:
        raise SingularityError("initial data is singular", location=0.0)
    nr, ns = (n, n) if np.isscalar(n) else n
    grid = ChartGrid(r_range, s_range, nr, ns, precision=precision)
    s = np.asarray(grid.y, dtype=float)
    Z = np.empty(ns)
    Zp = np.empty(ns)
    up = s >= 0
    down = s <= 0
    if up.any():
        Yu = _integrate_branch(m, [Z0, Zp0], 0.0, max(hi, s[-1]), s[up])
        Z[up], Zp[up] = Yu
    if down.any():
        Yd = _integrate_branch(m, [Z0, Zp0], 0.0, min(lo, s[0]), s[down][::-1])
        Z[down], Zp[down] = Yd[0][::-1], Yd[1][::-1]
    Zg = grid.real_array(Z[:, None])
    S = grid.Y
    V = Zg / (m + S * Zg)
    e = np.exp(grid.X) * Zg
    metric = Metric2D(grid, e * (1 + S**2), e * (S + V), e * (V**2 + 1))
    X = OneForm(grid, Zg * S, Zg)
    return HomothetySolution(m, tuple(s_range), s, Z, Zp, QEStructure.general(metric, X),
                             {"Z0": Z0, "Zp0": Zp0})
