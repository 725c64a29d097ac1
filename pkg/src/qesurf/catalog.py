"""Registry of built-in solution families with their certification suites.

Every family samples a structure on a chart, serializes it to named field
columns, and certifies it by rebuilding the structure from those columns.
The same rebuild path serves ``verify --input``, so a table written by
``catalog show`` reproduces the verdict of the run that produced it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from .chart import ChartGrid, Metric2D, OneForm
from .errors import ParameterError
from .ew import (MobiusMap, WarpedProductSpec, WarpedStructure3D, constcurv_residual,
                 mobius_sphere_structure, s2xs1_structure, sphere_metric, warped_residual)
from .hitchin import (ThetaField, curvature_certificate, hitchin_pair, hitchin_residual,
                      imQ_residual, lax_commutator, theta_structure)
from .hyp import alpha1_solution, explicit_family, homothety_integrate
from .qee import QEParams, QEStructure, holomorphy_test, prolong, prolongation_residuals, \
    qee_residual, zero_index
from .report import ResidualReport

LAX_SAMPLES = (0.3, -1.2, 2.5)


@dataclass
class Check:
    """A residual report paired with its acceptance tolerance."""

    report: ResidualReport
    tol: float

    @property
    def passed(self) -> bool:
        return self.report.passes(self.tol)

    def to_dict(self) -> dict:
        d = self.report.to_dict()
        d["tol"] = float(self.tol)
        d["pass"] = self.passed
        return d


@dataclass(frozen=True)
class Param:
    name: str
    default: object
    doc: str
    kind: str = "float"

    def parse(self, text: str):
        if self.kind == "float":
            return float(text)
        if self.kind == "str":
            return str(text)
        if self.kind == "mobius":
            return parse_mobius(text)
        raise ParameterError(f"unknown parameter kind {self.kind!r}")


@dataclass
class Sample:
    """A sampled family member ready for serialization and certification."""

    family: str
    kind: str
    grid: ChartGrid
    fields: Dict[str, np.ndarray]
    meta: Dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class Family:
    """Registry entry.

    Attributes
    ----------
    name : str
    summary : str
    params : tuple of Param
    x_range, y_range : tuple of float
        Default chart.
    n : tuple of int
        Default node counts ``(nx, ny)``.
    build : callable
        ``build(params, grid) -> Sample``.
    """

    name: str
    summary: str
    params: Tuple[Param, ...]
    x_range: Tuple[float, float]
    y_range: Tuple[float, float]
    n: Tuple[int, int]
    build: Callable[[dict, Optional[ChartGrid]], Sample]
    precision: str = "double"

    def defaults(self) -> dict:
        return {p.name: p.default for p in self.params}

    def schema(self) -> dict:
        return {
            "name": self.name,
            "summary": self.summary,
            "params": {p.name: {"default": _jsonable_param(p.default), "kind": p.kind,
                                "doc": p.doc} for p in self.params},
            "range": [*self.x_range, *self.y_range],
            "grid": list(self.n),
            "precision": self.precision,
        }

    def grid(self, n=None, ranges=None, precision: Optional[str] = None) -> ChartGrid:
        nx, ny = n or self.n
        if ranges is None:
            xr, yr = self.x_range, self.y_range
        else:
            xr, yr = tuple(ranges[:2]), tuple(ranges[2:])
        return ChartGrid(xr, yr, int(nx), int(ny), precision=precision or self.precision)

    def sample(self, params: Optional[Mapping] = None, grid: Optional[ChartGrid] = None) -> Sample:
        p = self.defaults()
        for k, v in (params or {}).items():
            if k not in p:
                raise ParameterError(f"family {self.name!r} has no parameter {k!r}")
            p[k] = v
        s = self.build(p, grid or self.grid())
        s.meta.setdefault("params", {k: _jsonable_param(v) for k, v in p.items()})
        return s


def _jsonable_param(v):
    if isinstance(v, MobiusMap):
        return v.to_json()
    return v


def parse_mobius(text: str) -> MobiusMap:
    """``"a=2,b=0,c=0,d=1"`` with omitted entries taken from the identity."""
    coef = {"a": 1.0, "b": 0.0, "c": 0.0, "d": 1.0}
    for item in filter(None, (t.strip() for t in text.split(","))):
        key, _, val = item.partition("=")
        key = key.strip()
        if key not in coef or not val:
            raise ParameterError(f"malformed Möbius coefficient {item!r}")
        coef[key] = complex(val.strip().replace("i", "j"))
    return MobiusMap(*(coef[k] for k in "abcd"))


# rebuilding and certification -------------------------------------------


def rebuild(kind: str, grid: ChartGrid, cols: Mapping[str, np.ndarray], meta: Mapping):
    """Structure object of a serialized sample."""
    if kind == "conformal":
        return QEStructure.conformal(grid, np.real(cols["H"]), cols["P"])
    if kind == "general":
        metric = Metric2D(grid, np.real(cols["gxx"]), np.real(cols["gxy"]), np.real(cols["gyy"]))
        return QEStructure.general(metric, OneForm(grid, np.real(cols["Xx"]), np.real(cols["Xy"])))
    if kind == "s2xs1":
        return WarpedStructure3D(sphere_metric(grid), np.real(cols["u"]), float(meta["lam"]))
    if kind == "warped":
        metric = Metric2D.conformal(grid, np.real(cols["H"]))
        return WarpedProductSpec.from_metric(metric, np.real(cols["u"]), float(meta["m"]),
                                             float(meta["lam"]))
    raise ParameterError(f"unknown structure kind {kind!r}")


def _run_check(name: str, obj, meta: Mapping, tol: float) -> List[Check]:
    m, lam = float(meta.get("m", -1.0)), float(meta.get("lam", 0.0))
    if name == "qee":
        return [Check(qee_residual(obj, QEParams(m, lam)), tol)]
    if name == "prolongation":
        return [Check(prolongation_residuals(prolong(obj), QEParams(m, lam)), tol)]
    if name == "hitchin":
        return [Check(hitchin_residual(hitchin_pair(obj)), tol)]
    if name == "lax":
        return [Check(lax_commutator(obj, LAX_SAMPLES), tol)]
    if name == "curvature_certificate":
        return [Check(curvature_certificate(obj), tol)]
    if name == "imQ":
        return [Check(imQ_residual(obj), tol)]
    if name == "holomorphy":
        return [Check(holomorphy_test(obj, -2.0 / m), tol)]
    if name == "constcurv":
        return [Check(constcurv_residual(obj.u, obj.lam, obj.grid), tol)]
    if name == "warped":
        r = warped_residual(obj)
        return [Check(r.parts[k], tol) for k in ("tangential", "tt", "normalization")]
    raise ParameterError(f"unknown check {name!r}")


def certify(kind: str, grid: ChartGrid, cols: Mapping[str, np.ndarray], meta: Mapping,
            tol: Optional[float] = None) -> List[Check]:
    """Run the checks listed in ``meta["checks"]`` on a serialized sample.

    Parameters
    ----------
    tol : float, optional
        Overrides every per-check tolerance.
    """
    obj = rebuild(kind, grid, cols, meta)
    out: List[Check] = []
    for name, t in meta["checks"]:
        out += _run_check(name, obj, meta, float(tol) if tol is not None else float(t))
    return out


def certify_sample(s: Sample, tol: Optional[float] = None) -> List[Check]:
    return certify(s.kind, s.grid, s.fields, s.meta, tol)


def perturb(cols: Mapping[str, np.ndarray], grid: ChartGrid, name: str,
            rel: float) -> Dict[str, np.ndarray]:
    """Multiply one field by ``1 + rel·b`` for a smooth bump ``b`` centred on the chart."""
    if name not in cols:
        raise ParameterError(f"no field {name!r} to perturb; have {sorted(cols)}")
    x0, x1 = grid.x_range
    y0, y1 = grid.y_range
    xh = (grid.X - x0) / (x1 - x0) - 0.5
    yh = (grid.Y - y0) / (y1 - y0) - 0.5
    bump = np.exp(-(xh**2 + yh**2) / 0.1)
    out = dict(cols)
    out[name] = np.asarray(cols[name]) * (1.0 + rel * bump)
    return out


# family builders ---------------------------------------------------------


def _conformal_sample(name: str, s: QEStructure, meta: dict) -> Sample:
    return Sample(name, "conformal", s.grid, {"H": s.H, "P": s.P},
                  meta)


def _general_sample(name: str, s: QEStructure, meta: dict) -> Sample:
    g = s.metric
    return Sample(name, "general", s.grid, {
        "gxx": g.gxx, "gxy": g.gxy, "gyy": g.gyy, "Xx": s.X.ax.real, "Xy": s.X.ay.real}, meta)


_HITCHIN_CHECKS = [("qee", 1e-10), ("hitchin", 1e-10), ("lax", 1e-9),
                   ("curvature_certificate", 1e-8), ("imQ", 1e-8), ("prolongation", 1e-6)]


def _theta_family(theta: float):
    def build(p, grid):
        s = theta_structure(ThetaField(grid, np.full(grid.shape, theta)), (0, 0), p["H0"])
        return _conformal_sample("", s, {"m": -1.0, "lam": 0.0, "checks": _HITCHIN_CHECKS})
    return build


def _mobius_sphere(p, grid):
    f, m = p["mobius"], float(p["m"])
    s = mobius_sphere_structure(f, m, grid, p["patch"])
    meta = {"m": m, "lam": 1.0 + m,
            "checks": [("qee", 1e-8), ("holomorphy", 1e-7)]}
    zeros = mobius_zero_indices(f, m)
    meta["zero_indices"] = zeros
    return _conformal_sample("", s, meta)


def mobius_zero_indices(f: MobiusMap, m: float, n: int = 65) -> Dict[str, int]:
    """Index of the zero of the Möbius sphere structure in each stereographic chart.

    The zeros sit at ``f⁻¹(0)`` and ``f⁻¹(∞)``; each is examined in the
    chart where it is closest to the origin, on a small square around it.
    """
    out = {}
    for target, key in ((0.0, "zero"), (np.inf, "pole")):
        if target == 0.0:
            zn = -f.b / f.a if f.a != 0 else np.inf
        else:
            zn = -f.d / f.c if f.c != 0 else np.inf
        if np.isfinite(zn) and abs(zn) <= 1.0:
            patch, z0 = "north", complex(zn)
        else:
            patch, z0 = "south", (0j if not np.isfinite(zn) else 1.0 / complex(zn))
        fc = f if patch == "north" else f.other_chart()
        # keep the square well inside the disk where the height function is nonzero
        r = _safe_radius(fc, z0)
        grid = ChartGrid((z0.real - r, z0.real + r), (z0.imag - r, z0.imag + r), n, n)
        s = mobius_sphere_structure(f, m, grid, patch)
        out[f"{key}@{patch}"] = zero_index(s.X, s.metric, (z0.real, z0.imag), 0.5 * r)
    return out


def _safe_radius(fc: MobiusMap, z0: complex) -> float:
    r = 0.4
    while r > 1e-3:
        t = np.linspace(0, 2 * np.pi, 64)
        ring = z0 + np.sqrt(2.0) * r * np.exp(1j * t)
        p = fc.pole()
        if np.max(np.abs(fc(ring))) < 0.6 and (p is None or np.min(np.abs(ring - p)) > 2 * r):
            return r
        r *= 0.5
    return r


def _s2xs1(p, grid):
    s = s2xs1_structure(p["mobius"], float(p["lam"]), grid, p["patch"])
    meta = {"m": -1.0, "lam": float(p["lam"]),
            "checks": [("constcurv", 1e-8), ("warped", 1e-7)]}
    return Sample("", "s2xs1", grid, {"u": s.u}, meta)


def _arcsinh(p, grid):
    s = explicit_family(float(p["beta"]), grid.x_range, grid.y_range, (grid.nx, grid.ny),
                        grid.precision, certify=False)
    return _general_sample("", s, {"m": -1.0, "lam": 0.0,
                                   "checks": [("qee", 1e-8), ("curvature_certificate", 1e-6)]})


def _warped(p, grid):
    m, lam = float(p["m"]), float(p["lam"])
    if not (m < 0 and lam > 0):
        raise ParameterError("the constant-u product needs m < 0 and λ > 0")
    # base Einstein with Ric = λ g: round sphere scaled to curvature λ
    base = sphere_metric(grid).scaled(1.0 / lam)
    u = np.full(grid.shape, 0.5 * m * np.log(-m * lam))
    return Sample("", "warped", grid, {"H": base.H, "u": grid.real_array(u)},
                  {"m": m, "lam": lam, "checks": [("warped", 1e-9)]})


def _homothety(p, grid):
    m = float(p["m"])
    sol = homothety_integrate(m, float(p["Z0"]), float(p["Zp0"]), grid.y_range, grid.x_range,
                              (grid.nx, grid.ny), grid.precision)
    checks = [("qee", 1e-6)]
    if m == -1.0:
        checks.append(("curvature_certificate", 1e-6))
    return _general_sample("", sol.structure, {"m": m, "lam": 0.0, "checks": checks})


def _alpha1(p, grid):
    sol = alpha1_solution(float(p["a"]), float(p["b"]), float(p["c"]), grid.x_range,
                          grid.y_range, (grid.nx, grid.ny), grid.precision)
    return _general_sample("", sol.structure, {"m": -1.0, "lam": 0.0,
                                               "checks": [("qee", 1e-7)]})


_MOBIUS_DEFAULT = MobiusMap.scaling(2)

FAMILIES: Dict[str, Family] = {}


def register(f: Family):
    FAMILIES[f.name] = f
    return f


register(Family("flat-theta", "constant angle Θ = π/2: flat metric, X♭ = dy/y",
                (Param("H0", -float(np.log(2.0)), "value of H at the base node"),),
                (0.0, 1.0), (1.0, 2.0), (65, 65), _theta_family(np.pi / 2), "extended"))
register(Family("hyperbolic-theta", "constant angle Θ = −π/2: hyperbolic metric, X♭ = −dy/y",
                (Param("H0", -float(np.log(2.0)), "value of H at the base node"),),
                (0.0, 1.0), (1.0, 2.0), (65, 65), _theta_family(-np.pi / 2), "extended"))
register(Family("mobius-sphere", "gradient structure on the round sphere pulled back by a Möbius map",
                (Param("mobius", _MOBIUS_DEFAULT, "Möbius map a=..,b=..,c=..,d=..", "mobius"),
                 Param("m", -1.0, "coupling m (λ = 1 + m)"),
                 Param("patch", "north", "stereographic chart", "str")),
                (-0.2, 0.2), (-0.2, 0.2), (65, 65), _mobius_sphere))
register(Family("s2xs1", "S² × S¹ structure e^u(g_S² ⊕ dt²), X♭ = dt + ½du, m = −1",
                (Param("mobius", _MOBIUS_DEFAULT, "Möbius map a=..,b=..,c=..,d=..", "mobius"),
                 Param("lam", 1.0, "curvature constant λ > 0"),
                 Param("patch", "north", "stereographic chart", "str")),
                (-1.2, 1.2), (-1.2, 1.2), (129, 129), _s2xs1))
register(Family("arcsinh", "non-gradient m = −1 family with f(t) = arcsinh t + β",
                (Param("beta", 0.5, "shift β"),),
                (-2.0, 2.0), (0.0, 1.0), (193, 65), _arcsinh))
register(Family("warped-product", "product of a round base with a circle at constant u",
                (Param("m", -2.0, "coupling m < 0"), Param("lam", 1.0, "λ > 0")),
                (-0.5, 0.5), (-0.5, 0.5), (65, 65), _warped))
register(Family("homothety", "homothety-invariant structure from the Z(s) ODE",
                (Param("m", -2.0, "coupling m"), Param("Z0", 1.0, "Z(0)"),
                 Param("Zp0", 0.3, "Z'(0)")),
                (0.0, 1.0), (-0.5, 0.5), (17, 2049), _homothety))
register(Family("alpha1", "closed-form α = 1 reduction with C(x) from constants a, b, c",
                (Param("a", -0.25, "constant a"), Param("b", 1.0, "constant b"),
                 Param("c", -1.0, "constant c")),
                (1.25, 4.0), (0.0, 1.0), (257, 65), _alpha1))


def get(name: str) -> Family:
    try:
        return FAMILIES[name]
    except KeyError:
        raise ParameterError(f"unknown family {name!r}; known: {', '.join(FAMILIES)}") from None


def names() -> List[str]:
    return list(FAMILIES)


def sample(name: str, params: Optional[Mapping] = None, grid: Optional[ChartGrid] = None) -> Sample:
    fam = get(name)
    s = fam.sample(params, grid)
    s.family = name
    return s
