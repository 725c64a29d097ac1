"""Residual reports: sup/RMS norms of pointwise defects over a chart."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from .chart import ChartGrid


@dataclass
class ResidualReport:
    """Norms of a pointwise residual.

    Attributes
    ----------
    name : str
    sup : float
        Max-norm over the evaluated nodes.
    l2 : float
        Root-mean-square over the evaluated nodes.
    worst_point : dict
        Coordinates ``{x, y}`` of the largest defect.
    grid : dict
        ``{nx, ny}`` of the chart.
    parts : dict of str to ResidualReport
        Named sub-residuals; ``sup`` of the parent is their maximum.
    meta : dict
        Free-form scalar metadata (iteration counts, shifts).
    """

    name: str
    sup: float
    l2: float
    worst_point: Dict[str, float] = field(default_factory=dict)
    grid: Dict[str, int] = field(default_factory=dict)
    parts: Dict[str, "ResidualReport"] = field(default_factory=dict)
    meta: Dict[str, object] = field(default_factory=dict)

    def __getitem__(self, key: str) -> "ResidualReport":
        return self.parts[key]

    def passes(self, tol: float) -> bool:
        return bool(np.isfinite(self.sup) and self.sup <= tol)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "sup": float(self.sup),
            "l2": float(self.l2),
            "worst_point": {k: float(v) for k, v in self.worst_point.items()},
            "grid": dict(self.grid),
        }
        if self.parts:
            d["parts"] = {k: v.to_dict() for k, v in self.parts.items()}
        if self.meta:
            d["meta"] = _jsonable(self.meta)
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "ResidualReport":
        return cls(d["name"], d["sup"], d["l2"], d.get("worst_point", {}), d.get("grid", {}),
                   {k: cls.from_dict(v) for k, v in d.get("parts", {}).items()},
                   d.get("meta", {}))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def pointwise_norm(components: Sequence[np.ndarray]) -> np.ndarray:
    """Euclidean norm of a list of (complex) component arrays."""
    acc = 0.0
    for c in components:
        acc = acc + np.abs(c) ** 2
    return np.sqrt(acc)


def field_report(name: str, grid: ChartGrid, components, depth: int = 1,
                 where: Optional[np.ndarray] = None, meta: Optional[dict] = None) -> ResidualReport:
    """Build a report from pointwise residual components.

    Parameters
    ----------
    name : str
    grid : ChartGrid
    components : ndarray or sequence of ndarray
        Residual components; their pointwise Euclidean norm is reported.
    depth : int
        Nesting depth of the stencils used; nodes within ``depth``
        half-widths of the edge are excluded.
    where : ndarray of bool, optional
        Extra restriction of the evaluated nodes.
    """
    if isinstance(components, np.ndarray):
        components = [components]
    r = pointwise_norm([np.broadcast_to(np.asarray(c), grid.shape) for c in components])
    r = r.astype(float)
    keep = grid.interior(depth)
    if where is not None:
        keep = keep & where
    if not keep.any():
        return ResidualReport(name, float("nan"), float("nan"), {}, {"nx": grid.nx, "ny": grid.ny},
                              meta=dict(meta or {}))
    vals = np.where(keep, r, -np.inf)
    j, i = np.unravel_index(int(np.argmax(vals)), vals.shape)
    x, y = grid.coords(j, i)
    sup = float(r[j, i]) if np.isfinite(r[j, i]) else float("inf")
    if not np.isfinite(r[keep]).all():
        sup = float("inf")
    l2 = float(np.sqrt(np.mean(r[keep] ** 2)))
    return ResidualReport(name, sup, l2, {"x": x, "y": y}, {"nx": grid.nx, "ny": grid.ny},
                          meta=dict(meta or {}))


def combine(name: str, parts: Dict[str, ResidualReport], meta: Optional[dict] = None) -> ResidualReport:
    """Parent report whose norms are the maxima of its parts."""
    worst = max(parts.values(), key=lambda p: p.sup if np.isfinite(p.sup) else np.inf)
    return ResidualReport(name, float(max(p.sup for p in parts.values())),
                          float(max(p.l2 for p in parts.values())),
                          dict(worst.worst_point), dict(worst.grid), dict(parts), dict(meta or {}))


def scalar_report(name: str, value: float, meta: Optional[dict] = None) -> ResidualReport:
    """Report for a residual that is a single number."""
    v = float(abs(value))
    return ResidualReport(name, v, v, meta=dict(meta or {}))
