"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a check fails or a solver
does not converge, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import catalog
from . import io as qio
from .catalog import Check
from .chart import ChartGrid
from .errors import ConvergenceError, QesurfError, SingularityError
from .hitchin import (curvature_certificate, reconstruct_H, theta_P, theta_residual,
                      theta_solve)
from .hyp import SeriesSpec, eval_3f2, homothety_integrate, hyp3f2_derivs
from .qee import QEParams, QEStructure, qee_residual
from .report import scalar_report

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
COMMANDS = ("verify", "solve-theta", "solve-ode", "catalog", "hyp-eval")


class ConfigError(Exception):
    """Malformed or inconsistent run configuration (exit code 2)."""


@dataclass
class RunConfig:
    """Everything a run needs; built from flags, a JSON file, or both.

    Flags given on the command line override entries of the JSON file.
    """

    command: str
    inputs: List[str] = field(default_factory=list)
    grid: Optional[List[int]] = None
    range: Optional[List[float]] = None
    tol: Optional[float] = None
    out: Optional[str] = None
    family: Optional[str] = None
    params: Dict[str, object] = field(default_factory=dict)
    perturb: Optional[Dict[str, object]] = None
    solver: Dict[str, object] = field(default_factory=dict)
    options: Dict[str, object] = field(default_factory=dict)

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        for p in self.inputs:
            if not Path(p).is_file():
                raise ConfigError(f"input file {p!r} does not exist")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("tolerances must be positive")
        if self.grid is not None and (len(self.grid) != 2 or min(self.grid) < 5):
            raise ConfigError("--grid needs two counts of at least 5")
        if self.range is not None and len(self.range) != 4:
            raise ConfigError("--range needs x0,x1,y0,y1")
        for k in ("tol", "max_iter", "damping_max_halvings"):
            v = self.solver.get(k)
            if v is not None and not float(v) > 0:
                raise ConfigError(f"solver {k} must be positive")
        return self

    def echo(self) -> dict:
        d = {"command": self.command}
        for k in ("inputs", "grid", "range", "tol", "family", "params", "perturb", "solver",
                  "options"):
            v = getattr(self, k)
            if v not in (None, [], {}):
                d[k] = _plain(v)
        return d


@dataclass
class RunReport:
    """Result of a run: the checks, the verdict and optional timing."""

    config: RunConfig
    checks: List[Check] = field(default_factory=list)
    extra: Dict[str, object] = field(default_factory=dict)
    wall_time: Optional[float] = None
    failed: bool = False

    @property
    def passed(self) -> bool:
        return not self.failed and all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        return EXIT_PASS if self.passed else EXIT_FAIL

    def to_dict(self) -> dict:
        d = {
            "command": self.config.echo(),
            "checks": [c.to_dict() for c in self.checks],
            "verdict": "pass" if self.passed else "fail",
        }
        failing = [c.report.name for c in self.checks if not c.passed]
        if failing:
            d["failing"] = failing
        if self.extra:
            d["extra"] = _plain(self.extra)
        if self.wall_time is not None:
            d["wall_time"] = self.wall_time
        return d


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, catalog.MobiusMap):
        return v.to_json()
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


# argument parsing ---------------------------------------------------------


def _pair(text: str) -> List[int]:
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected nx,ny, got {text!r}") from None
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected nx,ny, got {text!r}")
    return vals


def _floats(n: int):
    def parse(text: str) -> List[float]:
        try:
            vals = [float(v) for v in text.split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {n} numbers, got {text!r}") from None
        if len(vals) != n:
            raise argparse.ArgumentTypeError(f"expected {n} numbers, got {text!r}")
        return vals
    return parse


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--grid", type=_pair, metavar="NX,NY", help="node counts")
    p.add_argument("--range", type=_floats(4), metavar="X0,X1,Y0,Y1", help="chart extent")
    p.add_argument("--tol", type=float, help="tolerance overriding the built-in ones")
    p.add_argument("--out", metavar="DIR", help="directory for JSON reports and CSV fields")
    p.add_argument("--json", metavar="CONFIG", help="run configuration file")
    p.add_argument("--timing", action="store_true", help="add wall time to the report")
    p.add_argument("--precision", choices=("double", "extended"), help="floating-point type")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="qesurf", description=(
        "Construct, solve and certify quasi-Einstein structures on surfaces."))
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="certify a family member or a CSV table")
    v.add_argument("--family", help="catalog family to build and certify")
    v.add_argument("--input", action="append", default=[], metavar="CSV",
                   help="structure table written by 'catalog show'")
    v.add_argument("--perturb", metavar="FIELD=REL",
                   help="multiply one field by 1 + REL·bump before certifying")

    t = sub.add_parser("solve-theta", parents=[common], help="Newton solve of the Θ-equation")
    t.add_argument("--theta0", type=float, default=np.pi / 2, help="constant boundary value")
    t.add_argument("--slope", type=float, default=0.0, help="boundary slope in normalized x")
    t.add_argument("--noise", type=float, default=0.0, help="amplitude of the initial bump")
    t.add_argument("--max-iter", type=int, default=None)
    t.add_argument("--collar", type=int, default=0,
                   help="extra edge layers excluded from the reconstruction check")

    o = sub.add_parser("solve-ode", parents=[common], help="integrate the homothety ODE")
    o.add_argument("--m", type=float, default=-2.0)
    o.add_argument("--z0", type=float, default=1.0)
    o.add_argument("--zp0", type=float, default=0.3)
    o.add_argument("--s-range", type=_floats(2), default=None, metavar="LO,HI")

    c = sub.add_parser("catalog", help="list or sample built-in families")
    csub = c.add_subparsers(dest="action", required=True)
    cl = csub.add_parser("list", help="enumerate families with parameter schemas")
    cl.add_argument("--json", action="store_true", dest="as_json", help="emit JSON")
    cs = csub.add_parser("show", parents=[common], help="sample a family and certify it")
    cs.add_argument("name")

    h = sub.add_parser("hyp-eval", help="evaluate 3F2(a1,a2,a3;b1,b2;z)")
    for k in ("a1", "a2", "a3", "b1", "b2", "z"):
        h.add_argument(f"--{k}", type=complex, required=True)
    h.add_argument("--deriv", type=int, default=0, help="derivative order (≤ 3)")
    return ap


def _family_params(fam: catalog.Family, extra: Sequence[str]) -> dict:
    """Parse ``--name value`` pairs against a family's parameter schema."""
    schema = {p.name.lower(): p for p in fam.params}
    out = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key, eq, val = tok[2:].partition("=")
        if not eq:
            val = next(it, None)
            if val is None:
                raise ConfigError(f"missing value for {tok}")
        p = schema.get(key.lower().replace("-", "_")) or schema.get(key.lower())
        if p is None:
            raise ConfigError(f"family {fam.name!r} has no parameter {key!r}; "
                              f"known: {', '.join(schema)}")
        try:
            out[p.name] = p.parse(val)
        except (ValueError, QesurfError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return out


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path!r} does not exist") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    return d


def config_from_args(args, extra: Sequence[str]) -> RunConfig:
    command = args.command
    base = _load_json(args.json) if getattr(args, "json", None) else {}
    if base.get("command", command) != command:
        raise ConfigError(f"config is for {base['command']!r}, not {command!r}")
    known = {"command", "inputs", "input", "grid", "range", "tol", "out", "family", "params",
             "perturb", "solver", "options"}
    unknown = set(base) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    inputs = base.get("inputs", [])
    if "input" in base:
        inputs = inputs + [base["input"]]
    cfg = RunConfig(command, list(inputs), base.get("grid"), base.get("range"), base.get("tol"),
                    base.get("out"), base.get("family"), dict(base.get("params", {})),
                    base.get("perturb"), dict(base.get("solver", {})),
                    dict(base.get("options", {})))
    for k in ("grid", "range", "tol", "out"):
        v = getattr(args, k, None)
        if v is not None:
            setattr(cfg, k, v)
    if getattr(args, "precision", None):
        cfg.options["precision"] = args.precision
    if command == "verify":
        cfg.inputs += list(args.input)
        if args.family:
            cfg.family = args.family
        if args.perturb:
            name, _, rel = args.perturb.partition("=")
            try:
                cfg.perturb = {"field": name, "rel": float(rel)}
            except ValueError:
                raise ConfigError(f"--perturb needs FIELD=REL, got {args.perturb!r}") from None
    if command == "catalog" and args.action == "show":
        cfg.family = args.name
    if cfg.family is not None and extra:
        cfg.params.update(_family_params(catalog.get(cfg.family), extra))
    elif extra:
        raise ConfigError(f"unexpected arguments: {' '.join(extra)}")
    if cfg.family is not None:
        fam = catalog.get(cfg.family)
        raw = {k: v for k, v in cfg.params.items()}
        for p in fam.params:
            if p.name in raw and isinstance(raw[p.name], str) and p.kind != "str":
                cfg.params[p.name] = p.parse(raw[p.name])
            elif p.kind == "mobius" and isinstance(raw.get(p.name), dict):
                cfg.params[p.name] = catalog.MobiusMap.from_json(raw[p.name])
    if command == "solve-theta":
        for k in ("theta0", "slope", "noise", "collar"):
            cfg.options.setdefault(k, getattr(args, k))
        if args.max_iter is not None:
            cfg.solver["max_iter"] = args.max_iter
    if command == "solve-ode":
        for k in ("m", "z0", "zp0"):
            cfg.options.setdefault(k, getattr(args, k))
        if args.s_range is not None:
            cfg.options["s_range"] = args.s_range
    return cfg.validate()


# pipelines ------------------------------------------------------------------


def _family_grid(fam: catalog.Family, cfg: RunConfig) -> ChartGrid:
    return fam.grid(cfg.grid, cfg.range, cfg.options.get("precision"))


def _sample_meta(s: catalog.Sample) -> dict:
    return _plain({"family": s.family, "kind": s.kind, **s.meta})


def run_verify(cfg: RunConfig, report: RunReport):
    if not cfg.inputs and cfg.family is None:
        raise ConfigError("verify needs --family, --input or a config naming one")
    if cfg.family is not None:
        fam = catalog.get(cfg.family)
        s = catalog.sample(cfg.family, cfg.params, _family_grid(fam, cfg))
        fields = s.fields
        if cfg.perturb:
            fields = catalog.perturb(fields, s.grid, cfg.perturb["field"],
                                     float(cfg.perturb["rel"]))
        report.checks += catalog.certify(s.kind, s.grid, fields, s.meta, cfg.tol)
        if cfg.out:
            qio.write_table(Path(cfg.out) / f"{cfg.family}.csv", s.grid, fields, _sample_meta(s))
    for path in cfg.inputs:
        grid, cols, meta = qio.read_table(path)
        if "kind" not in meta or "checks" not in meta:
            raise ConfigError(f"{path} carries no structure header")
        if cfg.perturb:
            cols = catalog.perturb(cols, grid, cfg.perturb["field"], float(cfg.perturb["rel"]))
        report.checks += catalog.certify(meta["kind"], grid, cols, meta, cfg.tol)


def run_solve_theta(cfg: RunConfig, report: RunReport):
    o = cfg.options
    nx, ny = cfg.grid or (33, 33)
    x0, x1, y0, y1 = cfg.range or (0.0, 1.0, 1.0, 2.0)
    grid = ChartGrid((x0, x1), (y0, y1), nx, ny, precision=o.get("precision", "double"))
    xh = (grid.X - x0) / (x1 - x0)
    yh = (grid.Y - y0) / (y1 - y0)
    bnd = float(o["theta0"]) + float(o["slope"]) * xh
    init = bnd + float(o["noise"]) * np.sin(np.pi * xh) * np.sin(np.pi * yh)
    tol = float(cfg.solver.get("tol", cfg.tol or 1e-10))
    try:
        t = theta_solve(grid, bnd, init, int(cfg.solver.get("max_iter", 50)), tol,
                        int(cfg.solver.get("damping_max_halvings", 8)))
    except ConvergenceError as exc:
        report.failed = True
        report.extra["error"] = str(exc)
        report.extra["trace"] = exc.trace
        return
    report.extra["iterations"] = t.meta["iterations"]
    report.extra["trace"] = t.meta["trace"]
    report.checks.append(Check(theta_residual(t), tol))
    H, defect = reconstruct_H(t)
    report.checks.append(Check(scalar_report("compatibility", defect), 1e-4))
    s = QEStructure.conformal(grid, H.real, theta_P(t))
    report.checks.append(Check(qee_residual(s, QEParams(-1.0), int(o.get("collar", 0))), 1e-6))
    if cfg.out:
        out = Path(cfg.out)
        qio.write_table(out / "theta.csv", grid, {"Theta": t.Theta, "H": H.real, "P": s.P},
                        {"iterations": t.meta["iterations"]})


def run_solve_ode(cfg: RunConfig, report: RunReport):
    o = cfg.options
    m, z0, zp0 = float(o["m"]), float(o["z0"]), float(o["zp0"])
    s_range = tuple(o.get("s_range") or (cfg.range[2:] if cfg.range else (-0.5, 0.5)))
    r_range = tuple(cfg.range[:2]) if cfg.range else (0.0, 1.0)
    n = tuple(cfg.grid) if cfg.grid else (17, 2049)
    try:
        sol = homothety_integrate(m, z0, zp0, s_range, r_range, n,
                                  o.get("precision", "double"))
    except SingularityError as exc:
        report.failed = True
        report.extra["error"] = str(exc)
        report.extra["location"] = exc.location
        return
    tol = cfg.tol or 1e-6
    report.checks.append(Check(qee_residual(sol.structure, QEParams(m)), tol))
    if m == -1.0:
        report.checks.append(Check(curvature_certificate(sol.structure), tol))
    if cfg.out:
        out = Path(cfg.out)
        with open(out / "homothety_Z.csv", "w") as fh:
            fh.write("s,Z,Zp\n")
            for s, Z, Zp in zip(sol.s, sol.Z, sol.Zp):
                fh.write(f"{s!r},{Z!r},{Zp!r}\n")
        g = sol.structure.metric
        qio.write_table(out / "homothety.csv", g.grid, {
            "gxx": g.gxx, "gxy": g.gxy, "gyy": g.gyy, "Xx": sol.structure.X.ax.real,
            "Xy": sol.structure.X.ay.real},
            {"kind": "general", "m": m, "lam": 0.0, "checks": [["qee", tol]]})


def _emit(report: RunReport, cfg: RunConfig, stream):
    text = qio.dumps(report.to_dict())
    stream.write(text)
    if cfg.out:
        (Path(cfg.out) / "report.json").write_text(text)


def _catalog_list(as_json: bool, stream):
    if as_json:
        stream.write(qio.dumps([f.schema() for f in catalog.FAMILIES.values()]))
        return
    for f in catalog.FAMILIES.values():
        params = ", ".join(f"{p.name}={_fmt_default(p.default)}" for p in f.params)
        stream.write(f"{f.name:18s} {f.summary}\n{'':18s} params: {params}\n")


def _fmt_default(v):
    if isinstance(v, catalog.MobiusMap):
        return "a=%g,b=%g,c=%g,d=%g" % tuple(getattr(v, k).real for k in "abcd")
    return v


def _catalog_show(cfg: RunConfig, report: RunReport, stream, err):
    fam = catalog.get(cfg.family)
    s = catalog.sample(cfg.family, cfg.params, _family_grid(fam, cfg))
    report.checks += catalog.certify_sample(s, cfg.tol)
    meta = _sample_meta(s)
    if cfg.out:
        out = Path(cfg.out)
        qio.write_table(out / f"{cfg.family}.csv", s.grid, s.fields, meta)
        (out / f"{cfg.family}.json").write_text(qio.dumps(report.to_dict()))
    else:
        qio.write_table(stream, s.grid, s.fields, meta)
    for c in report.checks:
        err.write(f"{'PASS' if c.passed else 'FAIL'} {c.report.name} sup={c.report.sup:.3e} "
                  f"tol={c.tol:.1e}\n")


def _hyp_eval(args, stream):
    spec = SeriesSpec(args.a1, args.a2, args.a3, args.b1, args.b2, args.z)
    if args.deriv:
        val = complex(np.asarray(hyp3f2_derivs(spec.a, spec.b, spec.z, args.deriv))
                      .reshape(-1)[args.deriv])
    else:
        val = complex(eval_3f2(spec))
    if val.imag == 0:
        stream.write(f"{val.real!r}\n")
    else:
        stream.write(f"{val.real!r}{val.imag:+.17g}j\n")


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    t0 = time.perf_counter()
    try:
        if args.command == "hyp-eval":
            if extra:
                raise ConfigError(f"unexpected arguments: {' '.join(extra)}")
            _hyp_eval(args, stdout)
            return EXIT_PASS
        if args.command == "catalog" and args.action == "list":
            if extra:
                raise ConfigError(f"unexpected arguments: {' '.join(extra)}")
            _catalog_list(args.as_json, stdout)
            return EXIT_PASS
        cfg = config_from_args(args, extra)
        if cfg.out:
            Path(cfg.out).mkdir(parents=True, exist_ok=True)
        report = RunReport(cfg)
        if args.command == "catalog":
            _catalog_show(cfg, report, stdout, stderr)
        else:
            {"verify": run_verify, "solve-theta": run_solve_theta,
             "solve-ode": run_solve_ode}[args.command](cfg, report)
        if getattr(args, "timing", False):
            report.wall_time = time.perf_counter() - t0
        if args.command != "catalog":
            _emit(report, cfg, stdout)
        elif report.wall_time is not None:
            stderr.write(f"wall time {report.wall_time:.3f}s\n")
        return report.exit_code
    except ConfigError as exc:
        stderr.write(f"qesurf: error: {exc}\n")
        return EXIT_USAGE
    except (QesurfError, ValueError) as exc:
        stderr.write(f"qesurf: error: {type(exc).__name__}: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
