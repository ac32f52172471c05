"""Command-line front end: INI configs in, CSV/JSON/field files out.

Subcommands: solve, certify, eigen, scan-study, example.  Exit codes are
0 success, 1 negative scientific result (Inconclusive certificate or empty
admissible set), 2 configuration error, 3 numerical failure.  Output is
deterministic: identical configs give byte-identical CSV and JSON (floats are
written with 17 significant digits, rows in fixed order; wall time goes to
stderr, never into files).
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import expr
from .certify import (ConstructionFailed, GridMismatch, NonPositiveCoefficient,
                      certify, pointwise_certified_ratio)
from .eigen import NotInA, SignChange, eigen_curve, is_admissible, principal_eigenpair
from .grid import Grid, ScalarField, read_field, write_field
from .kirchhoff import (NEWTON_TOL, Problem, SingularJacobian, fixed_point_scan,
                        newton_solve)
from .linalg import NoConvergence, NotPositiveDefinite

ALL_FORMATS = ("csv", "json", "fields")


class ConfigError(Exception):
    pass


@dataclass
class Config:
    grid: Grid
    a: ScalarField
    b: ScalarField
    h: ScalarField
    n_samples: int = 256
    newton_tol: float = NEWTON_TOL
    s_max_override: float | None = None
    out_dir: str = "."
    formats: tuple = ALL_FORMATS


def _get(section, key, cast, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"missing required key '{key}' in section [{section.name}]")
        return default
    raw = section[key].strip()
    if raw == "" and not required:
        return default
    try:
        return cast(raw)
    except ValueError as err:
        raise ConfigError(f"bad value for '{key}' in [{section.name}]: {err}") from None


def _load_coefficient(section, name: str, grid: Grid) -> ScalarField:
    has_expr = name in section and section[name].strip() != ""
    file_key = f"{name}_file"
    has_file = file_key in section and section[file_key].strip() != ""
    if has_expr == has_file:
        raise ConfigError(
            f"coefficient '{name}' needs exactly one of '{name}' (expression) "
            f"or '{file_key}' (field file) in [coefficients]")
    if has_expr:
        try:
            tree = expr.parse(section[name].strip())
            return expr.eval_field(tree, grid)
        except expr.ExprError as err:
            raise ConfigError(f"coefficient '{name}': {err}") from None
        except expr.DomainError as err:
            raise ConfigError(f"coefficient '{name}': {err}") from None
    path = section[file_key].strip()
    try:
        f = read_field(path)
    except OSError as err:
        raise ConfigError(f"coefficient '{name}': cannot read {path}: {err}") from None
    except ValueError as err:
        raise ConfigError(f"coefficient '{name}': {err}") from None
    if f.grid != grid:
        raise ConfigError(f"coefficient '{name}': field file grid {f.grid} does not "
                          f"match the [grid] section")
    return f


def _read_ini(path: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    except configparser.Error as err:
        raise ConfigError(f"malformed config {path}: {err}") from None
    return parser


def _grid_from(parser: configparser.ConfigParser) -> Grid:
    if "grid" not in parser:
        raise ConfigError("missing required section [grid]")
    gsec = parser["grid"]
    nx = _get(gsec, "nx", int, required=True)
    ny = _get(gsec, "ny", int, required=True)
    x0 = _get(gsec, "x0", float, 0.0)
    y0 = _get(gsec, "y0", float, 0.0)
    lx = _get(gsec, "lx", float, 1.0)
    ly = _get(gsec, "ly", float, 1.0)
    if nx < 1 or ny < 1:
        raise ConfigError(f"grid needs nx, ny >= 1, got {nx}x{ny}")
    if lx <= 0 or ly <= 0:
        raise ConfigError(f"grid needs positive side lengths, got lx={lx}, ly={ly}")
    return Grid.over_rectangle(nx, ny, lx, ly, x0, y0)


def parse_grid_only(path: str) -> tuple:
    """Grid plus output directory; enough for the example subcommand."""
    parser = _read_ini(path)
    grid = _grid_from(parser)
    osec = parser["output"] if "output" in parser else parser["DEFAULT"]
    return grid, _get(osec, "directory", str, ".")


def parse_config(path: str) -> Config:
    parser = _read_ini(path)
    grid = _grid_from(parser)
    if "coefficients" not in parser:
        raise ConfigError("missing required section [coefficients]")

    csec = parser["coefficients"]
    a = _load_coefficient(csec, "a", grid)
    b = _load_coefficient(csec, "b", grid)
    h = _load_coefficient(csec, "h", grid)

    ssec = parser["solver"] if "solver" in parser else parser["DEFAULT"]
    n_samples = _get(ssec, "n_samples", int, 256)
    newton_tol = _get(ssec, "newton_tol", float, NEWTON_TOL)
    s_max_override = _get(ssec, "s_max_override", float, None)
    if n_samples < 16:
        raise ConfigError(f"'n_samples' must be >= 16, got {n_samples}")
    if newton_tol <= 0:
        raise ConfigError(f"'newton_tol' must be positive, got {newton_tol}")
    if s_max_override is not None and s_max_override <= 0:
        raise ConfigError(f"'s_max_override' must be positive, got {s_max_override}")

    osec = parser["output"] if "output" in parser else parser["DEFAULT"]
    out_dir = _get(osec, "directory", str, ".")
    formats_raw = _get(osec, "formats", str, ",".join(ALL_FORMATS))
    formats = tuple(tok.strip() for tok in formats_raw.split(",") if tok.strip())
    for tok in formats:
        if tok not in ALL_FORMATS:
            raise ConfigError(f"unknown output format '{tok}' (choose from {ALL_FORMATS})")

    return Config(grid, a, b, h, n_samples=n_samples, newton_tol=newton_tol,
                  s_max_override=s_max_override, out_dir=out_dir, formats=formats)


# --- deterministic serialization -------------------------------------------

def fmt(v: float) -> str:
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def to_json_text(obj, indent: int = 0) -> str:
    pad, pad_in = " " * indent, " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad_in}"{k}": {to_json_text(v, indent + 2)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad_in}{to_json_text(v, indent + 2)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, float):
        if math.isinf(obj):
            return '"inf"' if obj > 0 else '"-inf"'
        return fmt(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        escaped = obj.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{escaped}"'
    raise TypeError(f"cannot serialize {type(obj)}")


def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="ascii")


# --- subcommand runners -----------------------------------------------------

def run_solve(cfg: Config, out_dir: Path, quiet: bool) -> int:
    t0 = time.time()
    problem = Problem(cfg.a, cfg.b, cfg.h)
    report = fixed_point_scan(problem, cfg.n_samples, s_max=cfg.s_max_override)

    newton_info = {"converged": False, "s": None, "residual": None}
    try:
        sol = newton_solve(problem, tol=cfg.newton_tol)
        newton_info = {"converged": True, "s": sol.s, "residual": sol.residual}
    except (NoConvergence, SingularJacobian):
        pass  # scan remains the ground truth

    rows = [(s, phi, "sample") for s, phi in report.samples]
    rows += [(r.s, r.s, "root") for r in report.roots]
    rows.sort(key=lambda t: (t[0], t[2]))
    csv_text = "s,phi_s,kind\n" + "".join(
        f"{fmt(s)},{fmt(p)},{kind}\n" for s, p, kind in rows)

    root_entries = []
    for i, r in enumerate(report.roots):
        fname = f"root_{i:03d}.field"
        if "fields" in cfg.formats:
            write_field(r.u, out_dir / fname)
        root_entries.append({"s": r.s, "residual": r.residual, "method": r.method,
                             "file": fname if "fields" in cfg.formats else None})
    summary = {
        "n_roots": len(report.roots),
        "s_max": report.s_max,
        "roots": root_entries,
        "suspected_tangencies": list(report.suspected_tangencies),
        "newton": newton_info,
        "grid": f"{cfg.grid.nx} {cfg.grid.ny} {fmt(cfg.grid.x0)} {fmt(cfg.grid.y0)} "
                f"{fmt(cfg.grid.hx)} {fmt(cfg.grid.hy)}",
    }
    if "csv" in cfg.formats:
        _write_text(out_dir / "scan.csv", csv_text)
    if "json" in cfg.formats:
        _write_text(out_dir / "summary.json", to_json_text(summary) + "\n")
    if not quiet:
        print(f"solve: {len(report.roots)} root(s) in {time.time() - t0:.2f}s "
              f"-> {out_dir}", file=sys.stderr)
    return 0 if report.roots else 3


def run_certify(cfg: Config, out_dir: Path, quiet: bool) -> int:
    cert = certify(cfg.a, cfg.b)
    _write_text(out_dir / "certificate.json", to_json_text(cert.to_json_dict()) + "\n")
    if not quiet:
        print(f"certify: {cert.verdict} (ratio {cert.ratio_value:.4g}, "
              f"min_D {cert.min_d:.4g})", file=sys.stderr)
    return 0 if cert.verdict != "Inconclusive" else 1


def run_eigen(cfg: Config, alphas: list, out_dir: Path, quiet: bool,
              write_fields: bool) -> int:
    c = ScalarField(cfg.grid, cfg.a.values / cfg.b.values)
    if not any(is_admissible(c, alpha) for alpha in alphas):
        print("eigen: admissible set empty for the sampled alphas", file=sys.stderr)
        return 1
    curve = eigen_curve(c, alphas)
    _write_text(out_dir / "eigen_curve.csv", curve.to_csv())
    if write_fields and "fields" in cfg.formats:
        for i, alpha in enumerate(alpha for alpha, *_ in curve.rows):
            pair = principal_eigenpair(c, alpha)
            write_field(pair.u, out_dir / f"eigenfunction_{i:03d}.field")
    if not quiet:
        print(f"eigen: {len(curve.rows)} admissible alpha(s) -> {out_dir}",
              file=sys.stderr)
    return 0


def run_scan_study(cfg: Config, scales: list, out_dir: Path, quiet: bool) -> int:
    lines = ["k,n_roots,s_values"]
    for k in scales:
        problem = Problem(cfg.a, cfg.b, ScalarField(cfg.grid, k * cfg.h.values))
        report = fixed_point_scan(problem, cfg.n_samples, s_max=cfg.s_max_override)
        s_vals = ";".join(fmt(r.s) for r in report.roots)
        lines.append(f"{fmt(k)},{len(report.roots)},{s_vals}")
    _write_text(out_dir / "scan_study.csv", "\n".join(lines) + "\n")
    if not quiet:
        print(f"scan-study: {len(scales)} scale(s) -> {out_dir}", file=sys.stderr)
    return 0


def run_example(grid: Grid, out_dir: Path, quiet: bool) -> int:
    c = pointwise_certified_ratio(grid)
    write_field(c, out_dir / "example_ratio.field")
    if not quiet:
        print(f"example: ratio field on {grid.nx}x{grid.ny} -> "
              f"{out_dir / 'example_ratio.field'}", file=sys.stderr)
    return 0


# --- argument parsing -------------------------------------------------------

def _parse_float_list(raw: str, what: str) -> list:
    raw = raw.strip()
    if raw.startswith("logspace:"):
        try:
            lo, hi, count = raw[len("logspace:"):].split(",")
            lo, hi, count = float(lo), float(hi), int(count)
            if lo <= 0 or hi <= 0 or count < 1:
                raise ValueError("logspace needs positive endpoints and count >= 1")
        except ValueError as err:
            raise ConfigError(f"malformed {what} '{raw}': {err}") from None
        return list(np.logspace(math.log10(lo), math.log10(hi), count))
    try:
        values = [float(tok) for tok in raw.split(",") if tok.strip() != ""]
    except ValueError as err:
        raise ConfigError(f"malformed {what} '{raw}': {err}") from None
    if not values:
        raise ConfigError(f"empty {what} list")
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kirchlab",
        description="Nonlocal Kirchhoff-type Dirichlet problems: solve, certify "
                    "uniqueness, and explore the associated eigenvalue curve.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="INI configuration file")
    common.add_argument("--out", default=None, help="output directory (overrides config)")
    common.add_argument("--quiet", action="store_true", help="suppress progress notes")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common],
                   help="enumerate all solutions by the fixed-point scan")
    sub.add_parser("certify", parents=[common],
                   help="run the uniqueness certificates on a/b")
    eig = sub.add_parser("eigen", parents=[common],
                         help="eigenvalue curve over a list of alphas")
    eig.add_argument("--alphas", required=True,
                     help="comma list '0.01,0.1,1' or 'logspace:0.01,100,20'")
    eig.add_argument("--write-fields", action="store_true",
                     help="also write one eigenfunction field file per row")
    study = sub.add_parser("scan-study", parents=[common],
                           help="root counts under rescaled forcing")
    study.add_argument("--scales", required=True,
                       help="comma list of scale factors for h")
    sub.add_parser("example", parents=[common],
                   help="emit the constructed ratio field that passes the pointwise test")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "example":
            grid, cfg_out = parse_grid_only(args.config)
            out_dir = Path(args.out if args.out is not None else cfg_out)
            out_dir.mkdir(parents=True, exist_ok=True)
            return run_example(grid, out_dir, args.quiet)
        cfg = parse_config(args.config)
        out_dir = Path(args.out if args.out is not None else cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "solve":
            return run_solve(cfg, out_dir, args.quiet)
        if args.command == "certify":
            return run_certify(cfg, out_dir, args.quiet)
        if args.command == "eigen":
            alphas = _parse_float_list(args.alphas, "alpha")
            if any(alpha <= 0 for alpha in alphas):
                raise ConfigError("alphas must be positive")
            return run_eigen(cfg, alphas, out_dir, args.quiet, args.write_fields)
        if args.command == "scan-study":
            scales = _parse_float_list(args.scales, "scale")
            return run_scan_study(cfg, scales, out_dir, args.quiet)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (NoConvergence, NotPositiveDefinite, NotInA, SignChange,
            ConstructionFailed, NonPositiveCoefficient, GridMismatch) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
