"""Command-line front end.

    minkaff report          --spec S.json [--resolution N] [--out R.json] [--csv I.csv]
    minkaff darboux         --spec S.json [--section "1,0,0;0,1,0"] [--shifts 5] [--seed 0]
    minkaff emit-indicatrix --spec S.json [--out I.csv]
    minkaff mixed-volumes   --spec S.json [--out V.json] [--csv T.csv]

Every flag can also come from an environment variable ``MINKAFF_<FLAG>``
(upper case, dashes as underscores), e.g. ``MINKAFF_RESOLUTION=64``;
command-line flags win. Exit status: 0 on success, 1 for bad input,
2 when a mathematical invariant fails on the given norm.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .affine_volumes import check_theorems, mixed_volumes
from .affine_volumes import sigma_F as sigma_of
from .blaschke import blaschke_structure
from .errors import InvariantViolation, MinkowskiError, SpecError
from .indicatrix import DEFAULT_RESOLUTION, MIN_RESOLUTION, sphere_grid
from .norm_core import EPS_CONVEX, MATSUMOTO_MODES, tensors_many
from .section_darboux import DEFAULT_SAMPLES, DEFAULT_SECTION, SectionSpec, theorem33_sweep
from .specs import load

ENV_PREFIX = "MINKAFF_"
DEFAULT_TOLERANCES = {
    "convex": EPS_CONVEX,   # strong-convexity floor on the scaled eigenvalues of g
    "darboux": 1e-5,        # T-deviation threshold for the section test
    "cubic": 1e-5,          # section-tangent cubic form threshold
    "L1": 1e-4,             # spread of L_1 accepted as "constant"
    "equality": 1e-4,       # margins within this are reported as equality cases
}


@dataclass
class RunConfig:
    command: str
    spec: Path
    resolution: int = DEFAULT_RESOLUTION
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    matsumoto: str = "tracefree"
    out: Path | None = None
    csv: Path | None = None
    reproducible: bool = False
    section: SectionSpec = DEFAULT_SECTION
    shifts: int = 5
    samples: int = DEFAULT_SAMPLES


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def _parse_tol(items) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or name not in tol:
            raise SpecError(f"--tol expects NAME=VALUE with NAME in {sorted(tol)}, got {item!r}")
        try:
            v = float(value)
        except ValueError:
            raise SpecError(f"tolerance {name} is not a number: {value!r}") from None
        if not v > 0:
            raise SpecError(f"tolerance {name} must be positive")
        tol[name] = v
    return tol


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", type=Path, help="norm spec JSON file")
    common.add_argument("--resolution", type=int, help=f"sphere grid resolution (default {DEFAULT_RESOLUTION})")
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    common.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help=f"override a tolerance; names: {', '.join(DEFAULT_TOLERANCES)}")
    common.add_argument("--matsumoto-coeff", choices=("printed", "tracefree"),
                        help="coefficient of the Matsumoto torsion (default tracefree)")
    common.add_argument("--out", type=Path, help="main output file (default stdout)")
    common.add_argument("--csv", type=Path, help="secondary CSV output")
    common.add_argument("--reproducible", action="store_true", default=None,
                        help="omit timings and timestamps so reports are byte-identical across runs")

    p = _Parser(prog="minkaff", description="Affine invariants of Minkowski norms.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("report", parents=[common], help="volumes, curvatures and inequality margins (JSON)")
    d = sub.add_parser("darboux", parents=[common], help="section test over random navigation shifts")
    d.add_argument("--section", help='two basis vectors, e.g. "1,0,0;0,1,0"')
    d.add_argument("--shifts", type=int, help="number of random shifts (default 5)")
    d.add_argument("--samples", type=int, help=f"points on each section curve (default {DEFAULT_SAMPLES})")
    sub.add_parser("emit-indicatrix", parents=[common], help="per-node CSV: u, r, K, L_1..L_n")
    sub.add_parser("mixed-volumes", parents=[common], help="mixed volumes by both routes (JSON)")
    return p


def _env(name: str):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))


def _pick(cli, name: str, convert, default):
    if cli is not None:
        return cli
    raw = _env(name)
    if raw is None or raw == "":
        return default
    try:
        return convert(raw)
    except ValueError:
        raise SpecError(f"environment variable {ENV_PREFIX}{name.upper()} is invalid: {raw!r}") from None


def _truthy(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    spec = _pick(args.spec, "spec", Path, None)
    if spec is None:
        raise SpecError("--spec is required")
    tol_items = list(args.tol or [])
    if not tol_items and _env("tol"):
        tol_items = [t for t in _env("tol").split(",") if t]
    cfg = RunConfig(
        command=args.command,
        spec=spec,
        resolution=_pick(args.resolution, "resolution", int, DEFAULT_RESOLUTION),
        seed=_pick(args.seed, "seed", int, 0),
        tolerances=_parse_tol(tol_items),
        matsumoto=_pick(args.matsumoto_coeff, "matsumoto-coeff", str, "tracefree"),
        out=_pick(args.out, "out", Path, None),
        csv=_pick(args.csv, "csv", Path, None),
        reproducible=_pick(args.reproducible, "reproducible", _truthy, False),
    )
    if cfg.resolution < MIN_RESOLUTION:
        raise SpecError(f"--resolution must be >= {MIN_RESOLUTION}")
    if cfg.matsumoto not in MATSUMOTO_MODES:
        raise SpecError(f"--matsumoto-coeff must be one of {MATSUMOTO_MODES}")
    if args.command == "darboux":
        section = _pick(args.section, "section", str, None)
        cfg.section = DEFAULT_SECTION if section is None else SectionSpec.parse(section)
        cfg.shifts = _pick(args.shifts, "shifts", int, 5)
        cfg.samples = _pick(args.samples, "samples", int, DEFAULT_SAMPLES)
        if cfg.shifts < 1 or cfg.samples < 3:
            raise SpecError("--shifts must be >= 1 and --samples >= 3")
    return cfg


# -- output -------------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _envelope(cfg: RunConfig, body: dict, started: float) -> dict:
    doc = {
        "command": cfg.command,
        "config": {
            "spec": str(cfg.spec), "resolution": cfg.resolution, "seed": cfg.seed,
            "tolerances": cfg.tolerances, "matsumoto_coeff": cfg.matsumoto,
        },
        "version": __version__,
        **body,
    }
    if not cfg.reproducible:
        doc["run"] = {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "seconds": time.perf_counter() - started}
    return _clean(doc)


def _write_json(path: Path | None, doc: dict) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def _write_csv(path: Path | None, header: list, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if not isinstance(x, (int, np.integer)) else int(x) for x in row])
    if path is None:
        sys.stdout.write(buf.getvalue())
    else:
        path.write_text(buf.getvalue())


def _sidecar(cfg: RunConfig, suffix: str) -> Path | None:
    if cfg.csv is not None:
        return cfg.csv
    if cfg.out is not None:
        return cfg.out.with_name(cfg.out.stem + suffix)
    return None


def _indicatrix_rows(spec, grid, b):
    dim = spec.dimension
    header = [f"u{i}" for i in range(dim)] + [f"r{i}" for i in range(dim)] + ["K"] + [f"L{k}" for k in range(1, dim)]
    rows = np.concatenate([grid.nodes, b.r, b.chart.K[:, None], b.L], axis=1)
    return header, rows


# -- commands -------------------------------------------------------------------


def cmd_report(cfg: RunConfig) -> int:
    started = time.perf_counter()
    spec = load(cfg.spec)
    grid = sphere_grid(spec.dimension, cfg.resolution)
    kw = dict(matsumoto=cfg.matsumoto, eps_convex=cfg.tolerances["convex"])
    rep = check_theorems(spec, grid, **kw)
    b = blaschke_structure(spec, grid.nodes, sigma_F=rep.sigma_F, **kw)
    T = tensors_many(spec, b.r, sigma_F=rep.sigma_F, **kw)
    eq = cfg.tolerances["equality"]
    L1_spread = float(rep.L_max[0] - rep.L_min[0])
    checks = {
        "L1_constant": L1_spread <= cfg.tolerances["L1"],
        "L1_spread": L1_spread,
        "max_matsumoto": float(np.abs(T.M).max()),
        "thm52_equality": abs(rep.thm52_margin) <= eq,
        "thm54_equality": abs(rep.thm54_margin) <= eq,
        "max_mixed_volume_mismatch": float(max(abs(p / v - 1) for p, v in zip(rep.V_polynomial, rep.V))),
    }
    doc = _envelope(cfg, {"spec_document": spec.to_dict(), "volumes": rep.to_dict(), "checks": checks}, started)
    _write_json(cfg.out, doc)
    csv_path = _sidecar(cfg, "_indicatrix.csv")
    if csv_path is not None:
        _write_csv(csv_path, *_indicatrix_rows(spec, grid, b))
    return 0


def cmd_emit_indicatrix(cfg: RunConfig) -> int:
    spec = load(cfg.spec)
    grid = sphere_grid(spec.dimension, cfg.resolution)
    kw = dict(matsumoto=cfg.matsumoto, eps_convex=cfg.tolerances["convex"])
    b = blaschke_structure(spec, grid.nodes, sigma_F=sigma_of(spec, grid), **kw)
    _write_csv(cfg.out, *_indicatrix_rows(spec, grid, b))
    return 0


def cmd_mixed_volumes(cfg: RunConfig) -> int:
    started = time.perf_counter()
    spec = load(cfg.spec)
    grid = sphere_grid(spec.dimension, cfg.resolution)
    mv = mixed_volumes(spec, grid, matsumoto=cfg.matsumoto, eps_convex=cfg.tolerances["convex"])
    doc = _envelope(cfg, {"spec_document": spec.to_dict(), "grid": grid.metadata(), **mv}, started)
    _write_json(cfg.out, doc)
    csv_path = _sidecar(cfg, "_omega_t.csv")
    if csv_path is not None:
        _write_csv(csv_path, ["t", "vol"], zip(mv["t"], mv["vol_t"]))
    return 0


def cmd_darboux(cfg: RunConfig) -> int:
    started = time.perf_counter()
    spec = load(cfg.spec)
    rep = theorem33_sweep(
        spec, cfg.section, cfg.shifts, cfg.seed,
        threshold=cfg.tolerances["darboux"], cubic_threshold=cfg.tolerances["cubic"],
        n_samples=cfg.samples, resolution=cfg.resolution, keep_profiles=True,
    )
    profiles = rep.pop("profiles")
    rep["verdict"] = "PASS" if rep["pass"] else "FAIL"
    doc = _envelope(cfg, {"spec_document": spec.to_dict(), "sweep": rep}, started)
    _write_json(cfg.out, doc)
    csv_path = _sidecar(cfg, "_profiles.csv")
    if csv_path is not None:
        rows = [(i, th, ta, tb, t) for i, p in enumerate(profiles)
                for th, ta, tb, t in zip(p.theta, p.tau, p.tau_bar, p.T)]
        _write_csv(csv_path, ["shift", "theta", "tau", "tau_bar", "T"], rows)
    print(f"darboux: {rep['verdict']} (max dev {rep['max_dev']:.3e}, max cubic {rep['max_cubic']:.3e})",
          file=sys.stderr)
    return 0


COMMANDS = {
    "report": cmd_report,
    "darboux": cmd_darboux,
    "emit-indicatrix": cmd_emit_indicatrix,
    "mixed-volumes": cmd_mixed_volumes,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except InvariantViolation as exc:
        print(f"invariant violation ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    except (SpecError, MinkowskiError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
