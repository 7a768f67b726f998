"""Command line entry point: ``fracfde <subcommand> [options]``.

Exit code is the number of failed checks.  All files are written atomically.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import harness
from .core import make_grid, make_params
from .errors import FracFDEError, ParseError, UnknownSubcommand
from .evolution import EXTINCTION_THRESHOLD, run

SCHEMA = 1
SUBCOMMANDS = ("simulate", "extension-check", "properties", "profile", "holder", "all")
SECTIONS = {
    "params": {"m": 0.5, "sigma": 0.25, "dim": 1},
    "grid": {"L": 1.0, "N": 256},
    "evolution": {"dt0": harness.DEFAULT_DT0, "t_end": None, "extinction_threshold": EXTINCTION_THRESHOLD},
}
TOP_KEYS = {"checks", "seed", "out"}
SUBCOMMAND_CHECKS = {
    "extension-check": ["dtn", "operator"],
    "profile": ["profile", "asymptotics", "asymptotics_separable", "positivity_lower_bound"],
    "holder": ["holder"],
}


@dataclass
class RunConfig:
    params: dict = field(default_factory=lambda: dict(SECTIONS["params"]))
    grid: dict = field(default_factory=lambda: dict(SECTIONS["grid"]))
    evolution: dict = field(default_factory=lambda: dict(SECTIONS["evolution"]))
    checks: list | None = None
    seed: int = 0
    out: str = "out"

    def context(self) -> harness.Context:
        p, g, e = self.params, self.grid, self.evolution
        params = make_params(float(p["m"]), float(p["sigma"]), int(p["dim"]))
        grid = make_grid(float(g["L"]), int(g["N"]), int(p["dim"]))
        return harness.Context(params, grid, dt0=float(e["dt0"]), seed=int(self.seed),
                               threshold=float(e["extinction_threshold"]))


def _read_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    if not text.strip():
        return {}
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    return data


def _merge_file(cfg: RunConfig, data: dict) -> None:
    for key, val in data.items():
        if key in SECTIONS:
            if not isinstance(val, dict):
                raise ParseError(f"key '{key}' must be an object")
            for sub, x in val.items():
                if sub not in SECTIONS[key]:
                    raise ParseError(f"unknown key '{key}.{sub}'")
                getattr(cfg, key)[sub] = x
        elif key in TOP_KEYS:
            setattr(cfg, key, val)
        else:
            raise ParseError(f"unknown key '{key}'")


FLAG_TARGETS = {
    "m": ("params", "m"),
    "sigma": ("params", "sigma"),
    "grid_n": ("grid", "N"),
    "half_width": ("grid", "L"),
    "dt0": ("evolution", "dt0"),
    "t_end": ("evolution", "t_end"),
}


def parse_config(path: str | None = None, flags: argparse.Namespace | dict | None = None) -> RunConfig:
    """Defaults, then the JSON file, then flags.  Validates through ``make_params``/``make_grid``."""
    cfg = RunConfig()
    if path:
        _merge_file(cfg, _read_config_file(path))
    flags = vars(flags) if isinstance(flags, argparse.Namespace) else dict(flags or {})
    for name, (sec, key) in FLAG_TARGETS.items():
        if flags.get(name) is not None:
            getattr(cfg, sec)[key] = flags[name]
    if flags.get("seed") is not None:
        cfg.seed = flags["seed"]
    if flags.get("checks"):
        cfg.checks = [c.strip() for c in flags["checks"].split(",") if c.strip()]
    if flags.get("out"):
        cfg.out = flags["out"]
    if os.environ.get("FRACFDE_OUT"):
        cfg.out = os.environ["FRACFDE_OUT"]
    if cfg.checks is not None:
        if not isinstance(cfg.checks, list):
            raise ParseError("'checks' must be a list of names")
        bad = [c for c in cfg.checks if c not in harness.CHECKS]
        if bad:
            raise ParseError(f"unknown checks: {', '.join(map(str, bad))}")
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool):
        raise ParseError("'seed' must be an integer")
    cfg.context()  # validation
    return cfg


# ----------------------------------------------------------------------------
# output


def atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def write_trajectory(out: str, traj, grid, n_states: int = 5) -> list[str]:
    rows = zip(traj.times, traj.mass, traj.energy, traj.seminorm, traj.sup_v, traj.dt)
    atomic_write(os.path.join(out, "trajectory.csv"), _csv(["t", "mass", "energy", "seminorm", "sup_v", "dt"], rows))
    names = ["trajectory.csv"]
    idx = sorted(set(np.linspace(0, len(traj) - 1, n_states).round().astype(int).tolist()))
    coords = grid.points.reshape(grid.size, -1)
    for k in idx:
        name = f"state_{k:05d}.csv"
        hdr = ["x", "u", "v"] if grid.dim == 1 else ["x", "y", "u", "v"]
        rows = (list(c) + [u, v] for c, u, v in zip(coords, traj.u[k], traj.v[k]))
        atomic_write(os.path.join(out, name), _csv(hdr, rows))
        names.append(name)
    return names


def write_profile(out: str, ctx) -> str:
    coords = ctx.grid.points.reshape(ctx.grid.size, -1)
    phi = ctx.profile.phi
    f = ctx.profile.f(ctx.params)
    hdr = ["x", "phi", "f"] if ctx.grid.dim == 1 else ["x", "y", "phi", "f"]
    atomic_write(os.path.join(out, "profile.csv"), _csv(hdr, (list(c) + [a, b] for c, a, b in zip(coords, phi, f))))
    return "profile.csv"


def write_holder(out: str, rep) -> str:
    rows = enumerate(zip(rep.measured.get("radii", []), rep.measured.get("omega", [])))
    atomic_write(os.path.join(out, "holder.csv"), _csv(["k", "r", "omega"], ((k, r, w) for k, (r, w) in rows)))
    return "holder.csv"


def write_report(out: str, cfg: RunConfig, subcommand: str, reports, files) -> int:
    failed = sum(not r.passed for r in reports)
    doc = {
        "schema": SCHEMA,
        "subcommand": subcommand,
        "config": {"params": cfg.params, "grid": cfg.grid, "evolution": cfg.evolution, "seed": cfg.seed},
        "checks": [r.to_dict() for r in reports],
        "failed": failed,
        "files": sorted(files),
    }
    atomic_write(os.path.join(out, "report.json"), json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return failed


# ----------------------------------------------------------------------------


def run_command(cfg: RunConfig, subcommand: str) -> int:
    if subcommand not in SUBCOMMANDS:
        raise UnknownSubcommand(subcommand)
    ctx = cfg.context()
    out = cfg.out
    files, reports = [], []
    if subcommand in ("simulate", "all"):
        t_end = cfg.evolution.get("t_end")
        traj = ctx.traj if t_end is None else run(ctx.u0, ctx.op, ctx.params, ctx.dt0, float(t_end),
                                                   threshold=ctx.threshold)
        files += write_trajectory(out, traj, ctx.grid)
    if subcommand == "simulate":
        names = cfg.checks or []
    elif subcommand in ("properties", "all"):
        names = cfg.checks or list(harness.CHECKS)
    else:
        names = cfg.checks or SUBCOMMAND_CHECKS[subcommand]
    reports = harness.run_checks(ctx, names)
    if subcommand in ("profile", "all"):
        files.append(write_profile(out, ctx))
    for r in reports:
        if r.name == "holder":
            files.append(write_holder(out, r))
    return write_report(out, cfg, subcommand, reports, files)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracfde", description="Fractional fast-diffusion laboratory")
    ap.add_argument("subcommand", metavar="{" + ",".join(SUBCOMMANDS) + "}")
    ap.add_argument("--config", help="JSON file with params/grid/evolution blocks")
    ap.add_argument("--m", type=float)
    ap.add_argument("--sigma", type=float)
    ap.add_argument("--grid-n", type=int)
    ap.add_argument("--half-width", type=float)
    ap.add_argument("--dt0", type=float)
    ap.add_argument("--t-end", type=float)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="output directory (FRACFDE_OUT overrides)")
    ap.add_argument("--checks", help="comma separated check names")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.subcommand not in SUBCOMMANDS:
        ap.print_usage(sys.stderr)
        print(f"fracfde: unknown subcommand '{args.subcommand}'", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(args.config, args)
        failed = run_command(cfg, args.subcommand)
    except FracFDEError as exc:
        print(f"fracfde: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(f"{args.subcommand}: {failed} failed check(s); outputs in {cfg.out}")
    return min(failed, 255)


if __name__ == "__main__":
    sys.exit(main())
