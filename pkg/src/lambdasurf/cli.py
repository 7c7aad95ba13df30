"""Command-line interface.

Subcommands
-----------
trace       integrate one curve of either family; writes CSV + JSON + SVG
classify    print and save the class label of one curve
scan        classify a family over a parameter grid; CSV + JSON + SVG
shoot       run the closing-curve construction; JSON + SVG + OBJ + CSV
linearize   count zeros of the cylinder linearization; JSON (+ SVG)
mesh        revolve a curve (or the round solution) into an OBJ mesh
verify      run the property suites and exit nonzero on failure

Option precedence: command-line flags > ``--config`` JSON file > built-in
defaults.  All commands are deterministic for a fixed configuration.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 shooting target not found, 4 shooting non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import fields

import numpy as np

from .classify import classify
from .integrate import (
    IntegrationControls,
    integrate,
    singular_start,
    trajectory_to_csv,
    trajectory_to_json,
)
from .linearize import count_positive_zeros
from .model import ProfileState, derive_constants
from .shoot import (
    ShootNonConvergenceError,
    ShootNotFoundError,
    find_delta_s,
    scan_b,
    scan_delta,
    scan_to_csv,
    scan_to_json,
)
from . import plotting, surface, verify

_CONTROL_KEYS = tuple(f.name for f in fields(IntegrationControls))


class ConfigError(Exception):
    """Invalid command configuration (exit code 2)."""


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, default=None, help="ambient dimension (default 2)")
    parser.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="constant of the defining equation")
    parser.add_argument("--config", type=str, default=None,
                        help="JSON file with default option values")
    parser.add_argument("--out-dir", type=str, default=".",
                        help="directory for output artifacts")
    parser.add_argument("--prefix", type=str, default=None,
                        help="basename for output files (default per command)")
    for key in _CONTROL_KEYS:
        parser.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float,
                            default=None, help=argparse.SUPPRESS)


def _merged_options(args: argparse.Namespace, defaults: dict) -> dict:
    """Apply precedence: CLI flag > config file > defaults."""
    merged = dict(defaults)
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            merged.update(json.load(fh))
    for key in merged:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


def _controls_from(opts: dict) -> IntegrationControls:
    kwargs = {k: opts[k] for k in _CONTROL_KEYS if opts.get(k) is not None}
    if "scan_points" in kwargs:
        kwargs["scan_points"] = int(kwargs["scan_points"])
    return IntegrationControls(**kwargs)


def _params_from(opts: dict):
    try:
        return derive_constants(int(opts["n"]), float(opts["lam"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _start_state(family: str, value: float, params):
    if family == "delta":
        if not 0.0 < value < params.c_lambda:
            raise SystemExit(
                f"error: launch height {value} outside (0, c_lambda={params.c_lambda:.6g})"
            )
        return ProfileState(s=0.0, x=0.0, r=value, theta=0.0)
    if value >= -params.lam:
        raise ConfigError(f"axis foot {value} must be below -lambda = {-params.lam}")
    return singular_start(value, "ascending", params)


def _outpath(args, default_prefix: str, ext: str) -> str:
    prefix = args.prefix or default_prefix
    os.makedirs(args.out_dir, exist_ok=True)
    return os.path.join(args.out_dir, prefix + ext)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_trace(args) -> int:
    opts = _merged_options(args, {"n": 2, "lam": None})
    if opts["lam"] is None:
        raise ConfigError("--lambda is required")
    params = _params_from(opts)
    controls = _controls_from(_merged_options(args, {k: None for k in _CONTROL_KEYS}))
    start = _start_state(args.family, float(args.param), params)
    traj = integrate(start, params, controls)
    label = classify(traj).label

    prefix = args.prefix or f"trace_{args.family}_{args.param:g}"
    trajectory_to_csv(traj, _outpath(args, prefix, ".csv"))
    with open(_outpath(args, prefix, ".json"), "w", encoding="utf-8") as fh:
        fh.write(trajectory_to_json(traj))
    name = "delta" if args.family == "delta" else "b"
    plotting.profile_figure(
        [(f"{name}={args.param:.6g} [{label}]", traj)], params,
        _outpath(args, prefix, ".svg"),
        title=f"profile curve, n={params.n}, lambda={params.lam:.6g}",
    )
    print(f"terminal={traj.terminal} class={label} events={len(traj.events)}")
    print(f"wrote {prefix}.csv/.json/.svg in {args.out_dir}")
    return 0


def cmd_classify(args) -> int:
    opts = _merged_options(args, {"n": 2, "lam": None})
    if opts["lam"] is None:
        raise ConfigError("--lambda is required")
    params = _params_from(opts)
    controls = _controls_from(_merged_options(args, {k: None for k in _CONTROL_KEYS}))
    traj = integrate(_start_state(args.family, float(args.param), params),
                     params, controls)
    cls = classify(traj, max_segments=args.max_segments)
    doc = {
        "family": args.family,
        "param": float(args.param),
        "label": cls.label,
        "types": list(cls.types),
        "complete": cls.complete,
        "partial": cls.partial,
        "terminal": cls.terminal,
    }
    path = _outpath(args, args.prefix or f"classify_{args.family}_{args.param:g}", ".json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
    print(cls.label)
    return 0


def _parse_grid(spec: str) -> list[float]:
    if ":" in spec:
        pieces = spec.split(":")
        if len(pieces) not in (3, 4):
            raise ConfigError("grid spec must be start:stop:count[:geom]")
        start, stop, count = float(pieces[0]), float(pieces[1]), int(pieces[2])
        if len(pieces) == 4 and pieces[3] == "geom":
            return list(np.geomspace(start, stop, count))
        return list(np.linspace(start, stop, count))
    return [float(tok) for tok in spec.split(",") if tok.strip()]


def cmd_scan(args) -> int:
    opts = _merged_options(args, {"n": 2, "lam": None})
    if opts["lam"] is None:
        raise ConfigError("--lambda is required")
    params = _params_from(opts)
    controls = _controls_from(_merged_options(args, {k: None for k in _CONTROL_KEYS}))
    grid = _parse_grid(args.grid)
    scanner = scan_delta if args.family == "delta" else scan_b
    try:
        points = scanner(params, grid, controls=controls, workers=args.workers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    prefix = args.prefix or f"scan_{args.family}"
    scan_to_csv(points, _outpath(args, prefix, ".csv"))
    with open(_outpath(args, prefix, ".json"), "w", encoding="utf-8") as fh:
        fh.write(scan_to_json(points))
    curves = []
    for pt in points:
        traj = integrate(_start_state(args.family, pt.param, params), params, controls)
        curves.append((f"{pt.param:.5g} [{pt.label}]", traj))
    plotting.profile_figure(
        curves, params, _outpath(args, prefix, ".svg"),
        title=f"{args.family}-family scan, n={params.n}, lambda={params.lam:.6g}",
    )
    for pt in points:
        print(f"{pt.param!r}\t{pt.label}{' (partial)' if pt.curve_class.partial else ''}")
    return 0


def cmd_shoot(args) -> int:
    opts = _merged_options(args, {"n": 2, "lam": None})
    lam = opts["lam"]
    if lam is None and args.lambda_tilde is not None:
        lam = args.lambda_tilde
    if lam is None:
        raise ConfigError("provide --lambda-tilde (negative) or --lambda")
    params = _params_from({"n": opts["n"], "lam": lam})
    controls = _controls_from(_merged_options(args, {k: None for k in _CONTROL_KEYS}))
    try:
        result = find_delta_s(params, tol_delta=args.tol_delta, controls=controls,
                              workers=args.workers)
    except ShootNotFoundError as exc:
        print(f"not found: {exc}", file=sys.stderr)
        return 3
    except ShootNonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 4

    prefix = args.prefix or "shoot"
    with open(_outpath(args, prefix, ".json"), "w", encoding="utf-8") as fh:
        fh.write(result.to_json())
    profile = surface.mirror_extend(result.closing_trajectory)
    plotting.closing_figure(
        profile, params, _outpath(args, prefix, ".svg"),
        title=f"closing profile, delta_s={result.delta_s:.8f}",
    )
    surface.profile_to_csv(profile, _outpath(args, prefix, "_profile.csv"))
    if params.n == 2:
        mesh = surface.revolve(profile, meridians=args.meridians)
        surface.write_obj(mesh, _outpath(args, prefix, ".obj"))
    print(f"delta_s = {result.delta_s!r}")
    print(f"bracket = {result.bracket}  classes = {result.class_at}")
    print(f"closing class = {result.closing_class.label}  closure = {result.closure}")
    print(f"min H after flip = {result.convexity.min_mean:.6f}  "
          f"kappa_profile sign changes = {result.convexity.kappa_profile_sign_changes}  "
          f"embedded = {result.embedded}")
    return 0


def cmd_linearize(args) -> int:
    opts = _merged_options(args, {"n": 2, "lam": None})
    if opts["lam"] is None:
        raise ConfigError("--lambda is required")
    params = _params_from(opts)
    sol = count_positive_zeros(params, x_max=args.x_max)
    prefix = args.prefix or "linearize"
    with open(_outpath(args, prefix, ".json"), "w", encoding="utf-8") as fh:
        fh.write(sol.to_json())
    plotting.linearize_figure(sol, _outpath(args, prefix, ".svg"))
    print(f"coefficient c = {sol.coefficient!r}")
    print(f"count = {sol.count}  expected ceil(c/2) = {sol.expected_count}")
    print(f"zeros = {list(sol.zeros)}")
    if not sol.matches_expected:
        print("note: located count differs from ceil(c/2)", file=sys.stderr)
    return 0


def cmd_mesh(args) -> int:
    opts = _merged_options(args, {"n": 2, "lam": None})
    if opts["lam"] is None:
        raise ConfigError("--lambda is required")
    params = _params_from(opts)
    prefix = args.prefix or "mesh"
    if args.sphere:
        radius = params.r_lambda
        ss = np.linspace(1e-6, math.pi * radius - 1e-6, args.profile_samples)
        profile = surface.ClosedProfile(
            params=params, s=ss,
            x=-radius * np.cos(ss / radius),
            r=radius * np.sin(ss / radius),
            theta=0.5 * math.pi - ss / radius,
            closure_r=float(radius * math.sin(ss[-1] / radius)),
            closure_cos=abs(math.cos(0.5 * math.pi - ss[-1] / radius)),
        )
    else:
        if args.delta is None:
            raise ConfigError("provide --delta or --sphere")
        controls = _controls_from(_merged_options(args, {k: None for k in _CONTROL_KEYS}))
        traj = integrate(_start_state("delta", args.delta, params), params, controls)
        if traj.terminal != "AxisHit":
            raise SystemExit(
                f"error: curve at delta={args.delta} does not reach the axis "
                f"(terminal {traj.terminal}); only axis-closing curves can be meshed"
            )
        profile = surface.mirror_extend(traj)
    mesh = surface.revolve(profile, meridians=args.meridians)
    surface.write_obj(mesh, _outpath(args, prefix, ".obj"))
    surface.profile_to_csv(profile, _outpath(args, prefix, "_profile.csv"))
    report = surface.convexity_report(profile, params)
    with open(_outpath(args, prefix, ".json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    print(f"vertices={len(mesh.vertices)} faces={len(mesh.faces)} "
          f"chi={mesh.euler_characteristic()}")
    print(f"min H after flip = {report.min_mean:.6f}")
    return 0


def cmd_verify(args) -> int:
    try:
        results = verify.run_suite(args.suite)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    for res in results:
        print(res.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lambdasurf",
        description="Shooting-method construction of rotationally symmetric "
                    "lambda-hypersurfaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("trace", help="integrate and plot one profile curve")
    _add_common(p)
    p.add_argument("--family", choices=("delta", "b"), required=True,
                   help="delta: launch height on the r-axis; b: foot on the axis")
    p.add_argument("--param", type=float, required=True, help="family parameter")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("classify", help="class label of one profile curve")
    _add_common(p)
    p.add_argument("--family", choices=("delta", "b"), required=True)
    p.add_argument("--param", type=float, required=True)
    p.add_argument("--max-segments", type=int, default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("scan", help="classify a family over a grid")
    _add_common(p)
    p.add_argument("--family", choices=("delta", "b"), required=True)
    p.add_argument("--grid", required=True,
                   help="start:stop:count[:geom] or comma-separated values")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("shoot", help="locate the closing curve and mesh it")
    _add_common(p)
    p.add_argument("--lambda-tilde", type=float, default=None,
                   help="negative constant used by the solver (alias of --lambda)")
    p.add_argument("--tol-delta", type=float, default=1e-6)
    p.add_argument("--meridians", type=int, default=64)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_shoot)

    p = sub.add_parser("linearize", help="zero count of the cylinder linearization")
    _add_common(p)
    p.set_defaults(func=cmd_linearize)

    p = sub.add_parser("mesh", help="revolve a closing curve into an OBJ mesh")
    _add_common(p)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--sphere", action="store_true",
                   help="mesh the round solution instead of an integrated curve")
    p.add_argument("--meridians", type=int, default=64)
    p.add_argument("--profile-samples", type=int, default=801)
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("verify", help="run property suites")
    p.add_argument("--suite", default="all",
                   help="exact-solutions | invariants | linearization | shooting | all")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
