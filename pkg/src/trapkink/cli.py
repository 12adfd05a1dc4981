"""Command-line entry point: ``trapkink <command> [options]``.

Every command writes its files plus ``manifest.json`` into ``--out``.
Options may also come from a ``key=value`` file given with ``--config``;
command-line values take precedence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .collective import integrate_cc_pair, integrate_cc_single, pair_tables_for, single_tables_for
from .dynamics import EnergyDriftError, NumericalBlowUp, boost_kak, boost_kink, evolve, turning_point_map
from .grid import Grid
from .model import ParameterError, SimParams, tf_profile
from .scan import default_threads, scan_windows
from .spectra import linearization_spectrum
from .stationary import (BracketError, NewtonConvergenceError, solve_ground_state, solve_kink,
                         stationary_kak)


class UsageError(Exception):
    pass


def read_config(path) -> dict:
    """Flat ``key=value`` lines; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.lstrip("-").replace("-", "_")] = v
    return out


def _globals(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("global options")
    S = argparse.SUPPRESS
    g.add_argument("--dx", type=float, default=S, help="spatial step (0.02)")
    g.add_argument("--xmax", type=float, default=S, help="domain half-width (30)")
    g.add_argument("--dt", type=float, default=S, help="time step (dx/2)")
    g.add_argument("--tmax", type=float, default=S, help="evolution horizon (400)")
    g.add_argument("--threads", type=int, default=S, help="worker threads for scan")
    g.add_argument("--config", default=S, help="key=value parameter file")
    g.add_argument("--out", default=S, help="output directory (.)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trapkink", description=__doc__.splitlines()[0])
    _globals(parser)
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        _globals(p)
        p.add_argument("--omega", type=float, default=S)
        return p

    cmd("ground", "trapped ground state and Thomas-Fermi comparison")
    p = cmd("kink", "stationary kink, optionally its spectrum")
    p.add_argument("--spectrum", action="store_true", default=S)
    p.add_argument("--spectral-dx", type=float, default=S, help="eigensolve spacing (max(0.04, dx))")
    p = cmd("kak-equilibrium", "stationary kink-antikink pair and x_cr")
    p.add_argument("--spectrum", action="store_true", default=S)
    p.add_argument("--spectral-dx", type=float, default=S, help="eigensolve spacing (max(0.04, dx))")
    p = cmd("evolve", "PDE run of a kink or a kink-antikink pair")
    p.add_argument("--x0", type=float, default=S)
    p.add_argument("--v", type=float, default=S, help="signed (kink) or inward (pair) speed")
    p.add_argument("--pair", action="store_true", default=S)
    p.add_argument("--dump-field", default=S, metavar="PATH")
    p.add_argument("--field-stride", type=int, default=S, help="samples between field dumps (10)")
    p.add_argument("--sample-every", type=int, default=S, help="RK4 steps between samples (10)")
    p = cmd("cc", "collective-coordinate ODE run")
    p.add_argument("--x0", type=float, default=S)
    p.add_argument("--v", type=float, default=S, help="signed (kink) or inward (pair) speed")
    p.add_argument("--pair", action="store_true", default=S)
    p.add_argument("--overlay", default=S, metavar="PDE_TRAJ")
    p.add_argument("--speed-offset", type=float, default=S)
    p.add_argument("--x-step", type=float, default=S, help="coefficient table spacing (0.05)")
    p = cmd("scan", "velocity sweep and bounce-window table")
    p.add_argument("--x0", type=float, default=S)
    p.add_argument("--vmin", type=float, default=S)
    p.add_argument("--vmax", type=float, default=S)
    p.add_argument("--step", type=float, default=S)
    p.add_argument("--refine", type=float, default=S)
    p = cmd("turning-map", "innermost turning point vs kinetic energy")
    p.add_argument("--x0", type=float, default=S)
    p.add_argument("--vmax", type=float, default=S)
    p.add_argument("--nv", type=int, default=S, help="number of speeds (20)")
    p.add_argument("--pair", action="store_true", default=S)
    return parser


DEFAULTS = {
    "omega": 0.15, "dx": 0.02, "xmax": 30.0, "dt": None, "tmax": 400.0, "threads": None,
    "out": ".", "spectrum": False, "spectral_dx": None, "x0": None, "v": 0.0, "pair": False,
    "dump_field": None, "field_stride": 10, "sample_every": 10, "overlay": None,
    "speed_offset": 0.0, "x_step": 0.05, "vmin": None, "vmax": None, "step": 2e-4,
    "refine": 1e-5, "nv": 20,
}
TYPES = {"pair": lambda s: str(s).lower() in ("1", "true", "yes", "on"),
         "spectrum": lambda s: str(s).lower() in ("1", "true", "yes", "on"),
         "threads": int, "field_stride": int, "sample_every": int, "nv": int,
         "out": str, "dump_field": str, "overlay": str}


def resolve(ns: argparse.Namespace) -> dict:
    given = vars(ns).copy()
    command = given.pop("command")
    cfg = {}
    if "config" in given:
        cfg = read_config(given.pop("config"))
        for k in cfg:
            if k not in DEFAULTS:
                raise UsageError(f"unknown config key {k!r}")
    opts = dict(DEFAULTS)
    for k, v in cfg.items():
        conv = TYPES.get(k, float)
        opts[k] = conv(v)
    opts.update(given)
    opts["command"] = command
    return opts


def params_from(opts: dict) -> SimParams:
    return SimParams(omega=opts["omega"], dx=opts["dx"], x_max=opts["xmax"], dt=opts["dt"],
                     t_max=opts["tmax"])


def _require(opts, *keys):
    missing = [k for k in keys if opts.get(k) is None]
    if missing:
        raise UsageError(f"{opts['command']} needs --" + ", --".join(m.replace("_", "-") for m in missing))


# --- commands -----------------------------------------------------------------

def _spectral_dx(opts, params) -> float:
    """Eigensolve spacing: ``--spectral-dx``, else 0.04 or the field ``dx`` if coarser."""
    if opts["spectral_dx"] is not None:
        return opts["spectral_dx"]
    return max(0.04, params.dx)


def cmd_ground(opts, params, out, man):
    prof = solve_ground_state(params)
    x = prof.x
    utf = tf_profile(x, params.omega)
    man.add_output(io.write_csv(out / "ground.csv", ["x", "u", "u_tf"], zip(x, prof.u, utf)))
    k = int(np.argmax(np.abs(prof.u - utf)))
    info = {"residual": prof.residual_norm, "iterations": prof.iterations,
            "max_abs_u_minus_tf": float(abs(prof.u[k] - utf[k])), "argmax_x": float(x[k])}
    man.add_output(io.write_json(out / "ground.json", info))
    print(f"residual {prof.residual_norm:.3e}; max|u - u_TF| = {info['max_abs_u_minus_tf']:.4g} "
          f"at x = {info['argmax_x']:.4g}")
    return prof.residual_norm <= params.newton_tol


def _spectrum_csv(spec, path):
    plane = spec.spectral_plane()
    par = np.repeat(spec.parity, 2)
    return io.write_csv(path, ["re_lambda", "im_lambda", "parity"], zip(plane[:, 0], plane[:, 1], par))


def cmd_kink(opts, params, out, man):
    prof = solve_kink(params)
    man.add_output(io.write_csv(out / "kink.csv", ["x", "u"], zip(prof.x, prof.u)))
    print(f"kink residual {prof.residual_norm:.3e}")
    if opts["spectrum"]:
        spec = linearization_spectrum(prof, _spectral_dx(opts, params))
        man.add_output(_spectrum_csv(spec, out / "kink_spectrum.csv"))
        rates = spec.unstable_rates()
        man.add_output(io.write_json(out / "kink_spectrum.json",
                                     {"n_unstable": spec.n_unstable, "unstable_rates": rates}))
        print(f"unstable pairs {spec.n_unstable}; rates {np.array2string(rates, precision=5)}")
    return prof.residual_norm <= params.newton_tol


def cmd_kak(opts, params, out, man):
    eq = stationary_kak(params)
    prof = eq.profile
    man.add_output(io.write_csv(out / "kak.csv", ["x", "u"], zip(prof.x, prof.u)))
    info = {"x_cr": eq.x_cr, "seed_x0": eq.seed_x0, "residual": prof.residual_norm}
    if opts["spectrum"]:
        spec = linearization_spectrum(prof, _spectral_dx(opts, params))
        man.add_output(_spectrum_csv(spec, out / "kak_spectrum.csv"))
        info["n_unstable"] = spec.n_unstable
        info["unstable_rates"] = spec.unstable_rates()
    man.add_output(io.write_json(out / "kak.json", info))
    print(f"x_cr = {eq.x_cr:.5f} (residual {prof.residual_norm:.3e})")
    return prof.residual_norm <= params.newton_tol


def cmd_evolve(opts, params, out, man):
    _require(opts, "x0")
    pair, x0, v = opts["pair"], opts["x0"], opts["v"]
    state = boost_kak(params, x0, v) if pair else boost_kink(params, x0, v)
    stride = opts["field_stride"] if opts["dump_field"] else None
    rec = evolve(state, params, opts["sample_every"], pair=pair, x0=x0, v=v,
                 field_stride=stride, stop_when_resolved=not opts["dump_field"])
    man.add_output(io.write_csv(out / "trajectory.csv", ["t", "X", "E"],
                                zip(rec.times, rec.separation, rec.energies)))
    summary = {"outcome": str(rec.outcome), "n_bounces": rec.n_bounces,
               "turning_points": rec.turning_points, "t_final": rec.t_final,
               "energy_drift": rec.energy_drift, "energy_mean": float(rec.energies.mean()),
               "energy_ok": rec.energy_ok, "dwell_time": rec.dwell_time}
    man.add_output(io.write_json(out / "outcome.json", summary))
    if opts["dump_field"]:
        path = Path(opts["dump_field"])
        if not path.is_absolute():
            path = out / path
        cols = ["x"] + [f"t={t:.17g}" for t in rec.field_times]
        x = Grid.from_params(params).nodes
        man.add_output(io.write_csv(path, cols, np.column_stack([x, rec.space_time])))
    print(f"outcome {rec.outcome} at t = {rec.t_final:.2f}; energy drift {rec.energy_drift:.2e}")
    if not rec.energy_ok:
        print("warning: energy drift above 1e-4 of the mean", file=sys.stderr)
    return True


def cmd_cc(opts, params, out, man):
    _require(opts, "x0")
    x0, v, t_max = opts["x0"], opts["v"], opts["tmax"]
    if opts["pair"]:
        tables = pair_tables_for(params, opts["x_step"], _spectral_dx(opts, params))
        tr = integrate_cc_pair(tables, x0, v, t_max, speed_offset=opts["speed_offset"])
        cols = ["t", "X", "Xdot", "A", "Adot", "H"]
        man.add_output(io.write_csv(out / "cc_pair.csv", cols, np.column_stack([tr.t, tr.state, tr.energy])))
        ok = tr.energy_drift <= 1e-5
    else:
        tables = single_tables_for(params, opts["x_step"])
        tr = integrate_cc_single(tables, x0, v, t_max)
        cols = ["t", "X", "Xdot", "E"]
        man.add_output(io.write_csv(out / "cc_single.csv", cols, np.column_stack([tr.t, tr.state, tr.energy])))
        ok = tr.energy_drift <= 1e-6
    header, data = tables.columns()
    man.add_output(io.write_csv(out / f"cc_tables_{tables.model}.csv", header, data))
    summary = {"exit": tr.exit, "t_final": tr.t_final, "energy_drift": tr.energy_drift,
               "turning_points": tr.turning_points,
               "outcome": None if tr.outcome is None else str(tr.outcome)}
    man.add_output(io.write_json(out / "cc.json", summary))
    if opts["overlay"]:
        hdr, pde = io.read_numeric_csv(opts["overlay"])
        t_col, x_col = hdr.index("t"), hdr.index("X")
        keep = pde[:, t_col] <= tr.t_final
        tp = pde[keep, t_col]
        xc = tr.at(tp)[:, 0] if tp.size else np.empty(0)
        man.add_output(io.write_csv(out / "overlay.csv", ["t", "X_pde", "X_cc"],
                                    zip(tp, pde[keep, x_col], xc)))
    print(f"cc {tables.model}: exit {tr.exit} at t = {tr.t_final:.3f}; energy drift "
          f"{tr.energy_drift:.2e}" + (f"; outcome {tr.outcome}" if tr.outcome else ""))
    return ok


def cmd_scan(opts, params, out, man):
    _require(opts, "x0", "vmin", "vmax")
    threads = opts["threads"] or default_threads()
    table = scan_windows(params, opts["x0"], opts["vmin"], opts["vmax"], opts["step"],
                         opts["refine"], threads=threads)
    (out / "windows.txt").write_text(table.to_text())
    man.add_output(out / "windows.txt")
    man.add_output(io.write_csv(out / "windows.csv", table.CSV_COLUMNS, table.csv_rows()))
    man.add_output(io.write_csv(out / "sweep.csv", ["v", "outcome", "n_bounces", "t_resolve"],
                                [(p.v, p.label, p.n_bounces, p.t_resolve) for p in table.points]))
    print(table.to_text(), end="")
    return all(p.error is None for p in table.points)


def cmd_turning_map(opts, params, out, man):
    if opts["pair"]:
        raise UsageError("turning-map is defined for single kinks only; drop --pair")
    _require(opts, "x0", "vmax")
    speeds = np.linspace(0.0, opts["vmax"], opts["nv"])
    pairs, excluded = turning_point_map(params, opts["x0"], speeds)
    man.add_output(io.write_csv(out / "turning_map.csv", ["x1", "half_v2"], pairs))
    if excluded:
        man.add_output(io.write_csv(out / "turning_map_excluded.csv", ["v"], [(v,) for v in excluded]))
    print(f"{len(pairs)} turning points, {len(excluded)} transmitted speeds excluded")
    return True


COMMANDS = {"ground": cmd_ground, "kink": cmd_kink, "kak-equilibrium": cmd_kak,
            "evolve": cmd_evolve, "cc": cmd_cc, "scan": cmd_scan, "turning-map": cmd_turning_map}


def config_from_manifest(manifest: dict) -> str:
    """``key=value`` text that reproduces a run: ``trapkink CMD --config FILE``."""
    p = manifest["parameters"]
    lines = []
    for k in DEFAULTS:
        if k == "out" or p.get(k) is None:
            continue
        v = p[k]
        lines.append(f"{k}={'true' if v is True else 'false' if v is False else io.format_value(v)}")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    ns = parser.parse_args(argv)
    try:
        opts = resolve(ns)
        params = params_from(opts)
    except (UsageError, ParameterError, ValueError) as exc:
        parser.error(str(exc))
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    if opts["threads"] is None:
        opts["threads"] = default_threads()
    record = {k: v for k, v in opts.items() if k != "out"}
    record["params"] = params.as_dict()
    man = io.RunManifest(opts["command"], record)
    man.input_hashes["argv"] = io.sha256_text("\0".join(argv))
    if getattr(ns, "config", None):
        man.input_hashes["config"] = io.sha256_file(ns.config)
    if opts["overlay"]:
        man.input_hashes["overlay"] = io.sha256_file(opts["overlay"])
    try:
        ok = COMMANDS[opts["command"]](opts, params, out, man)
    except (UsageError, ValueError) as exc:
        # includes parameter combinations a solver rejects, e.g. omega = 0 for a pair
        parser.error(str(exc))
    except (NewtonConvergenceError, BracketError, NumericalBlowUp, EnergyDriftError) as exc:
        man.status = f"failed: {exc}"
        man.write(out)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    man.status = "ok" if ok else "invariant check failed"
    man.write(out)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
