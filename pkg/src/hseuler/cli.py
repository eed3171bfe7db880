"""Batch front-end: generate, simulate, analyze, and report.

Subcommands: synth | simulate | analyze | defect-sweep | besov-fit |
paraprobe | report.  Flags are long-form only; every value can also come
from a plain-text config file of KEY=VALUE lines (flag names with
underscores), with explicit flags taking precedence and unknown keys
rejected.  Each run writes ``manifest.json`` with the fully resolved
configuration, so a run is reproducible from its manifest alone (no
timestamps are recorded, and identical flags give byte-identical
outputs).

Exit codes: 0 ok, 2 parameter/calibration error, 3 numerical blow-up
(partial trajectory retained), 4 constraint violation, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, _fft
from .balance import criterion_engine, verdicts_to_csv, verdicts_to_json
from .errors import (
    BlowUpError,
    CalibrationError,
    ConstraintError,
    HseulerError,
    ParameterError,
)
from .grid import Grid, ScalarField, VectorField
from .incompress import compatibility_defect, reconstruct_w
from .io import atomic_write_json, atomic_write_text, read_field, write_field
from .mollify import Mollifier, defect_sweep
from .paraproduct import product_estimate_probe
from .regularity import fit_regularity, measure_regularity, structure_function
from .solver import SolverConfig, run as solver_run
from .synth import (
    AnisotropicTarget,
    IsotropicTarget,
    LogHolderTarget,
    SynthSpec,
    synth_pair,
    synth_smooth,
)

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_BLOWUP = 3
EXIT_CONSTRAINT = 4
EXIT_IO = 5


def _read_config_file(path: str, parser_keys) -> dict:
    out = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{line_no}: expected KEY=VALUE")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in parser_keys:
            raise ParameterError(f"{path}:{line_no}: unknown config key {key!r}")
        out[key] = value
    return out


def _resolve_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    """Merge config-file values under explicit flags; rejects unknown keys."""
    ns = vars(args).copy()
    ns.pop("func", None)
    config_path = ns.pop("config", None)
    if config_path:
        known = set(ns.keys())
        file_vals = _read_config_file(config_path, known)
        defaults = {a.dest: parser.get_default(a.dest) for a in parser._actions}
        for key, raw in file_vals.items():
            if ns.get(key) == defaults.get(key):  # flag not explicitly set
                default = defaults.get(key)
                if isinstance(default, bool):
                    ns[key] = raw.lower() in ("1", "true", "yes")
                elif isinstance(default, int) and default is not None:
                    ns[key] = int(raw)
                elif isinstance(default, float) and default is not None:
                    ns[key] = float(raw)
                else:
                    ns[key] = raw
    return ns


def _outdir(ns: dict) -> Path:
    out = Path(ns["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, command: str, ns: dict) -> None:
    # the output path and config-file location are run-local, not physics:
    # dropping them keeps identical flags byte-identical across directories
    clean = {k: v for k, v in ns.items() if k not in ("func", "out", "config")}
    atomic_write_json(out / "manifest.json", {
        "command": command,
        "config": clean,
        "version": __version__,
        "field_format": "HSF1",
    })


def _parse_float_list(text: str):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ParameterError(f"bad number list {text!r}") from exc


def _load_pair(directory: str):
    d = Path(directory)
    u, _ = read_field(d / "u.hsf1")
    v, _ = read_field(d / "v.hsf1")
    w = None
    if (d / "w.hsf1").exists():
        w, _ = read_field(d / "w.hsf1")
    return u, v, w


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(ns: dict) -> int:
    out = _outdir(ns)
    grid = Grid(ns["n"], ns["n"], ns["n"])
    if ns["smooth"]:
        vf = synth_smooth(seed=ns["seed"], grid=grid, modes=ns["modes"])
        u, v, w = vf.u, vf.v, vf.w
        report = None
    else:
        if ns["alpha"] is not None:
            target = IsotropicTarget(ns["alpha"])
        elif ns["alpha_vertical"] is not None and ns["beta_horizontal"] is not None:
            target = AnisotropicTarget(ns["alpha_vertical"], ns["beta_horizontal"])
        elif ns["log_gamma"] is not None:
            target = LogHolderTarget(ns["log_gamma"])
        else:
            raise ParameterError(
                "choose --alpha, --alpha-vertical/--beta-horizontal, "
                "--log-gamma, or --smooth"
            )
        spec = SynthSpec(target, seed=ns["seed"], p_norm=ns["p_norm"])
        u, v, report = synth_pair(spec, grid)
        w, _ = reconstruct_w(u, v)
    prov = f"hseuler synth seed={ns['seed']}"
    write_field(out / "u.hsf1", u, name="u", provenance=prov)
    write_field(out / "v.hsf1", v, name="v", provenance=prov)
    write_field(out / "w.hsf1", w, name="w", provenance=prov)
    if report is not None:
        atomic_write_text(out / "regularity.json", report.to_json() + "\n")
    _write_manifest(out, "synth", ns)
    return EXIT_OK


def cmd_simulate(ns: dict) -> int:
    out = _outdir(ns)
    if ns["resume"]:
        src = Path(ns["resume"])
        manifest = json.loads((src / "manifest.json").read_text())
        last = sorted(src.glob("snap*.u.hsf1"))[-1].name.split(".")[0]
        u, meta = read_field(src / f"{last}.u.hsf1")
        v, _ = read_field(src / f"{last}.v.hsf1")
        w, _ = reconstruct_w(u, v)
        initial = VectorField(u, v, w)
        t0 = float(meta.get("time", 0.0))
        grid = u.grid
    elif ns["initial"]:
        u, v, w = _load_pair(ns["initial"])
        if w is None:
            w, _ = reconstruct_w(u, v)
        initial = VectorField(u, v, w)
        t0 = 0.0
        grid = u.grid
    else:
        grid = Grid(ns["n"], ns["n"], ns["n"])
        initial = synth_smooth(seed=ns["seed"], grid=grid, modes=ns["modes"])
        t0 = 0.0
    if ns["t_end"] <= t0:
        raise ParameterError(f"t_end={ns['t_end']} must exceed start time {t0}")
    cfg = SolverConfig(
        grid,
        omega=ns["omega"],
        nu=ns["nu"],
        hyper_order=ns["hyper_order"],
        dt=ns["dt"],
        t_end=ns["t_end"] - t0,
        snapshot_stride=ns["stride"],
    )
    code = EXIT_OK
    try:
        traj = solver_run(cfg, initial)
    except BlowUpError as err:
        traj = err.trajectory
        code = EXIT_BLOWUP
        print(f"blow-up at t={err.time}; keeping partial trajectory", file=sys.stderr)
    _write_trajectory(out, traj, t0)
    _write_manifest(out, "simulate", ns)
    return code


def _write_trajectory(out: Path, traj, t0: float) -> None:
    lines = ["time,energy,relative_drift"]
    e0 = traj.energy_series[0]
    for i, (t, (vf, p)) in enumerate(zip(traj.times, traj.snapshots)):
        tag = f"snap{i:04d}"
        for name, fld in (("u", vf.u), ("v", vf.v), ("w", vf.w), ("p", p.field)):
            write_field(out / f"{tag}.{name}.hsf1", fld, name=name, time=t0 + t,
                        provenance="hseuler simulate")
        drift = abs(traj.energy_series[i] - e0) / abs(e0) if e0 else 0.0
        lines.append(f"{t0 + t:.10g},{traj.energy_series[i]:.12g},{drift:.6g}")
    atomic_write_text(out / "energy.csv", "\n".join(lines) + "\n")


def cmd_analyze(ns: dict) -> int:
    out = _outdir(ns)
    u, v, w = _load_pair(ns["fields"])
    compat = compatibility_defect(u, v)
    scale = max(u.max_abs(), v.max_abs(), 1e-300)
    if compat > 1e-8 * scale:
        print(f"constraint violation: compat_l2={compat:.6e}", file=sys.stderr)
        return EXIT_CONSTRAINT
    if w is None:
        w, _ = reconstruct_w(u, v)
    report = measure_regularity(u, v, w, p=ns["p_norm"], log_holder=True)
    atomic_write_text(out / "regularity.json", report.to_json() + "\n")

    sweep = None
    if ns["epsilons"]:
        eps = _parse_float_list(ns["epsilons"])
        moll = Mollifier(profile=ns["profile"], m=ns["stencil_m"])
        sweep = defect_sweep(VectorField(u, v, w), eps, moll)
        atomic_write_text(out / "defect.csv", sweep.to_csv())
        atomic_write_text(out / "defect.json", sweep.to_json() + "\n")

    criteria = None
    if ns["criteria"]:
        criteria = [c.strip() for c in ns["criteria"].split(",") if c.strip()]
    s = ns["s"] if ns["s"] >= 0 else None
    verdicts = criterion_engine(report, sweep, criteria=criteria, s=s)
    atomic_write_text(out / "criteria.csv", verdicts_to_csv(verdicts))
    atomic_write_text(out / "criteria.json", verdicts_to_json(verdicts) + "\n")
    _write_manifest(out, "analyze", ns)
    return EXIT_OK


def cmd_defect_sweep(ns: dict) -> int:
    out = _outdir(ns)
    u, v, w = _load_pair(ns["fields"])
    if w is None:
        w, _ = reconstruct_w(u, v)
    eps = _parse_float_list(ns["epsilons"])
    moll = Mollifier(profile=ns["profile"], m=ns["stencil_m"])
    sweep = defect_sweep(VectorField(u, v, w), eps, moll, path=ns["path"])
    atomic_write_text(out / "defect.csv", sweep.to_csv())
    atomic_write_text(out / "defect.json", sweep.to_json() + "\n")
    _write_manifest(out, "defect-sweep", ns)
    return EXIT_OK


def cmd_besov_fit(ns: dict) -> int:
    out = _outdir(ns)
    u, _, _ = _load_pair(ns["fields"])
    sf = structure_function(u, p=ns["p_norm"], directions=ns["directions"],
                            order=ns["order"])
    fit = fit_regularity(sf, rng=ns["fit_range"])
    atomic_write_text(out / "structure.csv", sf.to_csv())
    atomic_write_json(out / "fit.json", fit.to_dict())
    _write_manifest(out, "besov-fit", ns)
    return EXIT_OK


def cmd_paraprobe(ns: dict) -> int:
    out = _outdir(ns)
    triple = tuple(_parse_float_list(ns["p_triple"]))
    if len(triple) != 3:
        raise ParameterError("--p-triple needs exactly three values")
    grid = Grid(ns["n"], ns["n"], ns["n"])
    result = product_estimate_probe(
        grid, ns["estimate"], alpha=ns["alpha"], beta=ns["beta"], theta=ns["theta"],
        p_triple=triple, n_fields=ns["n_fields"], seed=ns["seed"],
    )
    atomic_write_json(out / "probe.json", result.to_dict())
    _write_manifest(out, "paraprobe", ns)
    return EXIT_OK


def cmd_report(ns: dict) -> int:
    from . import report as report_mod

    run_dir = Path(ns["run_dir"])
    if not run_dir.is_dir():
        raise FileNotFoundError(f"{run_dir} is not a directory")
    out = Path(ns["out"]) if ns["out"] else run_dir
    out.mkdir(parents=True, exist_ok=True)
    written = report_mod.render_run_report(run_dir, out)
    atomic_write_json(out / "report.json", {"figures": [p.name for p in written]})
    _write_manifest(out, "report", ns)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser wiring


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--config", default=None, help="plain-text KEY=VALUE config file")
    sp.add_argument("--threads", type=int, default=0,
                    help="worker threads for transforms (0 = all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hseuler",
        description="Energy-conservation diagnostics for hydrostatic flow on the torus",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic fields")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--alpha-vertical", type=float, default=None)
    p.add_argument("--beta-horizontal", type=float, default=None)
    p.add_argument("--log-gamma", type=float, default=None)
    p.add_argument("--smooth", action="store_true")
    p.add_argument("--modes", type=int, default=3)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p-norm", type=float, default=3.0)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="run the pseudo-spectral solver")
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-end", type=float, default=0.25)
    p.add_argument("--omega", type=float, default=0.0)
    p.add_argument("--nu", type=float, default=0.0)
    p.add_argument("--hyper-order", type=int, default=1)
    p.add_argument("--stride", type=int, default=10)
    p.add_argument("--modes", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--initial", default=None, help="directory with u/v HSF1 fields")
    p.add_argument("--resume", default=None, help="trajectory directory to continue")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="regularity, defect sweep and criteria")
    p.add_argument("--fields", required=True, help="directory with u/v[/w] HSF1")
    p.add_argument("--criteria", default="", help="comma list, e.g. P3.1,P3.6")
    p.add_argument("--epsilons", default="", help="comma list of scales")
    p.add_argument("--s", type=float, default=-1.0,
                   help="negative-regularity parameter for T4.10/P4.14 (-1 = measure)")
    p.add_argument("--p-norm", type=float, default=3.0)
    p.add_argument("--profile", default="bump", choices=["bump", "poly"])
    p.add_argument("--stencil-m", type=int, default=9)
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("defect-sweep", help="defect decay over scales")
    p.add_argument("--fields", required=True)
    p.add_argument("--epsilons", required=True)
    p.add_argument("--profile", default="bump", choices=["bump", "poly"])
    p.add_argument("--stencil-m", type=int, default=9)
    p.add_argument("--path", default="quadrature", choices=["quadrature", "products"])
    _add_common(p)
    p.set_defaults(func=cmd_defect_sweep)

    p = sub.add_parser("besov-fit", help="structure function and exponent fit")
    p.add_argument("--fields", required=True)
    p.add_argument("--p-norm", type=float, default=3.0)
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--directions", default="isotropic",
                   choices=["isotropic", "horizontal", "vertical"])
    p.add_argument("--fit-range", default="inertial",
                   choices=["inertial", "small", "all"])
    _add_common(p)
    p.set_defaults(func=cmd_besov_fit)

    p = sub.add_parser("paraprobe", help="paraproduct estimate probe")
    p.add_argument("--estimate", required=True,
                   choices=["B2a", "B2b", "B3", "B4a", "B4b", "B4c"])
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=0.25)
    p.add_argument("--p-triple", default="3,6,6")
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--n-fields", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_paraprobe)

    p = sub.add_parser("report", help="render figures from a run directory")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--out", default=None, help="where to write figures (default: run dir)")
    p.add_argument("--config", default=None)
    p.add_argument("--threads", type=int, default=0)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        ns = _resolve_config(args, parser)
        if ns.get("threads"):
            _fft.set_workers(ns["threads"])
        return args.func(ns)
    except (ParameterError, CalibrationError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARAMETER
    except BlowUpError as err:
        print(f"blow-up: {err}", file=sys.stderr)
        return EXIT_BLOWUP
    except ConstraintError as err:
        print(f"constraint violation: {err}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except (OSError, IOError) as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO
    except HseulerError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARAMETER


if __name__ == "__main__":
    sys.exit(main())
