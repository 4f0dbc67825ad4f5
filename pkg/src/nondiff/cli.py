"""Command-line experiment harness.

Subcommands::

    nondiff simulate  [--config FILE] [--key value ...] [--map-check]
    nondiff walk      [--config FILE] [--key value ...]
    nondiff diagnose  --snapshots DIR [--poly a0,a1,...]
    nondiff map-check [--config FILE] [--key value ...]
    nondiff preset    fig1|fig2|fig3 [--full] [--key value ...]

Config files hold one ``key = value`` per line (``#`` starts a comment);
command-line flags override file keys.  Outputs go to ``--out`` or, by
default, to ``$NONDIFF_OUT/<command>`` (``./nondiff_out`` when unset).

Exit codes: 0 success, 1 invariant violation, 2 configuration error,
3 solver failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import csvio
from .diagnostics import (
    FLOOR,
    XI_WINDOW,
    barrier_check,
    build_report,
    mapping_consistency,
)
from .diffusivity import InversionError, PolynomialDiffusivity, psi, psi_inverse
from .pde import POSITIVITY_TOL, Form, SolverConfig, SolverError, geometric_times, run
from .profiles import Field1D, Grid, InitialProfile, Zero, make_profile, sample_positions
from .walk import ParticleEnsemble, density_estimate, evolve, make_jump

log = logging.getLogger("nondiff")

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
COMMANDS = ("simulate", "walk", "diagnose", "map-check", "preset")
MASS_TOL = 1e-8

# key -> (type, default); flags are "--" + key with "." and "_" as "-"
KEYS = {
    "poly": (str, "1,1"),
    "ic": (str, "box"),
    "x0": (float, 1.0),
    "gamma": (float, 3.0),
    "p0": (float, 1.0),
    "t0": (float, 1.0),
    "xmax": (float, 200.0),
    "ncells": (int, 10_000),
    "tfinal": (float, 10.0),
    "rtol": (float, 1e-6),
    "atol": (float, 1e-10),
    "form": (str, "div"),
    "outputs": (int, 10),
    "tfirst": (float, 1.0),
    "xi_window": (float, XI_WINDOW),
    "floor": (float, FLOOR),
    "walk.n": (int, 200_000),
    "walk.seed": (int, 0),
    "walk.jump": (str, "uniform"),
    "walk.delta": (float, None),
    "walk.dtmacro": (float, None),
    "walk.bins": (int, 400),
}

PRESETS = {
    "fig1": {"poly": "1,1", "ic": "box", "x0": "1", "xmax": "200",
             "ncells": "10000", "tfinal": "10"},
    "fig2": {"poly": "1,1,10", "ic": "box", "x0": "1", "xmax": "200",
             "ncells": "10000", "tfinal": "10"},
    # desk scale; --full switches to x_max=2000, 100 000 cells, T=100
    "fig3": {"poly": "1,1", "ic": "algebraic", "gamma": "3", "x0": "1",
             "xmax": "500", "ncells": "25000", "tfinal": "50"},
}
FIG3_FULL = {"xmax": "2000", "ncells": "100000", "tfinal": "100"}


class ConfigError(ValueError):
    """Invalid or unknown configuration entry; ``key`` names the culprit."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class WalkConfig:
    n: int = 200_000
    seed: int = 0
    jump: str = "uniform"
    delta: float | None = None
    dtmacro: float | None = None
    bins: int = 400


@dataclass(frozen=True)
class ExperimentConfig:
    poly: PolynomialDiffusivity
    profile: InitialProfile
    solver: SolverConfig
    output_times: tuple[float, ...]
    xi_window: float = XI_WINDOW
    floor: float = FLOOR
    walk: WalkConfig | None = None
    map_check: bool = False
    out_dir: Path = Path("nondiff_out")
    raw: dict = field(default_factory=dict, compare=False)


def flag_name(key: str) -> str:
    return "--" + key.replace(".", "-").replace("_", "-")


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines. Unknown keys raise :class:`ConfigError`."""
    entries = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(key, "unknown key")
        entries[key] = value
    return entries


def _override_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    for key in KEYS:
        p.add_argument(flag_name(key), dest=key, default=None)
    p.add_argument("--map-check", dest="map_check", action="store_true")
    p.add_argument("--out", dest="out", default=None)
    return p


def _convert(key: str, text: str):
    typ = KEYS[key][0]
    try:
        val = typ(text)
    except ValueError as exc:
        raise ConfigError(key, f"cannot parse {text!r} as {typ.__name__}") from exc
    if typ is float and not math.isfinite(val):
        raise ConfigError(key, "must be finite")
    return val


def parse_config(args: list[str], file: str | None = None,
                 defaults: dict[str, str] | None = None,
                 command: str = "simulate") -> ExperimentConfig:
    """Build a validated :class:`ExperimentConfig`.

    Precedence, lowest first: built-in defaults, ``defaults`` (presets),
    ``file`` (config text), ``args`` (command-line flags).
    """
    raw = dict(defaults or {})
    if file is not None:
        raw.update(parse_config_text(file))
    ns, extra = _override_parser().parse_known_args(args)
    if extra:
        raise ConfigError(extra[0], "unknown option")
    for key in KEYS:
        if getattr(ns, key) is not None:
            raw[key] = getattr(ns, key)
    values = {k: (_convert(k, raw[k]) if k in raw else d) for k, (_, d) in KEYS.items()}

    try:
        poly = PolynomialDiffusivity.parse(values["poly"])
    except ValueError as exc:
        raise ConfigError("poly", str(exc)) from exc
    try:
        profile = make_profile(values["ic"], values["x0"], values["gamma"],
                               values["p0"], values["t0"])
    except ValueError as exc:
        raise ConfigError("ic", str(exc)) from exc
    if values["form"] not in ("div", "nondiv"):
        raise ConfigError("form", "must be 'div' or 'nondiv'")
    if values["ncells"] < 16:
        raise ConfigError("ncells", "must be at least 16")
    for key in ("xmax", "tfinal"):
        if values[key] <= 0.0:
            raise ConfigError(key, "must be positive")
    for key in ("rtol", "atol"):
        if not 0.0 < values[key] <= 1e-2:
            raise ConfigError(key, "must lie in (0, 1e-2]")
    try:
        solver = SolverConfig(x_max=values["xmax"], n_cells=values["ncells"],
                              t_final=values["tfinal"], rel_tol=values["rtol"],
                              abs_tol=values["atol"], form=values["form"])
    except ValueError as exc:
        raise ConfigError("solver", str(exc)) from exc
    if values["outputs"] < 1:
        raise ConfigError("outputs", "must be at least 1")
    if not 0.0 < values["tfirst"] <= values["tfinal"]:
        raise ConfigError("tfirst", "must lie in (0, tfinal]")
    times = tuple(float(t) for t in geometric_times(values["tfirst"], values["tfinal"],
                                                    values["outputs"]))
    if values["xi_window"] <= 0.0:
        raise ConfigError("xi_window", "must be positive")
    if values["floor"] <= 0.0:
        raise ConfigError("floor", "must be positive")
    reach = values["xmax"] / math.sqrt(4.0 * poly.a0 * values["tfinal"])
    if reach < values["xi_window"]:
        raise ConfigError("xmax", f"domain covers only |xi| <= {reach:.3g} at tfinal, "
                                  f"below xi_window={values['xi_window']}")

    walk = None
    if command == "walk" or any(k.startswith("walk.") for k in raw):
        if isinstance(profile, Zero):
            raise ConfigError("ic", "the random walk needs a profile with mass")
        walk = WalkConfig(n=values["walk.n"], seed=values["walk.seed"],
                          jump=values["walk.jump"], delta=values["walk.delta"],
                          dtmacro=values["walk.dtmacro"], bins=values["walk.bins"])
        if walk.n < 1:
            raise ConfigError("walk.n", "must be positive")
        if walk.bins < 8:
            raise ConfigError("walk.bins", "must be at least 8")
        if walk.dtmacro is not None and walk.dtmacro <= 0.0:
            raise ConfigError("walk.dtmacro", "must be positive")
        try:
            make_jump(walk.jump, walk.delta)
        except ValueError as exc:
            raise ConfigError("walk.jump", str(exc)) from exc

    if ns.out is not None:
        out_dir = Path(ns.out)
    else:
        out_dir = Path(os.environ.get("NONDIFF_OUT", "nondiff_out")) / command
    return ExperimentConfig(poly=poly, profile=profile, solver=solver,
                            output_times=times, xi_window=values["xi_window"],
                            floor=values["floor"], walk=walk,
                            map_check=bool(ns.map_check), out_dir=out_dir,
                            raw=values)


# -- orchestration ------------------------------------------------------------

def _nan_to_none(x):
    x = float(x)
    return None if not math.isfinite(x) else x


def _initial_field(config: ExperimentConfig, form: Form) -> Field1D:
    grid = Grid(config.solver.x_max, config.solver.n_cells)
    u0 = config.profile.sample(grid)
    if form is Form.NONDIVERGENCE:
        return u0.with_values(psi(config.poly, u0.values))
    return u0


def _solve(config: ExperimentConfig, form: Form):
    solver = replace(config.solver, form=form)
    f0 = _initial_field(config, form)
    snaps, state = run(f0, config.poly, solver, config.output_times)
    return [f0] + snaps, state


def _as_u(config: ExperimentConfig, snaps, form: Form):
    if form is Form.DIVERGENCE:
        return snaps
    return [s.with_values(psi_inverse(config.poly, np.maximum(s.values, 0.0)))
            for s in snaps]


def _write_summary(out_dir: Path, summary: dict) -> None:
    with (out_dir / "summary.json").open("w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _coarsen(values: np.ndarray, n_bins: int) -> np.ndarray:
    if values.size % n_bins:
        raise ConfigError("walk.bins", "must divide ncells")
    return values.reshape(n_bins, -1).mean(axis=1)


def run_walk(config: ExperimentConfig, reference=None) -> tuple[list[Field1D], dict]:
    """Run the particle model; optionally compare with PDE snapshots ``reference``."""
    wc = config.walk
    grid = Grid(config.solver.x_max, wc.bins)
    rng = np.random.default_rng(np.random.SeedSequence(wc.seed, spawn_key=(2**31,)))
    ens = ParticleEnsemble(sample_positions(config.profile, wc.n, rng), wc.seed,
                           make_jump(wc.jump, wc.delta))
    dens = []
    l1 = []
    ref = {s.time: s for s in (reference or [])}
    for t in config.output_times:
        ens = evolve(ens, config.poly, grid, t, wc.dtmacro)
        f = density_estimate(ens, grid.x_max, grid.n_cells)
        f.time = t
        dens.append(f)
        if t in ref:
            u = _coarsen(ref[t].values, wc.bins)
            l1.append(float(np.sum(np.abs(f.values - u)) * f.h))
    x2 = float(np.mean(ens.positions ** 2))
    info = {"walk_n": wc.n, "walk_msd": x2,
            "walk_l1": l1[-1] if l1 else None,
            "walk_l1_series": l1 or None}
    return dens, info


def run_experiment(config: ExperimentConfig, command: str = "simulate") -> int:
    """Run the configured solve and write snapshots, report and summary.

    Returns the process exit code: 0 only when positivity (and, for the
    divergence form, conservation of mass) held at every accepted step.
    """
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    form = config.solver.form
    started = time.perf_counter()
    want_pde = command != "walk"
    summary = {"command": command, "config": {k: v for k, v in config.raw.items()}}
    snaps_u = None
    ok = True
    try:
        if want_pde:
            snaps, state = _solve(config, form)
            column = "u" if form is Form.DIVERGENCE else "v"
            for s in snaps:
                csvio.write_snapshot(out, s, column=column)
            snaps_u = _as_u(config, snaps, form)
            report = build_report(snaps_u, config.poly.a0, 1, config.xi_window,
                                  config.floor)
            csvio.write_report(out / "report.csv", report)
            mass_drift = state.max_mass_drift if form is Form.DIVERGENCE else None
            min_value = min(state.min_value, float(np.min(snaps[0].values)))
            final = snaps[-1]
            summary.update({
                "slope": _nan_to_none(report.slope),
                "final_l2_error": _nan_to_none(report.l2_errors[-1]),
                "final_ratio": _nan_to_none(report.ratio_series[-1]),
                "mass_drift": mass_drift,
                "min_value": min_value,
                "boundary_flag": bool(state.boundary_flag),
                "steps": state.step_count,
                "rejected_steps": state.rejected_steps,
                "barrier_min_residual": (barrier_check(snaps_u[-1], config.poly)
                                         if np.any(final.values) else None),
            })
            if min_value < -POSITIVITY_TOL:
                ok = False
                log.error("positivity violated: min value %.3e", min_value)
            if mass_drift is not None and mass_drift > MASS_TOL:
                ok = False
                log.error("mass drift %.3e exceeds %g", mass_drift, MASS_TOL)
            if state.boundary_flag:
                log.warning("solution reached the domain ends; enlarge xmax")
            if config.map_check or command == "map-check":
                other = Form.NONDIVERGENCE if form is Form.DIVERGENCE else Form.DIVERGENCE
                snaps2, _ = _solve(config, other)
                u_runs, v_runs = (snaps, snaps2) if form is Form.DIVERGENCE else (snaps2, snaps)
                disc = [mapping_consistency(u, v, config.poly)
                        for u, v in zip(u_runs[1:], v_runs[1:])]
                csvio.write_columns(out / "map_check.csv", ("t", "discrepancy"),
                                    (config.output_times, disc))
                summary["mapping_consistency"] = max(disc)
        if config.walk is not None:
            dens, info = run_walk(config, snaps_u)
            for f in dens:
                csvio.write_snapshot(out, f, prefix="walk", column="f")
            summary.update(info)
    except (SolverError, InversionError, FloatingPointError) as exc:
        log.error("solver failure: %s", exc)
        summary["error"] = str(exc)
        _write_summary(out, summary)
        return EXIT_SOLVER

    summary["invariants_ok"] = ok
    _write_summary(out, summary)
    elapsed = time.perf_counter() - started
    if want_pde:
        slope = summary.get("slope")
        headline = f"slope = {'nan' if slope is None else format(slope, '.6g')}"
    else:
        headline = f"msd = {summary['walk_msd']:.6g}"
    print(f"{headline}  ({elapsed:.1f} s, output in {out})")
    return EXIT_OK if ok else EXIT_INVARIANT


def diagnose(directory: Path, poly: PolynomialDiffusivity,
             xi_window: float = XI_WINDOW, floor: float = FLOOR,
             out: Path | None = None) -> int:
    paths = csvio.list_snapshots(directory)
    if not paths:
        raise ConfigError("snapshots", f"no snapshot files in {directory}")
    snaps = []
    for p in paths:
        f = csvio.read_snapshot(p)
        if csvio.snapshot_column(p) == "v":
            f = f.with_values(psi_inverse(poly, np.maximum(f.values, 0.0)))
        snaps.append(f)
    report = build_report(snaps, poly.a0, 1, xi_window, floor)
    out = Path(out or directory)
    out.mkdir(parents=True, exist_ok=True)
    csvio.write_report(out / "report.csv", report)
    print(f"slope = {report.slope:.6g}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    top = argparse.ArgumentParser(prog="nondiff", description=__doc__,
                                  formatter_class=argparse.RawDescriptionHelpFormatter)
    top.add_argument("command", choices=COMMANDS)
    if not argv or argv[0] in ("-h", "--help"):
        top.print_help()
        return EXIT_OK if argv else EXIT_CONFIG
    command, rest = argv[0], argv[1:]
    if command not in COMMANDS:
        top.print_usage(sys.stderr)
        print(f"nondiff: unknown command {command!r}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        head = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
        head.add_argument("--config", default=None)
        defaults = None
        if command == "preset":
            head.add_argument("name", choices=sorted(PRESETS))
            head.add_argument("--full", action="store_true")
        if command == "diagnose":
            head.add_argument("--snapshots", required=True)
        ns, rest = head.parse_known_args(rest)
        text = Path(ns.config).read_text() if ns.config else None
        if command == "diagnose":
            cfg = parse_config(rest, text)
            return diagnose(Path(ns.snapshots), cfg.poly, cfg.xi_window, cfg.floor,
                            out=cfg.out_dir if "--out" in rest else None)
        if command == "preset":
            defaults = dict(PRESETS[ns.name])
            if ns.name == "fig3" and ns.full:
                defaults.update(FIG3_FULL)
            label = f"preset-{ns.name}"
        else:
            label = command
        cfg = parse_config(rest, text, defaults=defaults, command=label)
    except ConfigError as exc:
        print(f"nondiff: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, SystemExit) as exc:
        print(f"nondiff: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_experiment(cfg, "simulate" if command == "preset" else command)


if __name__ == "__main__":
    sys.exit(main())
