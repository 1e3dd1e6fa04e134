"""Command-line interface.

Subcommands reproduce the headline analyses as machine-readable CSV (with a
rendered PNG for the curve-like reports) and run user-configured
simulations.  Every subcommand writes a manifest recording the resolved
parameters; replaying a manifest reproduces the outputs byte-for-byte:

    cascade-clock fig2 --out results
    cascade-clock fig2 --config results/fig2.manifest.json --out replay

Exit codes: 0 success, 2 invalid arguments or configuration, 1 runtime
failure (I/O errors carry the offending path).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cascade import (
    REDUCED_FREQUENCY,
    REDUCED_PERIOD,
    CascadeConfig,
    max_probe_period,
    max_unambiguous_phase,
)
from .clock_sim import (
    ClockConfig,
    allan_deviation,
    cascade_stability,
    simulate_clock,
)
from .error_analysis import (
    GAUSSIAN,
    RAMSEY,
    SchemeSpec,
    error_curve,
    fit_exponential,
    min_ensemble_size,
    min_ensemble_size_with_optimal_width,
)
from .errors import ConfigError
from .measurement import (
    GaussianStateSpec,
    gaussian_amplitudes,
    phase_state_distribution,
)
from .oscillator import (
    NOISE_KINDS,
    PER_INTERVAL_GAUSSIAN,
    LinearRamp,
    NoiseModel,
    dd_accumulated_phase,
    dd_pulse_times,
)
from .util import TWO_PI

# Default sweep per error curve: spans step probabilities from ~1e-2 down to
# the six-sigma regime (~1e-9).
_CURVE_DEFAULTS = {
    (REDUCED_FREQUENCY, RAMSEY): (range(6, 47, 2), None),
    (REDUCED_PERIOD, RAMSEY): (range(4, 37, 2), None),
    (REDUCED_FREQUENCY, GAUSSIAN): (range(4, 25), 0.735),
    (REDUCED_PERIOD, GAUSSIAN): (range(4, 20), 0.635),
}
_CURVE_KEYS = {
    "rf:ramsey": (REDUCED_FREQUENCY, RAMSEY),
    "rp:ramsey": (REDUCED_PERIOD, RAMSEY),
    "rf:gaussian": (REDUCED_FREQUENCY, GAUSSIAN),
    "rp:gaussian": (REDUCED_PERIOD, GAUSSIAN),
}


def _fmt(value) -> str:
    """Fixed CSV cell formatting: shortest round-trip repr for floats."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _write_json(path: Path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir: Path, subcommand: str, args, outputs):
    params = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in ("func", "config", "out")
    }
    manifest = {
        "tool": "cascade-clock",
        "version": __version__,
        "subcommand": subcommand,
        "parameters": params,
        "outputs": sorted(outputs),
    }
    path = out_dir / f"{subcommand.replace('-', '_')}.manifest.json"
    _write_json(path, manifest)
    return path


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


# ---------------------------------------------------------------- fig2


def _cmd_fig2(args):
    out = _out_dir(args)
    keys = (
        list(_CURVE_KEYS)
        if args.curves == "all"
        else [k.strip() for k in args.curves.split(",") if k.strip()]
    )
    for key in keys:
        if key not in _CURVE_KEYS:
            raise ConfigError(f"unknown curve '{key}' (choose from {list(_CURVE_KEYS)})")

    rows = []
    curves = {}
    fits = {}
    fit_payload = {}
    for key in keys:
        scheme, model = _CURVE_KEYS[key]
        default_ns, default_width = _CURVE_DEFAULTS[(scheme, model)]
        ns = list(default_ns)
        if args.n_min is not None or args.n_max is not None:
            lo = args.n_min if args.n_min is not None else min(ns)
            hi = args.n_max if args.n_max is not None else max(ns)
            step = 2 if model == RAMSEY else 1
            lo = lo + lo % step
            ns = list(range(lo, hi + 1, step))
        width = args.width if (model == GAUSSIAN and args.width) else default_width
        spec = SchemeSpec(scheme, model, args.ratio, width)
        points = error_curve(spec, ns, args.grid)
        curves[(scheme, model)] = points
        for pt in points:
            rows.append((scheme, model, pt.atoms, pt.probability))
        if len(points) >= 3 and all(pt.probability > 0 for pt in points):
            fit = fit_exponential(points)
            fits[(scheme, model)] = fit
            fit_payload[key] = {
                "prefactor": fit.prefactor,
                "rate": fit.rate,
                "residual": fit.residual,
                "width": width,
            }
        else:
            fits[(scheme, model)] = None
            fit_payload[key] = None

    csv_path = out / "fig2.csv"
    _write_csv(csv_path, ("scheme", "model", "N", "p"), rows)
    fits_path = out / "fig2_fits.json"
    _write_json(fits_path, fit_payload)
    from .plots import render_error_curves

    png_path = out / "fig2.png"
    render_error_curves(curves, fits, png_path)
    _write_manifest(out, "fig2", args, [csv_path.name, fits_path.name, png_path.name])
    return 0


# ---------------------------------------------------------------- fig3


def _cmd_fig3(args):
    out = _out_dir(args)
    spec = GaussianStateSpec(args.atoms, args.width)
    amps = gaussian_amplitudes(spec)
    delta = TWO_PI / (args.atoms + 1)
    shifts = _parse_float_list(args.phases)

    rows = []
    series = {}
    initial = amps**2
    series["initial"] = initial
    for idx, prob in enumerate(initial):
        rows.append(("initial", idx, prob))
    for shift in shifts:
        dist = phase_state_distribution(amps, shift * delta)
        label = f"phase_{shift:+g}delta"
        series[label] = dist.probabilities
        for idx, prob in enumerate(dist.probabilities):
            rows.append((label, idx, prob))

    csv_path = out / "fig3.csv"
    _write_csv(csv_path, ("series", "index", "probability"), rows)
    from .plots import render_phase_state_series

    png_path = out / "fig3.png"
    render_phase_state_series(series, png_path)
    _write_manifest(out, "fig3", args, [csv_path.name, png_path.name])
    return 0


# ---------------------------------------------------------------- min-n


def _cmd_min_n(args):
    out = _out_dir(args)
    rows = []
    for scheme in (REDUCED_FREQUENCY, REDUCED_PERIOD):
        spec = SchemeSpec(scheme, RAMSEY, args.ratio)
        atoms = min_ensemble_size(args.target_p, spec, args.grid)
        from .error_analysis import step_error_probability

        rows.append(
            (scheme, RAMSEY, atoms, "", step_error_probability(atoms, spec, args.grid))
        )
    for scheme in (REDUCED_FREQUENCY, REDUCED_PERIOD):
        atoms, width, prob = min_ensemble_size_with_optimal_width(
            args.target_p, scheme, args.ratio, args.grid
        )
        rows.append((scheme, GAUSSIAN, atoms, width, prob))

    csv_path = out / "min_n.csv"
    _write_csv(csv_path, ("scheme", "model", "N", "c", "p"), rows)
    _write_manifest(out, "min-n", args, [csv_path.name])
    return 0


# ---------------------------------------------------------------- simulate


def _cmd_simulate(args):
    out = _out_dir(args)
    theta = max_unambiguous_phase(args.levels, args.ratio)
    period = args.period
    if period is None:
        if args.alpha <= 0:
            raise ConfigError("--period is required when --alpha is 0")
        period = max_probe_period(args.alpha, theta)
    config = ClockConfig(
        atomic_frequency=args.omega,
        noise=NoiseModel(args.alpha, args.noise_kind),
        cascade=CascadeConfig(
            args.levels, args.ratio, args.scheme, args.atoms, period
        ),
        model=args.model,
        gaussian_width=args.width if args.model == GAUSSIAN else None,
        cycles=args.cycles,
        seed=args.seed,
        servo_gain=args.servo_gain,
    )
    run = simulate_clock(config)

    multiples = _parse_int_list(args.taus)
    points = allan_deviation(run.fractional_frequency, period, multiples)
    model_overlay = [
        cascade_stability(
            args.omega, args.alpha, args.atoms, args.levels, args.ratio, pt.tau
        )
        if args.alpha > 0
        else float("nan")
        for pt in points
    ]

    cycles_path = out / "cycles.csv"
    _write_csv(
        cycles_path,
        ("cycle", "true_phase", "estimated_phase", "correction", "wrap_error", "y"),
        (
            (
                i,
                run.true_phase[i],
                run.estimated_phase[i],
                run.correction[i],
                bool(run.wrap_error[i]),
                run.fractional_frequency[i],
            )
            for i in range(config.cycles)
        ),
    )
    allan_path = out / "allan.csv"
    _write_csv(
        allan_path,
        ("tau", "sigma_y", "sigma_y_model"),
        (
            (pt.tau, pt.sigma_y, model)
            for pt, model in zip(points, model_overlay)
        ),
    )
    summary = {
        "period": period,
        "max_unambiguous_phase": theta,
        "wrap_error_count": int(run.wrap_error.sum()),
        "mean_fractional_frequency": float(run.fractional_frequency.mean()),
        "std_fractional_frequency": float(run.fractional_frequency.std()),
        "mean_correction": float(run.correction.mean()),
    }
    summary_path = out / "summary.json"
    _write_json(summary_path, summary)
    from .plots import render_allan

    png_path = out / "allan.png"
    render_allan(points, model_overlay, png_path)
    _write_manifest(
        out,
        "simulate",
        args,
        [cycles_path.name, allan_path.name, summary_path.name, png_path.name],
    )
    return 0


# ---------------------------------------------------------------- dd-verify


def _cmd_dd_verify(args):
    out = _out_dir(args)
    ramp = LinearRamp(args.omega0, args.omega1)
    full_phase = args.omega0 * args.cycle + 0.5 * args.omega1 * args.cycle**2
    rows = []
    header = [
        "level",
        "pulse_a",
        "pulse_b",
        "measured_phase",
        "ideal_phase",
        "relative_error",
    ]
    if args.quad_coeff is not None:
        header.append("quad_residual")
    for level in _parse_int_list(args.j_list):
        seq = dd_pulse_times(args.cycle, args.ratio, level)
        measured = dd_accumulated_phase(ramp, seq)
        ideal = args.ratio ** (-level) * full_phase
        scale = max(abs(ideal), 1e-300)
        row = [
            level,
            seq.pulse_times[0],
            seq.pulse_times[1],
            measured,
            ideal,
            abs(measured - ideal) / scale,
        ]
        if args.quad_coeff is not None:
            # Quadratic drift is not rephased by the two-pulse sequence; the
            # residual is reported, not treated as an error.
            edges = (0.0,) + seq.pulse_times + (args.cycle,)
            quad = 0.0
            sign = 1.0
            for a, b in zip(edges, edges[1:]):
                quad += sign * args.quad_coeff * (b**3 - a**3) / 3.0
                sign = -sign
            quad_ideal = (
                args.ratio ** (-level) * args.quad_coeff * args.cycle**3 / 3.0
            )
            row.append(quad - quad_ideal)
        rows.append(row)

    csv_path = out / "dd_verify.csv"
    _write_csv(csv_path, header, rows)
    _write_manifest(out, "dd-verify", args, [csv_path.name])
    return 0


# ---------------------------------------------------------------- parser


def _add_common(parser):
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument(
        "--config",
        default=None,
        help="JSON file of parameter defaults (a manifest file also works)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cascade-clock",
        description=(
            "Analysis and simulation of multi-ensemble cascade atomic "
            "clocks: wrap-error probabilities, minimum ensemble sizes, "
            "phase-state distributions, decoupling pulses, and closed-loop "
            "stability."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser(
        "fig2", help="wrap-error probability curves vs ensemble size, with fits"
    )
    p.add_argument("--curves", default="all", help="comma list: rf:ramsey,rp:gaussian,...")
    p.add_argument("--n-min", type=int, default=None)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--width", "-c", type=float, default=None, help="gaussian state width")
    p.add_argument("--ratio", "-D", type=float, default=2.0)
    p.add_argument("--grid", type=int, default=256, help="phase grid size")
    _add_common(p)
    p.set_defaults(func=_cmd_fig2)

    p = sub.add_parser(
        "fig3", help="phase-state measurement distributions for a Gaussian state"
    )
    p.add_argument("--atoms", "-N", type=int, default=20)
    p.add_argument("--width", "-c", type=float, default=0.7)
    p.add_argument(
        "--phases",
        default="-2,0,2,2.5",
        help="comma list of phase shifts in units of 2*pi/(N+1)",
    )
    _add_common(p)
    p.set_defaults(func=_cmd_fig3)

    p = sub.add_parser(
        "min-n", help="minimum ensemble sizes for a target step error probability"
    )
    p.add_argument("--target-p", type=float, default=2e-9)
    p.add_argument("--ratio", "-D", type=float, default=2.0)
    p.add_argument("--grid", type=int, default=256)
    _add_common(p)
    p.set_defaults(func=_cmd_min_n)

    p = sub.add_parser("simulate", help="closed-loop clock run with Allan statistics")
    p.add_argument(
        "--scheme",
        choices=[REDUCED_FREQUENCY, REDUCED_PERIOD],
        default=REDUCED_FREQUENCY,
    )
    p.add_argument("--model", choices=[RAMSEY, GAUSSIAN], default=RAMSEY)
    p.add_argument("--atoms", "-N", type=int, default=46)
    p.add_argument("--ratio", "-D", type=float, default=2.0)
    p.add_argument("--levels", "-M", type=int, default=3)
    p.add_argument("--width", "-c", type=float, default=0.735)
    p.add_argument("--alpha", type=float, default=1.0, help="noise coefficient, rad/s")
    p.add_argument("--omega", type=float, default=1e10, help="atomic frequency, rad/s")
    p.add_argument("--cycles", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--period",
        "-T",
        type=float,
        default=None,
        help="probe period (default: the six-sigma maximum for alpha)",
    )
    p.add_argument("--servo-gain", type=float, default=1.0)
    p.add_argument("--noise-kind", choices=list(NOISE_KINDS), default=PER_INTERVAL_GAUSSIAN)
    p.add_argument("--taus", default="1,4,16", help="Allan tau multiples of the period")
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser(
        "dd-verify", help="decoupling pulse times and phase-scaling identity table"
    )
    p.add_argument("--ratio", "-D", type=float, default=2.0)
    p.add_argument("--j-list", default="0,1,2,3", help="comma list of levels")
    p.add_argument("--omega0", type=float, default=1.0, help="detuning offset, rad/s")
    p.add_argument("--omega1", type=float, default=1.0, help="detuning drift, rad/s^2")
    p.add_argument("--cycle", type=float, default=1.0, help="decoupling cycle length, s")
    p.add_argument(
        "--quad-coeff",
        type=float,
        default=None,
        help="also report the residual of a quadratic drift term",
    )
    _add_common(p)
    p.set_defaults(func=_cmd_dd_verify)

    return parser


def _apply_config_defaults(parser, argv):
    """Pre-parse --config and fold its parameters in as subcommand defaults."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", default=None)
    known, _ = probe.parse_known_args(argv)
    if known.config is None:
        return argv
    with open(known.config) as fh:
        payload = json.load(fh)
    params = payload.get("parameters", payload)
    if not isinstance(params, dict):
        raise ConfigError(f"config file {known.config} must hold a JSON object")
    for action in parser._subparsers._group_actions:
        for sub_parser in action.choices.values():
            valid = {a.dest for a in sub_parser._actions}
            sub_parser.set_defaults(
                **{k: v for k, v in params.items() if k in valid}
            )
    return argv


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_defaults(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        target = getattr(exc, "filename", None)
        where = f" ({target})" if target else ""
        print(f"error: {exc}{where}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
