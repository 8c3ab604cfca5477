"""Command-line interface.

Exit codes: 0 success, 2 configuration error (bad config file, bad flag
combination), 3 numeric-domain error (arguments outside the modeled domain,
bracket without a crossing).
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__, bell
from .app import (
    ConfigError,
    SweepSpec,
    emit_fig3,
    find_crossing,
    load_config,
    optimize_bins,
    sweep,
)
from .efficiency import detection_efficiency, generation_rate, total_efficiency
from .model import DomainError, SchemeConfig, SourceParams
from .montecarlo import estimate_eta

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH",
                        help="flat key=value configuration file")
    parser.add_argument("--json", action="store_true",
                        help="print machine-readable JSON to stdout")
    parser.add_argument("--literal-loss-exponent", action="store_true",
                        help="treat the per-bin delay loss as a bare decadic "
                             "exponent instead of decibels")
    parser.add_argument("--d0-excludes-filter", action="store_true",
                        help="drop the filtering-efficiency prefactor from "
                             "the per-bin no-herald probability")


def _load(args) -> tuple[SourceParams, SchemeConfig]:
    if args.config:
        return load_config(args.config)
    return SourceParams(), SchemeConfig(n_bins=31)


def _emit(args, payload: dict, text_lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _model_flags(args) -> dict:
    return {
        "include_filter_in_d0": not args.d0_excludes_filter,
        "literal_exponent": args.literal_loss_exponent,
    }


def _cmd_eval(args) -> int:
    params, scheme = _load(args)
    breakdown = total_efficiency(params, scheme, **_model_flags(args))
    eta_d = detection_efficiency(params, scheme)
    rate = generation_rate(params, scheme)
    payload = {
        "eta_total": breakdown.eta_total,
        "eta_detection": eta_d,
        "d0": breakdown.d0,
        "generation_rate_hz": rate,
        "n_bins": scheme.n_bins,
        "topology": scheme.topology.value,
        "detection": scheme.detection.value,
        "selection": scheme.selection.value,
        "per_bin_success": list(breakdown.per_bin_success),
        "pic_transmission": list(breakdown.pic_transmission),
    }
    _emit(args, payload, [
        f"eta_total          {breakdown.eta_total:.6f}",
        f"eta_detection      {eta_d:.6f}",
        f"no-herald prob d0  {breakdown.d0:.6f}",
        f"generation rate    {rate / 1e6:.1f} MHz",
        f"scheme             N={scheme.n_bins} {scheme.topology.value} "
        f"{scheme.detection.value} {scheme.selection.value}",
    ])
    return EXIT_OK


def _parse_sweep_values(args) -> tuple:
    if args.values:
        out = []
        for chunk in args.values.split(","):
            text = chunk.strip()
            out.append(int(text) if args.param == "n_bins" else float(text))
        return tuple(out)
    if args.param == "n_bins":
        lo = int(args.min if args.min is not None else 1)
        hi = int(args.max if args.max is not None else 128)
        step = int(args.step or 1)
        return tuple(range(lo, hi + 1, step))
    if args.min is None or args.max is None or args.step is None:
        raise ConfigError("numeric sweeps need --min, --max and --step "
                          "(or --values)")
    values = []
    x = float(args.min)
    while x <= float(args.max) + 1e-12:
        values.append(round(x, 12))
        x += float(args.step)
    return tuple(values)


def _cmd_sweep(args) -> int:
    params, scheme = _load(args)
    spec = SweepSpec(args.param, _parse_sweep_values(args), params, scheme)
    curve = sweep(spec, **_model_flags(args))
    payload = {
        "parameter": args.param,
        "label": curve.label,
        "points": [[x, y] for x, y in curve.points],
        "best_x": curve.best_x,
        "eta_max": curve.eta_max,
    }
    lines = [f"# sweep {args.param} ({curve.label})"]
    lines += [f"{x}\t{y:.6f}" for x, y in curve.points]
    lines.append(f"# maximum eta={curve.eta_max:.6f} at {args.param}={curve.best_x}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(f"{args.param},eta\n")
            for x, y in curve.points:
                fh.write(f"{x},{float(y)!r}\n")
        lines.append(f"# wrote {args.out}")
    _emit(args, payload, lines)
    return EXIT_OK


def _cmd_optimize(args) -> int:
    params, scheme = _load(args)
    curve = optimize_bins(params, scheme, args.n_min, args.n_max,
                          **_model_flags(args))
    payload = {"label": curve.label, "best_n": curve.best_x,
               "eta_max": curve.eta_max}
    _emit(args, payload, [
        f"best N   {curve.best_x}",
        f"eta_max  {curve.eta_max:.6f}",
        f"scheme   {curve.label}",
    ])
    return EXIT_OK


def _cmd_crossing(args) -> int:
    params, _ = _load(args)
    value = find_crossing(params, args.lo, args.hi, args.tol,
                          **_model_flags(args))
    _emit(args, {"crossing_eta_sw": value, "lo": args.lo, "hi": args.hi},
          [f"protocol crossing at eta_sw = {value:.4f}"])
    return EXIT_OK


def _cmd_mc(args) -> int:
    params, scheme = _load(args)
    flags = _model_flags(args)
    result = estimate_eta(params, scheme, args.trials, args.seed,
                          workers=args.workers, **flags)
    analytic = total_efficiency(params, scheme, **flags).eta_total
    sigma = result.std_err if result.std_err > 0 else float("nan")
    z = (result.eta_hat - analytic) / sigma if sigma == sigma else 0.0
    payload = {
        "eta_hat": result.eta_hat,
        "std_err": result.std_err,
        "analytic_eta": analytic,
        "z_score": z,
        "n_trials": result.n_trials,
        "n_single": result.n_single,
        "n_multi": result.n_multi,
        "n_vacuum": result.n_vacuum,
        "multi_given_emission": result.multi_given_emission,
        "per_bin_hist": list(result.per_bin_hist),
        "seed": args.seed,
        "rng_algorithm": result.rng_algorithm,
    }
    _emit(args, payload, [
        f"eta_hat    {result.eta_hat:.6f} +/- {result.std_err:.6f}",
        f"analytic   {analytic:.6f}  (z = {z:+.2f})",
        f"outcomes   single={result.n_single} multi={result.n_multi} "
        f"vacuum={result.n_vacuum}",
        f"rng        {result.rng_algorithm} seed={args.seed}",
    ])
    return EXIT_OK


def _cmd_bell(args) -> int:
    enum = bell.hbs_enumeration()
    two_prob, _ = bell.two_source_enumeration()
    payload = {
        "herald_probability": enum.herald_probability,
        "bell_yield": enum.bell_yield,
        "false_herald_probability": enum.false_herald_probability,
        "patterns": {
            name: {"probability": p.probability, "bell": p.bell_label,
                   "fidelity": p.fidelity}
            for name, p in enum.patterns.items()},
        "two_source_coincidence": two_prob,
    }
    lines = [
        f"four-source herald probability   {enum.herald_probability:.6f} "
        f"(= {enum.herald_probability * 16:.4f}/16)",
        f"  heralded-Bell yield            {enum.bell_yield:.6f}",
        f"  false heralds                  {enum.false_herald_probability:.6f}",
        f"two-source coincidence           {two_prob:.6f}",
    ]
    if args.eta is not None:
        hbs = bell.composed_success(args.eta, bell.BellScheme.HBS4)
        ps2 = bell.composed_success(args.eta, bell.BellScheme.POST_SELECTED2)
        payload["composed"] = {"eta": args.eta, "hbs4": hbs,
                               "post_selected2": ps2}
        lines.append(f"composed at eta={args.eta}: hbs4={hbs:.6f} "
                     f"post-selected2={ps2:.6f}")
    _emit(args, payload, lines)
    return EXIT_OK


def _cmd_fig3(args) -> int:
    params, _ = _load(args)
    written = emit_fig3(args.out, params, seed=args.seed,
                        **_model_flags(args))
    _emit(args, {"written": written}, [f"wrote {p}" for p in written])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonmux",
        description="Time-multiplexed heralded single-photon source models")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="efficiency breakdown at one design point")
    _common_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="sweep one parameter")
    _common_flags(p)
    p.add_argument("--param", default="n_bins")
    p.add_argument("--min", type=float)
    p.add_argument("--max", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--values", help="comma-separated explicit values")
    p.add_argument("--out", metavar="CSV", help="write points as CSV")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("optimize", help="maximize efficiency over N")
    _common_flags(p)
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=128)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("crossing",
                       help="switch transmission equalizing the two protocols")
    _common_flags(p)
    p.add_argument("--lo", type=float, default=0.85)
    p.add_argument("--hi", type=float, default=0.99)
    p.add_argument("--tol", type=float, default=1e-3)
    p.set_defaults(func=_cmd_crossing)

    p = sub.add_parser("mc", help="Monte Carlo validation run")
    _common_flags(p)
    p.add_argument("--trials", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("bell", help="entangled-state success probabilities")
    _common_flags(p)
    p.add_argument("--eta", type=float,
                   help="source efficiency for the composed success numbers")
    p.set_defaults(func=_cmd_bell)

    p = sub.add_parser("fig3", help="emit the reference-curve CSV files")
    _common_flags(p)
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_fig3)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
