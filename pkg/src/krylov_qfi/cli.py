"""``qfi`` command-line interface.

Exit status: 0 success, 2 configuration error, 3 numerical failure, 4 I/O.
"""

import argparse
import json
import sys

from .exceptions import ConfigError, DimensionTooLargeError, ExportError, KrylovQFIError
from .experiments import ExperimentConfig, export, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _common(sub):
    sub.add_argument("--max-n", type=int, help="maximum Krylov depth")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--formats", help="comma-separated subset of json,csv (default both)")
    sub.add_argument("--config", help="JSON config file; its values override the flags")


def build_parser():
    parser = argparse.ArgumentParser(prog="qfi", description="Krylov-subspace quantum Fisher information")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("ising", help="random-state ensemble under the mixed-field Ising chain")
    p.add_argument("--length", type=int, help="number of sites L")
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--g", type=float, default=-1.05)
    p.add_argument("--h", type=float, default=0.5)
    p.add_argument("--ensemble", type=int, default=20, help="number of random states")
    p.add_argument("--seed", type=int, default=0, help="64-bit base seed")
    _common(p)

    p = subs.add_parser("synthetic", help="convergence study on a synthetic spectral measure")
    p.add_argument("--regime", choices=["gapped", "hard-edge"])
    p.add_argument("--alpha", type=float, help="edge exponent (hard-edge)")
    p.add_argument("--lmin", type=float, help="lower support edge (gapped)")
    p.add_argument("--lmax", type=float, help="upper support edge")
    p.add_argument("--atoms", type=int, help="number of atoms M")
    p.add_argument("--window", type=int, nargs=2, metavar=("LO", "HI"), help="fit window in n")
    _common(p)

    p = subs.add_parser("custom", help="a user-supplied state and Hamiltonian or Kraus channel")
    p.add_argument("--rho", help="JSON matrix file for the state")
    p.add_argument("--hamiltonian", help="JSON matrix file for the generator")
    p.add_argument("--kraus", help="JSON list of Kraus operators")
    p.add_argument("--dkraus", help="JSON list of their parameter derivatives")
    _common(p)
    return parser


def _flags_to_config(args):
    if args.command == "ising":
        experiment = "ising"
        params = {"length": args.length, "J": args.J, "g": args.g, "h": args.h}
        extra = {"ensemble_size": args.ensemble, "rng_seed": args.seed}
        default_n = 150
    elif args.command == "synthetic":
        experiment = "synthetic"
        params = {
            "regime": args.regime,
            "alpha": args.alpha,
            "lmin": args.lmin,
            "lmax": args.lmax,
            "atoms": args.atoms,
            "window": args.window,
        }
        params = {k: v for k, v in params.items() if v is not None}
        extra = {}
        default_n = 40
    else:
        experiment = "custom-seed"
        params = {k: getattr(args, k) for k in ("rho", "hamiltonian", "kraus", "dkraus") if getattr(args, k)}
        extra = {}
        default_n = None
    cfg = {"experiment": experiment, "params": params, **extra}
    if args.max_n is not None:
        cfg["max_n"] = args.max_n
    elif default_n is not None:
        cfg["max_n"] = default_n
    if args.out is not None:
        cfg["output_dir"] = args.out
    if args.formats is not None:
        cfg["formats"] = args.formats
    return cfg


def resolve_config(args):
    """Merge flags with an optional ``--config`` file (file values win)."""
    cfg = _flags_to_config(args)
    if args.config:
        try:
            with open(args.config) as fh:
                override = json.load(fh)
        except OSError as exc:
            raise ExportError(f"cannot read {args.config}: {exc.strerror}", path=args.config) from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config} is not valid JSON: {exc}") from exc
        if not isinstance(override, dict):
            raise ConfigError(f"{args.config} must hold a JSON object")
        if override.get("experiment", cfg["experiment"]) != cfg["experiment"]:
            raise ConfigError(
                f"config file is for {override['experiment']!r} but the command is {args.command!r}"
            )
        params = {**cfg["params"], **override.get("params", {})}
        cfg = {**cfg, **override, "params": params}
    if cfg["experiment"] == "custom-seed" and "max_n" not in cfg:
        cfg["max_n"] = 10**6  # run to breakdown
    return ExperimentConfig.from_dict(cfg)


def _summary(report):
    lines = []
    curve = report.error_curve["mean_rel_error"]
    lines.append(f"levels: {len(curve)}  final mean rel_error: {curve[-1]:.3e}")
    d0 = report.d0_stats
    if d0["saturated"]:
        lines.append(f"d0: min {d0['min']}  max {d0['max']}  ({d0['saturated']}/{len(d0['values'])} saturated)")
    kinds = [c["kind"] for c in report.classification]
    lines.append("regimes: " + ", ".join(f"{k} x{kinds.count(k)}" for k in sorted(set(kinds))))
    if report.fits:
        f = report.fits
        lines.append(
            f"fit ({f['model']}, n in {f['window']}): {f['value']:.4f}  residual {f['residual']:.2e}"
            f"  deviation from reference {f['relative_deviation']:+.1%}"
        )
    for flag in report.flags:
        lines.append(f"flag: {flag}")
    return "\n".join(lines)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        report = run_experiment(cfg)
        written = export(report, cfg.formats, cfg.output_dir)
    except (ConfigError, DimensionTooLargeError) as exc:
        print(f"qfi: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KrylovQFIError as exc:
        where = f" (member {exc.member_index})" if hasattr(exc, "member_index") else ""
        print(f"qfi: numeric failure{where}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"qfi: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(_summary(report))
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
