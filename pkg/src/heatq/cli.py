"""Batch command-line front end.

Subcommands: forward, invert, roundtrip, nonuniqueness, plot-data.
Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""

import argparse
import sys

from .config import ExperimentConfig, apply_overrides, load_config
from .errors import ConfigError, HeatqError
from .pipeline import run_forward, run_invert, run_nonuniqueness, run_roundtrip
from .report import (
    read_spectra,
    render_all_figures,
    write_forward,
    write_invert,
    write_nonuniqueness,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def _lambda_list(raw: str):
    return tuple(float(v) for v in raw.replace(",", " ").split())


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--potential", help="potential spec (whitelist expression or file:<path>)")
    p.add_argument("--j-max", type=int, dest="j_max")
    p.add_argument("--n-nodes", type=int, dest="n_nodes")
    p.add_argument("--tol-root", type=float, dest="tol_root")
    p.add_argument("--tol-iter", type=float, dest="tol_iter")
    p.add_argument("--tol-quad", type=float, dest="tol_quad")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--m-steps", type=int, dest="m_steps")
    p.add_argument("--t-end", type=float, dest="t_end")
    p.add_argument("--pulse-T", type=float, dest="pulse_T")
    p.add_argument("--pulse-shape", choices=("quartic", "sine2"), dest="pulse_shape")
    p.add_argument("--pulse-amplitude", type=float, dest="pulse_amplitude")
    p.add_argument("--lambdas", type=_lambda_list, help="comma-separated lambda samples")
    p.add_argument(
        "--fit-lambdas", type=_lambda_list, dest="fit_lambdas",
        help="comma-separated lambda ladder for the measured-mode refit",
    )
    p.add_argument("--fit-modes", type=int, dest="fit_modes")
    p.add_argument("--ridge", type=float)
    p.add_argument("--mode", choices=("synthetic", "measured"))
    p.add_argument(
        "--seed-free",
        action="store_true",
        default=None,
        help="use the exact free spectrum instead of extraction",
    )
    p.add_argument(
        "--no-figures",
        action="store_true",
        help="skip figure rendering, write delimited data only",
    )
    p.add_argument(
        "--timings", action="store_true", default=None, help="include timings in report.txt"
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="heatq",
        description="Recover a heat-equation potential from boundary flux data",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    for name, descr in (
        ("forward", "spectra, pulse simulation and Laplace table for a known q"),
        ("invert", "recover q from a spectra file or a pulse time series"),
        ("roundtrip", "forward synthesis followed by inversion, with error norms"),
        ("nonuniqueness", "compare q against its reflection across x = 1/2"),
        ("plot-data", "render figures from an existing output directory"),
    ):
        p = sub.add_parser(name, help=descr)
        if name != "plot-data":
            _add_common(p)
        else:
            p.add_argument("--out", required=True, help="directory holding tsv output")
        if name == "invert":
            p.add_argument("--spectra", help="spectra.tsv produced by forward")
            p.add_argument("--pulse", help="pulse.tsv produced by forward (measured mode)")
    return ap


def _config_from_args(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = dict(
        potential_spec=args.potential,
        out_dir=args.out,
        j_max=args.j_max,
        n_nodes=args.n_nodes,
        tol_root=args.tol_root,
        tol_iter=args.tol_iter,
        tol_quad=args.tol_quad,
        max_iter=args.max_iter,
        m_steps=args.m_steps,
        t_end=args.t_end,
        pulse_T=args.pulse_T,
        pulse_shape=args.pulse_shape,
        pulse_amplitude=args.pulse_amplitude,
        lambdas=args.lambdas,
        fit_lambdas=args.fit_lambdas,
        fit_modes=args.fit_modes,
        ridge=args.ridge,
        mode=args.mode,
        seed_free=args.seed_free,
        timings=args.timings,
    )
    if args.no_figures:
        overrides["figures"] = False
    return apply_overrides(cfg, **overrides).validate()


def _run(args) -> int:
    if args.command == "plot-data":
        written = render_all_figures(args.out)
        for p in written:
            print(p)
        return EXIT_OK

    cfg = _config_from_args(args)
    if args.command == "forward":
        res = run_forward(cfg)
        written = write_forward(res, cfg.out_dir)
    elif args.command == "invert":
        spectra = record = None
        if getattr(args, "spectra", None):
            try:
                spectra = read_spectra(args.spectra)
            except (ValueError, KeyError) as exc:
                raise ConfigError(
                    "malformed spectra file %s: %s" % (args.spectra, exc)
                ) from exc
            spectra.check_interlacing()
        elif getattr(args, "pulse", None):
            from .report import read_table
            from .heat_sim import PulseRecord

            try:
                cols = read_table(args.pulse)
                record = PulseRecord(
                    t_nodes=cols["t"],
                    a_values=cols["a"],
                    b_values=cols["b"],
                    b0_values=cols["b0"],
                    T_support=cfg.pulse_T,
                )
            except (ValueError, KeyError) as exc:
                raise ConfigError(
                    "malformed pulse file %s: %s" % (args.pulse, exc)
                ) from exc
            if cfg.mode != "measured":
                cfg = apply_overrides(cfg, mode="measured")
        q_true = None
        if args.command == "invert" and spectra is None and record is None:
            # No input files: fall back to the configured potential.
            q_true = cfg.potential()
        res = run_invert(cfg, spectra=spectra, record=record, q_true=q_true)
        written = write_invert(res, cfg.out_dir)
    elif args.command == "roundtrip":
        res = run_roundtrip(cfg)
        written = write_invert(res, cfg.out_dir)
    elif args.command == "nonuniqueness":
        res = run_nonuniqueness(cfg)
        written = write_nonuniqueness(res, cfg.out_dir)
    else:  # pragma: no cover
        raise ConfigError("unknown command %r" % args.command)
    for p in written:
        print(p)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print("i/o error: %s" % exc, file=sys.stderr)
        return EXIT_IO
    except HeatqError as exc:
        stage = type(exc).__name__
        print("numerical failure [%s]: %s" % (stage, exc), file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
