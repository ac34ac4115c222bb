"""Command-line entry points.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import ConfigError, parse_config
from .geometry import PRESET_NAMES, preset_layout
from .sweep import SPARSE_METHODS, SweepContext, emit, run_sweep


def _log(msg: str):
    print(msg, file=sys.stderr)


def _cmd_run(args) -> int:
    config = parse_config(args.config)
    if args.seed is not None:
        from dataclasses import replace
        config = replace(config, seed=args.seed)
    rows = run_sweep(config, jobs=args.jobs,
                     log=_log if args.verbose else None)
    written = emit(rows, config, args.format, args.out)
    for p in written:
        _log(f"wrote {p}")
    return 0


def _cmd_presets(args) -> int:
    for name in PRESET_NAMES:
        layout = preset_layout(name)
        n_ap = len(layout.apertures)
        print(f"{name:14s} {layout.n_virtual:4d} virtual channels, "
              f"{n_ap} aperture{'s' if n_ap > 1 else ''}")
    return 0


def _cmd_calibrate(args) -> int:
    config = parse_config(args.config)
    ctx = SweepContext(config)
    gammas = {}
    for snr in config.snr_db:
        for method in config.methods:
            if method not in SPARSE_METHODS:
                continue
            key = f"{method}@{snr:g}dB"
            gammas[key] = {
                "gamma": ctx.calibrate_gamma(snr, method),
                "gamma_azimuth": ctx.calibrate_gamma_azimuth(snr, method),
            }
            _log(f"{key}: gamma={gammas[key]['gamma']:.6g}")
    out = args.out or (str(args.config) + ".gamma.json")
    with open(out, "w") as fh:
        json.dump(gammas, fh, indent=2, sort_keys=True)
    _log(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heightscope",
        description="Group-sparse azimuth/height estimation benchmark "
                    "for automotive radar with ground multipath.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a Monte Carlo sweep")
    p_run.add_argument("--config", required=True, help="YAML scenario file")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config's master seed")
    p_run.add_argument("--jobs", type=int,
                       default=max(1, os.cpu_count() or 1),
                       help="parallel worker count (results are invariant)")
    p_run.add_argument("--out", default="results",
                       help="output directory")
    p_run.add_argument("--format", choices=("csv", "json", "both"),
                       default="both")
    p_run.add_argument("--verbose", action="store_true")
    p_run.set_defaults(func=_cmd_run)

    p_presets = sub.add_parser("presets", help="list antenna layout presets")
    p_presets.set_defaults(func=_cmd_presets)

    p_cal = sub.add_parser("calibrate-gamma",
                           help="detection threshold calibration")
    p_cal.add_argument("--config", required=True)
    p_cal.add_argument("--out", default=None,
                       help="sidecar JSON path (default: <config>.gamma.json)")
    p_cal.set_defaults(func=_cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _log(f"configuration error: {exc}")
        return 2
    except KeyboardInterrupt:
        _log("interrupted")
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        _log(f"error: {exc}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
