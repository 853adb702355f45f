"""Command-line entry point: ``mmwave-anm {sweep-snr,sweep-frames,demo}``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields

from . import harness
from .errors import InvalidConfigurationError


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.replace(",", " ").split())


def _names(text: str) -> tuple:
    return tuple(v for v in text.replace(",", " ").split())


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# flag -> (config field, parser)
FLAG_FIELDS = {
    "nt": ("n_tx", int),
    "nr": ("n_rx", int),
    "nrf": ("n_rf", int),
    "subcarriers": ("n_subcarriers", int),
    "taps": ("n_taps", int),
    "paths": ("n_paths", int),
    "frames": ("frames", int),
    "frames_list": ("frames_list", _ints),
    "snr_list": ("snr_list", _floats),
    "trials": ("trials", int),
    "seed": ("base_seed", int),
    "estimators": ("estimators", _names),
    "grid": ("grid", int),
    "ram_iters": ("ram_iters", int),
    "zeta_scale": ("zeta_scale", float),
    "max_iters": ("max_iters", int),
    "out": ("out", str),
}


def _field_parser(name: str):
    ftype = {f.name: f.type for f in fields(harness.ExperimentConfig)}[name]
    if name in ("snr_list",):
        return _floats
    if name in ("frames_list",):
        return _ints
    if name in ("estimators",):
        return _names
    if "bool" in ftype:
        return _bool
    if "int" in ftype:
        return int
    if "float" in ftype:
        return float
    return str


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Keys are config field names or flag names."""
    known = harness.config_fields()
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidConfigurationError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key in FLAG_FIELDS:
                key = FLAG_FIELDS[key][0]
            if key not in known:
                raise InvalidConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
            value = None if value.lower() == "none" else _field_parser(key)(value)
            out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmwave-anm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("sweep-snr", "NMSE versus SNR at a fixed number of training frames"),
        ("sweep-frames", "NMSE versus number of training frames at a fixed SNR"),
        ("demo", "run every estimator once and print the NMSE"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--preset", choices=sorted(harness.PRESETS), default="desk")
        p.add_argument("--config", help="key = value file, overridden by flags")
        for flag, (_, conv) in FLAG_FIELDS.items():
            p.add_argument("--" + flag.replace("_", "-"), dest=flag, type=conv, default=None)
        p.add_argument("--frames-snr", dest="frames_snr_db", type=float, default=None, help="SNR for sweep-frames")
        p.add_argument("--noiseless", action="store_true", default=None)
        p.add_argument("--full-sounding", action="store_true", default=None)
        p.add_argument("--deterministic", action="store_true", help="write runtime_ms as nan for byte-stable output")
    return parser


def config_from_args(args) -> harness.ExperimentConfig:
    overrides = read_config_file(args.config) if args.config else {}
    for flag, (name, _) in FLAG_FIELDS.items():
        value = getattr(args, flag)
        if value is not None:
            overrides[name] = value
    for name in ("frames_snr_db", "noiseless", "full_sounding"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    return harness.preset(args.preset, **overrides)


def _print_aggregates(result, stream) -> None:
    print("estimator,snr_db,frames,mean_nmse_db,stderr_nmse_db,trials,failures", file=stream)
    for a in result.aggregates:
        print(
            f"{a['estimator']},{a['snr_db']:g},{a['frames']},{a['mean_nmse_db']:.3f},"
            f"{a['stderr_nmse_db']:.3f},{a['trials']},{a['failures']}",
            file=stream,
        )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = config_from_args(args)
    except (InvalidConfigurationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "demo":
        snr = config.snr_list[len(config.snr_list) // 2]
        print("estimator,snr_db,frames,nmse_db,iterations,runtime_ms")
        for est in config.estimators:
            row = harness.run_trial(config, snr, config.sounding_frames(config.frames), est, 0)
            status = " FAILED " + row.error if row.failed else ""
            print(f"{row.estimator},{row.snr_db:g},{row.frames},{row.nmse_db:.3f},{row.iterations},{row.runtime_ms:.1f}{status}")
        return 0

    sweep = harness.sweep_snr if args.command == "sweep-snr" else harness.sweep_frames
    result = sweep(config)
    csv_path, json_path = harness.emit_results(result, config.out, timing=not args.deterministic)
    _print_aggregates(result, sys.stdout)
    print(f"wrote {csv_path} and {json_path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
