"""Command-line front end.

Subcommands: demo-subtractor, edge, filter, oracle, compare.  Every
run resolves one RunConfig (flags > config file > PULSEGABOR_SEED >
defaults), writes its outputs plus a manifest.json into the output
directory, and is byte-reproducible from (config, seed).

Exit codes: 0 success, 1 usage error, 2 data or config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import ConfigError, RunConfig, load_config_file, resolve_config, write_manifest
from .figures import edge_figure, response_figure, save_figure, sweep_figure
from .filters import (
    IntegerMask,
    PyramidConfig,
    build_edge_detector,
    build_gabor_pyramid,
    quantize_kernel,
)
from .images import load_pgm, save_pgm, step_edge_row, to_uint8
from .microcircuit import sweep_subtractor, sweep_to_csv
from .oracle import compare, convolve2d, gabor_kernel
from .plasticity import DendriteRuleParams, MembraneRuleParams
from .retina import OpticsModel, brightness_to_rate, smooth_image

__all__ = ["main", "run_cli"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage problems must exit 1, not argparse's default 2
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _parse_span(text: str) -> np.ndarray:
    """'start:stop:step' -> inclusive float range."""
    parts = text.split(":")
    if len(parts) != 3:
        raise _UsageError(f"expected start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise _UsageError(f"non-numeric sweep bound in {text!r}") from None
    if step <= 0:
        raise _UsageError("sweep step must be > 0")
    n = int(round((stop - start) / step))
    return start + step * np.arange(n + 1)


_GABOR_KEYS = {"wavelength": "wavelength", "orientation": "orientation", "size": "mask_size"}


def _parse_gabor(text: str) -> dict:
    """'wavelength=6,orientation=0' -> config field overrides."""
    out = {}
    for item in text.split(","):
        if not item:
            continue
        key, sep, value = item.partition("=")
        if not sep or key not in _GABOR_KEYS:
            raise _UsageError(f"bad --gabor item {item!r} (keys: {', '.join(_GABOR_KEYS)})")
        try:
            out[_GABOR_KEYS[key]] = int(value) if key == "size" else float(value)
        except ValueError:
            raise _UsageError(f"bad --gabor value in {item!r}") from None
    return out


def _add_common(parser: _Parser) -> None:
    parser.add_argument("--config", help="TOML config file")
    parser.add_argument("--out", dest="output_dir", help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--duration", type=float)


_CONFIG_FLAGS = (
    "output_dir",
    "seed",
    "dt",
    "duration",
    "eta",
    "sigma",
    "ceiling",
    "mask_file",
)


def _resolve(args, defaults: dict | None = None) -> RunConfig:
    file_values = load_config_file(args.config) if getattr(args, "config", None) else None
    flags = {k: getattr(args, k, None) for k in _CONFIG_FLAGS}
    gabor = getattr(args, "gabor", None)
    if gabor:
        flags.update(_parse_gabor(gabor))
    snaps = getattr(args, "snapshot_pulses", None)
    if snaps is not None:
        flags["snapshot_pulses"] = tuple(snaps)
    return resolve_config(flags, file_values, defaults=defaults)


def _out_dir(config: RunConfig) -> str:
    os.makedirs(config.output_dir, exist_ok=True)
    return config.output_dir


def _load_mask(config: RunConfig) -> IntegerMask:
    if config.mask_file:
        try:
            with open(config.mask_file, "r", encoding="ascii") as fh:
                return IntegerMask.from_json(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read mask file {config.mask_file}: {exc}") from exc
        except (KeyError, json.JSONDecodeError) as exc:
            raise ConfigError(f"malformed mask file {config.mask_file}: {exc}") from exc
    kernel = gabor_kernel(
        wavelength=config.wavelength,
        orientation=config.orientation,
        sigma=2.2,
        aspect=0.9,
        size=config.mask_size,
    )
    return quantize_kernel(kernel)


# -- subcommands -------------------------------------------------------


def _cmd_demo_subtractor(args) -> int:
    config = _resolve(args, defaults={"dt": 0.0025, "duration": 120.0})
    out = _out_dir(config)
    r2_values = _parse_span(args.sweep_r2)
    plus_rule = MembraneRuleParams(decay=config.decay, gain=config.gain, theta=config.theta)
    minus_rule = MembraneRuleParams(decay=config.decay, gain=-config.gain, theta=config.theta)
    branch_rule = DendriteRuleParams(relax=config.relax, gate_gain=config.gate_gain)
    stats = sweep_subtractor(
        args.r1,
        r2_values,
        duration=config.duration,
        dt=config.dt,
        theta=config.theta,
        plus_rule=plus_rule,
        minus_rule=minus_rule,
        branch_rule=branch_rule,
    )
    csv_path = os.path.join(out, "sweep.csv")
    sweep_to_csv(csv_path, args.r1, r2_values, stats, include_analytic=True)
    measured = [s.rate_4 for s in stats]
    analytic = np.maximum(args.r1 - r2_values, 0.0)
    save_figure(sweep_figure(args.r1, r2_values, measured, analytic), os.path.join(out, "sweep.png"))
    write_manifest(
        os.path.join(out, "manifest.json"),
        config,
        {"subcommand": "demo-subtractor", "r1": args.r1, "sweep_r2": args.sweep_r2},
    )
    print(f"wrote {csv_path} ({len(stats)} points)")
    return 0


def _cmd_edge(args) -> int:
    config = _resolve(args, defaults={"dt": 0.002, "duration": 12.0})
    out = _out_dir(config)
    window = args.window
    detector = build_edge_detector(window, pooled=False)
    pooled_detector = build_edge_detector(window, pooled=True)
    margin = 15  # room for the smoothed transition on either side
    length = window + 2 * margin
    start = margin
    optics = OpticsModel(config.sigma)
    displacements = np.arange(-2, window + 3)
    rows = []
    for d in displacements:
        image = step_edge_row(length, start + int(d))[None, :]
        rates = brightness_to_rate(smooth_image(image, optics), config.ceiling)[0, start : start + window]
        plain = detector.run(
            rates, config.duration, dt=config.dt,
            noise_level=config.eta, seed=config.seed,
        )
        pooled = pooled_detector.run(
            rates, config.duration, dt=config.dt,
            noise_level=config.eta, seed=config.seed,
        )
        rows.append((int(d), plain.unpooled, pooled.pooled, plain.negative))
    csv_path = os.path.join(out, "edge.csv")
    with open(csv_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("displacement,unpooled,pooled,negative\n")
        for d, u, p, n in rows:
            fh.write(f"{d},{u:.6f},{p:.6f},{n:.6f}\n")
    save_figure(
        edge_figure(displacements, [r[1] for r in rows], [r[2] for r in rows]),
        os.path.join(out, "edge.png"),
    )
    write_manifest(
        os.path.join(out, "manifest.json"),
        config,
        {"subcommand": "edge", "window": window},
    )
    print(f"wrote {csv_path} ({len(rows)} displacements)")
    return 0


def _cmd_filter(args) -> int:
    config = _resolve(args)
    out = _out_dir(config)
    image = load_pgm(args.image)
    mask = _load_mask(config)
    pyramid_config = PyramidConfig(
        dt=config.dt,
        duration=config.duration,
        theta=config.theta,
        sigma=config.sigma,
        rate_ceiling=config.ceiling,
        noise_level=config.eta,
        seed=config.seed,
        snapshot_pulses=config.snapshot_pulses,
    )
    pyramid = build_gabor_pyramid(mask, image, pyramid_config)
    result = pyramid.run()
    full = result.grid("abs")
    response_path = os.path.join(out, "response.pgm")
    save_pgm(response_path, to_uint8(full))
    panels = {"full": full}
    for k in sorted(result.snapshots):
        snap = result.snapshot_grid(k)
        save_pgm(os.path.join(out, f"snapshot_{k}.pgm"), to_uint8(snap))
        panels[f"after {k} pulses"] = snap
    if args.dump_stages:
        for i, stage in enumerate(
            ("pixels", "pairs_pos", "pairs_neg", "sum_pos", "sum_neg", "sub_pos", "sub_neg", "abs"),
            start=1,
        ):
            save_pgm(
                os.path.join(out, f"stage{i}_{stage}.pgm"),
                to_uint8(result.grid(stage)),
            )
    if args.dump_routing:
        pyramid.to_routing_table().to_json(os.path.join(out, "routing.json"))
    save_figure(response_figure(panels), os.path.join(out, "response.png"))
    write_manifest(
        os.path.join(out, "manifest.json"),
        config,
        {
            "subcommand": "filter",
            "image": args.image,
            "mask_coefficients": mask.coefficients.tolist(),
            "out_shape": list(result.out_shape),
            "brightest_address": result.brightest_address,
            "brightest_pulses": result.brightest_pulses,
        },
    )
    print(f"wrote {response_path}, shape {result.out_shape}, duration {config.duration}")
    return 0


def _cmd_oracle(args) -> int:
    config = _resolve(args)
    out = _out_dir(config)
    image = load_pgm(args.image)
    mask = _load_mask(config)
    smoothed = smooth_image(image, OpticsModel(config.sigma)).astype(np.float64)
    response = np.abs(convolve2d(smoothed, mask.coefficients.astype(np.float64)))
    oracle_path = os.path.join(out, "oracle.pgm")
    save_pgm(oracle_path, to_uint8(response))
    write_manifest(
        os.path.join(out, "manifest.json"),
        config,
        {
            "subcommand": "oracle",
            "image": args.image,
            "mask_coefficients": mask.coefficients.tolist(),
            "out_shape": list(response.shape),
        },
    )
    print(f"wrote {oracle_path}, shape {response.shape}")
    return 0


def _cmd_compare(args) -> int:
    config = _resolve(args)
    out = _out_dir(config)
    a = load_pgm(args.a).astype(np.float64)
    b = load_pgm(args.b).astype(np.float64)
    report = compare(a, b)
    metrics = {"ncc": report.ncc, "mae": report.mae, "max_abs": report.max_abs}
    metrics_path = os.path.join(out, "metrics.json")
    with open(metrics_path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(metrics, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(
        os.path.join(out, "manifest.json"),
        config,
        {"subcommand": "compare", "a": args.a, "b": args.b},
    )
    print(f"ncc={report.ncc:.6f} mae={report.mae:.6f} max_abs={report.max_abs:.6f}")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="pulsegabor", description="Pulse-based image filtering")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    p = sub.add_parser("demo-subtractor", help="rate-subtraction sweep", parents=[])
    _add_common(p)
    p.add_argument("--r1", type=float, default=100.0, help="driving input rate")
    p.add_argument("--sweep-r2", default="0:200:10", help="counter-rate sweep start:stop:step")
    p.set_defaults(func=_cmd_demo_subtractor)

    p = sub.add_parser("edge", help="step-edge displacement sweep")
    _add_common(p)
    p.add_argument("--window", type=int, default=10, help="pixel window span")
    p.add_argument("--eta", type=float)
    p.set_defaults(func=_cmd_edge)

    p = sub.add_parser("filter", help="pulsed mask convolution of an image")
    _add_common(p)
    p.add_argument("--image", required=True, help="input PGM (P5)")
    p.add_argument("--gabor", help="built-in mask parameters, e.g. wavelength=6,orientation=0")
    p.add_argument("--mask", dest="mask_file", help="JSON mask file (overrides --gabor)")
    p.add_argument("--snapshot-pulses", dest="snapshot_pulses", type=int, nargs="+",
                   help="brightest-pixel pulse counts that trigger early snapshots")
    p.add_argument("--eta", type=float, help="retina noise level")
    p.add_argument("--sigma", type=float, help="optics smoothing width")
    p.add_argument("--ceiling", type=float, help="pixel rate at full brightness")
    p.add_argument("--dump-stages", action="store_true", help="write per-stage histogram PGMs")
    p.add_argument("--dump-routing", action="store_true", help="write the wiring as routing.json")
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("oracle", help="conventional |convolution| of an image")
    _add_common(p)
    p.add_argument("--image", required=True, help="input PGM (P5)")
    p.add_argument("--gabor", help="built-in mask parameters")
    p.add_argument("--mask", dest="mask_file", help="JSON mask file")
    p.add_argument("--sigma", type=float)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("compare", help="similarity metrics between two PGMs")
    _add_common(p)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=_cmd_compare)

    return parser


def run_cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.error("a subcommand is required")
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (ConfigError, ValueError, OSError) as exc:
        print(f"pulsegabor: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    return run_cli(argv)


if __name__ == "__main__":
    sys.exit(main())
