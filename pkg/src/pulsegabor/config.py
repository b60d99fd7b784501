"""Run configuration: TOML files, flag overrides, manifests.

Precedence, highest first: command-line flags, config-file values, the
PULSEGABOR_SEED environment variable (seed only), built-in defaults.
Every run writes the fully-resolved configuration back out as a JSON
manifest so it can be re-run bit-for-bit.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # 3.10 and earlier
    import tomli as tomllib

__all__ = ["RunConfig", "ConfigError", "load_config_file", "resolve_config", "write_manifest"]

SEED_ENV_VAR = "PULSEGABOR_SEED"


class ConfigError(ValueError):
    """Bad configuration file or incompatible override."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one CLI run."""

    # clock
    dt: float = 0.001
    duration: float = 12.0
    seed: int = 0
    theta: float = 1.0
    # adaptation
    decay: float = 0.05
    gain: float = 0.5
    relax: float = 8.0
    gate_gain: float = -1000.0
    # retina
    ceiling: float = 100.0
    sigma: float = 1.4
    eta: float = 0.0
    # mask source: a JSON file wins over the built-in Gabor parameters
    mask_file: str | None = None
    wavelength: float = 6.0
    orientation: float = 0.0
    mask_size: int = 7
    # outputs
    output_dir: str = "out"
    snapshot_pulses: tuple = ()

    def __post_init__(self) -> None:
        if self.dt <= 0 or self.duration <= 0:
            raise ConfigError("dt and duration must be > 0")
        if self.theta <= 0:
            raise ConfigError("theta must be > 0")
        if not 0.0 <= self.eta:
            raise ConfigError("eta must be >= 0")
        if self.ceiling <= 0:
            raise ConfigError("rate ceiling must be > 0")
        if self.mask_size < 1 or self.mask_size % 2 == 0:
            raise ConfigError("mask_size must be odd and >= 1")
        snaps = tuple(int(k) for k in self.snapshot_pulses)
        if any(k < 1 for k in snaps):
            raise ConfigError("snapshot_pulses must be >= 1")
        object.__setattr__(self, "snapshot_pulses", snaps)


# config-file sections mapped onto the flat dataclass; anything else
# in the file is rejected so typos fail loudly
_SECTIONS = {
    "sim": ("dt", "duration", "seed", "theta"),
    "plasticity": ("decay", "gain", "relax", "gate_gain"),
    "retina": ("ceiling", "sigma", "eta"),
    "mask": ("mask_file", "wavelength", "orientation", "mask_size"),
    "output": ("output_dir", "snapshot_pulses"),
}


def load_config_file(path) -> dict:
    """Flatten a TOML config file into RunConfig field names."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    flat = {}
    for section, payload in raw.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}] in {path}")
        if not isinstance(payload, dict):
            raise ConfigError(f"[{section}] must be a table in {path}")
        for key, value in payload.items():
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}] of {path}")
            flat[key] = value
    return flat


def resolve_config(
    flags: dict | None = None,
    file_values: dict | None = None,
    env: dict | None = None,
    defaults: dict | None = None,
) -> RunConfig:
    """Merge flag/file/env layers onto the defaults.

    ``flags`` entries that are None count as "not given".  ``defaults``
    lets a subcommand shift the built-in baseline (e.g. a longer
    default duration) while still losing to file and flag values.
    """
    env = os.environ if env is None else env
    values = dict(defaults or {})
    if env.get(SEED_ENV_VAR):
        try:
            values["seed"] = int(env[SEED_ENV_VAR])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env[SEED_ENV_VAR]!r}") from exc
    if file_values:
        values.update(file_values)
    if flags:
        values.update({k: v for k, v in flags.items() if v is not None})
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def write_manifest(path, config: RunConfig, extra: dict | None = None) -> None:
    """JSON manifest of the resolved config, stable key order.

    ``extra`` records per-subcommand facts (input paths, measured
    durations); no timestamps, so reruns stay byte-identical.
    """
    payload = dataclasses.asdict(config)
    payload["snapshot_pulses"] = list(config.snapshot_pulses)
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
