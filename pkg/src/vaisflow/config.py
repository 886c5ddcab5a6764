"""Experiment configuration files.

Plain-text sections-and-keys format: ``[section]`` headers, ``key = value``
lines, ``#`` comments.  Example::

    [chart]
    n = 1
    transverse_resolution = 64 64
    transverse_periods = 6.283185307179586 6.283185307179586
    potential = cos_bump
    amplitude = -0.4

    [flow]
    class_k = 0
    ricci_tolerance = 1e-6

    [output]
    directory = out

Unknown keys are rejected so typos fail loudly; every validation error
names the offending section.key.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from pathlib import Path

from .exceptions import ConfigError
from .flow import FlowConfig
from .grid import GridSpec
from .presets import POTENTIAL_PRESETS

__all__ = ["ChartSection", "ChecksSection", "OutputSection", "ExperimentConfig", "load_config"]

_TWO_PI = 2.0 * math.pi

_KNOWN_KEYS = {
    "chart": {
        "n",
        "transverse_resolution",
        "transverse_periods",
        "leaf_resolution",
        "leaf_periods",
        "potential",
        "amplitude",
    },
    "flow": {
        "class_k",
        "dt_initial",
        "dt_safety",
        "max_steps",
        "ricci_tolerance",
        "rescaled",
        "extended",
        "positivity_floor",
        "chi",
        "chi_amplitude",
        "t_final",
    },
    "checks": {
        "resolutions",
        "leaf_resolution",
        "potential",
        "amplitude",
        "deform_amplitude",
        "inject_defect",
    },
    "output": {"directory", "checkpoint_every"},
}


@dataclass(frozen=True)
class ChartSection:
    n: int = 1
    transverse_resolution: tuple[int, ...] = (64, 64)
    transverse_periods: tuple[float, ...] = (_TWO_PI, _TWO_PI)
    leaf_resolution: tuple[int, int] | None = None
    leaf_periods: tuple[float, float] | None = None
    potential: str = "flat"
    amplitude: float = 0.0

    def grid_spec(self) -> GridSpec:
        return GridSpec(
            self.n,
            self.transverse_resolution,
            self.transverse_periods,
            self.leaf_resolution,
            self.leaf_periods,
        )


@dataclass(frozen=True)
class ChecksSection:
    resolutions: tuple[int, ...] = (64, 128)
    leaf_resolution: tuple[int, int] = (8, 8)
    potential: str = "cos_bump"
    amplitude: float = -0.4
    deform_amplitude: float = -0.2
    inject_defect: bool = False


@dataclass(frozen=True)
class OutputSection:
    directory: str = "out"
    checkpoint_every: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    chart: ChartSection
    flow: FlowConfig
    chi: str
    chi_amplitude: float
    t_final: float | None
    checks: ChecksSection
    output: OutputSection


def _fail(section: str, key: str, message: str):
    raise ConfigError(f"{section}.{key}: {message}")


def _get(cp, section, key, cast, default, validate=None):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        value = cast(raw)
    except (TypeError, ValueError):
        _fail(section, key, f"cannot parse {raw!r}")
    if validate is not None:
        validate(value)
    return value


def _ints(raw: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in raw.split())


def _floats(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.split())


def _bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(raw)


def load_config(path: str | Path) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    for section in cp.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp.options(section):
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"{section}.{key}: unknown key")

    n = _get(cp, "chart", "n", int, 1, lambda v: v >= 1 or _fail("chart", "n", "must be >= 1"))
    res = _get(cp, "chart", "transverse_resolution", _ints, (64,) * (2 * n))
    per = _get(cp, "chart", "transverse_periods", _floats, (_TWO_PI,) * (2 * n))
    leaf_res = _get(cp, "chart", "leaf_resolution", _ints, None)
    leaf_per = _get(cp, "chart", "leaf_periods", _floats, (_TWO_PI, _TWO_PI) if leaf_res else None)
    potential = _get(
        cp, "chart", "potential", str, "flat",
        lambda v: v in POTENTIAL_PRESETS or _fail("chart", "potential", f"unknown preset {v!r}"),
    )
    amplitude = _get(cp, "chart", "amplitude", float, 0.0)
    chart = ChartSection(n, res, per, leaf_res, leaf_per, potential, amplitude)
    try:
        chart.grid_spec()
    except Exception as exc:
        raise ConfigError(f"chart: {exc}") from exc

    fc_kwargs = {}
    fc_kwargs["class_k"] = _get(
        cp, "flow", "class_k", int, 0,
        lambda v: v in (-1, 0) or _fail("flow", "class_k", "must be -1 or 0"),
    )
    fc_kwargs["dt_initial"] = _get(
        cp, "flow", "dt_initial", float, 0.05,
        lambda v: v > 0 or _fail("flow", "dt_initial", "must be positive"),
    )
    fc_kwargs["dt_safety"] = _get(
        cp, "flow", "dt_safety", float, 0.5,
        lambda v: 0 < v <= 1 or _fail("flow", "dt_safety", "must lie in (0, 1]"),
    )
    fc_kwargs["max_steps"] = _get(
        cp, "flow", "max_steps", int, 100_000,
        lambda v: v >= 1 or _fail("flow", "max_steps", "must be >= 1"),
    )
    fc_kwargs["ricci_tolerance"] = _get(
        cp, "flow", "ricci_tolerance", float, 1e-6,
        lambda v: v > 0 or _fail("flow", "ricci_tolerance", "must be positive"),
    )
    fc_kwargs["rescaled"] = _get(cp, "flow", "rescaled", _bool, False)
    fc_kwargs["extended"] = _get(cp, "flow", "extended", _bool, False)
    fc_kwargs["positivity_floor"] = _get(
        cp, "flow", "positivity_floor", float, 1e-10,
        lambda v: v > 0 or _fail("flow", "positivity_floor", "must be positive"),
    )
    flow_cfg = FlowConfig(**fc_kwargs)
    if flow_cfg.extended and chart.leaf_resolution is None:
        raise ConfigError("flow.extended: needs chart.leaf_resolution / chart.leaf_periods")

    chi = _get(cp, "flow", "chi", str, "none")
    chi_amplitude = _get(cp, "flow", "chi_amplitude", float, 0.0)
    t_final = _get(
        cp, "flow", "t_final", float, None,
        lambda v: v > 0 or _fail("flow", "t_final", "must be positive"),
    )

    checks = ChecksSection(
        resolutions=_get(cp, "checks", "resolutions", _ints, (64, 128)),
        leaf_resolution=_get(cp, "checks", "leaf_resolution", _ints, (8, 8)),
        potential=_get(
            cp, "checks", "potential", str, "cos_bump",
            lambda v: v in POTENTIAL_PRESETS or _fail("checks", "potential", f"unknown preset {v!r}"),
        ),
        amplitude=_get(cp, "checks", "amplitude", float, -0.4),
        deform_amplitude=_get(cp, "checks", "deform_amplitude", float, -0.2),
        inject_defect=_get(cp, "checks", "inject_defect", _bool, False),
    )

    output = OutputSection(
        directory=_get(cp, "output", "directory", str, "out"),
        checkpoint_every=_get(
            cp, "output", "checkpoint_every", int, 0,
            lambda v: v >= 0 or _fail("output", "checkpoint_every", "must be >= 0"),
        ),
    )

    return ExperimentConfig(chart, flow_cfg, chi, chi_amplitude, t_final, checks, output)
