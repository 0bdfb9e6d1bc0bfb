"""YAML run configuration with per-key validation and line diagnostics.

A configuration is a two-level mapping ``section -> key -> value``. Every key
has a default, so an empty document is valid. Command-line flags are applied
on top as ``(section, key) -> value`` overrides. Angles are in degrees.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import yaml

from .exceptions import ClickPolError

AXES = ("qwp", "hwp", "nbar")
OUTPUTS = ("second-order", "mprime-mineig", "s-nl-moments", "noise-thresholds")
DEFAULT_ORACLE_ANGLES = [0.0, 22.5, 45.0, 67.5, 90.0]


class ConfigError(ClickPolError, ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(field)
        super().__init__(f"{': '.join(where)}: {message}" if where else message)


def _number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _number_list(x):
    return isinstance(x, list) and len(x) > 0 and all(_number(v) for v in x)


# (checker, description, default)
SCHEMA = {
    "state": {
        "lambda": (lambda x: _number(x) and 0 <= abs(x) < 1, "a number with |lambda| < 1", 0.36),
        "phi_deg": (_number, "a number (degrees)", 180.0),
    },
    "detector": {
        "bins": (lambda x: _int(x) and x >= 1, "a positive integer", 8),
        "efficiency": (lambda x: _number(x) and 0 <= x <= 1, "a number in [0, 1]", 0.135),
    },
    "scan": {
        "axis": (lambda x: x in AXES, f"one of {', '.join(AXES)}", "qwp"),
        "fixed_deg": (_number, "a number (degrees)", 0.0),
        "start": (_number, "a number", 0.0),
        "stop": (_number, "a number", 90.0),
        "step": (lambda x: _number(x) and x > 0, "a positive number", 5.0),
        "outputs": (lambda x: isinstance(x, list) and len(x) > 0 and all(v in OUTPUTS for v in x),
                    f"a non-empty list drawn from {', '.join(OUTPUTS)}",
                    ["second-order", "mprime-mineig", "s-nl-moments"]),
    },
    "sampling": {
        "shots": (lambda x: x is None or (_int(x) and x >= 2), "null or an integer >= 2", None),
        "seed": (lambda x: _int(x) and x >= 0, "a non-negative integer", 20240101),
        "resamples": (lambda x: _int(x) and x >= 2, "an integer >= 2", 200),
        "qwp_deg": (_number, "a number (degrees)", 0.0),
        "hwp_deg": (_number, "a number (degrees)", 0.0),
    },
    "noise": {
        "bins": (lambda x: _int(x) and x >= 1, "a positive integer", 8),
        "cos_theta_points": (lambda x: _int(x) and x >= 2, "an integer >= 2", 21),
        "nbar_max": (lambda x: _number(x) and x > 0, "a positive number", 0.6),
        "nbar_step": (lambda x: _number(x) and x > 0, "a positive number", 0.01),
    },
    "oracle": {
        "angles_deg": (_number_list, "a non-empty list of numbers (degrees)", DEFAULT_ORACLE_ANGLES),
        "phi_deg": (_number_list, "a non-empty list of numbers (degrees)", [0.0, 180.0]),
        "tolerance": (lambda x: _number(x) and x > 0, "a positive number", 1e-8),
        "cutoff": (lambda x: x is None or (_int(x) and x >= 1), "null or a positive integer", None),
    },
    "run": {
        "jobs": (lambda x: _int(x) and x >= 1, "a positive integer", 1),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration: ``values[section][key]``."""

    values: dict

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def to_dict(self) -> dict:
        return copy.deepcopy(self.values)

    def dump(self) -> str:
        return yaml.safe_dump(self.values, sort_keys=True, default_flow_style=False)


def defaults() -> dict:
    return {sec: {key: copy.deepcopy(spec[2]) for key, spec in keys.items()}
            for sec, keys in SCHEMA.items()}


def _key_lines(text: str) -> dict:
    """``(section, key) -> line`` (1-based) from the YAML node tree."""
    lines = {}
    root = yaml.compose(text)
    if not isinstance(root, yaml.MappingNode):
        return lines
    for sec_node, body in root.value:
        lines[(sec_node.value,)] = sec_node.start_mark.line + 1
        if isinstance(body, yaml.MappingNode):
            for key_node, val_node in body.value:
                lines[(sec_node.value, key_node.value)] = val_node.start_mark.line + 1
    return lines


def _coerce(checker, value):
    # YAML reads "1e-8" as a string; accept numeric strings where numbers are expected
    if isinstance(value, str):
        try:
            num = float(value)
        except ValueError:
            return value
        if checker(num):
            return num
    return value


def validate(raw, lines: dict | None = None) -> RunConfig:
    lines = lines or {}
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping of sections", 1)
    values = defaults()
    for sec, body in raw.items():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section (expected one of {', '.join(SCHEMA)})",
                              lines.get((sec,)), str(sec))
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ConfigError("section must be a mapping", lines.get((sec,)), sec)
        for key, value in body.items():
            field = f"{sec}.{key}"
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key (expected one of {', '.join(SCHEMA[sec])})",
                                  lines.get((sec, key)), field)
            checker, what = SCHEMA[sec][key][:2]
            value = _coerce(checker, value)
            if not checker(value):
                raise ConfigError(f"must be {what}, got {value!r}", lines.get((sec, key)), field)
            values[sec][key] = value
    _cross_checks(values, lines)
    return RunConfig(values)


def _cross_checks(values: dict, lines: dict) -> None:
    scan = values["scan"]
    if scan["stop"] < scan["start"]:
        raise ConfigError("empty range: stop < start", lines.get(("scan", "stop")), "scan.stop")
    if scan["axis"] == "nbar":
        raise ConfigError("the nbar axis is scanned by the noise-study subcommand",
                          lines.get(("scan", "axis")), "scan.axis")
    if "mprime-mineig" in scan["outputs"] and values["detector"]["bins"] % 2:
        raise ConfigError("mprime-mineig needs an even number of bins",
                          lines.get(("detector", "bins")), "detector.bins")
    if values["sampling"]["shots"] is not None and values["detector"]["bins"] % 2:
        raise ConfigError("sampling mode estimates M' and needs an even number of bins",
                          lines.get(("detector", "bins")), "detector.bins")


def load_text(text: str, overrides: dict | None = None) -> RunConfig:
    try:
        raw = yaml.safe_load(text)
        lines = _key_lines(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                          mark.line + 1 if mark else None) from exc
    if overrides:
        raw = copy.deepcopy(raw) if isinstance(raw, dict) else ({} if raw is None else raw)
        if isinstance(raw, dict):
            for (sec, key), value in overrides.items():
                if raw.get(sec) is None:
                    raw[sec] = {}
                if isinstance(raw[sec], dict):
                    raw[sec][key] = value
                    # an overridden key no longer comes from the file
                    lines.pop((sec, key), None)
    return validate(raw, lines)


def load(path: str | None, overrides: dict | None = None) -> RunConfig:
    if path is None:
        return load_text("", overrides)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc.strerror}", field=path) from exc
    return load_text(text, overrides)
