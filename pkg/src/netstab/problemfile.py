"""Strict problem-file ingestion.

A problem file is a YAML document with a fixed schema: a plant (state and
input matrices, optional initial state), a channel ensemble, and optional
solver options. Unknown keys and duplicate keys are rejected with their
line numbers; matrix literals are row-major nested arrays of numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import DimensionMismatch, InvalidInput, InvariantViolation, ParseError
from .plantmodel import AWGN, FADING, ChannelEnsemble, Plant

_TOP_KEYS = {"plant", "channels", "options"}
_PLANT_KEYS = {"A", "B", "x0"}
_CHANNEL_KEYS = {"kind", "power", "noise_density", "mean", "variance"}
_OPTION_KEYS = {"epsilon", "t_end", "dt", "seed"}


class _TrackedDict(dict):
    """Mapping that remembers the source line of each key."""

    def __init__(self):
        super().__init__()
        self.lines: dict = {}
        self.start_line: int = 0


class _StrictLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    mapping = _TrackedDict()
    mapping.start_line = node.start_mark.line + 1
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        line = key_node.start_mark.line + 1
        if key in mapping:
            raise ParseError(f"duplicate key {key!r}", line=line)
        mapping[key] = loader.construct_object(value_node, deep=True)
        mapping.lines[key] = line
    return mapping


_StrictLoader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping
)


def _reject_unknown(mapping, allowed, context):
    for key in mapping:
        if key not in allowed:
            raise ParseError(
                f"unknown key {key!r} in {context}", line=mapping.lines.get(key)
            )


def _require(mapping, key, context):
    if key not in mapping:
        raise ParseError(f"{context} is missing required key {key!r}",
                         line=getattr(mapping, "start_line", None))
    return mapping[key]


def _line(mapping, key):
    return mapping.lines.get(key) if isinstance(mapping, _TrackedDict) else None


def _as_matrix(value, name, line):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{name} must be a rectangular numeric array", line=line)
    if arr.ndim != 2 or arr.size == 0:
        raise ParseError(f"{name} must be a nonempty 2-d array", line=line)
    return arr


def _as_vector(value, name, line):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{name} must be a numeric vector", line=line)
    if arr.ndim != 1 or arr.size == 0:
        raise ParseError(f"{name} must be a nonempty 1-d array", line=line)
    return arr


@dataclass(frozen=True)
class ProblemFile:
    """Parsed and validated problem statement."""

    plant: Plant
    channels: ChannelEnsemble
    options: dict = field(default_factory=dict)


def parse_problem_file(text: str) -> ProblemFile:
    """Parse a problem document, rejecting malformed or inconsistent input.

    Raises ParseError (with a line number where available) for syntax and
    schema issues, DimensionMismatch for inconsistent matrix shapes, and
    InvariantViolation for values that violate type invariants.
    """
    try:
        raw = yaml.load(text, Loader=_StrictLoader)
    except yaml.YAMLError as exc:
        line = None
        mark = getattr(exc, "problem_mark", None)
        if mark is not None:
            line = mark.line + 1
        raise ParseError(f"invalid document syntax: {exc}", line=line) from None
    if not isinstance(raw, _TrackedDict):
        raise ParseError("problem file must be a mapping at the top level")
    _reject_unknown(raw, _TOP_KEYS, "the top level")

    plant_map = _require(raw, "plant", "problem file")
    if not isinstance(plant_map, _TrackedDict):
        raise ParseError("'plant' must be a mapping", line=_line(raw, "plant"))
    _reject_unknown(plant_map, _PLANT_KEYS, "'plant'")
    A = _as_matrix(_require(plant_map, "A", "'plant'"), "A", _line(plant_map, "A"))
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A must be square, got {A.shape[0]}x{A.shape[1]}")
    B = _as_matrix(_require(plant_map, "B", "'plant'"), "B", _line(plant_map, "B"))
    if B.shape[0] != A.shape[0]:
        raise DimensionMismatch(
            f"B has {B.shape[0]} rows but A is {A.shape[0]}x{A.shape[1]}"
        )
    x0 = None
    if "x0" in plant_map:
        x0 = _as_vector(plant_map["x0"], "x0", _line(plant_map, "x0"))
        if x0.size != A.shape[0]:
            raise DimensionMismatch(
                f"x0 has length {x0.size} but the state dimension is {A.shape[0]}"
            )
    try:
        plant = Plant(A=A, B=B, x0=x0)
    except InvalidInput as exc:
        raise InvariantViolation(str(exc)) from None

    ch_map = _require(raw, "channels", "problem file")
    if not isinstance(ch_map, _TrackedDict):
        raise ParseError("'channels' must be a mapping", line=_line(raw, "channels"))
    _reject_unknown(ch_map, _CHANNEL_KEYS, "'channels'")
    kind = _require(ch_map, "kind", "'channels'")
    if kind not in (AWGN, FADING):
        raise ParseError(
            f"channel kind must be 'awgn' or 'fading', got {kind!r}",
            line=_line(ch_map, "kind"),
        )
    fields = {}
    if kind == AWGN:
        fields["power"] = _as_vector(
            _require(ch_map, "power", "AWGN channels"), "power", _line(ch_map, "power")
        )
        fields["noise_density"] = _as_vector(
            _require(ch_map, "noise_density", "AWGN channels"),
            "noise_density",
            _line(ch_map, "noise_density"),
        )
        if fields["power"].size != fields["noise_density"].size:
            raise DimensionMismatch("power and noise_density differ in length")
    else:
        fields["mean"] = _as_vector(
            _require(ch_map, "mean", "fading channels"), "mean", _line(ch_map, "mean")
        )
        fields["variance"] = _as_vector(
            _require(ch_map, "variance", "fading channels"),
            "variance",
            _line(ch_map, "variance"),
        )
        if fields["mean"].size != fields["variance"].size:
            raise DimensionMismatch("mean and variance differ in length")
    try:
        channels = ChannelEnsemble(kind=kind, **fields)
    except InvalidInput as exc:
        raise InvariantViolation(str(exc)) from None

    options = {}
    if "options" in raw:
        opt_map = raw["options"]
        if not isinstance(opt_map, _TrackedDict):
            raise ParseError("'options' must be a mapping", line=_line(raw, "options"))
        _reject_unknown(opt_map, _OPTION_KEYS, "'options'")
        for key in ("epsilon", "t_end", "dt"):
            if key in opt_map:
                value = opt_map[key]
                if not isinstance(value, (int, float)) or isinstance(value, bool):
                    raise ParseError(f"{key} must be a number", line=_line(opt_map, key))
                if value <= 0:
                    raise InvariantViolation(f"{key} must be positive, got {value}")
                options[key] = float(value)
        if "seed" in opt_map:
            value = opt_map["seed"]
            if not isinstance(value, int) or isinstance(value, bool):
                raise ParseError("seed must be an integer", line=_line(opt_map, "seed"))
            options["seed"] = int(value)
        if "epsilon" in options and options["epsilon"] > 1.0:
            raise InvariantViolation("epsilon must lie in (0, 1]")

    return ProblemFile(plant=plant, channels=channels, options=options)


def load_problem_file(path) -> ProblemFile:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_problem_file(fh.read())


__all__ = ["ProblemFile", "parse_problem_file", "load_problem_file"]
