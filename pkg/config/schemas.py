# config/schemas.py
"""Accepted keys of every command: parser, default and whether the key is required."""
import math
from typing import Any, Callable, Dict, NamedTuple, Optional, Tuple

from config.defaults import (
    BASELINE_DEFAULTS, CHANGEPOINT_DEFAULTS, COMMON_DEFAULTS, DICHOTOMY_DEFAULTS, FIGURE1_DEFAULTS,
    GEOMETRIC_DEFAULTS, INFERENCE_DEFAULTS, NRM_DEFAULTS, SIMULATE_DEFAULTS, VALIDATE_DEFAULTS,
)

MODEL_NAMES = ("geometric", "nrm", "changepoint")


def parse_bool(raw: Any) -> bool:
    if isinstance(raw, bool):
        return raw
    text = str(raw).strip().lower()
    if text in ("true", "yes", "on", "1"):
        return True
    if text in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def parse_int(raw: Any) -> int:
    if isinstance(raw, bool):
        raise ValueError(f"expected an integer, got {raw!r}")
    if isinstance(raw, int):
        return raw
    if isinstance(raw, float):
        if raw.is_integer():
            return int(raw)
        raise ValueError(f"expected an integer, got {raw!r}")
    return int(str(raw).strip())


def parse_float(raw: Any) -> float:
    value = float(raw if not isinstance(raw, str) else raw.strip())
    if not math.isfinite(value):
        raise ValueError(f"expected a finite number, got {raw!r}")
    return value


def parse_float_list(raw: Any) -> Tuple[float, ...]:
    if isinstance(raw, (list, tuple)):
        items = list(raw)
    else:
        items = [part for part in str(raw).split(",") if part.strip()]
    if not items:
        raise ValueError("expected a non-empty comma-separated list")
    return tuple(parse_float(item) for item in items)


def parse_str(raw: Any) -> str:
    text = str(raw).strip()
    if not text:
        raise ValueError("expected a non-empty string")
    return text


def optional(parser: Callable[[Any], Any]) -> Callable[[Any], Any]:
    def parse(raw: Any):
        if raw is None or (isinstance(raw, str) and raw.strip().lower() in ("", "none")):
            return None
        return parser(raw)
    return parse


def at_least(parser: Callable[[Any], Any], low: float, strict: bool = False) -> Callable[[Any], Any]:
    def parse(raw: Any):
        value = parser(raw)
        values = value if isinstance(value, tuple) else (value,)
        for v in values:
            if v < low or (strict and v == low):
                raise ValueError(f"must be {'>' if strict else '>='} {low}, got {v}")
        return value
    return parse


def one_of(*choices: str) -> Callable[[Any], str]:
    def parse(raw: Any) -> str:
        value = parse_str(raw)
        if value not in choices:
            raise ValueError(f"must be one of {', '.join(choices)}, got {value!r}")
        return value
    return parse


positive = at_least(parse_float, 0.0, strict=True)
nonnegative = at_least(parse_float, 0.0)
positive_int = at_least(parse_int, 1)
nonnegative_int = at_least(parse_int, 0)


class Field(NamedTuple):
    parser: Callable[[Any], Any]
    default: Any = None
    required: bool = False


def _fields(parsers: Dict[str, Callable], defaults: Dict[str, Any]) -> Dict[str, Field]:
    return {key: Field(parser, defaults.get(key)) for key, parser in parsers.items()}


COMMON = _fields({"base_seed": nonnegative_int, "threads": positive_int, "progress": parse_bool}, COMMON_DEFAULTS)

GEOMETRIC = _fields({"a": positive, "b": positive, "c": positive}, GEOMETRIC_DEFAULTS)
NRM = _fields({"decay": positive, "mass": positive, "jump_floor": positive, "tol_rel": positive}, NRM_DEFAULTS)
CHANGEPOINT = _fields({"rate": positive}, CHANGEPOINT_DEFAULTS)
BASELINE = _fields({"mean0": parse_float, "kappa0": positive, "shape0": positive, "scale0": positive},
                   BASELINE_DEFAULTS)

SCHEMAS: Dict[str, Dict[str, Field]] = {
    "simulate": {
        **COMMON, **GEOMETRIC, **NRM, **BASELINE,
        "model": Field(one_of(*MODEL_NAMES), required=True),
        # no default: the change-point rate must be stated explicitly
        "rate": Field(positive),
        "horizon": Field(positive, SIMULATE_DEFAULTS["horizon"]),
        "n_times": Field(positive_int, SIMULATE_DEFAULTS["n_times"]),
        "K": Field(positive_int, SIMULATE_DEFAULTS["K"]),
        "output": Field(parse_str, "simulate_out"),
    },
    "dichotomy": {
        **COMMON, **GEOMETRIC, **NRM, **CHANGEPOINT,
        "h_grid": Field(at_least(parse_float_list, 0.0), tuple(DICHOTOMY_DEFAULTS["h_grid"])),
        "t": Field(positive, DICHOTOMY_DEFAULTS["t"]),
        "n_reps": Field(at_least(parse_int, 2), DICHOTOMY_DEFAULTS["n_reps"]),
        "min_reps": Field(positive_int, DICHOTOMY_DEFAULTS["min_reps"]),
        "common_random_numbers": Field(parse_bool, DICHOTOMY_DEFAULTS["common_random_numbers"]),
        "output": Field(parse_str, "dichotomy_report.json"),
    },
    "figure1": {
        **COMMON,
        "b_grid": Field(at_least(parse_float_list, 0.0, strict=True), tuple(FIGURE1_DEFAULTS["b_grid"])),
        "a": Field(positive, FIGURE1_DEFAULTS["a"]),
        "c": Field(positive, FIGURE1_DEFAULTS["c"]),
        "L": Field(positive_int, FIGURE1_DEFAULTS["L"]),
        "output": Field(parse_str, "figure1.csv"),
    },
    "infer": {
        **COMMON, **BASELINE,
        "input": Field(parse_str, required=True),
        "rate_shape": Field(positive, INFERENCE_DEFAULTS["rate_shape"]),
        "rate_rate": Field(positive, INFERENCE_DEFAULTS["rate_rate"]),
        "fixed_rate": Field(optional(positive), INFERENCE_DEFAULTS["fixed_rate"]),
        "n_iterations": Field(positive_int, INFERENCE_DEFAULTS["n_iterations"]),
        "n_burnin": Field(nonnegative_int, INFERENCE_DEFAULTS["n_burnin"]),
        "proposal_scale": Field(positive, INFERENCE_DEFAULTS["proposal_scale"]),
        "n_chains": Field(positive_int, INFERENCE_DEFAULTS["n_chains"]),
        "use_likelihood": Field(parse_bool, INFERENCE_DEFAULTS["use_likelihood"]),
        "grid_points": Field(positive_int, INFERENCE_DEFAULTS["grid_points"]),
        "output": Field(parse_str, "infer_out"),
    },
    "validate": {
        **COMMON,
        "n_reps": Field(at_least(parse_int, 100), VALIDATE_DEFAULTS["n_reps"]),
        "output": Field(parse_str, "validation_report.json"),
    },
}

# (command, key) -> (other key, value) that makes the key mandatory
REQUIRED_WHEN: Dict[Tuple[str, str], Tuple[str, Any]] = {
    ("simulate", "rate"): ("model", "changepoint"),
}


def schema_for(command: str) -> Optional[Dict[str, Field]]:
    return SCHEMAS.get(command)
