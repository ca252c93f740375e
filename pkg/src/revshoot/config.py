"""Strict JSON run configuration.

Unknown keys anywhere in a config file are errors: a typo in a tolerance
name must fail loudly instead of silently running with defaults.  Command
line flags override the corresponding fields after parsing.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

from .homoclinic import ShotConfig, Sigma
from .integrate import StepControl
from .scan import GridSpec
from .system import NonlinearitySpec


class ConfigError(ValueError):
    """Configuration file or flag combination is invalid."""


_TOP_KEYS = {
    "nonlinearity",
    "shot",
    "grid",
    "output_dir",
    "a",
    "b",
    "bracket",
    "k",
    "sigma",
}


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI command may take from a JSON config file."""

    nonlinearity: NonlinearitySpec
    shot: ShotConfig = ShotConfig()
    grid: GridSpec | None = None
    output_dir: str | None = None
    a: float | None = None
    b: float | None = None
    bracket: tuple[float, float] | None = None
    k: int | None = None
    sigma: Sigma | None = None


def _require_obj(d, allowed: set[str], where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a JSON object, got {type(d).__name__}")
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(unknown)}")


def _field_names(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def _as_number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where} must be a number, got {x!r}")
    if not math.isfinite(x):
        raise ConfigError(f"{where} must be finite, got {x!r}")
    return float(x)


def as_sigma(x) -> Sigma:
    if not isinstance(x, bool) and x in (1, -1):
        return Sigma(int(x))
    raise ConfigError(f"sigma must be 1 or -1, got {x!r}")


def as_crossing_index(x) -> int:
    if isinstance(x, bool) or not isinstance(x, int) or x < 1:
        raise ConfigError(f"k must be an integer >= 1, got {x!r}")
    return x


def _parse_shot(d) -> ShotConfig:
    _require_obj(d, _field_names(ShotConfig), "shot")
    kwargs = dict(d)
    if "ctrl" in kwargs:
        cd = kwargs["ctrl"]
        _require_obj(cd, _field_names(StepControl), "shot.ctrl")
        try:
            kwargs["ctrl"] = StepControl(**cd)
        except (ValueError, TypeError) as err:
            raise ConfigError(f"bad shot.ctrl: {err}") from err
    if "sigma" in kwargs:
        kwargs["sigma"] = as_sigma(kwargs["sigma"])
    try:
        return ShotConfig(**kwargs)
    except (ValueError, TypeError) as err:
        raise ConfigError(f"bad shot settings: {err}") from err


def _parse_grid(d) -> GridSpec:
    _require_obj(d, _field_names(GridSpec), "grid")
    try:
        return GridSpec(**d)
    except (ValueError, TypeError) as err:
        raise ConfigError(f"bad grid: {err}") from err


def as_bracket(x) -> tuple[float, float]:
    if not isinstance(x, (list, tuple)) or len(x) != 2:
        raise ConfigError(f"bracket must be a pair [a_lo, a_hi], got {x!r}")
    lo = _as_number(x[0], "bracket[0]")
    hi = _as_number(x[1], "bracket[1]")
    if not lo < hi:
        raise ConfigError(f"bracket must satisfy a_lo < a_hi, got [{lo!r}, {hi!r}]")
    return (lo, hi)


def parse_config(doc) -> RunConfig:
    _require_obj(doc, _TOP_KEYS, "top-level")
    if "nonlinearity" not in doc:
        raise ConfigError("config must define 'nonlinearity'")
    try:
        nonlinearity = NonlinearitySpec.from_json_dict(doc["nonlinearity"])
    except (ValueError, TypeError, KeyError) as err:
        raise ConfigError(f"bad nonlinearity: {err}") from err

    shot = _parse_shot(doc["shot"]) if "shot" in doc else ShotConfig()
    grid = _parse_grid(doc["grid"]) if "grid" in doc else None

    output_dir = doc.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ConfigError(f"output_dir must be a string, got {output_dir!r}")

    a = _as_number(doc["a"], "a") if "a" in doc else None
    b = _as_number(doc["b"], "b") if "b" in doc else None
    bracket = as_bracket(doc["bracket"]) if "bracket" in doc else None
    k = as_crossing_index(doc["k"]) if "k" in doc else None
    sigma = as_sigma(doc["sigma"]) if "sigma" in doc else None

    return RunConfig(
        nonlinearity=nonlinearity,
        shot=shot,
        grid=grid,
        output_dir=output_dir,
        a=a,
        b=b,
        bracket=bracket,
        k=k,
        sigma=sigma,
    )


def loads_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from err
    return parse_config(doc)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fp:
            text = fp.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path!r}: {err}") from err
    return loads_config(text)
