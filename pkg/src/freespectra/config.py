"""Run configuration: a single JSON document describing network, grid and outputs.

Parsing is strict — unknown fields are rejected with their full path so typos
surface immediately instead of silently falling back to defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Any, Optional

from .network_model import LayerSpec, NetworkSpec, Nonlinearity
from .solver import SolverConfig

__all__ = [
    "ConfigError",
    "GridConfig",
    "MonteCarloConfig",
    "OutputConfig",
    "RunConfig",
    "load_config",
    "parse_run_config",
    "apply_overrides",
]

DEFAULT_PROBS = tuple(round(0.1 * k, 1) for k in range(1, 10))


class ConfigError(ValueError):
    """Invalid or malformed run configuration; message carries the field path."""


@dataclass(frozen=True)
class GridConfig:
    x_min: Optional[float] = None
    x_max: Optional[float] = None
    points: int = 200
    log_spaced: bool = True

    def __post_init__(self) -> None:
        if self.points < 2:
            raise ConfigError("config: grid.points: must be at least 2")
        for name, value in (("x_min", self.x_min), ("x_max", self.x_max)):
            if value is not None and value <= 0:
                raise ConfigError(f"config: grid.{name}: must be positive")
        if self.x_min is not None and self.x_max is not None and self.x_min >= self.x_max:
            raise ConfigError("config: grid.x_min: must be below grid.x_max")


@dataclass(frozen=True)
class MonteCarloConfig:
    n0: int = 1000
    seed: int = 0
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.n0 < 4:
            raise ConfigError("config: mc.n0: must be at least 4")


@dataclass(frozen=True)
class OutputConfig:
    format: str = "csv"
    path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.format not in ("csv", "json"):
            raise ConfigError(f"config: output.format: must be 'csv' or 'json', got {self.format!r}")


@dataclass(frozen=True)
class RunConfig:
    network: Optional[NetworkSpec] = None
    grid: GridConfig = GridConfig()
    y: float = 1e-6
    probs: tuple = DEFAULT_PROBS
    solver: SolverConfig = SolverConfig()
    mc: MonteCarloConfig = MonteCarloConfig()
    output: OutputConfig = OutputConfig()

    def __post_init__(self) -> None:
        if self.y <= 0:
            raise ConfigError("config: y: y must be positive")
        for p in self.probs:
            if not (0.0 < p < 1.0):
                raise ConfigError(f"config: probs: must lie strictly inside (0, 1), got {p}")

    def require_network(self) -> NetworkSpec:
        if self.network is None:
            raise ConfigError("config: network: required for this command")
        return self.network


def _expect_mapping(value: Any, ctx: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"config: {ctx}: expected an object, got {type(value).__name__}")
    return value


def _expect_list(value: Any, ctx: str) -> list:
    if not isinstance(value, list):
        raise ConfigError(f"config: {ctx}: expected an array, got {type(value).__name__}")
    return value


def _reject_unknown(mapping: dict, allowed: set, ctx: str) -> None:
    for key in mapping:
        if key not in allowed:
            where = f"{ctx}.{key}" if ctx else key
            raise ConfigError(f"config: {where}: unknown field")


def _as_real(value: Any, ctx: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"config: {ctx}: expected a number, got {value!r}")
    return float(value)


def _as_int(value: Any, ctx: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"config: {ctx}: expected an integer, got {value!r}")
    return value


def _as_bool(value: Any, ctx: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"config: {ctx}: expected true or false, got {value!r}")
    return value


def _as_str(value: Any, ctx: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"config: {ctx}: expected a string, got {value!r}")
    return value


def _parse_layer(data: Any, ctx: str) -> LayerSpec:
    mapping = _expect_mapping(data, ctx)
    _reject_unknown(mapping, {"nonlinearity", "sigma_w_sq", "sigma_b_sq", "lambda"}, ctx)
    if "nonlinearity" not in mapping:
        raise ConfigError(f"config: {ctx}.nonlinearity: required")
    if "sigma_w_sq" not in mapping:
        raise ConfigError(f"config: {ctx}.sigma_w_sq: required")
    try:
        nl = Nonlinearity.from_name(_as_str(mapping["nonlinearity"], f"{ctx}.nonlinearity"))
    except ValueError as err:
        raise ConfigError(f"config: {ctx}.nonlinearity: {err}") from None
    kwargs = {
        "nonlinearity": nl,
        "sigma_w_sq": _as_real(mapping["sigma_w_sq"], f"{ctx}.sigma_w_sq"),
    }
    if "sigma_b_sq" in mapping:
        kwargs["sigma_b_sq"] = _as_real(mapping["sigma_b_sq"], f"{ctx}.sigma_b_sq")
    if "lambda" in mapping:
        kwargs["width_ratio"] = _as_real(mapping["lambda"], f"{ctx}.lambda")
    try:
        return LayerSpec(**kwargs)
    except ValueError as err:
        raise ConfigError(f"config: {ctx}: {err}") from None


def _parse_network(data: Any) -> NetworkSpec:
    mapping = _expect_mapping(data, "network")
    _reject_unknown(mapping, {"layers", "input_mean_square"}, "network")
    if "layers" not in mapping:
        raise ConfigError("config: network.layers: required")
    layers = [
        _parse_layer(item, f"network.layers[{i}]")
        for i, item in enumerate(_expect_list(mapping["layers"], "network.layers"))
    ]
    kwargs: dict = {"layers": tuple(layers)}
    if "input_mean_square" in mapping:
        kwargs["input_mean_square"] = _as_real(mapping["input_mean_square"], "network.input_mean_square")
    try:
        return NetworkSpec(**kwargs)
    except ValueError as err:
        raise ConfigError(f"config: network: {err}") from None


def _parse_grid(data: Any) -> GridConfig:
    mapping = _expect_mapping(data, "grid")
    _reject_unknown(mapping, {"x_min", "x_max", "points", "log_spaced"}, "grid")
    kwargs: dict = {}
    if "x_min" in mapping:
        kwargs["x_min"] = _as_real(mapping["x_min"], "grid.x_min")
    if "x_max" in mapping:
        kwargs["x_max"] = _as_real(mapping["x_max"], "grid.x_max")
    if "points" in mapping:
        kwargs["points"] = _as_int(mapping["points"], "grid.points")
    if "log_spaced" in mapping:
        kwargs["log_spaced"] = _as_bool(mapping["log_spaced"], "grid.log_spaced")
    return GridConfig(**kwargs)


def _parse_solver(data: Any) -> SolverConfig:
    mapping = _expect_mapping(data, "solver")
    allowed = {"epsilon", "max_newton_iters", "max_doublings", "min_step_fraction"}
    _reject_unknown(mapping, allowed, "solver")
    kwargs: dict = {}
    if "epsilon" in mapping:
        kwargs["epsilon"] = _as_real(mapping["epsilon"], "solver.epsilon")
    if "max_newton_iters" in mapping:
        kwargs["max_newton_iters"] = _as_int(mapping["max_newton_iters"], "solver.max_newton_iters")
    if "max_doublings" in mapping:
        kwargs["max_doublings"] = _as_int(mapping["max_doublings"], "solver.max_doublings")
    if "min_step_fraction" in mapping:
        kwargs["min_step_fraction"] = _as_real(mapping["min_step_fraction"], "solver.min_step_fraction")
    try:
        return SolverConfig(**kwargs)
    except ValueError as err:
        raise ConfigError(f"config: solver: {err}") from None


def _parse_mc(data: Any) -> MonteCarloConfig:
    mapping = _expect_mapping(data, "mc")
    _reject_unknown(mapping, {"n0", "seed", "enabled"}, "mc")
    kwargs: dict = {}
    if "n0" in mapping:
        kwargs["n0"] = _as_int(mapping["n0"], "mc.n0")
    if "seed" in mapping:
        kwargs["seed"] = _as_int(mapping["seed"], "mc.seed")
    if "enabled" in mapping:
        kwargs["enabled"] = _as_bool(mapping["enabled"], "mc.enabled")
    return MonteCarloConfig(**kwargs)


def _parse_output(data: Any) -> OutputConfig:
    mapping = _expect_mapping(data, "output")
    _reject_unknown(mapping, {"format", "path"}, "output")
    kwargs: dict = {}
    if "format" in mapping:
        kwargs["format"] = _as_str(mapping["format"], "output.format")
    if "path" in mapping and mapping["path"] is not None:
        kwargs["path"] = _as_str(mapping["path"], "output.path")
    return OutputConfig(**kwargs)


def parse_run_config(data: Any) -> RunConfig:
    mapping = _expect_mapping(data, "<root>")
    allowed = {"network", "grid", "y", "probs", "solver", "mc", "output"}
    _reject_unknown(mapping, allowed, "")
    if "network" not in mapping:
        raise ConfigError("config: network: required")
    kwargs: dict = {"network": _parse_network(mapping["network"])}
    if "grid" in mapping:
        kwargs["grid"] = _parse_grid(mapping["grid"])
    if "y" in mapping:
        y = _as_real(mapping["y"], "y")
        if y <= 0:
            raise ConfigError("config: y: y must be positive")
        kwargs["y"] = y
    if "probs" in mapping:
        probs = _expect_list(mapping["probs"], "probs")
        if not probs:
            raise ConfigError("config: probs: must be nonempty")
        kwargs["probs"] = tuple(_as_real(p, f"probs[{i}]") for i, p in enumerate(probs))
    if "solver" in mapping:
        kwargs["solver"] = _parse_solver(mapping["solver"])
    if "mc" in mapping:
        kwargs["mc"] = _parse_mc(mapping["mc"])
    if "output" in mapping:
        kwargs["output"] = _parse_output(mapping["output"])
    return RunConfig(**kwargs)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as err:
        raise ConfigError(f"config: cannot read {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"config: parse error in {path} at line {err.lineno}, column {err.colno}: {err.msg}"
        ) from None
    return parse_run_config(data)


def apply_overrides(
    config: RunConfig,
    points: Optional[int] = None,
    y: Optional[float] = None,
    seed: Optional[int] = None,
    out: Optional[str] = None,
) -> RunConfig:
    """Fold command-line flags over a loaded configuration."""
    if points is not None:
        config = dataclasses.replace(config, grid=dataclasses.replace(config.grid, points=points))
    if y is not None:
        if y <= 0:
            raise ConfigError("config: y: y must be positive")
        config = dataclasses.replace(config, y=y)
    if seed is not None:
        config = dataclasses.replace(config, mc=dataclasses.replace(config.mc, seed=seed))
    if out is not None:
        config = dataclasses.replace(config, output=dataclasses.replace(config.output, path=out))
    return config
