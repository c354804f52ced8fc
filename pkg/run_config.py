#!/usr/bin/env python3
"""
Run Config Module
Plain `key = value` run configuration, validated with pydantic, plus the
initial-data generators it names
"""

import math
import re
from dataclasses import dataclass
from typing import Dict, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from continuation import SolverConfig
from field_core import GridSpec, RealField
from solver_errors import ConfigError

INITIAL_DATA_PATTERN = re.compile(r"^\s*([a-z_]+)\s*(?:\((.*)\))?\s*$")
INITIAL_DATA_ARITY = {"zero": 0, "constant": 1, "sine": 3, "gaussian_bump": 2, "random": 1}
REQUIRED_KEYS = ("rho", "t_max")


@dataclass(frozen=True)
class InitialData:
    kind: str
    args: Tuple[float, ...] = ()

    @classmethod
    def parse(cls, text: str) -> "InitialData":
        """
        Parse one of zero, constant(a), sine(axis, mode, amplitude),
        gaussian_bump(amplitude, width) or random(amplitude).
        """
        match = INITIAL_DATA_PATTERN.match(text.replace("−", "-"))
        if not match or match.group(1) not in INITIAL_DATA_ARITY:
            raise ValueError(f"unknown initial data {text!r}; expected one of {', '.join(INITIAL_DATA_ARITY)}")
        kind, raw = match.group(1), match.group(2)
        parts = [p.strip() for p in raw.split(",")] if raw and raw.strip() else []
        if len(parts) != INITIAL_DATA_ARITY[kind]:
            raise ValueError(f"{kind} takes {INITIAL_DATA_ARITY[kind]} arguments, got {len(parts)}")
        try:
            args = tuple(float(p) for p in parts)
        except ValueError:
            raise ValueError(f"non-numeric argument in {text!r}")
        if not all(math.isfinite(a) for a in args):
            raise ValueError(f"non-finite argument in {text!r}")
        if kind == "sine":
            axis, mode = args[0], args[1]
            if axis not in (0.0, 1.0, 2.0):
                raise ValueError(f"sine axis must be 0, 1 or 2, got {axis:g}")
            if mode != int(mode):
                raise ValueError(f"sine mode must be an integer, got {mode:g}")
        if kind == "gaussian_bump" and args[1] <= 0:
            raise ValueError(f"gaussian width must be > 0, got {args[1]:g}")
        return cls(kind, args)

    def build(self, grid: GridSpec, seed: int = 0) -> RealField:
        if self.kind == "zero":
            return RealField.zeros(grid)
        if self.kind == "constant":
            return RealField.constant(grid, self.args[0])
        if self.kind == "sine":
            axis, mode, amplitude = int(self.args[0]), int(self.args[1]), self.args[2]
            coords = grid.mesh()[axis]
            return RealField(grid, amplitude * np.sin(2.0 * np.pi * mode * coords / grid.L))
        if self.kind == "gaussian_bump":
            amplitude, width = self.args
            c = 0.5 * grid.L
            return RealField.from_function(
                grid, lambda x, y, z: amplitude * np.exp(-((x - c) ** 2 + (y - c) ** 2 + (z - c) ** 2) / (2.0 * width ** 2))
            )
        rng = np.random.default_rng(seed)
        return RealField(grid, self.args[0] * rng.uniform(-1.0, 1.0, grid.shape))


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    rho: float
    t_max: float
    q: float = 0.5
    L: float = 2.0 * math.pi
    N: int = 32
    M: int = 8
    tol: float = 1e-10
    max_iter: int = 200
    initial_data: str = "gaussian_bump(1.0, 0.5)"
    seed: int = 0
    t_cap: float = 1.0
    blowup_cap_factor: float = 1e12
    t_min: float = 1e-12
    sup_check: Literal["monotone", "bounded"] = "monotone"
    linear_only: bool = False
    report: str = "energy_report.csv"
    window_report: str = "window_report.csv"
    snapshot_dir: str = ""

    @field_validator("rho")
    def rho_positive(cls, v):
        if not (v > 0) or not math.isfinite(v):
            raise ValueError(f"rho must be > 0 (the absorption term |u|^rho u of u' - Laplacian u + |u|^rho u = 0 needs rho > 0), got {v}")
        return v

    @field_validator("q")
    def q_contraction(cls, v):
        if not (0 < v < 1):
            raise ValueError(f"q must lie in (0, 1) (the window contraction factor must be < 1), got {v}")
        return v

    @field_validator("t_max", "L", "tol", "t_cap", "blowup_cap_factor", "t_min")
    def positive_finite(cls, v, info):
        if not (v > 0) or not math.isfinite(v):
            raise ValueError(f"{info.field_name} must be finite and > 0, got {v}")
        return v

    @field_validator("N")
    def even_grid(cls, v):
        if v < 4 or v % 2:
            raise ValueError(f"N must be an even integer >= 4, got {v}")
        return v

    @field_validator("M")
    def node_count(cls, v):
        if v < 2:
            raise ValueError(f"M must be >= 2, got {v}")
        return v

    @field_validator("max_iter")
    def iteration_budget(cls, v):
        if v < 1:
            raise ValueError(f"max_iter must be >= 1, got {v}")
        return v

    @field_validator("initial_data")
    def initial_data_grammar(cls, v):
        InitialData.parse(v)
        return v.replace("−", "-").strip()

    @model_validator(mode="after")
    def bump_fits_box(self):
        data = InitialData.parse(self.initial_data)
        if data.kind == "gaussian_bump" and data.args[1] >= self.L / 6.0:
            raise ValueError(f"gaussian width {data.args[1]:g} must be < L/6 = {self.L / 6.0:.6g}")
        if data.kind == "sine" and abs(data.args[1]) > self.N // 2 - 1:
            raise ValueError(f"sine mode {data.args[1]:g} is not resolved on N={self.N}")
        return self

    def grid(self) -> GridSpec:
        return GridSpec(self.L, self.N)

    def initial_field(self) -> RealField:
        return InitialData.parse(self.initial_data).build(self.grid(), self.seed)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            rho=self.rho, t_max=self.t_max, q=self.q, M=self.M, tol=self.tol, max_iter=self.max_iter,
            t_cap=self.t_cap, blowup_cap_factor=self.blowup_cap_factor, t_min=self.t_min,
            nonlinear=not self.linear_only,
        )

    def to_text(self) -> str:
        """Every key, defaults included, in a form parse_config reads back to an equal config"""
        lines = []
        for key in type(self).model_fields:
            value = getattr(self, key)
            if isinstance(value, bool):
                rendered = "true" if value else "false"
            elif isinstance(value, float):
                rendered = repr(value)
            else:
                rendered = str(value)
            lines.append(f"{key} = {rendered}")
        return "\n".join(lines) + "\n"


def _strip_error_prefix(message: str) -> str:
    return message[len("Value error, "):] if message.startswith("Value error, ") else message


def parse_config(text: str, overrides: Optional[Dict[str, object]] = None) -> RunConfig:
    """
    Parse and validate `key = value` lines.

    Args:
        text (str): config file contents; `#` starts a comment
        overrides (Dict[str, object], optional): values that replace file entries (CLI flags)

    Returns:
        RunConfig: validated configuration

    Raises:
        ConfigError: syntax error, unknown or duplicate key, missing required key or
        out-of-range value, with the offending line number
    """
    values: Dict[str, object] = {}
    line_of: Dict[str, int] = {}
    lines = text.splitlines()
    for number, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in RunConfig.model_fields:
            raise ConfigError(f"unknown key {key!r}", line=number)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {line_of[key]})", line=number)
        values[key] = value.replace("−", "-")
        line_of[key] = number

    for key, value in (overrides or {}).items():
        if key not in RunConfig.model_fields:
            raise ConfigError(f"unknown key {key!r}")
        if value is not None:
            values[key] = value
            line_of.pop(key, None)

    for key in REQUIRED_KEYS:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}", line=len(lines) + 1)

    try:
        return RunConfig(**values)
    except ValidationError as e:
        error = e.errors()[0]
        key = str(error["loc"][0]) if error["loc"] else "initial_data"
        message = _strip_error_prefix(error["msg"])
        raise ConfigError(f"{key}: {message}", line=line_of.get(key)) from None


def config_from_report_header(text: str) -> RunConfig:
    """Rebuild the RunConfig echoed as `# key = value` lines at the top of a report"""
    echoed = []
    for line in text.splitlines():
        if not line.startswith("#"):
            break
        if line.startswith("#!"):
            continue
        echoed.append(line[1:].strip())
    return parse_config("\n".join(echoed))
