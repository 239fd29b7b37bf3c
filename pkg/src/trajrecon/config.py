"""Run configuration: TOML in, validated models out."""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .dynamics import Observable, System
from .errors import ConfigError, ReconError, UnsupportedError
from .spaces import make_space

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

COMMANDS = ("embed", "entropy", "chainrec", "tsp", "coincide", "infer-orbit", "scan-generic",
            "oracle-suite")
SUITES = ("finite", "chain_recurrence")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Block(BaseModel):
    """``kind`` plus free-form parameters for the matching constructor."""

    model_config = ConfigDict(extra="allow")
    kind: str
    name: str = ""

    @property
    def params(self) -> dict:
        return dict(self.model_extra or {})


Schedule = Union[int, list[int]]


class EmbedParams(_Strict):
    schedule: Schedule = 2
    alpha: float = Field(gt=0)
    n_pairs: int = Field(10_000, ge=1)
    naturality_samples: int = Field(100, ge=1)
    k_long: Optional[int] = Field(None, ge=1)
    delta_in: Optional[float] = Field(None, ge=0)


class EntropyParams(_Strict):
    eps: list[float] = Field(min_length=1)
    n: list[int] = Field(min_length=1)
    mesh: Optional[float] = Field(None, gt=0)
    level: Optional[int] = Field(None, ge=0)
    window: Optional[tuple[int, int]] = None
    saturation: float = Field(0.25, gt=0, le=1)
    compare_k: Optional[int] = Field(None, ge=0)
    alpha: float = Field(0.05, gt=0)
    n_pairs: int = Field(10_000, ge=1)
    tolerance: float = Field(0.05, ge=0)
    plot: bool = False

    @field_validator("eps")
    @classmethod
    def _eps_positive(cls, v):
        if any(e <= 0 for e in v):
            raise ValueError("all eps must be > 0")
        return v

    @field_validator("n")
    @classmethod
    def _n_positive(cls, v):
        if any(n < 1 for n in v):
            raise ValueError("all n must be >= 1")
        return v

    @model_validator(mode="after")
    def _candidates(self):
        if (self.mesh is None) == (self.level is None):
            raise ValueError("give exactly one of mesh or level")
        return self


class ChainrecParams(_Strict):
    mesh: float = Field(gt=0)
    eps: float = Field(gt=0)
    lip: Optional[float] = Field(None, ge=0)
    eta: Optional[float] = Field(None, gt=0)
    period: int = Field(0, ge=0)
    max_cells: int = Field(200_000, ge=1)
    plot: bool = False


class TspParams(_Strict):
    k: int = Field(ge=0)
    eta: float = Field(gt=0)
    d: int = Field(ge=0)
    mesh: float = Field(gt=0)
    budget: int = Field(200, ge=1)
    H: Optional[list[Any]] = None
    density: int = Field(4, ge=1)


class CoincideParams(_Strict):
    horizon: int = Field(ge=1)
    tol: float = Field(1e-9, ge=0)
    alpha: float = Field(1e-6, gt=0)
    x: Optional[Any] = None
    y: Optional[Any] = None
    n_pairs: Optional[int] = Field(None, ge=1)
    observables: Optional[list[int]] = None

    @model_validator(mode="after")
    def _mode(self):
        pair = self.x is not None and self.y is not None
        if pair == (self.n_pairs is not None):
            raise ValueError("give either x and y, or n_pairs")
        return self


class InferParams(_Strict):
    d: Optional[int] = Field(None, ge=0)
    tol: float = Field(1e-9, ge=0)
    series_x: Optional[str] = None
    series_y: Optional[str] = None
    x: Optional[Any] = None
    y: Optional[Any] = None
    length: int = Field(20, ge=1)

    @model_validator(mode="after")
    def _mode(self):
        files = self.series_x is not None and self.series_y is not None
        pts = self.x is not None and self.y is not None
        if files == pts:
            raise ValueError("give either series_x and series_y, or x and y")
        return self


class ScanParams(_Strict):
    family: Literal["fourier", "constant", "perturbed_coordinate"]
    schedule: Schedule = 2
    alpha: float = Field(gt=0)
    n_draws: int = Field(ge=1)
    n_pairs: int = Field(2_000, ge=1)
    order: int = Field(5, ge=1)
    decay: float = Field(0.5, gt=0)
    amplitude: float = Field(1e-3, ge=0)
    min_density: Optional[float] = Field(None, ge=0, le=1)


class SuiteParams(_Strict):
    suites: list[str] = list(SUITES)
    inject_fault: bool = False

    @field_validator("suites")
    @classmethod
    def _known(cls, v):
        bad = [s for s in v if s not in SUITES]
        if bad:
            raise ValueError(f"unknown suites {bad}; choose from {list(SUITES)}")
        return v


PARAMS = {"embed": EmbedParams, "entropy": EntropyParams, "chainrec": ChainrecParams,
          "tsp": TspParams, "coincide": CoincideParams, "infer-orbit": InferParams,
          "scan-generic": ScanParams, "oracle-suite": SuiteParams}
# commands that draw random numbers and so need a seed
STOCHASTIC = {"embed", "tsp", "scan-generic"}


class RunConfig(_Strict):
    name: str = Field(min_length=1, pattern=r"^[A-Za-z0-9._-]+$")
    command: Literal["embed", "entropy", "chainrec", "tsp", "coincide", "infer-orbit",
                     "scan-generic", "oracle-suite"]
    seed: Optional[int] = Field(None, ge=0, lt=2**64)
    out: Optional[str] = None
    threads: int = Field(1, ge=1)
    space: Optional[Block] = None
    system: Optional[Block] = None
    observable: Optional[Block] = None
    params: dict = Field(default_factory=dict)

    @model_validator(mode="after")
    def _blocks(self):
        if self.command != "oracle-suite":
            if self.space is None or self.system is None:
                raise ValueError(f"command {self.command!r} needs [space] and [system]")
        needs_seed = self.command in STOCHASTIC or (
            self.command == "coincide" and self.params.get("n_pairs") is not None) or (
            self.command == "chainrec" and self.params.get("lip") is None)
        if needs_seed and self.seed is None:
            raise ValueError(f"command {self.command!r} is stochastic and needs a seed")
        return self

    def command_params(self):
        return PARAMS[self.command].model_validate(self.params)


def _problems(err: ValidationError, prefix=()):
    out = []
    for e in err.errors():
        path = ".".join(str(p) for p in prefix + tuple(e["loc"]))
        out.append((path, e["msg"]))
    return out


def parse_config(raw: dict, *, command: str | None = None, seed: int | None = None,
                 threads: int | None = None):
    """Validate a raw mapping; returns ``(RunConfig, command params)``."""
    raw = dict(raw)
    if command is not None:
        raw["command"] = command
    if seed is not None:
        raw["seed"] = seed
    if threads is not None:
        raw["threads"] = threads
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(_problems(e)) from None
    try:
        params = cfg.command_params()
    except ValidationError as e:
        raise ConfigError(_problems(e, ("params",))) from None
    return cfg, params


def load_config(path, **overrides):
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError([("", f"config file not found: {path}")]) from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError([("", f"TOML syntax error: {e}")]) from None
    cfg, params = parse_config(raw, **overrides)
    return raw, cfg, params


def build_objects(cfg: RunConfig):
    """Space, system and observable from the config blocks.

    Unsupported combinations propagate as :class:`UnsupportedError`; other
    construction failures become config errors at the block's path.
    """
    def make(path, fn):
        try:
            return fn()
        except UnsupportedError:
            raise
        except (ReconError, KeyError, TypeError, ValueError) as e:
            raise ConfigError([(path, str(e))]) from None

    space = make("space", lambda: make_space(cfg.space.kind, **cfg.space.params))
    system = make("system", lambda: System(space, cfg.system.kind, cfg.system.params,
                                           cfg.system.name))
    f = None
    if cfg.observable is not None:
        ob = cfg.observable
        f = make("observable", lambda: Observable(ob.kind, ob.params, ob.name))
    return space, system, f
