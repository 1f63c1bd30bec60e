"""Run configuration files.

A config is ``key = value`` lines with ``#`` comments.  Keys before any
section header are global; solver settings go either in ``[ictm]`` /
``[drlse]`` blocks or, for ``segment``, directly at the top level where
they apply to the chosen ``method``.  Example::

    method = ictm
    input = two_discs.pgm
    init = rect:8,8,120,120
    output = mask.pgm
    sigma = 1

    [ictm]
    tau = 2
    lambda = 0.3

Precedence: command-line overrides, then the file, then built-in defaults.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from .drlse import DrlseParams
from .filters import EdgeParams
from .ictm import IctmParams

GLOBAL_KEYS = {
    "method", "input", "init", "truth", "output", "trace",
    "snapshot_every", "snapshot_dir", "sigma", "normalize_input", "timing",
}
# config key -> dataclass field
ICTM_KEYS = {"tau": "tau", "lambda": "lam", "tol": "tol", "max_iter": "max_iter"}
DRLSE_KEYS = {
    "alpha": "alpha", "lambda": "lam", "mu": "mu", "dt": "dt", "epsilon": "epsilon",
    "c0": "c0", "potential": "potential", "tol": "tol", "max_iter": "max_iter",
    "patience": "patience",
}
SOLVER_KEYS = {"ictm": ICTM_KEYS, "drlse": DRLSE_KEYS}
BLOCK_IO_KEYS = {"output", "trace"}
_GLOBAL = "__global__"


class ConfigError(ValueError):
    pass


@dataclass
class SolverBlock:
    present: bool = False
    values: dict = field(default_factory=dict)
    output: Optional[str] = None
    trace: Optional[str] = None


@dataclass
class RunConfig:
    method: Optional[str] = None
    input: Optional[str] = None
    init: Optional[str] = None
    truth: Optional[str] = None
    output: Optional[str] = None
    trace: Optional[str] = None
    snapshot_every: int = 0
    snapshot_dir: Optional[str] = None
    timing: bool = True
    edge: EdgeParams = EdgeParams()
    blocks: dict = field(default_factory=lambda: {"ictm": SolverBlock(), "drlse": SolverBlock()})

    def ictm_params(self) -> IctmParams:
        return _build(IctmParams, self.blocks["ictm"].values)

    def drlse_params(self) -> DrlseParams:
        return _build(DrlseParams, self.blocks["drlse"].values)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _convert(cls, name: str, text: str):
    kind = {f.name: f.type for f in fields(cls)}[name]
    try:
        if kind in (int, "int"):
            return int(text)
        if kind in (float, "float"):
            return float(text)
        return text.strip()
    except ValueError:
        raise ConfigError(f"invalid value {text!r} for {name}") from None


def _build(cls, values: dict):
    try:
        return cls(**{k: _convert(cls, k, v) for k, v in values.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _set_global(cfg: RunConfig, key: str, value: str, flat: dict):
    if key in GLOBAL_KEYS:
        if key == "snapshot_every":
            try:
                cfg.snapshot_every = int(value)
            except ValueError:
                raise ConfigError(f"invalid snapshot_every {value!r}") from None
            if cfg.snapshot_every < 0:
                raise ConfigError("snapshot_every must be >= 0")
        elif key == "sigma":
            try:
                cfg.edge = replace(cfg.edge, sigma=float(value))
            except ValueError as exc:
                raise ConfigError(f"invalid sigma {value!r}: {exc}") from None
        elif key == "normalize_input":
            cfg.edge = replace(cfg.edge, normalize_input=_parse_bool(value))
        elif key == "timing":
            cfg.timing = _parse_bool(value)
        else:
            setattr(cfg, key, value.strip())
    elif key in ICTM_KEYS or key in DRLSE_KEYS:
        flat[key] = value
    else:
        raise ConfigError(f"unknown key {key!r}")


def _set_block(cfg: RunConfig, section: str, key: str, value: str):
    block = cfg.blocks[section]
    block.present = True
    if key in BLOCK_IO_KEYS:
        setattr(block, key, value.strip())
    elif key in SOLVER_KEYS[section]:
        block.values[SOLVER_KEYS[section][key]] = value
    else:
        raise ConfigError(f"unknown key {key!r} in [{section}]")


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse config text, then apply ``(key, value)`` overrides.

    Override keys may be qualified (``ictm.tau``) or plain (``tau``).
    """
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#",), inline_comment_prefixes=("#",),
        interpolation=None, strict=True, empty_lines_in_values=False,
    )
    parser.optionxform = str
    try:
        parser.read_string(f"[{_GLOBAL}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}".replace(f"[{_GLOBAL}]", "")) from None
    cfg = RunConfig()
    flat: dict = {}
    for section in parser.sections():
        if section != _GLOBAL and section not in SOLVER_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key, value in parser.items(section):
            if section == _GLOBAL:
                _set_global(cfg, key, value, flat)
            else:
                _set_block(cfg, section, key, value)
        if section in SOLVER_KEYS:
            cfg.blocks[section].present = True
    flat_overrides: dict = {}
    for key, value in overrides:
        if "." in key:
            section, sub = key.split(".", 1)
            if section not in SOLVER_KEYS:
                raise ConfigError(f"unknown override {key!r}")
            _set_block(cfg, section, sub, value)
        else:
            _set_global(cfg, key, value, flat_overrides)
    if cfg.method is not None and cfg.method not in SOLVER_KEYS:
        raise ConfigError(f"method must be ictm or drlse, got {cfg.method!r}")
    if flat or flat_overrides:
        if cfg.method is None:
            raise ConfigError(f"solver keys {sorted({**flat, **flat_overrides})} "
                              "need a method or an [ictm]/[drlse] block")
        mapping = SOLVER_KEYS[cfg.method]
        values = cfg.blocks[cfg.method].values
        # a key given in the method's block beats the same key at top level
        for source, force in ((flat, False), (flat_overrides, True)):
            for key, value in source.items():
                if key not in mapping:
                    raise ConfigError(f"key {key!r} does not apply to method {cfg.method}")
                if force or mapping[key] not in values:
                    values[mapping[key]] = value
    # validate eagerly so bad values surface as config errors
    cfg.ictm_params()
    cfg.drlse_params()
    return cfg


def load_config(path, overrides=()) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read(), overrides)
