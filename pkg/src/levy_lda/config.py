"""Run configuration files.

A config is a JSON object::

    {
      "model": {"frequency": {"kind": "poisson", "lambda": 0.1},
                "severity": {"gamma": 0.01, "delta": 0.0}},
      "grid": {"start": 1, "stop": 200, "num": 200},
      "q": [0.9, 0.99, 0.995, 0.999]
    }

Aggregation configs use ``"cells": [model, model, ...]`` instead of ``"model"``.
Errors name the file, line and field. Values are read with :mod:`json`; the
YAML composer (YAML is a JSON superset) is used only to locate each field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .compound import COMPONENT_BUDGET, CompoundModel
from .frequency import (
    BetaBinomial,
    BetaNegBinomial,
    Binomial,
    FrequencyModel,
    NegBinomial,
    Poisson,
    PoissonGamma,
)
from .stable import LevyParams
from .truncation import MASS_TOL, THRESHOLD_LOG

__all__ = ["ConfigError", "ModelSpec", "RunConfig", "load_config", "parse_config", "dump_config"]


class ConfigError(ValueError):
    pass


# kind -> (constructor, [(config key, constructor arg, check)])
_FREQUENCY_SCHEMA = {
    "binomial": (Binomial, [("M", "M", "count"), ("p", "p", "prob")]),
    "beta_binomial": (BetaBinomial, [("M", "M", "count"), ("a", "a", "pos"), ("b", "b", "pos")]),
    "negative_binomial": (NegBinomial, [("r", "r", "count"), ("p", "p", "prob")]),
    "beta_negative_binomial": (
        BetaNegBinomial,
        [("r", "r", "count"), ("a", "a", "pos"), ("b", "b", "pos")],
    ),
    "poisson": (Poisson, [("lambda", "lam", "pos")]),
    "poisson_gamma": (PoissonGamma, [("gamma_shape", "a", "pos"), ("gamma_rate", "b", "pos")]),
}

_TOP_KEYS = {
    "model", "cells", "grid", "q", "years", "block_size", "seed", "caps",
    "study", "threshold_log", "mass_tol", "budget", "sampler",
}  # fmt: skip


@dataclass(frozen=True)
class ModelSpec:
    frequency: FrequencyModel
    severity: LevyParams

    def build(self, threshold_log: float, mass_tol: float) -> CompoundModel:
        return CompoundModel(self.frequency, self.severity, threshold_log, mass_tol)

    def to_dict(self) -> dict:
        kind = self.frequency.kind
        _, fields = _FREQUENCY_SCHEMA[kind]
        freq = {"kind": kind}
        for key, attr, _ in fields:
            freq[key] = getattr(self.frequency, attr)
        return {
            "frequency": freq,
            "severity": {"gamma": self.severity.gamma, "delta": self.severity.delta},
        }


@dataclass(frozen=True)
class RunConfig:
    models: tuple[ModelSpec, ...]
    grid: tuple[float, ...] = tuple(float(x) for x in np.linspace(1.0, 200.0, 200))
    q: tuple[float, ...] = (0.9, 0.99, 0.995, 0.999)
    years: int = 200_000
    block_size: int = 50_000
    seed: int = 0
    caps: tuple[int, ...] = tuple(range(1, 1001))
    study: str = "truncation"
    threshold_log: float = THRESHOLD_LOG
    mass_tol: float = MASS_TOL
    budget: int = COMPONENT_BUDGET
    sampler: str = "inverse"
    is_aggregate: bool = False
    source: str = field(default="<config>", compare=False)

    @property
    def model(self) -> ModelSpec:
        return self.models[0]

    def compound_models(self) -> list[CompoundModel]:
        return [m.build(self.threshold_log, self.mass_tol) for m in self.models]

    def to_dict(self) -> dict:
        out: dict[str, Any] = {}
        if self.is_aggregate:
            out["cells"] = [m.to_dict() for m in self.models]
        else:
            out["model"] = self.model.to_dict()
        out.update(
            grid=list(self.grid),
            q=list(self.q),
            years=self.years,
            block_size=self.block_size,
            seed=self.seed,
            caps=list(self.caps),
            study=self.study,
            threshold_log=self.threshold_log,
            mass_tol=self.mass_tol,
            budget=self.budget,
            sampler=self.sampler,
        )
        return out


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n"


def _line_map(text: str) -> dict[tuple, int]:
    """Map each JSON path (tuple of keys / indices) to its 1-based line."""
    lines: dict[tuple, int] = {}

    def walk(node, path):
        lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                walk(v, path + (k.value,))
                # report a field at its key, not where its value starts
                lines[path + (k.value,)] = k.start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                walk(v, path + (i,))

    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError:
        return lines
    if root is not None:
        walk(root, ())
    return lines


class _Reader:
    def __init__(self, source: str, lines: dict[tuple, int]):
        self.source = source
        self.lines = lines

    def fail(self, path: tuple, message: str):
        line = None
        for k in range(len(path), -1, -1):
            line = self.lines.get(path[:k])
            if line is not None:
                break
        name = ".".join(str(p) for p in path) or "<root>"
        where = f"{self.source}:{line}" if line is not None else self.source
        raise ConfigError(f"{where}: {name}: {message}")

    def number(self, obj, path, check: str):
        if isinstance(obj, bool) or not isinstance(obj, (int, float)):
            self.fail(path, f"expected a number, got {json.dumps(obj)}")
        v = float(obj)
        if not math.isfinite(v):
            self.fail(path, "must be finite")
        if check == "count":
            if not isinstance(obj, int) and v != int(v):
                self.fail(path, f"must be an integer, got {obj}")
            if v < 1:
                self.fail(path, f"must be a positive integer, got {obj}")
            return int(v)
        if check == "prob" and not 0.0 < v < 1.0:
            self.fail(path, f"must lie in (0, 1), got {obj}")
        if check == "pos" and not v > 0.0:
            self.fail(path, f"must be positive, got {obj}")
        if check == "nonneg" and v < 0.0:
            self.fail(path, f"must be >= 0, got {obj}")
        if check == "neg" and not v < 0.0:
            self.fail(path, f"must be negative, got {obj}")
        return v

    def mapping(self, obj, path, allowed: set[str], required: set[str] = frozenset()):
        if not isinstance(obj, dict):
            self.fail(path, "expected an object")
        for k in obj:
            if k not in allowed:
                self.fail(path + (k,), f"unknown field; expected one of {sorted(allowed)}")
        for k in sorted(required - obj.keys()):
            self.fail(path, f"missing field {k!r}")
        return obj

    def model(self, obj, path) -> ModelSpec:
        self.mapping(obj, path, {"frequency", "severity"}, {"frequency", "severity"})
        fpath = path + ("frequency",)
        freq = obj["frequency"]
        if not isinstance(freq, dict):
            self.fail(fpath, "expected an object")
        kind = freq.get("kind")
        if kind not in _FREQUENCY_SCHEMA:
            expected = sorted(_FREQUENCY_SCHEMA)
            self.fail(fpath + ("kind",), f"unknown kind {kind!r}; expected one of {expected}")
        ctor, fields = _FREQUENCY_SCHEMA[kind]
        keys = {k for k, _, _ in fields}
        self.mapping(freq, fpath, keys | {"kind"}, keys)
        args = {attr: self.number(freq[k], fpath + (k,), chk) for k, attr, chk in fields}
        try:
            frequency = ctor(**args)
        except ValueError as exc:
            self.fail(fpath, str(exc))

        spath = path + ("severity",)
        sev = self.mapping(obj["severity"], spath, {"gamma", "delta"}, {"gamma"})
        gamma = self.number(sev["gamma"], spath + ("gamma",), "pos")
        delta = self.number(sev.get("delta", 0.0), spath + ("delta",), "nonneg")
        return ModelSpec(frequency, LevyParams(gamma, delta))

    def grid(self, obj, path) -> tuple[float, ...]:
        if isinstance(obj, dict):
            self.mapping(obj, path, {"start", "stop", "num"}, {"start", "stop", "num"})
            start = self.number(obj["start"], path + ("start",), "any")
            stop = self.number(obj["stop"], path + ("stop",), "any")
            num = self.number(obj["num"], path + ("num",), "count")
            if num > 1 and not stop > start:
                self.fail(path + ("stop",), "must exceed start")
            return tuple(float(x) for x in np.linspace(start, stop, num))
        if not isinstance(obj, list):
            self.fail(path, "expected a list of points or {start, stop, num}")
        pts = tuple(self.number(x, path + (i,), "any") for i, x in enumerate(obj))
        for i in range(1, len(pts)):
            if not pts[i] > pts[i - 1]:
                self.fail(path + (i,), "grid must be strictly increasing")
        return pts


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    r = _Reader(source, _line_map(text))
    r.mapping(data, (), _TOP_KEYS)

    kw: dict[str, Any] = {"source": source}
    if ("model" in data) == ("cells" in data):
        r.fail((), "exactly one of 'model' or 'cells' is required")
    if "model" in data:
        kw["models"] = (r.model(data["model"], ("model",)),)
    else:
        cells = data["cells"]
        if not isinstance(cells, list) or not cells:
            r.fail(("cells",), "expected a nonempty list of models")
        kw["models"] = tuple(r.model(c, ("cells", i)) for i, c in enumerate(cells))
        kw["is_aggregate"] = True

    if "grid" in data:
        kw["grid"] = r.grid(data["grid"], ("grid",))
    if "q" in data:
        qs = data["q"] if isinstance(data["q"], list) else r.fail(("q",), "expected a list")
        kw["q"] = tuple(r.number(x, ("q", i), "prob") for i, x in enumerate(qs))
    if "caps" in data:
        caps = data["caps"] if isinstance(data["caps"], list) else r.fail(("caps",), "expected a list")
        kw["caps"] = tuple(r.number(x, ("caps", i), "count") for i, x in enumerate(caps))
        for i in range(1, len(kw["caps"])):
            if kw["caps"][i] <= kw["caps"][i - 1]:
                r.fail(("caps", i), "caps must be strictly increasing")
    for key in ("years", "block_size", "budget"):
        if key in data:
            kw[key] = r.number(data[key], (key,), "count")
    if "seed" in data:
        seed = data["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
            r.fail(("seed",), "must be an unsigned 64-bit integer")
        kw["seed"] = seed
    if "threshold_log" in data:
        kw["threshold_log"] = r.number(data["threshold_log"], ("threshold_log",), "neg")
    if "mass_tol" in data:
        kw["mass_tol"] = r.number(data["mass_tol"], ("mass_tol",), "pos")
    if "study" in data:
        if data["study"] not in ("truncation", "timing"):
            r.fail(("study",), "must be 'truncation' or 'timing'")
        kw["study"] = data["study"]
    if "sampler" in data:
        if data["sampler"] not in ("inverse", "cms"):
            r.fail(("sampler",), "must be 'inverse' or 'cms'")
        kw["sampler"] = data["sampler"]

    years = kw.get("years", RunConfig.years)
    block = kw.get("block_size", RunConfig.block_size)
    if years % block:
        r.fail(("block_size",) if "block_size" in data else ("years",),
               f"block_size {block} must divide years {years}")  # fmt: skip
    return RunConfig(**kw)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read: {exc.strerror}") from None
    return parse_config(text, str(path))
