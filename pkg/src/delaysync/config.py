"""Experiment configuration files (JSON)."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InvalidInputError
from .lifting import DelayedCoupling
from .process import Deterministic, TopologyProcess, process_from_json, read_path_file
from .simulate import DEFAULT_HORIZON, DEFAULT_TAIL, DEFAULT_TOL, random_history, replicate_history

THEOREMS = ("T1", "T2", "T3", "P1", "P2", "C1", "C2")


@dataclass
class RunSettings:
    horizon: int = DEFAULT_HORIZON
    seeds: list[int] = field(default_factory=lambda: [0])
    tol: float = DEFAULT_TOL
    tail: int = DEFAULT_TAIL
    p_max: int | None = None
    init: dict = field(default_factory=lambda: {"random": {"low": 0.0, "high": 1.0}})


@dataclass
class CheckSettings:
    theorem: str = "T2"
    L: int = 1
    delta: float = 0.1
    mu: float | None = None
    tau0: int | None = None


@dataclass
class ExperimentConfig:
    run_id: str
    system: dict[str, DelayedCoupling]
    process: TopologyProcess
    run: RunSettings
    check: CheckSettings
    output: Path
    path_file: Path | None = None
    wolfowitz: dict = field(default_factory=dict)
    render: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def initial_history(self, seed: int) -> np.ndarray:
        m, tau_max = self.process.m, self.process.tau_max
        init = self.run.init
        if "history" in init:
            hist = np.asarray(init["history"], dtype=float)
            if hist.shape != (tau_max + 1, m):
                raise InvalidInputError(f"run.init.history must have shape {(tau_max + 1, m)}, got {hist.shape}")
            return hist
        if "x0" in init:
            return replicate_history(init["x0"], tau_max)
        rnd = init.get("random", {})
        return random_history(m, tau_max, seed, float(rnd.get("low", 0.0)), float(rnd.get("high", 1.0)))

    def path(self) -> list[str] | None:
        return read_path_file(self.path_file) if self.path_file else None


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply ``dotted.key=value`` overrides; values parse as JSON when they can."""
    raw = copy.deepcopy(raw)
    for item in overrides or []:
        if "=" not in item:
            raise InvalidInputError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise InvalidInputError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = _parse_value(value)
    return raw


def load_config(path, overrides: list[str] | None = None, out: str | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise InvalidInputError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: malformed JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise InvalidInputError(f"{path}: top level must be an object")
    raw = apply_overrides(raw, overrides or [])
    return config_from_dict(raw, base=path.parent, default_id=path.stem, out=out)


def config_from_dict(raw: dict, base: Path = Path("."), default_id: str = "run",
                     out: str | None = None) -> ExperimentConfig:
    try:
        system = {str(k): DelayedCoupling.from_json(v) for k, v in raw["system"].items()}
    except KeyError:
        raise InvalidInputError("config needs a 'system' object of state -> coupling") from None
    except AttributeError:
        raise InvalidInputError("'system' must be an object") from None
    if not system:
        raise InvalidInputError("'system' is empty")
    proc_raw = raw.get("process")
    if proc_raw is None:
        if len(system) != 1:
            raise InvalidInputError("'process' is required when the system has several states")
        proc_raw = {"variant": "deterministic", "schedule": list(system)}
    process = process_from_json(proc_raw, system)

    run_raw = dict(raw.get("run", {}))
    unknown = set(run_raw) - set(RunSettings.__dataclass_fields__)
    if unknown:
        raise InvalidInputError(f"unknown run settings {sorted(unknown)}")
    run = RunSettings(**run_raw)
    run.seeds = [int(s) for s in run.seeds]
    if not run.seeds:
        raise InvalidInputError("run.seeds must be nonempty")
    if not isinstance(process.variant, Deterministic) and "seeds" not in run_raw:
        raise InvalidInputError("stochastic processes need explicit run.seeds")
    if run.horizon < 1 or run.tail < 1:
        raise InvalidInputError("run.horizon and run.tail must be positive")

    check_raw = dict(raw.get("check", {}))
    unknown = set(check_raw) - set(CheckSettings.__dataclass_fields__)
    if unknown:
        raise InvalidInputError(f"unknown check settings {sorted(unknown)}")
    check = CheckSettings(**check_raw)
    if check.theorem not in THEOREMS:
        raise InvalidInputError(f"check.theorem must be one of {THEOREMS}")

    path_file = raw.get("path_file")
    path_file = (base / path_file) if path_file else None
    output = Path(out) if out else Path(raw.get("output", "out"))
    return ExperimentConfig(str(raw.get("run_id", default_id)), system, process, run, check, output,
                            path_file, dict(raw.get("wolfowitz", {})), dict(raw.get("render", {})), raw)
