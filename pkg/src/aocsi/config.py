"""Experiment configuration files.

A config is a YAML mapping with four sections::

    channel:
      transition_matrix: [[0.8, 0.1, 0.1], ...]   # row-stochastic
      reliabilities: [0.1, 0.5, 0.95]
    reward: {r_suc: 1, r_fail: 0, eps_t: 0.4, eps_c: 0.3, beta: 1.8}
    solver:
      delta_max: 14
      theta: 1.0e-9          # default
      ref_state: [1, 0]      # default, [age, last_state]
      max_iterations: 100000 # default
      damping: 0.0           # default
    sim:                     # whole section optional
      horizon: 1000000       # default
      seed: 0                # default
      warmup: 0              # default
      accounting: expected   # default; or realized
      replications: 1        # default

Unknown keys are rejected so typos surface immediately.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from aocsi.belief import AgedObservation
from aocsi.channel import ChannelModel, validate_model
from aocsi.errors import (
    AocsiError,
    DimensionMismatch,
    NegativeEntry,
    NonStochasticRow,
    ParseError,
    ReliabilityOutOfRange,
    ValidationError,
)
from aocsi.mdp import SolverConfig
from aocsi.reward import RewardParams
from aocsi.simulator import Accounting, SimConfig

SECTIONS = {
    "channel": {"transition_matrix", "reliabilities"},
    "reward": {"r_suc", "r_fail", "eps_t", "eps_c", "beta"},
    "solver": {"theta", "delta_max", "ref_state", "max_iterations", "damping"},
    "sim": {"horizon", "seed", "warmup", "accounting", "replications"},
}
REQUIRED = {"channel", "reward", "solver"}


@dataclass(frozen=True)
class ExperimentConfig:
    model: ChannelModel
    params: RewardParams
    delta_max: int
    solver: SolverConfig
    sim: SimConfig
    config_hash: str

    def with_overrides(self, *, horizon=None, seed=None, delta_max=None, replications=None) -> "ExperimentConfig":
        cfg = self
        if delta_max is not None:
            if delta_max < 2:
                raise ValidationError("solver.delta_max", f"must be >= 2, got {delta_max}")
            if cfg.solver.ref_state.age > delta_max:
                raise ValidationError("solver.ref_state", f"age exceeds the overridden delta_max {delta_max}")
            cfg = replace(cfg, delta_max=delta_max)
        if horizon is not None or seed is not None or replications is not None:
            s = cfg.sim
            try:
                sim = SimConfig(horizon if horizon is not None else s.horizon,
                                seed if seed is not None else s.seed, s.warmup, s.accounting,
                                replications if replications is not None else s.replications)
            except ValueError as exc:
                raise ValidationError("sim", str(exc)) from exc
            cfg = replace(cfg, sim=sim)
        return cfg


def _number(section: Mapping, key: str, path: str, kind=float, default: Any = None):
    if key not in section:
        if default is None:
            raise ValidationError(f"{path}.{key}", "required key is missing")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{path}.{key}", f"expected a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ValidationError(f"{path}.{key}", f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _channel(section: Mapping) -> ChannelModel:
    for key in ("transition_matrix", "reliabilities"):
        if key not in section:
            raise ValidationError(f"channel.{key}", "required key is missing")
    try:
        return validate_model(section["transition_matrix"], section["reliabilities"])
    except NonStochasticRow as exc:
        raise ValidationError(f"channel.transition_matrix[{exc.row}]", str(exc)) from exc
    except NegativeEntry as exc:
        raise ValidationError(f"channel.transition_matrix[{exc.row}][{exc.col}]", str(exc)) from exc
    except ReliabilityOutOfRange as exc:
        raise ValidationError(f"channel.reliabilities[{exc.index}]", str(exc)) from exc
    except DimensionMismatch as exc:
        raise ValidationError("channel", str(exc)) from exc


def parse_config(raw: Any) -> ExperimentConfig:
    if not isinstance(raw, Mapping):
        raise ValidationError("", "config must be a mapping of sections")
    unknown = set(raw) - set(SECTIONS)
    if unknown:
        raise ValidationError(sorted(unknown)[0], "unknown section")
    for name in REQUIRED:
        if name not in raw:
            raise ValidationError(name, "required section is missing")
    for name, keys in SECTIONS.items():
        section = raw.get(name, {})
        if not isinstance(section, Mapping):
            raise ValidationError(name, "section must be a mapping")
        extra = set(section) - keys
        if extra:
            raise ValidationError(f"{name}.{sorted(extra)[0]}", "unknown key")

    model = _channel(raw["channel"])

    rw = raw["reward"]
    values = {k: _number(rw, k, "reward") for k in ("r_suc", "r_fail", "eps_t", "eps_c", "beta")}
    try:
        params = RewardParams(**values)
    except AocsiError as exc:
        raise ValidationError("reward", str(exc)) from exc

    sv = raw["solver"]
    delta_max = _number(sv, "delta_max", "solver", int)
    if delta_max < 2:
        raise ValidationError("solver.delta_max", f"must be >= 2, got {delta_max}")
    ref = sv.get("ref_state", [1, 0])
    if not (isinstance(ref, (list, tuple)) and len(ref) == 2 and all(isinstance(v, int) for v in ref)):
        raise ValidationError("solver.ref_state", f"expected [age, last_state], got {ref!r}")
    if not (1 <= ref[0] <= delta_max and 0 <= ref[1] < model.num_states):
        raise ValidationError("solver.ref_state", f"{ref!r} is not a state of the truncated MDP")
    try:
        solver = SolverConfig(
            theta=_number(sv, "theta", "solver", float, 1e-9),
            ref_state=AgedObservation(*ref),
            max_iterations=_number(sv, "max_iterations", "solver", int, 100_000),
            damping=_number(sv, "damping", "solver", float, 0.0),
        )
    except (ValueError, AocsiError) as exc:
        raise ValidationError("solver", str(exc)) from exc

    sm = raw.get("sim", {})
    accounting = sm.get("accounting", "expected")
    try:
        accounting = Accounting(str(accounting).lower())
    except ValueError:
        raise ValidationError("sim.accounting", f"expected 'expected' or 'realized', got {accounting!r}") from None
    try:
        sim = SimConfig(
            horizon=_number(sm, "horizon", "sim", int, 1_000_000),
            seed=_number(sm, "seed", "sim", int, 0),
            warmup=_number(sm, "warmup", "sim", int, 0),
            accounting=accounting,
            replications=_number(sm, "replications", "sim", int, 1),
        )
    except ValueError as exc:
        raise ValidationError("sim", str(exc)) from exc

    digest = hashlib.sha256(json.dumps(raw, sort_keys=True, default=str).encode()).hexdigest()[:16]
    return ExperimentConfig(model, params, delta_max, solver, sim, digest)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(str(path), f"cannot read config: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(str(path), f"not valid YAML: {exc}") from exc
    return parse_config(raw)
