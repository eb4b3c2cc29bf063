"""Scenario documents: schema, validation and the built-in catalog."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path as FsPath

import numpy as np
import yaml

from .expr import ExpressionError, compile_rhs, compile_t
from .solver import DelayProblem, InitialTermMode
from .types import FracOrder, TimeGrid, WeightFn, psi_from_key

__all__ = [
    "Scenario",
    "ScenarioError",
    "parse_scenario",
    "parse_scenarios",
    "load_scenarios",
    "catalog_names",
    "load_catalog",
]

REQUIRED = ("name", "alpha", "beta", "psi", "t0", "T", "delay_a", "rhs", "L1", "L2", "history", "phi", "epsilon")
DEFAULTS = {
    "steps_per_delay": 64,
    "experiments": 100,
    "seed": 0,
    "initial_term_mode": "paper-literal",
    "uh_mode": "paper-literal",
}
UH_MODES = ("paper-literal", "tight")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    name: str
    psi: str
    alpha: float
    beta: float
    t0: float
    T: float
    delay_a: float
    rhs: str
    L1: float
    L2: float
    history: str
    phi: str
    epsilon: float
    steps_per_delay: int = 64
    experiments: int = 100
    seed: int = 0
    initial_term_mode: str = "paper-literal"
    uh_mode: str = "paper-literal"
    warnings: tuple = field(default=(), compare=False)

    @property
    def order(self) -> FracOrder:
        return FracOrder(self.alpha, self.beta)

    @property
    def mode(self) -> InitialTermMode:
        return InitialTermMode(self.initial_term_mode)

    def grid(self) -> TimeGrid:
        return TimeGrid(self.t0, self.T, self.delay_a, self.steps_per_delay)

    def phi_fn(self) -> WeightFn:
        return WeightFn(compile_t(self.phi), name="phi")

    def problem(self) -> DelayProblem:
        return DelayProblem(
            rhs=compile_rhs(self.rhs),
            L1=self.L1,
            L2=self.L2,
            history=compile_t(self.history),
            order=self.order,
            psi=psi_from_key(self.psi),
            grid=self.grid(),
        )

    def with_options(self, **changes) -> "Scenario":
        """Copy with some fields replaced, re-validated."""
        data = self.to_dict()
        data.update({k: v for k, v in changes.items() if v is not None})
        return _build(data)

    def with_resolution(self, n: int) -> "Scenario":
        """Copy whose grid has about n steps on [t0, T]."""
        spd = max(1, round(n * self.delay_a / (self.T - self.t0)))
        return self.with_options(steps_per_delay=spd)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "psi": self.psi,
            "alpha": self.alpha,
            "beta": self.beta,
            "t0": self.t0,
            "T": self.T,
            "delay_a": self.delay_a,
            "rhs": self.rhs,
            "L1": self.L1,
            "L2": self.L2,
            "history": self.history,
            "phi": self.phi,
            "epsilon": self.epsilon,
            "steps_per_delay": self.steps_per_delay,
            "experiments": self.experiments,
            "seed": self.seed,
            "initial_term_mode": self.initial_term_mode,
            "uh_mode": self.uh_mode,
        }


def _number(data, key):
    value = data[key]
    if isinstance(value, str):
        # YAML 1.1 reads exponent forms such as 1e-3 as strings
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{key} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ScenarioError(f"{key} must be finite")
    return value


def _integer(data, key, minimum):
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{key} must be an integer, got {value!r}")
    if value < minimum:
        raise ScenarioError(f"{key} must be at least {minimum}")
    return value


def _build(raw: dict) -> Scenario:
    if not isinstance(raw, dict):
        raise ScenarioError("a scenario must be a mapping")
    for key in raw:
        if key not in REQUIRED and key not in DEFAULTS:
            raise ScenarioError(f"unknown key {key!r}")
    missing = [k for k in REQUIRED if k not in raw]
    if missing:
        raise ScenarioError(f"missing required key {missing[0]!r}")
    data = {**DEFAULTS, **raw}

    alpha = _number(data, "alpha")
    if not 0.0 < alpha <= 1.0:
        raise ScenarioError("alpha must lie in (0,1]")
    beta = _number(data, "beta")
    if not 0.0 <= beta <= 1.0:
        raise ScenarioError("beta must lie in [0,1]")
    t0, T = _number(data, "t0"), _number(data, "T")
    if not T > t0:
        raise ScenarioError("T must be greater than t0")
    delay_a = _number(data, "delay_a")
    if not delay_a > 0:
        raise ScenarioError("delay_a must be positive")
    L1, L2 = _number(data, "L1"), _number(data, "L2")
    if L1 < 0 or L2 < 0:
        raise ScenarioError("L1 and L2 must be nonnegative")
    epsilon = _number(data, "epsilon")
    if epsilon < 0:
        raise ScenarioError("epsilon must be nonnegative")
    if data["initial_term_mode"] not in [m.value for m in InitialTermMode]:
        raise ScenarioError(f"initial_term_mode must be one of {[m.value for m in InitialTermMode]}")
    if data["uh_mode"] not in UH_MODES:
        raise ScenarioError(f"uh_mode must be one of {list(UH_MODES)}")
    for key in ("name", "psi", "rhs", "history", "phi"):
        if not isinstance(data[key], (str, int, float)) or isinstance(data[key], bool):
            raise ScenarioError(f"{key} must be a string")
    try:
        psi = psi_from_key(str(data["psi"]))
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None

    scenario = Scenario(
        name=str(data["name"]),
        psi=str(data["psi"]),
        alpha=alpha,
        beta=beta,
        t0=t0,
        T=T,
        delay_a=delay_a,
        rhs=str(data["rhs"]),
        L1=L1,
        L2=L2,
        history=str(data["history"]),
        phi=str(data["phi"]),
        epsilon=epsilon,
        steps_per_delay=_integer(data, "steps_per_delay", 1),
        experiments=_integer(data, "experiments", 1),
        seed=_integer(data, "seed", 0),
        initial_term_mode=data["initial_term_mode"],
        uh_mode=data["uh_mode"],
    )
    try:
        grid = scenario.grid()
        psi.check_domain(grid.solution_nodes)
        scenario.phi_fn().sample(grid)
        problem = scenario.problem()
    except ExpressionError as exc:
        raise ScenarioError(str(exc)) from None
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    if not np.all(np.diff(psi(grid.solution_nodes)) > 0):
        raise ScenarioError(f"psi {scenario.psi!r} is not increasing on [t0, T]")
    return replace(scenario, warnings=problem.warnings)


def _documents(text: str) -> list:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"malformed scenario document: {exc}") from None
    if isinstance(doc, dict) and set(doc) == {"scenarios"}:
        doc = doc["scenarios"]
    if isinstance(doc, dict):
        return [doc]
    if isinstance(doc, list) and doc:
        return doc
    raise ScenarioError("document must hold a scenario mapping or a non-empty list of them")


def parse_scenarios(text: str) -> list[Scenario]:
    scenarios = [_build(d) for d in _documents(text)]
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise ScenarioError("scenario names must be unique within a document")
    return scenarios


def parse_scenario(text: str) -> Scenario:
    scenarios = parse_scenarios(text)
    if len(scenarios) != 1:
        raise ScenarioError(f"expected one scenario, found {len(scenarios)}")
    return scenarios[0]


def catalog_names() -> list[str]:
    root = resources.files("psihilfer") / "catalog"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_catalog(name: str) -> Scenario:
    path = resources.files("psihilfer") / "catalog" / f"{name}.yaml"
    if not path.is_file():
        raise ScenarioError(f"no catalog scenario named {name!r}")
    return parse_scenario(path.read_text(encoding="utf-8"))


def load_scenarios(source: str) -> list[Scenario]:
    """Scenarios from a file path, or from the catalog when ``source`` names an entry."""
    path = FsPath(source)
    if path.is_file():
        return parse_scenarios(path.read_text(encoding="utf-8"))
    if source in catalog_names():
        return [load_catalog(source)]
    raise ScenarioError(f"scenario file not found: {source}")
