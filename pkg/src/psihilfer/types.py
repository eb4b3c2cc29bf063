"""Shared domain types: scale functions, fractional orders, grids, paths and distances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "PsiMap",
    "FracOrder",
    "TimeGrid",
    "Path",
    "WeightFn",
    "GridMismatchError",
    "gamma_fn",
    "identity_psi",
    "log_psi",
    "power_psi",
    "exp_psi",
    "psi_from_key",
    "weighted_distance",
    "uniform_distance",
    "weighted_space_norm",
]


class GridMismatchError(ValueError):
    pass


def gamma_fn(x: float) -> float:
    """Gamma function on (0, 20]."""
    if not 0.0 < x <= 20.0:
        raise ValueError(f"gamma argument {x!r} outside (0, 20]")
    return math.gamma(x)


@dataclass(frozen=True)
class PsiMap:
    """Strictly increasing scale function psi with its derivative.

    ``domain_min`` is the infimum of valid arguments; ``open_domain`` says
    whether that bound itself is excluded.
    """

    name: str
    eval: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    domain_min: float = -math.inf
    open_domain: bool = False

    def __call__(self, t):
        return self.eval(np.asarray(t, dtype=float))

    def check_domain(self, t: np.ndarray) -> None:
        t = np.asarray(t, dtype=float)
        lo = float(t.min())
        if lo < self.domain_min or (self.open_domain and lo <= self.domain_min):
            raise ValueError(f"psi '{self.name}' is not defined at t={lo!r} (outside its domain)")


def identity_psi() -> PsiMap:
    return PsiMap("identity", lambda t: t * 1.0, lambda t: np.ones_like(t, dtype=float))


def log_psi() -> PsiMap:
    return PsiMap("log", np.log, lambda t: 1.0 / t, domain_min=0.0, open_domain=True)


def power_psi(sigma: float) -> PsiMap:
    if not sigma > 0:
        raise ValueError("power psi needs sigma > 0")
    return PsiMap(
        f"power({sigma:g})",
        lambda t: np.power(t, sigma),
        lambda t: sigma * np.power(t, sigma - 1.0),
        domain_min=0.0,
    )


def exp_psi() -> PsiMap:
    return PsiMap("exp", np.exp, np.exp)


def psi_from_key(key: str) -> PsiMap:
    """Build a catalog scale function from ``identity``, ``log``, ``exp`` or ``power(s)``."""
    key = key.strip()
    if key == "identity":
        return identity_psi()
    if key == "log":
        return log_psi()
    if key == "exp":
        return exp_psi()
    if key.startswith("power(") and key.endswith(")"):
        try:
            sigma = float(key[6:-1])
        except ValueError:
            raise ValueError(f"bad power exponent in psi key {key!r}") from None
        return power_psi(sigma)
    raise ValueError(f"unknown psi key {key!r}")


@dataclass(frozen=True)
class FracOrder:
    alpha: float
    beta: float = 0.0
    gamma: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0,1]")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0,1]")
        object.__setattr__(self, "gamma", self.alpha + self.beta * (1.0 - self.alpha))

    @property
    def inner_exponent(self) -> float:
        """Order of the integral applied before differentiation."""
        return (1.0 - self.beta) * (1.0 - self.alpha)

    @property
    def outer_exponent(self) -> float:
        return self.beta * (1.0 - self.alpha)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform, delay-aligned grid on [t0 - delay_a, T].

    The step is ``h = delay_a / steps_per_delay`` so that ``t - delay_a`` of a
    node is again a node. If ``T - t0`` is not a whole number of steps, T is
    moved up to the next node.
    """

    t0: float
    T: float
    delay_a: float
    steps_per_delay: int

    def __post_init__(self):
        if not self.T > self.t0:
            raise ValueError("T must be greater than t0")
        if not self.delay_a > 0:
            raise ValueError("delay_a must be positive")
        if int(self.steps_per_delay) != self.steps_per_delay or self.steps_per_delay < 1:
            raise ValueError("steps_per_delay must be a positive integer")
        object.__setattr__(self, "steps_per_delay", int(self.steps_per_delay))
        steps = (self.T - self.t0) / self.h
        n = round(steps)
        if abs(steps - n) > 1e-9 * max(1.0, steps):
            n = math.ceil(steps)
            object.__setattr__(self, "T", self.t0 + n * self.h)
        object.__setattr__(self, "_n", int(n))
        k = np.arange(-self.steps_per_delay, n + 1, dtype=float)
        nodes = self.t0 + k * self.h
        nodes[0] = self.t0 - self.delay_a
        nodes[-1] = self.T
        nodes.setflags(write=False)
        object.__setattr__(self, "_nodes", nodes)

    @classmethod
    def uniform(cls, t0: float, T: float, n: int) -> "TimeGrid":
        """Grid with n steps on [t0, T] and a history segment of the same length."""
        return cls(t0, T, T - t0, n)

    @property
    def h(self) -> float:
        return self.delay_a / self.steps_per_delay

    @property
    def nodes(self) -> np.ndarray:
        return self._nodes

    @property
    def n_steps(self) -> int:
        """Number of steps on [t0, T]."""
        return self._n

    @property
    def i0(self) -> int:
        """Index of the node t0."""
        return self.steps_per_delay

    @property
    def solution_nodes(self) -> np.ndarray:
        return self._nodes[self.i0:]

    @property
    def history_nodes(self) -> np.ndarray:
        return self._nodes[: self.i0 + 1]

    def __len__(self) -> int:
        return len(self._nodes)

    def __eq__(self, other):
        if not isinstance(other, TimeGrid):
            return NotImplemented
        return (self.t0, self.T, self.delay_a, self.steps_per_delay) == (
            other.t0,
            other.T,
            other.delay_a,
            other.steps_per_delay,
        )

    def __hash__(self):
        return hash((self.t0, self.T, self.delay_a, self.steps_per_delay))


@dataclass(frozen=True, eq=False)
class Path:
    """Function sampled at every node of a grid.

    ``leading_exponent`` p, when set, declares that on [t0, T] the function
    behaves like (psi(t) - psi(t0))**p times a smooth factor. For p < 0 the
    stored value at t0 is a finite placeholder, not a sample.
    """

    grid: TimeGrid
    values: np.ndarray
    leading_exponent: float | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (len(self.grid),):
            raise ValueError(f"path has {v.size} values for a grid of {len(self.grid)} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        p = self.leading_exponent
        if p is not None:
            if not p > -1.0:
                raise ValueError("leading_exponent must exceed -1")
            if p == 0.0:
                object.__setattr__(self, "leading_exponent", None)

    @classmethod
    def from_function(cls, grid: TimeGrid, fn: Callable, leading_exponent=None) -> "Path":
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.array(np.broadcast_to(np.asarray(fn(grid.nodes), dtype=float), grid.nodes.shape))
        if leading_exponent is not None and leading_exponent < 0:
            vals[grid.i0] = 0.0
        return cls(grid, vals, leading_exponent)

    @classmethod
    def from_segment(cls, grid: TimeGrid, segment, leading_exponent=None, fill: float = 0.0) -> "Path":
        """Path given only on [t0, T]; history nodes get ``fill``."""
        vals = np.full(len(grid), float(fill))
        vals[grid.i0:] = segment
        if leading_exponent is not None and leading_exponent < 0 and not np.isfinite(vals[grid.i0]):
            vals[grid.i0] = 0.0
        return cls(grid, vals, leading_exponent)

    @property
    def segment(self) -> np.ndarray:
        """Values on [t0, T]."""
        return self.values[self.grid.i0:]

    def __call__(self, t: float) -> float:
        idx = int(np.argmin(np.abs(self.grid.nodes - t)))
        return float(self.values[idx])


class WeightFn:
    """Positive continuous weight t -> phi(t)."""

    def __init__(self, fn: Callable, name: str = "phi"):
        self._fn = fn
        self.name = name

    @classmethod
    def constant(cls, c: float = 1.0) -> "WeightFn":
        if not c > 0:
            raise ValueError("phi must be positive")
        return cls(lambda t: np.full_like(np.asarray(t, dtype=float), c), name=f"{c!r}")

    def __call__(self, t):
        return np.broadcast_to(np.asarray(self._fn(np.asarray(t, dtype=float)), dtype=float), np.shape(t))

    def sample(self, grid: TimeGrid) -> np.ndarray:
        w = np.array(self(grid.nodes), dtype=float)
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError(f"{self.name} must be positive")
        return w

    def scaled(self, c: float) -> "WeightFn":
        fn = self._fn
        return WeightFn(lambda t: c * np.asarray(fn(t), dtype=float), name=f"{c!r}*{self.name}")


def _check_same_grid(p: Path, q: Path) -> None:
    if p.grid != q.grid:
        raise GridMismatchError("grid mismatch")


def weighted_distance(p: Path, q: Path, w: WeightFn | None = None) -> float:
    """Least M with |p - q| <= M w at every node (may be +inf)."""
    _check_same_grid(p, q)
    diff = np.abs(p.values - q.values)
    if w is None:
        return float(diff.max())
    weights = w.sample(p.grid)
    with np.errstate(over="ignore"):
        return float((diff / weights).max())


def uniform_distance(p: Path, q: Path) -> float:
    return weighted_distance(p, q, None)


def weighted_space_norm(p: Path, gamma: float, psi: PsiMap) -> float:
    """Grid version of the C_{1-gamma;psi} norm on (t0, T]; diagnostic only."""
    t = p.grid.solution_nodes[1:]
    u = psi(t) - psi(p.grid.t0)
    return float(np.max(np.abs(np.power(u, 1.0 - gamma) * p.segment[1:])))
