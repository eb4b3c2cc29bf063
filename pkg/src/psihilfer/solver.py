"""Picard operator for the delay problem and its fixed-point iteration.

For t in [t0, T] the operator maps a candidate y to

    W(t) Phi(t0) + I^alpha [ s -> F(s, y(s), y(s - a)) ](t)

and leaves the history segment equal to Phi. The initial-term weight W is
(psi(t) - psi(t0))**e / Gamma(gamma) with e = 1 - gamma ("paper-literal")
or e = gamma - 1 ("weighted-hilfer").

Node t0 holds the right limit of the second branch when that limit is
finite: Phi(t0) when gamma == 1, 0 for paper-literal with gamma < 1. In
weighted-hilfer mode with gamma < 1 the solution blows up at t0; the path is
then tagged with leading exponent gamma - 1 and t0 keeps Phi(t0) as a
placeholder.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .calculus import psi_hilfer_derivative, psi_values, regular_weights, tagged_weights
from .types import FracOrder, Path, PsiMap, TimeGrid, WeightFn, gamma_fn, weighted_distance

__all__ = [
    "InitialTermMode",
    "DelayProblem",
    "SolveReport",
    "DivergenceError",
    "QuasiSolutionError",
    "apply_omega",
    "solve_fixed_point",
    "residual",
    "make_quasi_solution",
    "initial_candidate",
    "ramp_candidate",
    "perturbation",
]

LIPSCHITZ_PROBES = 512


class InitialTermMode(str, enum.Enum):
    PAPER_LITERAL = "paper-literal"
    WEIGHTED_HILFER = "weighted-hilfer"


class DivergenceError(FloatingPointError):
    pass


class QuasiSolutionError(RuntimeError):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


def _probe_lipschitz(rhs, L1, L2, grid, seed=0):
    rng = np.random.default_rng(seed)
    t = rng.choice(grid.solution_nodes, LIPSCHITZ_PROBES)
    x, y, z, w = rng.uniform(-10.0, 10.0, (4, LIPSCHITZ_PROBES))
    lhs = np.abs(np.asarray(rhs(t, x, y), dtype=float) - np.asarray(rhs(t, z, w), dtype=float))
    rhs_bound = L1 * np.abs(x - z) + L2 * np.abs(y - w)
    bad = lhs > rhs_bound * (1 + 1e-9) + 1e-12
    if bad.any():
        i = int(np.argmax(lhs - rhs_bound))
        return (
            f"declared Lipschitz constants L1={L1}, L2={L2} violated at "
            f"t={t[i]:.6g}: |dF|={lhs[i]:.6g} > {rhs_bound[i]:.6g}",
        )
    return ()


@dataclass(frozen=True, eq=False)
class DelayProblem:
    """D^{alpha,beta;psi} y = F(t, y(t), y(t - a)) on [t0, T], y = history on [t0 - a, t0].

    ``rhs`` must accept numpy arrays. The delay a is ``grid.delay_a``.
    Violations of the declared Lipschitz constants found by random probing
    are listed in ``warnings``.
    """

    rhs: Callable
    L1: float
    L2: float
    history: Callable
    order: FracOrder
    psi: PsiMap
    grid: TimeGrid
    warnings: tuple = field(default=(), init=False)

    def __post_init__(self):
        if self.L1 < 0 or self.L2 < 0:
            raise ValueError("Lipschitz constants must be nonnegative")
        hist = self.history_values()
        if not np.all(np.isfinite(hist)):
            raise ValueError("history must be finite at every history node")
        object.__setattr__(self, "warnings", _probe_lipschitz(self.rhs, self.L1, self.L2, self.grid))

    @property
    def delay_a(self) -> float:
        return self.grid.delay_a

    def history_values(self) -> np.ndarray:
        t = self.grid.history_nodes
        return np.array(np.broadcast_to(np.asarray(self.history(t), dtype=float), t.shape))

    @property
    def phi0(self) -> float:
        return float(self.history_values()[-1])

    def with_rhs(self, rhs: Callable) -> "DelayProblem":
        return replace(self, rhs=rhs)


@dataclass
class SolveReport:
    solution: Path
    iterations: int
    contraction_observed: float
    converged: bool
    final_residual_sup: float
    distances: list = field(default_factory=list)


def _weight_exponent(order: FracOrder, mode: InitialTermMode) -> float:
    if mode is InitialTermMode.PAPER_LITERAL:
        return 1.0 - order.gamma
    return order.gamma - 1.0


class _Omega:
    """Discretized operator with its weights and initial term precomputed."""

    def __init__(self, problem: DelayProblem, mode: InitialTermMode):
        mode = InitialTermMode(mode)
        grid = problem.grid
        order = problem.order
        self.problem = problem
        self.i0 = grid.i0
        self.n_sol = grid.n_steps + 1
        self.t = grid.solution_nodes
        u = psi_values(grid, problem.psi)
        v = u - u[0]
        e = _weight_exponent(order, mode)
        self.history = problem.history_values()
        phi0 = self.history[-1]
        self.tag = None
        if mode is InitialTermMode.WEIGHTED_HILFER and order.gamma < 1.0:
            self.tag = order.gamma - 1.0
            self.weights = tagged_weights(u, order.alpha, self.tag)
        else:
            self.weights = regular_weights(u, order.alpha)
        init = np.empty(self.n_sol)
        init[1:] = phi0 * np.power(v[1:], e) / gamma_fn(order.gamma)
        if e > 0:
            init[0] = 0.0
            self.t0_limit = 0.0
        elif e == 0:
            init[0] = phi0
            self.t0_limit = phi0
        else:
            init[0] = phi0
            self.t0_limit = math.copysign(math.inf, phi0) if phi0 != 0 else 0.0
        self.init = init

    def check_history(self, values: np.ndarray) -> None:
        hist = values[: self.i0]
        ref = self.history[: self.i0]
        if not np.allclose(hist, ref, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(ref).max(initial=0.0)))):
            raise ValueError("candidate does not match the history on [t0 - a, t0)")

    def __call__(self, values: np.ndarray) -> np.ndarray:
        y = values[self.i0:]
        yd = values[: self.n_sol]
        g = np.asarray(self.problem.rhs(self.t, y, yd), dtype=float)
        g = np.broadcast_to(g, y.shape)
        out = np.empty_like(values)
        out[: self.i0] = self.history[: self.i0]
        out[self.i0:] = self.init + self.weights @ g
        out[self.i0] = self.init[0]
        return out


def apply_omega(candidate: Path, problem: DelayProblem, mode=InitialTermMode.PAPER_LITERAL) -> Path:
    if candidate.grid != problem.grid:
        raise ValueError("grid mismatch")
    op = _Omega(problem, mode)
    op.check_history(candidate.values)
    return Path(problem.grid, op(candidate.values), op.tag)


def initial_candidate(problem: DelayProblem) -> Path:
    """History on [t0 - a, t0], constant Phi(t0) on [t0, T]."""
    hist = problem.history_values()
    vals = np.full(len(problem.grid), hist[-1])
    vals[: problem.grid.i0 + 1] = hist
    return Path(problem.grid, vals)


def ramp_candidate(problem: DelayProblem, slope: float = 1.0) -> Path:
    """History, then Phi(t0) + slope * (t - t0) on [t0, T]."""
    hist = problem.history_values()
    grid = problem.grid
    vals = np.empty(len(grid))
    vals[: grid.i0 + 1] = hist
    vals[grid.i0:] = hist[-1] + slope * (grid.solution_nodes - grid.t0)
    return Path(grid, vals)


def solve_fixed_point(
    problem: DelayProblem,
    mode=InitialTermMode.PAPER_LITERAL,
    tol: float = 1e-10,
    max_iter: int = 200,
    weight: WeightFn | None = None,
    initial: Path | None = None,
) -> SolveReport:
    """Iterate the Picard operator until successive iterates are within ``tol``.

    Distances are weighted by ``weight`` (uniform when None). Hitting
    ``max_iter`` returns an unconverged report; non-finite iterates raise
    DivergenceError.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    op = _Omega(problem, mode)
    grid = problem.grid
    w = None if weight is None else weight.sample(grid)
    current = (initial or initial_candidate(problem)).values
    op.check_history(current)

    dists = []
    contraction = 0.0
    converged = False
    it = 0
    while it < max_iter:
        with np.errstate(over="ignore", invalid="ignore"):
            nxt = op(current)
        it += 1
        if not np.all(np.isfinite(nxt)):
            raise DivergenceError("divergent iteration")
        diff = np.abs(nxt - current)
        d = float(diff.max() if w is None else (diff / w).max())
        if dists and dists[-1] > 0:
            contraction = max(contraction, d / dists[-1])
        dists.append(d)
        current = nxt
        if d <= tol:
            converged = True
            break
    return SolveReport(
        solution=Path(grid, current, op.tag),
        iterations=it,
        contraction_observed=contraction,
        converged=converged,
        final_residual_sup=dists[-1],
        distances=dists,
    )


def t0_jump(problem: DelayProblem, mode=InitialTermMode.PAPER_LITERAL) -> float:
    """|right limit of the second branch at t0 - Phi(t0)|; diagnostic only."""
    op = _Omega(problem, mode)
    return abs(op.t0_limit - op.history[-1])


def residual(y: Path, problem: DelayProblem) -> Path:
    """D^{alpha,beta;psi} y - F(t, y(t), y(t - a)) on [t0, T]; history nodes are 0."""
    if y.grid != problem.grid:
        raise ValueError("grid mismatch")
    grid = problem.grid
    d = psi_hilfer_derivative(y, problem.order, problem.psi).segment
    vals = y.values
    g = np.asarray(problem.rhs(grid.solution_nodes, vals[grid.i0:], vals[: grid.n_steps + 1]), dtype=float)
    r = d - g
    if y.leading_exponent is not None and y.leading_exponent < 0:
        r[0] = 0.0
    return Path.from_segment(grid, r)


def perturbation(grid: TimeGrid, seed: int) -> Callable:
    """Smooth random s(t) with sup over the grid equal to 1 (at most 5 Fourier modes)."""
    rng = np.random.default_rng(seed)
    n_modes = int(rng.integers(1, 6))
    freqs = rng.choice(np.arange(0, 6), size=n_modes, replace=False).astype(float)
    amps = rng.normal(size=n_modes)
    phases = rng.uniform(0.0, 2 * np.pi, size=n_modes)
    span = grid.T - grid.t0
    t0 = grid.t0

    def raw(t):
        x = (np.asarray(t, dtype=float) - t0) / span
        return np.sum(amps[:, None] * np.cos(np.pi * freqs[:, None] * x[None, :] + phases[:, None]), axis=0)

    scale = float(np.abs(raw(grid.solution_nodes)).max())
    if scale == 0.0:
        return lambda t: np.ones_like(np.asarray(t, dtype=float))
    return lambda t: raw(np.atleast_1d(t)) / scale


def make_quasi_solution(
    problem: DelayProblem,
    bound: WeightFn,
    epsilon: float,
    seed: int,
    mode=InitialTermMode.PAPER_LITERAL,
    tol: float = 1e-10,
    max_iter: int = 200,
    weight: WeightFn | None = None,
) -> Path:
    """Solve the problem with F replaced by F + epsilon * bound * s for a seeded s.

    The result matches the history exactly and its residual against the
    original problem is epsilon * bound * s up to discretization error.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0,1]")
    if epsilon == 0.0:
        target = problem
    else:
        s = perturbation(problem.grid, seed)
        rhs = problem.rhs

        def perturbed(t, y, yd):
            return np.asarray(rhs(t, y, yd), dtype=float) + epsilon * bound(t) * s(t)

        target = problem.with_rhs(perturbed)
    report = solve_fixed_point(target, mode, tol=tol, max_iter=max_iter, weight=weight)
    if not report.converged:
        raise QuasiSolutionError("quasi-solution solve did not converge", report)
    return report.solution
