"""Ulam-Hyers and Ulam-Hyers-Rassias certification by quasi-solution experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import integrate_segment, psi_values
from .solver import DelayProblem, DivergenceError, InitialTermMode, make_quasi_solution, solve_fixed_point
from .types import Path, PsiMap, TimeGrid, WeightFn, gamma_fn

__all__ = [
    "K_SAFETY",
    "BOUND_SLACK",
    "StabilityCertificate",
    "estimate_K",
    "certify_uhr",
    "certify_uh",
    "hadamard_bound",
    "classical_bound",
    "verify_bound",
    "experiment_seeds",
]

K_SAFETY = 1.02
BOUND_SLACK = 1e-6


@dataclass
class StabilityCertificate:
    kind: str
    K: float | None
    contraction: float
    condition_ok: bool
    reason: str
    bound: Path | None = None
    empirical_sup_ratio: float = 0.0
    generalized_c_phi: float | None = None
    experiments: int = 0
    passed: bool = False
    budget: float = 0.0
    worst_nodes: list = field(default_factory=list)
    y0: Path | None = None
    max_deviation: np.ndarray | None = None

    def summary(self) -> dict:
        b = None if self.bound is None else self.bound.values
        return {
            "kind": self.kind,
            "K": self.K,
            "contraction": self.contraction,
            "condition_ok": self.condition_ok,
            "reason": self.reason,
            "bound_min": None if b is None else float(b.min()),
            "bound_max": None if b is None else float(b.max()),
            "empirical_sup_ratio": self.empirical_sup_ratio,
            "generalized_c_phi": self.generalized_c_phi,
            "experiments": self.experiments,
            "pass": self.passed,
            "discretization_budget": self.budget,
            "worst_nodes": list(self.worst_nodes),
        }


def experiment_seeds(seed: int, count: int) -> list[int]:
    """Per-experiment seeds derived from (seed, index) only."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)] if count else []


def estimate_K(phi: WeightFn, alpha: float, psi: PsiMap, grid: TimeGrid) -> float:
    """Smallest grid K with I^alpha phi <= K phi on [t0, T], times K_SAFETY."""
    w = phi.sample(grid)[grid.i0:]
    u = psi_values(grid, psi)
    integral, _ = integrate_segment(w, u, alpha, None)
    return K_SAFETY * float(np.max(integral / w))


def verify_bound(y: Path, y0: Path, bound: Path):
    """(sup |y - y0| / bound, node where it is attained, sup <= 1 + BOUND_SLACK)."""
    if y.grid != y0.grid or y.grid != bound.grid:
        raise ValueError("grid mismatch")
    b = bound.values
    if np.any(b <= 0):
        raise ValueError("bound must be positive")
    ratio = np.abs(y.values - y0.values) / b
    i = int(np.argmax(ratio))
    sup = float(ratio[i])
    return sup, float(y.grid.nodes[i]), sup <= 1.0 + BOUND_SLACK


def _solve_reference(problem, mode, weight, tol):
    report = solve_fixed_point(problem, mode, tol=tol, weight=weight)
    if not report.converged:
        raise DivergenceError("reference solve did not converge")
    return report


def certify_uhr(
    problem: DelayProblem,
    phi: WeightFn,
    experiments: int = 100,
    seed: int = 0,
    mode=InitialTermMode.PAPER_LITERAL,
    tol: float = 1e-10,
) -> StabilityCertificate:
    """Check |y - y0| <= K phi / (1 - K(L1+L2)) over seeded quasi-solutions.

    Each quasi-solution has residual phi(t) * s(t) with sup |s| = 1.
    """
    if experiments < 1:
        raise ValueError("experiments must be at least 1")
    grid = problem.grid
    order = problem.order
    K = estimate_K(phi, order.alpha, problem.psi, grid)
    lip = problem.L1 + problem.L2
    c = K * lip
    if lip == 0.0:
        return StabilityCertificate("UHR", K, c, False, "degenerate Lipschitz")
    if not c < 1.0:
        return StabilityCertificate("UHR", K, c, False, "contraction violated")

    phi_vals = phi.sample(grid)
    coeff = K / (1.0 - c)
    bound = Path(grid, coeff * phi_vals)
    ref = _solve_reference(problem, mode, phi, tol)
    y0 = ref.solution

    worst = 0.0
    c_phi = 0.0
    max_dev = np.zeros(len(grid))
    worst_nodes = []
    for s in experiment_seeds(seed, experiments):
        y = make_quasi_solution(problem, phi, 1.0, s, mode, tol=tol, weight=phi)
        dev = np.abs(y.values - y0.values)
        max_dev = np.maximum(max_dev, dev)
        ratio, node, _ = verify_bound(y, y0, bound)
        worst_nodes.append(node)
        worst = max(worst, ratio)
        c_phi = max(c_phi, float(np.max(dev / phi_vals)))
    # each solve stops within tol * c / (1 - c) of its discrete fixed point
    budget = 2.0 * tol / ((1.0 - c) * coeff)
    passed = worst <= 1.0 + BOUND_SLACK + budget
    return StabilityCertificate(
        "UHR",
        K,
        c,
        True,
        "ok",
        bound=bound,
        empirical_sup_ratio=worst,
        generalized_c_phi=c_phi,
        experiments=experiments,
        passed=passed,
        budget=budget,
        worst_nodes=worst_nodes,
        y0=y0,
        max_deviation=max_dev,
    )


def _uh_kind(problem: DelayProblem) -> str:
    name = problem.psi.name
    if name == "log" and problem.grid.t0 == 1.0:
        return "Hadamard"
    if name == "identity" and problem.order.alpha == 1.0 and problem.grid.t0 == 0.0:
        return "Classical"
    return "UH"


def uh_constants(problem: DelayProblem, epsilon: float, uh_mode: str = "paper-literal"):
    """(contraction, B) for the Ulam-Hyers bound; ``tight`` uses psi(T) - psi(t0)."""
    if uh_mode not in ("paper-literal", "tight"):
        raise ValueError(f"unknown uh_mode {uh_mode!r}")
    psi = problem.psi
    grid = problem.grid
    alpha = problem.order.alpha
    span = float(psi(grid.T))
    if uh_mode == "tight":
        span -= float(psi(grid.t0))
    lip = problem.L1 + problem.L2
    ga = gamma_fn(alpha + 1.0)
    if span <= 0:
        return math.inf, math.inf
    pa = span**alpha
    contraction = pa * lip / ga
    bound = epsilon * pa / (ga - pa * lip) if contraction < 1.0 else math.inf
    return contraction, bound


def certify_uh(
    problem: DelayProblem,
    epsilon: float,
    experiments: int = 100,
    seed: int = 0,
    uh_mode: str = "paper-literal",
    mode=InitialTermMode.PAPER_LITERAL,
    tol: float = 1e-10,
) -> StabilityCertificate:
    """Check |y - y0| <= B for quasi-solutions with residual bounded by epsilon."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    kind = _uh_kind(problem)
    contraction, B = uh_constants(problem, epsilon, uh_mode)
    if problem.L1 + problem.L2 == 0.0:
        return StabilityCertificate(kind, None, contraction, False, "degenerate Lipschitz")
    if not 0.0 < contraction < 1.0:
        return StabilityCertificate(kind, None, contraction, False, "contraction violated")

    grid = problem.grid
    ref = _solve_reference(problem, mode, None, tol)
    y0 = ref.solution
    bound = Path(grid, np.full(len(grid), B))
    worst = 0.0
    max_dev = np.zeros(len(grid))
    worst_nodes = []
    level = WeightFn.constant(epsilon) if epsilon > 0 else None
    for s in experiment_seeds(seed, experiments):
        if level is None:
            y = y0
        else:
            y = make_quasi_solution(problem, level, 1.0, s, mode, tol=tol)
        dev = np.abs(y.values - y0.values)
        max_dev = np.maximum(max_dev, dev)
        i = int(np.argmax(dev))
        worst_nodes.append(float(grid.nodes[i]))
        if B > 0:
            worst = max(worst, float(dev[i]) / B)
        elif dev[i] > 0:
            worst = math.inf
    budget = 2.0 * tol / ((1.0 - contraction) * B) if B > 0 else 0.0
    passed = worst <= 1.0 + BOUND_SLACK + budget
    return StabilityCertificate(
        kind,
        None,
        contraction,
        True,
        "ok",
        bound=bound,
        empirical_sup_ratio=worst,
        generalized_c_phi=None,
        experiments=experiments,
        passed=passed,
        budget=budget,
        worst_nodes=worst_nodes,
        y0=y0,
        max_deviation=max_dev,
    )


def hadamard_bound(epsilon: float, T: float, alpha: float, L1: float, L2: float) -> float:
    """Ulam-Hyers constant for psi = ln t with t0 = 1."""
    if not T > 1:
        raise ValueError("T must exceed 1")
    la = math.log(T) ** alpha
    ga = gamma_fn(alpha + 1.0)
    if not la * (L1 + L2) < ga:
        raise ValueError("contraction violated")
    return epsilon * la / (ga - la * (L1 + L2))


def classical_bound(epsilon: float, T: float, L1: float, L2: float) -> float:
    """Ulam-Hyers constant for y' = F with t0 = 0."""
    if not T * (L1 + L2) < 1:
        raise ValueError("contraction violated")
    return epsilon * T / (1.0 - T * (L1 + L2))
