import math

import numpy as np
import pytest

from psihilfer import (
    DelayProblem,
    DivergenceError,
    FracOrder,
    InitialTermMode,
    Path,
    TimeGrid,
    WeightFn,
    apply_omega,
    identity_psi,
    psi_hilfer_derivative,
    residual,
    solve_fixed_point,
    weighted_distance,
)
from psihilfer.solver import (
    QuasiSolutionError,
    initial_candidate,
    make_quasi_solution,
    perturbation,
    ramp_candidate,
    t0_jump,
)

PL = InitialTermMode.PAPER_LITERAL
WH = InitialTermMode.WEIGHTED_HILFER


def problem(rhs, L1=0.0, L2=0.0, history=lambda t: np.ones_like(t), alpha=1.0, beta=0.0, T=1.0, a=1.0, m=64, t0=0.0):
    return DelayProblem(rhs, L1, L2, history, FracOrder(alpha, beta), identity_psi(), TimeGrid(t0, T, a, m))


def test_gamma_one_is_classical_picard():
    p = problem(lambda t, y, yd: 0.5 * y, L1=0.5, beta=0.3)
    cand = ramp_candidate(p)
    out = apply_omega(cand, p, PL)
    g = p.grid
    y = cand.segment
    integral = np.concatenate([[0.0], np.cumsum(0.5 * (0.5 * y[1:] + 0.5 * y[:-1]) * g.h)])
    np.testing.assert_allclose(out.segment, 1.0 + integral, atol=1e-13)
    np.testing.assert_array_equal(out.values[: g.i0 + 1], p.history_values())


def test_zero_rhs_gives_constant():
    p = problem(lambda t, y, yd: 0.0 * y, history=lambda t: 2.5 + t)
    out = apply_omega(ramp_candidate(p, 4.0), p, PL)
    np.testing.assert_allclose(out.segment, 2.5)
    rep = solve_fixed_point(p, PL)
    assert rep.converged and rep.iterations == 1
    np.testing.assert_allclose(rep.solution.segment, 2.5)


def test_power_rule_through_omega():
    p = problem(lambda t, y, yd: np.ones_like(y), alpha=0.5, history=lambda t: 0.0 * t)
    out = apply_omega(ramp_candidate(p, 7.0), p, PL)
    t = p.grid.solution_nodes
    np.testing.assert_allclose(out.segment, np.sqrt(t) / math.gamma(1.5), atol=1e-12)


def test_history_mismatch_rejected():
    p = problem(lambda t, y, yd: y, L1=1.0)
    bad = Path(p.grid, np.zeros(len(p.grid)))
    with pytest.raises(ValueError, match="history"):
        apply_omega(bad, p)


def test_exponential():
    p = problem(lambda t, y, yd: y, L1=1.0, a=1.0, m=1024)
    rep = solve_fixed_point(p, PL)
    assert rep.converged
    err = np.max(np.abs(rep.solution.segment - np.exp(p.grid.solution_nodes)))
    assert err <= 1e-3
    r = residual(rep.solution, p)
    assert np.max(np.abs(r.segment[2:])) <= 5e-3
    assert np.all(r.values[: p.grid.i0] == 0)


def test_method_of_steps():
    p = problem(lambda t, y, yd: yd, L2=1.0, T=2.0, a=1.0, m=256)
    rep = solve_fixed_point(p, PL)
    y = rep.solution
    assert y(1.0) == pytest.approx(2.0, abs=1e-3)
    assert y(2.0) == pytest.approx(3.5, abs=1e-3)
    t = p.grid.solution_nodes
    exact = np.where(t <= 1, 1 + t, 2 + (t - 1) + (t - 1) ** 2 / 2)
    assert np.max(np.abs(y.segment - exact)) <= 1e-3


def test_nonconvergence_is_reported_not_raised():
    p = problem(lambda t, y, yd: 5 * y, L1=5.0, T=1.0)
    rep = solve_fixed_point(p, PL, max_iter=3)
    assert not rep.converged and rep.iterations == 3
    assert rep.contraction_observed >= 0


def test_divergence_raises():
    p = problem(lambda t, y, yd: 1e200 * y * y, L1=1e300)
    with pytest.raises(DivergenceError, match="divergent iteration"):
        solve_fixed_point(p, PL)


def test_bad_arguments():
    p = problem(lambda t, y, yd: y, L1=1.0)
    with pytest.raises(ValueError):
        solve_fixed_point(p, PL, tol=0.0)
    with pytest.raises(ValueError):
        solve_fixed_point(p, PL, max_iter=0)


@pytest.mark.parametrize("mode", [PL, WH])
def test_fixed_point_property_and_uniqueness(mode):
    phi = WeightFn(lambda t: 1.0 + t)
    p = problem(lambda t, y, yd: 0.2 * np.sin(y) + 0.2 * yd, L1=0.2, L2=0.2, alpha=0.6, beta=0.4, a=0.5, m=64, history=lambda t: 1 + t)
    r1 = solve_fixed_point(p, mode, weight=phi)
    r2 = solve_fixed_point(p, mode, weight=phi, initial=ramp_candidate(p, -2.0))
    assert r1.converged and r2.converged
    y0 = r1.solution
    assert weighted_distance(apply_omega(y0, p, mode), y0, phi) <= 2e-10
    assert np.max(np.abs(r1.solution.values - r2.solution.values)) <= 5e-10
    np.testing.assert_array_equal(y0.values[: p.grid.i0], p.history_values()[:-1])


def test_modes_and_t0_convention():
    p = problem(lambda t, y, yd: 0.1 * y, L1=0.1, alpha=0.5, beta=0.0, history=lambda t: 2.0 + 0 * t)
    pl = solve_fixed_point(p, PL).solution
    wh = solve_fixed_point(p, WH).solution
    assert pl.segment[0] == 0.0
    assert t0_jump(p, PL) == 2.0
    assert wh.leading_exponent == pytest.approx(-0.5)
    assert t0_jump(p, WH) == math.inf
    t = p.grid.solution_nodes
    # weighted-hilfer: y ~ 2 t^{-1/2} / Gamma(1/2) near t0
    assert wh.segment[1] * math.sqrt(t[1]) * math.gamma(0.5) == pytest.approx(2.0, rel=5e-2)


def test_weighted_hilfer_residual_is_small():
    p = problem(lambda t, y, yd: 0.2 * y + 0.2 * yd, L1=0.2, L2=0.2, alpha=0.7, beta=0.3, a=0.5, m=256)
    y = solve_fixed_point(p, WH).solution
    r = residual(y, p).segment
    t = p.grid.solution_nodes
    # the delayed term carries the t0 singularity forward to t0 + a
    away = (np.abs(t - 0.0) > 2.5 * p.grid.h) & (np.abs(t - 0.5) > 2.5 * p.grid.h)
    assert np.max(np.abs(r[away])) <= 5e-2
    assert np.max(np.abs(r[t > 0.6])) <= 1e-3


def test_residual_cancellations():
    p = problem(lambda t, y, yd: 0.0 * y, alpha=0.4, beta=1.0, history=lambda t: 3.0 + 0 * t)
    y = initial_candidate(p)
    assert np.max(np.abs(residual(y, p).segment)) <= 1e-12
    g = p.grid
    f = Path.from_function(g, lambda t: np.sin(t) + 3.0)
    d = psi_hilfer_derivative(f, p.order, p.psi)
    nodes = g.solution_nodes

    def rhs(t, y, yd):
        return np.interp(t, nodes, d.segment)

    np.testing.assert_allclose(residual(f, p.with_rhs(rhs)).segment, 0.0, atol=1e-14)


def test_lipschitz_probe_warns():
    p = problem(lambda t, y, yd: 2.0 * y, L1=0.1)
    assert p.warnings and "violated" in p.warnings[0]
    assert not problem(lambda t, y, yd: 0.1 * np.sin(y), L1=0.1).warnings


def test_perturbation_normalized_and_seeded():
    g = TimeGrid(0.0, 1.0, 1.0, 64)
    for seed in range(20):
        s = perturbation(g, seed)(g.solution_nodes)
        assert np.max(np.abs(s)) == pytest.approx(1.0)
    np.testing.assert_array_equal(perturbation(g, 3)(g.nodes), perturbation(g, 3)(g.nodes))


def test_quasi_solution_contract():
    p = problem(lambda t, y, yd: y, L1=1.0, m=1024)
    bound = WeightFn.constant(1.0)
    y0 = solve_fixed_point(p, PL).solution
    np.testing.assert_array_equal(make_quasi_solution(p, bound, 0.0, 1).values, y0.values)
    for seed in (0, 1, 2):
        y = make_quasi_solution(p, bound, 0.1, seed)
        assert np.max(np.abs(residual(y, p).segment[2:])) <= 0.1 + 5e-3
        np.testing.assert_array_equal(y.values[: p.grid.i0 + 1], p.history_values())
        np.testing.assert_array_equal(y.values, make_quasi_solution(p, bound, 0.1, seed).values)
    with pytest.raises(ValueError):
        make_quasi_solution(p, bound, 1.5, 0)


def test_quasi_solution_error_carries_report():
    p = problem(lambda t, y, yd: 5 * y, L1=5.0)
    with pytest.raises(QuasiSolutionError) as exc:
        make_quasi_solution(p, WeightFn.constant(1.0), 0.5, 0, max_iter=2)
    assert exc.value.report.iterations == 2
