"""Two-loop solver mechanics: updates, schedules, budgets, rate mode."""

import numpy as np
import pytest

from newton_landweber import (
    Grid,
    GridFunction,
    InnerBudget,
    SolverConfig,
    SpaceParams,
    duality_map,
    generate_noise,
    interval_problem,
    lp_norm,
    run,
    solve_state,
)
from newton_landweber.solver import InnerIteration, refinement_threshold


def small_problem(n=50, g0=1.0, g1=2.0):
    grid = Grid((n,))
    truth = GridFunction.from_callable(grid, lambda t: 1.0 + 0.5 * t)
    state = lambda t: g0 + (g1 - g0) * t  # noqa: E731
    rhs = lambda t: state(t) * (1.0 + 0.5 * t)  # noqa: E731
    problem = interval_problem(grid, rhs, g0, g1)
    exact = GridFunction.from_callable(grid, state)
    return problem, truth, exact


def base_config(**kw):
    defaults = dict(
        space=SpaceParams(2.0, 2.0),
        delta=0.0,
        tau=1.1,
        tau_tilde=0.1,
        inner_budget=InnerBudget.constant(100),
        max_outer=1,
    )
    defaults.update(kw)
    return SolverConfig(**defaults)


def test_hilbert_case_matches_dense_oracle():
    # p = s = r = 2, x0 = 0: the duality maps are identities, so a plain
    # numpy reimplementation with dense matrices must reproduce the iterate
    problem, _, exact = small_problem()
    grid = problem.grid
    n = grid.size
    h = grid.spacing[0]
    vol = grid.cell_volume
    data = exact  # delta = 0, single linearization point
    config = base_config(alpha00=0.5, eta=0.1, q=0.9, c_omega_bar=0.1)

    result = run(problem, data, config)
    assert result.reason == "outer budget"
    assert len(result.log.records) == 100

    # independent assembly of the documented discretization
    mat = np.zeros((n, n))
    idx = np.arange(n)
    mat[idx, idx] = 2.0 / h**2
    mat[idx[:-1], idx[:-1] + 1] = -1.0 / h**2
    mat[idx[1:], idx[1:] - 1] = -1.0 / h**2
    mat[0, 0] += 1.0 / h**2
    mat[-1, -1] += 1.0 / h**2
    b = problem.rhs.values.copy()
    b[0] += 2.0 * 1.0 / h**2
    b[-1] += 2.0 * 2.0 / h**2

    def norm2(v):
        return np.sqrt(vol * np.dot(v, v))

    x_n = np.zeros(n)
    a_mat = mat + np.diag(x_n)
    u_state = np.linalg.solve(a_mat, b)
    resid0 = u_state - data.values
    r_n = norm2(resid0)
    vartheta = 2.0**-6  # largest 2^-j with 4 vt <= 0.1
    z = x_n.copy()
    u_dual = np.zeros(n)
    resid = resid0.copy()
    t = r_n
    alpha = 0.5
    for _ in range(100):
        gradient = -u_state * np.linalg.solve(a_mat, resid)
        t_tilde = norm2(gradient)
        omega = vartheta * min(t**2 / t_tilde**2, 1e8)
        u_dual = u_dual - alpha * (z - 0.0) - omega * gradient
        z = x_n + u_dual - (x_n - 0.0)  # x0 = 0: z = base + u_dual
        resid = -np.linalg.solve(a_mat, (z - x_n) * u_state) + resid0
        t = norm2(resid)
        alpha = min(1.0, 0.1 * (t + 0.1 * r_n) ** 2)

    np.testing.assert_allclose(result.final.values, z, rtol=0, atol=1e-8)
    assert result.final_alpha == pytest.approx(alpha, rel=1e-10)


def test_dual_iterate_consistency():
    # J_p(z - x0) must equal base_dual + u_dual after every step
    problem, _, exact = small_problem(n=30)
    grid = problem.grid
    p = 1.5
    config = base_config(space=SpaceParams(p, 2.0), tau_tilde=0.05)
    x0 = GridFunction.constant(grid, 0.2)
    x_n = GridFunction.from_callable(grid, lambda t: 0.5 + 0.3 * t)
    ev = solve_state(problem, x_n)
    resid0 = ev.u - exact
    r_n = lp_norm(resid0, 2.0)
    it = InnerIteration(ev, exact, x0, 0.5, config, 0, r_n, resid0)
    for _ in range(25):
        it.step()
        stored = it.base_dual + it.u_dual
        direct = duality_map(it.z - x0, p).values
        scale = max(np.max(np.abs(stored)), 1e-30)
        assert np.max(np.abs(direct - stored)) <= 1e-10 * scale


def test_theta_zero_alpha_law():
    # with nu = 0 every alpha after the first is min(1, alpha_check(t))
    problem, _, exact = small_problem()
    delta = 1e-3
    data = generate_noise(exact, delta, 2.0, 5)
    config = base_config(
        delta=delta, nu=0.0, max_outer=3, inner_budget=InnerBudget.constant(30)
    )
    result = run(problem, data, config)
    recs = result.log.records
    assert len(recs) > 30
    for prev, rec in zip(recs, recs[1:]):
        if rec.n != prev.n:
            continue  # alpha carries over; checked separately
        expected = min(1.0, 0.1 * (rec.t + 0.1 * rec.r_n + 1.1 * delta) ** 2)
        assert rec.alpha == pytest.approx(expected, rel=1e-12)


def test_alpha_carries_across_outer_loops():
    problem, _, exact = small_problem()
    delta = 1e-3
    data = generate_noise(exact, delta, 2.0, 6)
    config = base_config(delta=delta, max_outer=4, inner_budget=InnerBudget.constant(10))
    result = run(problem, data, config)
    outer = result.log.outer
    assert len(outer) >= 3
    records = result.log.records
    for prev, cur in zip(outer, outer[1:]):
        if cur.steps == 0:
            continue
        first = next(rec for rec in records if rec.n == cur.n)
        # byte equality: the value is handed over, not recomputed
        assert first.alpha == prev.alpha_end
        assert cur.alpha_start == prev.alpha_end
    assert result.final_alpha == outer[-1].alpha_end


def test_immediate_discrepancy_returns_initial_guess():
    problem, _, exact = small_problem()
    config = base_config(delta=1e3, tau=1.5, max_outer=50)
    result = run(problem, exact, config)
    assert result.reason == "discrepancy"
    assert result.n_star == 0
    assert len(result.log.records) == 0
    np.testing.assert_array_equal(result.final.values, np.zeros(problem.grid.size))


def test_budget_reasons():
    problem, _, exact = small_problem()
    delta = 1e-6
    data = generate_noise(exact, delta, 2.0, 7)

    config = base_config(delta=delta, max_outer=2, inner_budget=InnerBudget.constant(5))
    result = run(problem, data, config)
    assert result.reason == "outer budget"
    assert result.log.outer[-1].inner_reason == "outer budget"

    config = base_config(delta=delta, max_outer=50, max_total_inner=12)
    result = run(problem, data, config)
    assert result.reason == "total inner budget"
    assert result.log.total_inner == 12
    assert result.log.outer[-1].inner_reason == "aborted: total inner budget"

    config = base_config(delta=delta, max_outer=50, max_total_applies=30)
    result = run(problem, data, config)
    assert result.reason == "apply budget"
    assert result.total_applies <= 30


def test_inner_budget_reason_strings():
    problem, _, exact = small_problem()
    delta = 5e-3
    data = generate_noise(exact, delta, 2.0, 7)
    # generous allowance: early loops exit on the inner discrepancy check,
    # late ones exhaust the cap before the linearized residual shrinks enough
    config = base_config(
        delta=delta, max_outer=20, inner_budget=InnerBudget.constant(200),
        eval_stride=1,
    )
    result = run(problem, data, config)
    reasons = {o.inner_reason for o in result.log.outer}
    assert "budget" in reasons
    assert "inner discrepancy" in reasons
    assert result.reason == "discrepancy"


def test_unsolvable_iterate_reported_not_raised():
    problem, _, exact = small_problem()
    delta = 1e-3
    data = generate_noise(exact, delta, 2.0, 9)
    config = base_config(delta=delta, max_outer=5)
    # large negative coefficient makes the operator indefinite at the
    # starting point; the factorization failure must come back as a result
    bad_start = GridFunction.constant(problem.grid, -1e4)
    result = run(problem, data, config, x_init=bad_start)
    assert result.failed
    assert result.reason.startswith("failure")
    assert "outer iterate 0" in result.reason


def test_determinism_of_records():
    problem, _, exact = small_problem()
    delta = 1e-3
    data = generate_noise(exact, delta, 2.0, 10)
    config = base_config(delta=delta, max_outer=3, inner_budget=InnerBudget.constant(20))
    a = run(problem, data, config)
    b = run(problem, data, config)
    assert len(a.log.records) == len(b.log.records)
    for ra, rb in zip(a.log.records, b.log.records):
        assert (ra.n, ra.k, ra.t, ra.t_tilde, ra.omega, ra.alpha, ra.r_n) == (
            rb.n, rb.k, rb.t, rb.t_tilde, rb.omega, rb.alpha, rb.r_n
        )
    np.testing.assert_array_equal(a.final.values, b.final.values)


def test_rate_mode_refinement():
    problem, truth, exact = small_problem()
    delta = 5e-3
    data = generate_noise(exact, delta, 2.0, 11)
    config = base_config(
        delta=delta,
        nu=0.5,  # theta = 1 in the Hilbert setting
        rate_mode=True,
        c_alpha=0.076,
        tau_tilde=0.001,
        alpha00=0.1,
        q=0.5,
        max_outer=300,
        inner_budget=InnerBudget.constant(40),
    )
    assert config.theta == pytest.approx(1.0)
    result = run(problem, data, config, truth=truth)
    assert result.reason == "discrepancy"
    tail = result.log.outer[-1]
    assert tail.inner_reason == "refinement"
    threshold = refinement_threshold(tail.r_n, config)
    refinement_records = [rec for rec in result.log.records if rec.refinement]
    assert len(refinement_records) == tail.steps
    # every recorded refinement alpha still violated the bound; the returned
    # one is the first to satisfy it
    for rec in refinement_records:
        assert rec.alpha > threshold
    assert result.final_alpha <= threshold


def test_rate_mode_refinement_met_at_k0():
    problem, _, exact = small_problem()
    delta = 5e-3
    data = generate_noise(exact, delta, 2.0, 11)
    config = base_config(
        delta=delta,
        nu=0.5,
        rate_mode=True,
        c_alpha=1e6,  # threshold far above any admissible alpha
        tau_tilde=0.001,
        alpha00=0.1,
        q=0.5,
        max_outer=300,
        inner_budget=InnerBudget.constant(40),
    )
    result = run(problem, data, config)
    assert result.reason == "discrepancy"
    tail = result.log.outer[-1]
    assert tail.inner_reason == "refinement"
    assert tail.steps == 0


def test_rate_mode_requires_admissible_c_alpha():
    with pytest.raises(Exception):
        base_config(nu=0.5, rate_mode=True, c_alpha=1e-6)


def test_theta_zero_gamma_equals_d2():
    problem, truth, exact = small_problem()
    delta = 1e-3
    data = generate_noise(exact, delta, 2.0, 12)
    config = base_config(delta=delta, max_outer=2, inner_budget=InnerBudget.constant(10))
    result = run(problem, data, config, truth=truth)
    recs = result.log.records
    assert len(recs) > 0
    for rec in recs:
        assert rec.d2 is not None
        assert rec.gamma == rec.d2
