"""Self-contained property checks behind the ``verify`` CLI subcommand.

Each check exercises one contract of the library (duality-map algebra,
operator adjointness, noise determinism, solver step bounds) on small
seeded problems and reports pass/fail with a one-line detail string.
The suite is cheap (a few seconds) and safe to run in any environment.
"""

from __future__ import annotations

from dataclasses import dataclass
import warnings

import numpy as np

from .experiments import (
    add_outliers,
    apply_overrides,
    generate_noise,
    make_example1,
    run_experiment,
)
from .forward import adjoint_apply, derivative_apply, forward, interval_problem, solve_state, square_problem
from .geometry import (
    SpaceParams,
    bregman,
    duality_map,
    inverse_duality_map,
    lp_norm,
    pairing,
    phi,
)
from .grids import Grid, GridFunction
from .schedules import choose_omega, choose_vartheta


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def _random_function(grid: Grid, rng: np.random.Generator, offset: float = 0.0) -> GridFunction:
    return GridFunction(grid, offset + rng.standard_normal(grid.size))


def check_duality_round_trip(seed: int = 0) -> CheckResult:
    """J_{q*} inverts J_q and the pairing identity <J_q f, f> = ||f||^q holds."""
    rng = np.random.Generator(np.random.PCG64(seed))
    grid = Grid((64,))
    worst = 0.0
    for q in (1.1, 1.5, 2.0, 3.0):
        q_star = q / (q - 1.0)
        for _ in range(25):
            f = _random_function(grid, rng)
            jf = duality_map(f, q)
            back = inverse_duality_map(jf, q)
            scale = max(lp_norm(f, 2.0), 1e-30)
            worst = max(worst, lp_norm(back - f, 2.0) / scale)
            norm_q = lp_norm(f, q)
            worst = max(worst, abs(pairing(jf, f) - norm_q**q) / max(norm_q**q, 1e-30))
            worst = max(
                worst,
                abs(lp_norm(jf, q_star) - norm_q ** (q - 1.0)) / max(norm_q ** (q - 1.0), 1e-30),
            )
    return CheckResult("duality round trip", worst <= 1e-10, f"worst relative defect {worst:.2e}")


def check_bregman_identities(seed: int = 1) -> CheckResult:
    """Three-point identity and the primal-dual expansion of the gap."""
    rng = np.random.Generator(np.random.PCG64(seed))
    grid = Grid((48,))
    worst = 0.0
    for p in (1.1, 1.5, 2.0, 3.0):
        p_star = p / (p - 1.0)
        for _ in range(25):
            a = _random_function(grid, rng)
            b = _random_function(grid, rng)
            c = _random_function(grid, rng)
            dab, dbc, dac = bregman(a, b, p), bregman(b, c, p), bregman(a, c, p)
            cross = pairing(duality_map(b, p) - duality_map(c, p), a - b)
            scale = max(abs(dac), abs(dab), abs(dbc), 1.0)
            worst = max(worst, abs(dac - (dab + dbc + cross)) / scale)
            jb = duality_map(b, p)
            dual_form = (
                lp_norm(a, p) ** p / p + lp_norm(jb, p_star) ** p_star / p_star - pairing(jb, a)
            )
            worst = max(worst, abs(dab - dual_form) / scale)
            if dab < -1e-12 or dbc < -1e-12:
                worst = max(worst, 1.0)
    return CheckResult("bregman identities", worst <= 1e-10, f"worst relative defect {worst:.2e}")


def check_omega_bounds(seed: int = 2) -> CheckResult:
    """choose_omega output obeys 0 < omega <= vt*omega_bar and the phi-ratio cap."""
    rng = np.random.Generator(np.random.PCG64(seed))
    omega_bar, c_bar, c_const, rho = 1e8, 0.1, 1.0, 0.5
    worst = 0.0
    checked = 0
    with warnings.catch_warnings():
        # the r < s combination is exercised on purpose here
        warnings.simplefilter("ignore", UserWarning)
        spaces = (SpaceParams(1.1, 2.0), SpaceParams(2.0, 1.1), SpaceParams(1.1, 10.0))
    for sp in spaces:
        vt = choose_vartheta(c_bar, c_const, rho, sp.p, sp.p_star, sp.s_star)
        for _ in range(200):
            t = 10.0 ** rng.uniform(-6.0, 1.0)
            t_tilde = 10.0 ** rng.uniform(-12.0, 1.0)
            omega, degenerate = choose_omega(t, t_tilde, vt, omega_bar, sp)
            if not (0.0 < omega <= vt * omega_bar * (1.0 + 1e-15)):
                worst = max(worst, 1.0)
            if degenerate or t == 0.0:
                continue
            ratio = phi(omega * t_tilde, c_const, rho, sp.p, sp.p_star, sp.s_star) / (
                omega * t**sp.r
            )
            worst = max(worst, max(0.0, ratio - c_bar))
            checked += 1
    return CheckResult(
        "omega schedule bounds", worst <= 1e-12, f"{checked} samples, worst excess {worst:.2e}"
    )


def _adjoint_defect(problem, rng: np.random.Generator, trials: int) -> float:
    grid = problem.grid
    worst = 0.0
    for _ in range(trials):
        c = GridFunction(grid, 0.5 + rng.random(grid.size))
        ev = solve_state(problem, c)
        h = _random_function(grid, rng)
        w = _random_function(grid, rng)
        lhs = pairing(derivative_apply(ev, h), w)
        rhs = pairing(h, adjoint_apply(ev, w))
        scale = max(lp_norm(h, 2.0) * lp_norm(w, 2.0), 1e-30)
        worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def check_adjoint_identity(seed: int = 3) -> CheckResult:
    """<F'(c)h, w> = <h, F'(c)*w> on 1-d and 2-d problems."""
    rng = np.random.Generator(np.random.PCG64(seed))
    p1 = interval_problem(Grid((51,)), lambda t: 1.0 + t, 1.0, 2.0)
    p2 = square_problem(Grid((13, 13)), lambda x, y: 1.0 + x * y, lambda x, y: 1.0 + x + y)
    worst = max(_adjoint_defect(p1, rng, 60), _adjoint_defect(p2, rng, 40))
    return CheckResult("adjoint identity", worst <= 1e-8, f"worst scaled defect {worst:.2e}")


def check_taylor_order(seed: int = 4) -> CheckResult:
    """Remainder ||F(c+th) - F(c) - t F'(c)h|| decays with fitted order >= 1.9."""
    rng = np.random.Generator(np.random.PCG64(seed))
    problem = interval_problem(Grid((51,)), lambda t: 1.0 + t, 1.0, 2.0)
    grid = problem.grid
    steps = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    worst_order = np.inf
    for _ in range(10):
        c = GridFunction(grid, 0.5 + rng.random(grid.size))
        h = _random_function(grid, rng)
        ev = solve_state(problem, c)
        dfh = derivative_apply(ev, h)
        rem = np.array(
            [lp_norm(forward(problem, c + float(t) * h) - ev.u - float(t) * dfh, 2.0) for t in steps]
        )
        order = float(np.polyfit(np.log(steps), np.log(rem), 1)[0])
        worst_order = min(worst_order, order)
    return CheckResult("derivative order", worst_order >= 1.9, f"min fitted order {worst_order:.3f}")


def check_noise_contract(seed: int = 5) -> CheckResult:
    """Noise norm exactness, bit determinism, and outlier count."""
    grid = Grid((101,))
    u = GridFunction.from_callable(grid, lambda t: 1.0 + np.sin(3.0 * t))
    worst = 0.0
    for r in (1.1, 2.0):
        data = generate_noise(u, 1e-3, r, seed)
        again = generate_noise(u, 1e-3, r, seed)
        if not np.array_equal(data.values, again.values):
            worst = max(worst, 1.0)
        worst = max(worst, abs(lp_norm(data - u, r) - 1e-3) / 1e-3)
    spiked = add_outliers(u, 5, 0.7, seed)
    differing = int(np.count_nonzero(spiked.values != u.values))
    if differing != 5:
        worst = max(worst, 1.0)
    return CheckResult(
        "noise determinism", worst <= 1e-12, f"norm defect {worst:.2e}, {differing} outliers"
    )


def check_solver_invariants(seed: int = 6) -> CheckResult:
    """Step bounds, alpha carry-over and determinism on a short preset run."""
    overrides = {"n": "100", "max_total_inner": "400", "seed": str(seed)}
    report = run_experiment(apply_overrides(make_example1(), overrides))
    again = run_experiment(apply_overrides(make_example1(), overrides))
    cfg = report.config
    vt = cfg.resolved_vartheta
    log = report.result.log
    worst = 0.0
    for rec in log.records:
        if not (0.0 < rec.omega <= vt * cfg.omega_bar * (1.0 + 1e-15)):
            worst = max(worst, 1.0)
        if not (0.0 < rec.alpha <= 1.0):
            worst = max(worst, 1.0)
        if rec.t_tilde > 0.0 and rec.t > 0.0 and not rec.degenerate:
            ratio = phi(
                rec.omega * rec.t_tilde, cfg.c_const, cfg.rho, cfg.space.p, cfg.space.p_star, cfg.space.s_star
            ) / (rec.omega * rec.t**cfg.space.r)
            worst = max(worst, max(0.0, ratio - cfg.c_omega_bar))
    for prev, outer in zip(log.outer, log.outer[1:]):
        first = [rec for rec in log.records if rec.n == outer.n]
        if first and first[0].alpha != prev.alpha_end:
            worst = max(worst, 1.0)
    if report.n_p != len(log.records):
        worst = max(worst, 1.0)
    if report.result.failed:
        worst = max(worst, 1.0)
    mismatch = any(
        (a.n, a.k, a.t, a.t_tilde, a.omega, a.alpha) != (b.n, b.k, b.t, b.t_tilde, b.omega, b.alpha)
        for a, b in zip(log.records, again.result.log.records)
    ) or len(log.records) != len(again.result.log.records)
    if mismatch:
        worst = max(worst, 1.0)
    return CheckResult(
        "solver step bounds",
        worst <= 1e-12,
        f"{len(log.records)} steps audited, worst excess {worst:.2e}",
    )


ALL_CHECKS = (
    check_duality_round_trip,
    check_bregman_identities,
    check_omega_bounds,
    check_adjoint_identity,
    check_taylor_order,
    check_noise_contract,
    check_solver_invariants,
)


def run_checks() -> list[CheckResult]:
    """Run the full property suite; never raises, failures are reported."""
    results = []
    for fn in ALL_CHECKS:
        try:
            results.append(fn())
        except Exception as exc:  # defensive: a crash is a failing check
            results.append(CheckResult(fn.__name__, False, f"raised {type(exc).__name__}: {exc}"))
    return results
