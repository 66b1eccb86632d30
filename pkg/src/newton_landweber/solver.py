"""Newton-type iteratively regularized Landweber iteration in L^p spaces.

Outer loop: at the current iterate x_n, the state equation is solved once and
its factorization reused; the loop stops by the discrepancy principle
||F(x_n) - y_delta||_r <= tau * delta. Inner loop: iteratively regularized
Landweber steps on the linearization at x_n, driven in the dual space,

    u_{n,k+1} = u_{n,k} - alpha_{n,k} J_p(z_{n,k} - x0) - omega_{n,k} A_n^* j_r(rho_{n,k}),
    z_{n,k+1} = x0 + J_p^{-1}( J_p(x_n - x0) + u_{n,k+1} ),

with rho_{n,k} = A_n (z_{n,k} - x_n) + F(x_n) - y_delta. The loop length is
the configured allowance k_n, cut short when the nonlinear residual at z_{n,k}
already passes the discrepancy test. alpha carries across loops: the first
weight of loop n is the last weight of loop n-1.

In rate mode (theta > 0) the inner loop at the stopping index continues until
alpha falls below c_alpha * (r_n + delta)^(r/(1+theta)); the nonlinear
residual check is not consulted there.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .forward import (
    EllipticProblem,
    ForwardEvaluation,
    SingularOperatorError,
    adjoint_apply,
    derivative_apply,
    forward,
    solve_state,
)
from .geometry import (
    SpaceParams,
    duality_map,
    inverse_duality_map,
    lp_norm,
    shifted_bregman,
)
from .grids import GridFunction, GridMismatchError
from .schedules import (
    ConfigurationError,
    InnerBudget,
    alpha_check,
    alpha_hat,
    choose_omega,
    choose_vartheta,
    next_alpha,
    theta_exponent,
)

__all__ = [
    "SolverConfig",
    "IterationRecord",
    "OuterRecord",
    "IterationLog",
    "RunResult",
    "InnerIteration",
    "outer_stop",
    "refinement_threshold",
    "run",
]

REASON_DISCREPANCY = "discrepancy"
REASON_OUTER_BUDGET = "outer budget"
REASON_TOTAL_INNER = "total inner budget"
REASON_APPLY_BUDGET = "apply budget"


@dataclass(frozen=True)
class SolverConfig:
    """All tunables of the iteration; validated on construction.

    ``delta`` is the noise level entering both stopping rules, ``tau`` the
    discrepancy factor and ``tau_tilde`` the scale of the residual-driven
    alpha floor. ``nu`` is the assumed smoothness driving theta; zero means
    no decay is imposed on alpha beyond the floor. ``vartheta`` of ``None``
    selects the largest admissible power of two automatically.
    """

    space: SpaceParams
    delta: float
    tau: float
    tau_tilde: float = 0.1
    eta: float = 0.1
    nu: float = 0.0
    q: float = 0.9
    alpha00: float = 1.0
    omega_bar: float = 1e8
    c_omega_bar: float = 0.1
    vartheta: float | None = None
    rho: float = 0.5
    c_const: float = 1.0
    inner_budget: InnerBudget = InnerBudget.power(50.0, 2.0)
    eval_stride: int = 1
    rate_mode: bool = False
    diagnostics: bool = True
    c_alpha: float = 1.0
    max_outer: int = 200
    max_inner: int = 100_000
    max_total_inner: int | None = None
    max_total_applies: int = 10_000_000

    def __post_init__(self) -> None:
        sp = self.space
        if self.delta < 0:
            raise ConfigurationError(f"delta must be >= 0, got {self.delta}")
        if self.tau <= 1.0:
            raise ConfigurationError(f"tau must exceed 1, got {self.tau}")
        if self.tau_tilde <= 0:
            raise ConfigurationError(f"tau_tilde must be positive, got {self.tau_tilde}")
        if not 0.0 <= self.eta < 1.0:
            raise ConfigurationError(f"eta must lie in [0, 1), got {self.eta}")
        if not 0.0 < self.q < 1.0:
            raise ConfigurationError(f"q must lie in (0, 1), got {self.q}")
        if not 0.0 < self.alpha00 <= 1.0:
            raise ConfigurationError(f"alpha00 must lie in (0, 1], got {self.alpha00}")
        if self.omega_bar <= 0:
            raise ConfigurationError(f"omega_bar must be positive, got {self.omega_bar}")
        if not 0.0 < self.c_omega_bar < 1.0:
            raise ConfigurationError(
                f"c_omega_bar must lie in (0, 1), got {self.c_omega_bar}"
            )
        if self.vartheta is not None and not 0.0 < self.vartheta <= 1.0:
            raise ConfigurationError(f"vartheta must lie in (0, 1], got {self.vartheta}")
        if self.rho <= 0 or self.c_const <= 0:
            raise ConfigurationError("rho and c_const must be positive")
        if self.eval_stride < 1:
            raise ConfigurationError(f"eval_stride must be >= 1, got {self.eval_stride}")
        if self.c_alpha <= 0:
            raise ConfigurationError(f"c_alpha must be positive, got {self.c_alpha}")
        for name in ("max_outer", "max_inner", "max_total_applies"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if self.max_total_inner is not None and self.max_total_inner < 1:
            raise ConfigurationError("max_total_inner must be >= 1 when set")

        theta = self.theta  # validates nu against r
        if sp.s_star < theta + 1.0 or sp.p_star < theta + 1.0:
            raise ConfigurationError(
                f"theta={theta:g} too large for the space: need "
                f"s* >= theta+1 and p* >= theta+1 (s*={sp.s_star:g}, p*={sp.p_star:g})"
            )
        if self.rate_mode:
            if theta == 0.0:
                warnings.warn(
                    "rate mode with theta = 0 is a no-op: the refinement "
                    "criterion is not defined without decay",
                    stacklevel=2,
                )
            else:
                bound = (self.tau_tilde * (1.0 + self.eta)) ** (
                    sp.r / (1.0 + theta)
                )
                if self.c_alpha <= bound:
                    raise ConfigurationError(
                        f"rate mode needs c_alpha > (tau_tilde (1+eta))^(r/(1+theta)) "
                        f"= {bound:g}, got {self.c_alpha}"
                    )
        # fail early rather than in the first inner step
        self.resolved_vartheta

    @property
    def theta(self) -> float:
        return theta_exponent(self.nu, self.space.r)

    @property
    def resolved_vartheta(self) -> float:
        if self.vartheta is not None:
            return self.vartheta
        sp = self.space
        return choose_vartheta(
            self.c_omega_bar, self.c_const, self.rho, sp.p, sp.p_star, sp.s_star
        )

    def replace(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class IterationRecord:
    """State of one inner step, captured before the update is applied.

    ``t`` is the linearized residual norm, ``t_tilde`` the dual norm of the
    mapped gradient, ``f_residual`` the nonlinear residual of the current z
    when it was evaluated for the stopping check. ``d2``/``gamma`` are the
    shifted Bregman distance to the supplied truth and its alpha^-theta
    rescaling (synthetic runs only).
    """

    n: int
    k: int
    t: float
    t_tilde: float
    omega: float
    alpha: float
    r_n: float
    f_residual: float | None = None
    d2: float | None = None
    gamma: float | None = None
    degenerate: bool = False
    refinement: bool = False


@dataclass(frozen=True)
class OuterRecord:
    """Summary of one outer iterate and its inner loop."""

    n: int
    r_n: float
    alpha_start: float
    allowance: int
    steps: int
    alpha_end: float
    inner_reason: str
    f_residual_stop: float | None = None


@dataclass
class IterationLog:
    records: list[IterationRecord] = field(default_factory=list)
    outer: list[OuterRecord] = field(default_factory=list)

    @property
    def total_inner(self) -> int:
        return len(self.records)


@dataclass
class RunResult:
    """Reconstruction plus the complete iteration history."""

    final: GridFunction
    reason: str
    n_star: int
    log: IterationLog
    final_alpha: float
    total_applies: int

    @property
    def failed(self) -> bool:
        return self.reason.startswith("failure")


def outer_stop(r_n: float, tau: float, delta: float) -> bool:
    """Discrepancy principle r_n <= tau * delta (true at r_n = 0 for any delta)."""
    return r_n <= tau * delta


def refinement_threshold(r_n: float, config: SolverConfig) -> float:
    """Rate-mode target c_alpha * (r_n + delta)^(r/(1+theta)) for alpha."""
    return config.c_alpha * (r_n + config.delta) ** (
        config.space.r / (1.0 + config.theta)
    )


class InnerIteration:
    """Inner Landweber loop at a fixed outer iterate, stepped one k at a time.

    The dual iterate of z is carried explicitly: since z is constructed as
    x0 + J_p^{-1}(base_dual + u_dual), the term J_p(z - x0) of the update
    equals base_dual + u_dual exactly, so no pow round trip is needed.
    """

    def __init__(
        self,
        ev: ForwardEvaluation,
        data: GridFunction,
        x0: GridFunction,
        alpha: float,
        config: SolverConfig,
        n: int,
        r_n: float,
        resid0: GridFunction,
        truth: GridFunction | None = None,
    ):
        self.ev = ev
        self.data = data
        self.x_n = ev.c
        self.x0 = x0
        self.config = config
        self.space = config.space
        self.n = n
        self.r_n = r_n
        self.resid0 = resid0
        self.truth = truth
        self.alpha = alpha
        self.vartheta = config.resolved_vartheta
        self.theta = config.theta

        self.base_dual = duality_map(self.x_n - x0, self.space.p).values
        self.u_dual = np.zeros(ev.problem.grid.size)
        self.z = self.x_n
        self.resid = resid0
        self.t = r_n
        self.k = 0
        self.applies = 0
        self.pending_f_residual: float | None = None

    def _diagnostics(self) -> tuple[float | None, float | None]:
        if self.truth is None:
            return None, None
        d2 = shifted_bregman(self.truth, self.z, self.x0, self.space.p)
        if self.theta == 0.0:
            return d2, d2
        gamma = d2 * self.alpha**-self.theta if self.alpha > 0 else None
        return d2, gamma

    def step(self, refinement: bool = False) -> IterationRecord:
        """Advance z_{n,k} -> z_{n,k+1} and alpha, returning the step record."""
        cfg = self.config
        sp = self.space

        gradient = adjoint_apply(self.ev, duality_map(self.resid, sp.r))
        self.applies += 1
        t_tilde = lp_norm(gradient, sp.p_star)
        omega, degenerate = choose_omega(
            self.t, t_tilde, self.vartheta, cfg.omega_bar, sp
        )
        d2, gamma = self._diagnostics()
        record = IterationRecord(
            n=self.n,
            k=self.k,
            t=self.t,
            t_tilde=t_tilde,
            omega=omega,
            alpha=self.alpha,
            r_n=self.r_n,
            f_residual=self.pending_f_residual,
            d2=d2,
            gamma=gamma,
            degenerate=degenerate,
            refinement=refinement,
        )
        self.pending_f_residual = None

        # J_p(z - x0) == base_dual + u_dual by construction of z
        self.u_dual = (
            self.u_dual
            - self.alpha * (self.base_dual + self.u_dual)
            - omega * gradient.values
        )
        dual_sum = self.z.with_values(self.base_dual + self.u_dual)
        self.z = self.x0 + inverse_duality_map(dual_sum, sp.p)

        self.resid = derivative_apply(self.ev, self.z - self.x_n) + self.resid0
        self.applies += 1
        self.t = lp_norm(self.resid, sp.r)
        self.alpha = next_alpha(
            alpha_check(
                self.t, self.r_n, cfg.delta, cfg.eta, cfg.tau_tilde, sp.r, self.theta
            ),
            alpha_hat(self.alpha, cfg.q, self.theta),
        )
        self.k += 1
        return record


def run(
    problem: EllipticProblem,
    data: GridFunction,
    config: SolverConfig,
    x0: GridFunction | None = None,
    truth: GridFunction | None = None,
    x_init: GridFunction | None = None,
) -> RunResult:
    """Run the full two-loop iteration from x0 (or x_init when they differ).

    Failures (singular operator, non-finite iterate, exhausted refinement)
    are reported through ``RunResult.reason``, not raised; budget exhaustion
    likewise. ``truth`` switches on the Bregman diagnostics in the log.
    """
    if data.grid != problem.grid:
        raise GridMismatchError("data sampled on a different grid")
    if x0 is None:
        x0 = GridFunction.zeros(problem.grid)
    if x_init is None:
        x_init = x0
    if truth is not None and truth.grid != problem.grid:
        raise GridMismatchError("truth sampled on a different grid")
    if not config.diagnostics:
        truth = None

    sp = config.space
    log = IterationLog()
    x = x_init
    alpha = config.alpha00
    applies = 0
    total_inner = 0
    n = 0
    rate_active = config.rate_mode and config.theta > 0.0
    # rate mode runs every loop to its full allowance; with exact data the
    # residual test can never fire, so skip the extra forward solves too
    check_residual = not rate_active and config.tau * config.delta > 0.0

    while True:
        try:
            ev = solve_state(problem, x)
        except SingularOperatorError as exc:
            return RunResult(
                x, f"failure: {exc} (outer iterate {n})", n, log, alpha, applies
            )
        applies += 1
        resid0 = ev.u - data
        r_n = lp_norm(resid0, sp.r)

        if outer_stop(r_n, config.tau, config.delta):
            if config.rate_mode and config.theta > 0.0:
                return _refine(ev, data, x0, alpha, config, n, r_n, resid0, truth, log, applies)
            log.outer.append(
                OuterRecord(n, r_n, alpha, 0, 0, alpha, REASON_DISCREPANCY)
            )
            return RunResult(x, REASON_DISCREPANCY, n, log, alpha, applies)

        if n >= config.max_outer:
            log.outer.append(
                OuterRecord(n, r_n, alpha, 0, 0, alpha, REASON_OUTER_BUDGET)
            )
            return RunResult(x, REASON_OUTER_BUDGET, n, log, alpha, applies)

        allowance = min(config.inner_budget.limit(n, r_n, sp.r), config.max_inner)
        it = InnerIteration(ev, data, x0, alpha, config, n, r_n, resid0, truth)
        inner_reason = None
        abort_reason = None
        f_stop = None
        while True:
            if (
                config.max_total_inner is not None
                and total_inner >= config.max_total_inner
            ):
                abort_reason = REASON_TOTAL_INNER
                inner_reason = "aborted: " + abort_reason
                break
            # reserve the step's two applies plus the optional residual check
            reserve = 3 if check_residual else 2
            if applies + it.applies + reserve > config.max_total_applies:
                abort_reason = REASON_APPLY_BUDGET
                inner_reason = "aborted: " + abort_reason
                break
            try:
                log.records.append(it.step())
            except (SingularOperatorError, ValueError) as exc:
                applies += it.applies
                return RunResult(
                    it.z,
                    f"failure: {exc} (iterate n={n}, k={it.k})",
                    n,
                    log,
                    it.alpha,
                    applies,
                )
            total_inner += 1
            if it.k >= allowance:
                inner_reason = "budget"
                break
            if check_residual and it.k % config.eval_stride == 0:
                try:
                    f_val = forward(problem, it.z)
                except SingularOperatorError as exc:
                    applies += it.applies
                    return RunResult(
                        it.z,
                        f"failure: {exc} (iterate n={n}, k={it.k})",
                        n,
                        log,
                        it.alpha,
                        applies,
                    )
                it.applies += 1
                f_res = lp_norm(f_val - data, sp.r)
                it.pending_f_residual = f_res
                if outer_stop(f_res, config.tau, config.delta):
                    f_stop = f_res
                    inner_reason = "inner discrepancy"
                    break

        applies += it.applies
        log.outer.append(
            OuterRecord(n, r_n, alpha, allowance, it.k, it.alpha, inner_reason, f_stop)
        )
        x = it.z
        alpha = it.alpha
        if abort_reason is not None:
            return RunResult(x, abort_reason, n, log, alpha, applies)
        n += 1


def _refine(
    ev: ForwardEvaluation,
    data: GridFunction,
    x0: GridFunction,
    alpha: float,
    config: SolverConfig,
    n_star: int,
    r_n: float,
    resid0: GridFunction,
    truth: GridFunction | None,
    log: IterationLog,
    applies: int,
) -> RunResult:
    """Rate-mode tail: keep stepping at n_star until alpha passes its bound."""
    threshold = refinement_threshold(r_n, config)
    if threshold <= 0.0:
        # exact data and a vanished residual; nothing to refine
        log.outer.append(OuterRecord(n_star, r_n, alpha, 0, 0, alpha, REASON_DISCREPANCY))
        return RunResult(ev.c, REASON_DISCREPANCY, n_star, log, alpha, applies)

    it = InnerIteration(ev, data, x0, alpha, config, n_star, r_n, resid0, truth)
    while it.alpha > threshold:
        if it.k >= config.max_inner:
            applies += it.applies
            log.outer.append(
                OuterRecord(n_star, r_n, alpha, config.max_inner, it.k, it.alpha, "refinement aborted")
            )
            return RunResult(
                it.z,
                f"failure: refinement budget exhausted (alpha={it.alpha:g} > "
                f"threshold={threshold:g} after {it.k} steps)",
                n_star,
                log,
                it.alpha,
                applies,
            )
        try:
            log.records.append(it.step(refinement=True))
        except (SingularOperatorError, ValueError) as exc:
            applies += it.applies
            return RunResult(
                it.z,
                f"failure: {exc} (refinement at n={n_star}, k={it.k})",
                n_star,
                log,
                it.alpha,
                applies,
            )
    applies += it.applies
    log.outer.append(
        OuterRecord(n_star, r_n, alpha, 0, it.k, it.alpha, "refinement")
    )
    return RunResult(it.z, REASON_DISCREPANCY, n_star, log, it.alpha, applies)
