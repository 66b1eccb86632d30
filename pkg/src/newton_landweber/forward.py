"""Forward operator for coefficient identification in -Laplace(u) + c*u = f.

Dirichlet data enters through ghost-cell elimination on the cell-centered
grid: the boundary value is the average of the first interior value and a
ghost value, so eliminating the ghost adds 1/h^2 to the first/last diagonal
entries and 2*g/h^2 to the right-hand side. The resulting matrix A(c) stays
symmetric, affine functions remain in the stencil kernel, and the scheme is
globally second order.

The coefficient-to-state map is F(c) = u(c) with A(c) u = f + boundary terms.
Its derivative and adjoint (with respect to the uniform-weight pairing) are

    F'(c) h  = -A(c)^{-1} (h * u(c)),
    F'(c)* w = -u(c) * A(c)^{-1} w,

both exact at the discrete level because A(c) is symmetric and the quadrature
weights are uniform. One factorization of A(c) serves all derivative/adjoint
applications at that c.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lapack
from scipy.sparse.linalg import splu

from .grids import Grid, GridFunction, GridMismatchError

__all__ = [
    "EllipticProblem",
    "ForwardEvaluation",
    "SingularOperatorError",
    "interval_problem",
    "square_problem",
    "solve_state",
    "forward",
    "derivative_apply",
    "adjoint_apply",
]


class SingularOperatorError(RuntimeError):
    """A(c) could not be factorized (or produced a non-finite solve)."""

    def __init__(self, message: str, iterate: tuple[int, int] | None = None):
        if iterate is not None:
            message = f"{message} at outer/inner iterate {iterate}"
        super().__init__(message)
        self.iterate = iterate


@dataclass(frozen=True)
class EllipticProblem:
    """Geometry, source term and Dirichlet data of the state equation.

    ``boundary`` is (g0, g1) for dim 1; for dim 2 a tuple of four arrays
    (left, right, bottom, top) holding the trace sampled at the cell centers
    of each edge. ``boundary_rhs`` is the eliminated-ghost contribution to the
    right-hand side, fixed once per problem.
    """

    grid: Grid
    rhs: GridFunction
    boundary: tuple
    boundary_rhs: np.ndarray = field(init=False, repr=False, compare=False)
    _stencil: sp.csr_matrix | None = field(
        init=False, repr=False, compare=False, default=None
    )

    def __post_init__(self) -> None:
        if self.rhs.grid != self.grid:
            raise GridMismatchError("rhs sampled on a different grid")
        if self.grid.dim == 1:
            g0, g1 = (float(v) for v in self.boundary)
            object.__setattr__(self, "boundary", (g0, g1))
            (h,) = self.grid.spacing
            b = np.zeros(self.grid.size)
            b[0] += 2.0 * g0 / h**2
            b[-1] += 2.0 * g1 / h**2
        else:
            nx, ny = self.grid.cells
            hx, hy = self.grid.spacing
            left, right, bottom, top = (
                np.array(a, dtype=float) for a in self.boundary
            )
            if left.shape != (ny,) or right.shape != (ny,):
                raise ValueError(f"left/right traces must have length {ny}")
            if bottom.shape != (nx,) or top.shape != (nx,):
                raise ValueError(f"bottom/top traces must have length {nx}")
            for a in (left, right, bottom, top):
                a.setflags(write=False)
            object.__setattr__(self, "boundary", (left, right, bottom, top))
            b = np.zeros((ny, nx))
            b[:, 0] += 2.0 * left / hx**2
            b[:, -1] += 2.0 * right / hx**2
            b[0, :] += 2.0 * bottom / hy**2
            b[-1, :] += 2.0 * top / hy**2
            b = b.ravel()
            object.__setattr__(self, "_stencil", _five_point_stencil(self.grid))
        b.setflags(write=False)
        object.__setattr__(self, "boundary_rhs", b)


def _five_point_stencil(grid: Grid) -> sp.csr_matrix:
    """c-independent part of A(c) for dim 2, with ghost-eliminated edges."""
    nx, ny = grid.cells
    hx, hy = grid.spacing

    def second_difference(n: int, h: float) -> sp.csr_matrix:
        d = np.full(n, 2.0)
        d[0] = d[-1] = 3.0  # ghost elimination
        return sp.diags([d, -np.ones(n - 1), -np.ones(n - 1)], [0, -1, 1]) / h**2

    tx = second_difference(nx, hx)
    ty = second_difference(ny, hy)
    return (sp.kron(sp.identity(ny), tx) + sp.kron(ty, sp.identity(nx))).tocsr()


def interval_problem(
    grid: Grid, f: Callable | GridFunction, g0: float, g1: float
) -> EllipticProblem:
    """State equation -u'' + c u = f on (0,1) with u(0) = g0, u(1) = g1."""
    if grid.dim != 1:
        raise ValueError("interval_problem needs a 1-d grid")
    if not isinstance(f, GridFunction):
        f = GridFunction.from_callable(grid, f)
    return EllipticProblem(grid, f, (g0, g1))


def square_problem(
    grid: Grid, f: Callable | GridFunction, g: Callable
) -> EllipticProblem:
    """State equation -Laplace(u) + c u = f on (0,1)^2 with trace u = g."""
    if grid.dim != 2:
        raise ValueError("square_problem needs a 2-d grid")
    if not isinstance(f, GridFunction):
        f = GridFunction.from_callable(grid, f)
    x = grid.axis_coords(0)
    y = grid.axis_coords(1)
    boundary = (
        g(np.zeros_like(y), y),
        g(np.ones_like(y), y),
        g(x, np.zeros_like(x)),
        g(x, np.ones_like(x)),
    )
    return EllipticProblem(grid, f, boundary)


@dataclass(frozen=True)
class ForwardEvaluation:
    """State u = F(c) together with a reusable factorization of A(c)."""

    problem: EllipticProblem
    c: GridFunction
    u: GridFunction
    _solve: Callable[[np.ndarray], np.ndarray]

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Apply A(c)^{-1} to a raw vector (homogeneous boundary data)."""
        return self._solve(b)


def _factorize_tridiagonal(grid: Grid, c: np.ndarray):
    (h,) = grid.spacing
    n = grid.size
    off = np.full(n - 1, -1.0 / h**2)
    diag = 2.0 / h**2 + c
    diag[0] += 1.0 / h**2
    diag[-1] += 1.0 / h**2
    dl, d, du, du2, ipiv, info = lapack.dgttrf(off, diag, off)
    if info != 0:
        raise SingularOperatorError(
            f"operator not invertible at c (tridiagonal factorization info={info})"
        )

    def solve(b: np.ndarray) -> np.ndarray:
        x, info = lapack.dgttrs(dl, d, du, du2, ipiv, b)
        if info != 0:
            raise SingularOperatorError(f"tridiagonal solve failed (info={info})")
        return x

    return solve


def _factorize_sparse(problem: EllipticProblem, c: np.ndarray):
    a = (problem._stencil + sp.diags(c)).tocsc()
    try:
        lu = splu(a)
    except RuntimeError as exc:
        raise SingularOperatorError(
            f"operator not invertible at c (sparse factorization: {exc})"
        ) from exc
    return lu.solve


def solve_state(problem: EllipticProblem, c: GridFunction) -> ForwardEvaluation:
    """Factorize A(c) and solve for the state; factorization is kept for reuse.

    Raises :class:`SingularOperatorError` when A(c) is not invertible, which
    can happen for strongly negative c. No clipping or projection is applied.
    """
    if c.grid != problem.grid:
        raise GridMismatchError("coefficient sampled on a different grid")
    if problem.grid.dim == 1:
        solve = _factorize_tridiagonal(problem.grid, c.values.copy())
    else:
        solve = _factorize_sparse(problem, c.values)
    u = solve(problem.rhs.values + problem.boundary_rhs)
    if not np.all(np.isfinite(u)):
        raise SingularOperatorError("operator not invertible at c (non-finite state)")
    return ForwardEvaluation(problem, c, GridFunction(problem.grid, u), solve)


def forward(problem: EllipticProblem, c: GridFunction) -> GridFunction:
    """The coefficient-to-state map F(c)."""
    return solve_state(problem, c).u


def derivative_apply(ev: ForwardEvaluation, h: GridFunction) -> GridFunction:
    """Directional derivative F'(c) h = -A(c)^{-1}(h * u(c))."""
    if h.grid != ev.problem.grid:
        raise GridMismatchError("direction sampled on a different grid")
    return GridFunction(ev.problem.grid, -ev.solve(h.values * ev.u.values))


def adjoint_apply(ev: ForwardEvaluation, w: GridFunction) -> GridFunction:
    """Adjoint F'(c)* w = -u(c) * A(c)^{-1} w under the uniform-weight pairing."""
    if w.grid != ev.problem.grid:
        raise GridMismatchError("argument sampled on a different grid")
    return GridFunction(ev.problem.grid, -ev.u.values * ev.solve(w.values))
