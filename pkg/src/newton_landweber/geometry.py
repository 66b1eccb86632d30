"""Banach-space geometry on grid functions: norms, duality maps, Bregman distances.

All quantities are discrete L^q objects with one shared quadrature: the
weighted pairing sum(w * a * b) with the grid's cell weights. Norms, duality
maps and Bregman distances below are exactly compatible with that pairing, so
identities like <J_q(f), f> = ||f||_q^q hold to rounding, not just to
discretization error.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .grids import GridFunction

__all__ = [
    "SpaceParams",
    "lp_norm",
    "pairing",
    "duality_map",
    "inverse_duality_map",
    "bregman",
    "shifted_bregman",
    "phi",
    "conjugate_exponent",
]


def conjugate_exponent(q: float) -> float:
    """Hoelder conjugate q* = q / (q - 1) for q > 1."""
    if q <= 1.0:
        raise ValueError(f"conjugate exponent needs q > 1, got {q}")
    return q / (q - 1.0)


@dataclass(frozen=True)
class SpaceParams:
    """Exponents of the solution space L^p, data space L^r, and smoothness s.

    ``s`` is the convexity power of the solution space; L^p with p in (1, 2]
    is 2-uniformly convex and p-uniformly convex for p >= 2, so the default is
    max(p, 2). With ``strict`` set, r >= s >= p is enforced (the regime in
    which the step-size analysis is proved); otherwise a violation only warns.
    """

    p: float
    r: float
    s: float | None = None
    strict: bool = False

    def __post_init__(self) -> None:
        if self.p <= 1.0:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if self.r <= 1.0:
            raise ValueError(f"r must exceed 1, got {self.r}")
        if self.s is None:
            object.__setattr__(self, "s", max(self.p, 2.0))
        if self.s < self.p:
            raise ValueError(f"s >= p required, got s={self.s} p={self.p}")
        if not (self.r >= self.s >= self.p):
            msg = (
                f"exponents outside the analyzed regime r >= s >= p: "
                f"p={self.p} s={self.s} r={self.r}"
            )
            if self.strict:
                raise ValueError(msg)
            warnings.warn(msg, stacklevel=2)

    @property
    def p_star(self) -> float:
        return conjugate_exponent(self.p)

    @property
    def s_star(self) -> float:
        return conjugate_exponent(self.s)

    @property
    def r_star(self) -> float:
        return conjugate_exponent(self.r)


def lp_norm(f: GridFunction, q: float) -> float:
    """Weighted discrete L^q norm, (sum_i w_i |f_i|^q)^(1/q)."""
    if q < 1.0:
        raise ValueError(f"norm exponent must be >= 1, got {q}")
    w = f.grid.cell_volume
    total = w * np.sum(np.abs(f.values) ** q)
    return float(total ** (1.0 / q))


def pairing(a: GridFunction, b: GridFunction) -> float:
    """Weighted dual pairing sum_i w_i a_i b_i (same weights as the norms)."""
    if a.grid != b.grid:
        raise ValueError(f"grids differ: {a.grid.cells} vs {b.grid.cells}")
    return float(a.grid.cell_volume * np.dot(a.values, b.values))


def duality_map(f: GridFunction, q: float) -> GridFunction:
    """Pointwise duality map J_q(f) = |f|^(q-1) sgn(f) of the q-norm's gauge.

    For q = 2 this is the identity (returned as-is, no pow round-off). Zero
    maps to zero for every q > 1.
    """
    if q <= 1.0:
        raise ValueError(f"duality map needs q > 1, got {q}")
    if q == 2.0:
        return f
    v = f.values
    return f.with_values(np.sign(v) * np.abs(v) ** (q - 1.0))


def inverse_duality_map(g: GridFunction, q: float) -> GridFunction:
    """Inverse of J_q, which is the duality map with the conjugate exponent."""
    return duality_map(g, conjugate_exponent(q))


def bregman(x_new: GridFunction, x: GridFunction, p: float) -> float:
    """Bregman distance of (1/p)||.||_p^p from x to x_new.

    Accumulated pointwise: each node contributes the Bregman gap of the scalar
    convex map t -> |t|^p / p, which is nonnegative in exact arithmetic, so
    the weighted sum cannot go below a few ulps times its magnitude.
    """
    if p <= 1.0:
        raise ValueError(f"bregman needs p > 1, got {p}")
    if x_new.grid != x.grid:
        raise ValueError("grids differ")
    a = x_new.values
    b = x.values
    gaps = (np.abs(a) ** p - np.abs(b) ** p) / p - np.sign(b) * np.abs(b) ** (
        p - 1.0
    ) * (a - b)
    return float(x.grid.cell_volume * np.sum(gaps))


def shifted_bregman(
    x_new: GridFunction, x: GridFunction, x0: GridFunction, p: float
) -> float:
    """Bregman distance between the shifts x_new - x0 and x - x0."""
    return bregman(x_new - x0, x - x0, p)


def phi(
    lam,
    c_const: float,
    rho: float,
    p: float,
    p_star: float,
    s_star: float,
):
    """Step-size majorant 2^(s*-1) C (p rho^2)^(1-s*/p*) lam^s* + 2^(p*-1) C lam^p*.

    Convex and increasing on lam >= 0; accepts a scalar or an array.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("phi is defined for nonnegative arguments")
    out = (
        2.0 ** (s_star - 1.0)
        * c_const
        * (p * rho**2) ** (1.0 - s_star / p_star)
        * lam**s_star
        + 2.0 ** (p_star - 1.0) * c_const * lam**p_star
    )
    return float(out) if out.ndim == 0 else out
