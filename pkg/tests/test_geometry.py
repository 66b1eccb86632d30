"""Norms, duality maps, Bregman distances and the step-size majorant."""

import numpy as np
import pytest

from newton_landweber import (
    Grid,
    GridFunction,
    SpaceParams,
    bregman,
    conjugate_exponent,
    duality_map,
    inverse_duality_map,
    lp_norm,
    pairing,
    phi,
    shifted_bregman,
)

EXPONENTS = (1.1, 1.5, 2.0, 3.0)


def random_function(grid, rng):
    return GridFunction(grid, rng.standard_normal(grid.size))


def test_conjugate_exponent():
    assert conjugate_exponent(2.0) == pytest.approx(2.0)
    assert conjugate_exponent(1.1) == pytest.approx(11.0)
    assert conjugate_exponent(1.5) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        conjugate_exponent(1.0)


def test_space_params_defaults_and_validation():
    sp = SpaceParams(1.1, 2.0)
    assert sp.s == 2.0
    assert sp.p_star == pytest.approx(11.0)
    assert sp.s_star == pytest.approx(2.0)
    assert SpaceParams(3.0, 4.0).s == 3.0
    with pytest.raises(ValueError):
        SpaceParams(1.0, 2.0)
    with pytest.raises(ValueError):
        SpaceParams(2.0, 0.9)
    with pytest.warns(UserWarning):
        SpaceParams(2.0, 1.1)
    with pytest.raises(ValueError):
        SpaceParams(2.0, 1.1, strict=True)


def test_lp_norm_quadrature_linear_function():
    # integral of t^2 on (0,1) is 1/3; midpoint rule at 401 cells is well
    # inside 1e-4 of the exact square root
    grid = Grid((401,))
    f = GridFunction.from_callable(grid, lambda t: t)
    assert lp_norm(f, 2.0) == pytest.approx(np.sqrt(1.0 / 3.0), abs=1e-4)


def test_lp_norm_constant_any_exponent():
    grid = Grid((17,))
    f = GridFunction.constant(grid, -2.0)
    for q in EXPONENTS:
        assert lp_norm(f, q) == pytest.approx(2.0, rel=1e-13)


def test_pairing_weights():
    grid = Grid((10,))
    a = GridFunction.constant(grid, 3.0)
    b = GridFunction.constant(grid, 4.0)
    assert pairing(a, b) == pytest.approx(12.0, rel=1e-14)


def test_duality_map_identity_at_p2():
    grid = Grid((6,))
    f = GridFunction(grid, [1.0, -2.0, 0.0, 3.0, -4.0, 5.0])
    assert duality_map(f, 2.0) is f


def test_duality_map_handles_zero_nodes():
    grid = Grid((4,))
    f = GridFunction(grid, [0.0, 1.0, -8.0, 0.5])
    j = duality_map(f, 1.5)
    np.testing.assert_allclose(j.values, [0.0, 1.0, -np.sqrt(8.0), np.sqrt(0.5)])


def test_duality_round_trip_and_pairing_identity():
    rng = np.random.Generator(np.random.PCG64(7))
    grid = Grid((40,))
    for q in EXPONENTS:
        for _ in range(100):
            f = random_function(grid, rng)
            jf = duality_map(f, q)
            back = inverse_duality_map(jf, q)
            np.testing.assert_allclose(back.values, f.values, rtol=0, atol=1e-10)
            nq = lp_norm(f, q)
            assert pairing(jf, f) == pytest.approx(nq**q, rel=1e-10)
            assert lp_norm(jf, conjugate_exponent(q)) == pytest.approx(
                nq ** (q - 1.0), rel=1e-10
            )


def test_bregman_constant_oracle():
    # constants on the unit interval: weights sum to one, so the distance is
    # the scalar gap |a|^p/p - |b|^p/p - |b|^(p-1) sgn(b) (a - b)
    grid = Grid((9,))
    a = GridFunction.constant(grid, 1.0)
    b = GridFunction.constant(grid, 4.0)
    expected = (1.0 - 8.0) / 1.5 - 2.0 * (1.0 - 4.0)
    assert bregman(a, b, 1.5) == pytest.approx(expected, rel=1e-12)
    assert bregman(a, a, 1.5) == pytest.approx(0.0, abs=1e-15)


def test_bregman_hilbert_case_is_half_square_distance():
    rng = np.random.Generator(np.random.PCG64(8))
    grid = Grid((30,))
    for _ in range(20):
        a = random_function(grid, rng)
        b = random_function(grid, rng)
        assert bregman(a, b, 2.0) == pytest.approx(
            0.5 * lp_norm(a - b, 2.0) ** 2, rel=1e-10
        )


def test_bregman_nonnegative():
    rng = np.random.Generator(np.random.PCG64(9))
    grid = Grid((25,))
    for p in EXPONENTS:
        for _ in range(50):
            a = random_function(grid, rng)
            b = random_function(grid, rng)
            assert bregman(a, b, p) >= -1e-12


def test_three_point_identity():
    rng = np.random.Generator(np.random.PCG64(10))
    grid = Grid((32,))
    for p in EXPONENTS:
        for _ in range(100):
            a = random_function(grid, rng)
            b = random_function(grid, rng)
            c = random_function(grid, rng)
            lhs = bregman(a, c, p)
            rhs = (
                bregman(a, b, p)
                + bregman(b, c, p)
                + pairing(duality_map(b, p) - duality_map(c, p), a - b)
            )
            scale = max(abs(lhs), abs(rhs), 1.0)
            assert abs(lhs - rhs) / scale < 1e-10


def test_primal_dual_connection():
    rng = np.random.Generator(np.random.PCG64(11))
    grid = Grid((32,))
    for p in EXPONENTS:
        p_star = conjugate_exponent(p)
        for _ in range(100):
            a = random_function(grid, rng)
            b = random_function(grid, rng)
            jb = duality_map(b, p)
            direct = bregman(a, b, p)
            dual_form = (
                lp_norm(a, p) ** p / p
                + lp_norm(jb, p_star) ** p_star / p_star
                - pairing(jb, a)
            )
            scale = max(abs(direct), 1.0)
            assert abs(direct - dual_form) / scale < 1e-10


def test_shifted_bregman_reduces_to_plain_at_zero_shift():
    rng = np.random.Generator(np.random.PCG64(12))
    grid = Grid((16,))
    zero = GridFunction.zeros(grid)
    a = random_function(grid, rng)
    b = random_function(grid, rng)
    assert shifted_bregman(a, b, zero, 1.5) == pytest.approx(bregman(a, b, 1.5))
    shift = random_function(grid, rng)
    assert shifted_bregman(a, b, shift, 1.5) == pytest.approx(
        bregman(a - shift, b - shift, 1.5)
    )


def test_phi_shape_and_values():
    # p = s = 2: phi(lam) = 2 C lam^2 / ... both exponents collapse to 2,
    # and (p rho^2)^(1 - s*/p*) = 1, so phi(lam) = 4 C lam^2 at C = 1
    assert phi(1.0, 1.0, 0.5, 2.0, 2.0, 2.0) == pytest.approx(4.0)
    assert phi(0.5, 1.0, 0.5, 2.0, 2.0, 2.0) == pytest.approx(1.0)
    assert phi(0.0, 1.0, 0.5, 2.0, 2.0, 2.0) == 0.0
    lams = np.linspace(0.0, 2.0, 41)
    vals = phi(lams, 0.25, 0.5, 1.1, 11.0, 2.0)
    assert np.all(np.diff(vals) >= 0.0)
    with pytest.raises(ValueError):
        phi(-1.0, 1.0, 0.5, 2.0, 2.0, 2.0)
