import warnings

import numpy as np
import pytest
import sympy

from poemkit.errors import NonIntegerSteps, UnstableParameters
from poemkit.grid import build_ladder
from poemkit.schemes import (ProblemSpec, beam_warming_matrix, central4_second_derivative,
                             exact_field, exact_solution, solve, solve_grid, source_term,
                             upwind2_matrix)


def test_source_matches_symbolic_residual():
    x, t, a, nu = sympy.symbols("x t a nu", real=True)
    phi = 2 + sympy.cos(2 * sympy.pi * (x - a * t))
    residual = sympy.diff(phi, t) + a * sympy.diff(phi, x) - nu * sympy.diff(phi, x, 2)
    f = sympy.lambdify((x, t, a, nu), residual, "numpy")
    prob = ProblemSpec("advdiff1d", a=0.4, nu=0.01, t_end=1)
    xs = np.linspace(0, 1, 17)
    for tt in (0.0, 0.3, 1.7):
        assert np.allclose(source_term(prob, xs, tt), f(xs, tt, 0.4, 0.01), atol=1e-14)


def test_source_vanishes_without_diffusion_and_at_quarter_phase():
    assert not np.any(source_term(ProblemSpec("advdiff1d", nu=0.0), np.linspace(0, 1, 5), 0.2))
    prob = ProblemSpec("advdiff1d", a=0.5, nu=0.01)
    assert abs(source_term(prob, 0.25 + 0.5 * 0.6, 0.6)) < 1e-15


def _rate(op_builder, f, df, ns=(32, 64)):
    errs = []
    for n in ns:
        x = np.arange(n) / n
        errs.append(np.max(np.abs(op_builder(n, 1 / n) @ f(x) - df(x))))
    return np.log2(errs[0] / errs[1])


def test_upwind2_is_second_order():
    w = 2 * np.pi
    rate = _rate(upwind2_matrix, lambda x: np.sin(w * x), lambda x: w * np.cos(w * x))
    assert abs(rate - 2) < 0.05


def test_central4_is_fourth_order():
    w = 2 * np.pi
    rate = _rate(central4_second_derivative, lambda x: np.sin(w * x),
                 lambda x: -w * w * np.sin(w * x))
    assert abs(rate - 4) < 0.05


@pytest.mark.parametrize("c,shift", [(1.0, 1), (2.0, 2)])
def test_beam_warming_is_exact_shift_at_integer_cfl(c, shift):
    u = np.random.default_rng(1).standard_normal(11)
    assert np.allclose(beam_warming_matrix(11, c) @ u, np.roll(u, shift), atol=1e-15)


def test_beam_warming_preserves_constants():
    assert np.allclose(beam_warming_matrix(9, 0.37) @ np.ones(9), 1.0)


@pytest.mark.parametrize("kind,scheme", [("advect1d", "BW"), ("advect1d", "RK2U2"),
                                         ("advdiff1d", "RK2U2"), ("advect2d", "RK2U2")])
def test_constant_initial_stays_constant(kind, scheme):
    prob = ProblemSpec(kind, a=0.4, a_y=0.25, nu=0.01, t_end=1, constant_initial=3.0)
    f = solve_grid(scheme, prob, 16, 64)
    assert np.allclose(f.values, 3.0, atol=1e-13)


def test_two_d_diagonal_matches_one_d():
    p1 = ProblemSpec("advect1d", a=0.5, t_end=2)
    p2 = ProblemSpec("advect2d", a=0.25, a_y=0.25, t_end=2)
    n = 16
    u1 = solve_grid("RK2U2", p1, n, 32).values
    u2 = solve_grid("RK2U2", p2, n, 32).values
    i, j = np.indices((n, n))
    assert np.allclose(u2, u1[(i + j) % n], atol=1e-13)


def test_solution_converges_to_exact():
    prob = ProblemSpec("advect1d", a=0.5, t_end=2)
    errs = [np.max(np.abs(solve_grid("RK2U2", prob, n, 2 * n).values - exact_field(prob, n)))
            for n in (64, 128)]
    assert abs(np.log2(errs[0] / errs[1]) - 2) < 0.1


def test_solve_is_deterministic():
    prob = ProblemSpec("advdiff1d", a=0.4, nu=0.01, t_end=2.5)
    a = solve_grid("RK2U2", prob, 16, 40).values
    b = solve_grid("RK2U2", prob, 16, 40).values
    assert np.array_equal(a, b)


def test_exact_solution_2d():
    prob = ProblemSpec("advect2d", a=0.25, a_y=0.25)
    x, y = np.meshgrid([0.0, 0.5], [0.0, 0.25], indexing="ij")
    assert np.allclose(exact_solution(prob, (x, y), 1.0), 2 + np.cos(2 * np.pi * (x + y - 0.5)))


def test_stability_gates():
    adv = ProblemSpec("advect1d", a=0.5, t_end=1)
    with pytest.raises(UnstableParameters):
        solve_grid("BW", adv, 10, 2)  # c = 2.5
    with pytest.raises(UnstableParameters):
        solve_grid("RK2U2", adv, 10, 4)  # c = 1.25
    with pytest.warns(UserWarning):
        solve_grid("RK2U2", adv, 10, 8, max_cfl=0.7)
    diff = ProblemSpec("advdiff1d", a=0.1, nu=0.05, t_end=1)
    with pytest.raises(UnstableParameters, match="diffusion number"):
        solve_grid("RK2U2", diff, 32, 20)


def test_solver_argument_errors():
    adv = ProblemSpec("advect1d", t_end=1)
    with pytest.raises(ValueError):
        solve_grid("RK4", adv, 8, 8)
    with pytest.raises(ValueError):
        solve_grid("BW", ProblemSpec("advect2d", a_y=0.2), 8, 32)
    with pytest.raises(NonIntegerSteps):
        solve_grid("RK2U2", adv, 8, 7.5)


@pytest.mark.parametrize("kwargs", [dict(kind="burgers"), dict(kind="advect1d", a=-1.0),
                                    dict(kind="advect2d", a_y=0.0),
                                    dict(kind="advdiff1d", nu=-0.1)])
def test_problem_validation(kwargs):
    with pytest.raises(ValueError):
        ProblemSpec(**kwargs)


def test_solve_checks_ladder_consistency():
    lad = build_ladder(8, "1/2", 3, 1, t_end=2)
    with pytest.raises(ValueError):
        solve("RK2U2", ProblemSpec("advect1d", t_end=1), lad, 1)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        f = solve("RK2U2", ProblemSpec("advect1d", t_end=2), lad, 2)
    assert (f.segments, f.steps, f.level) == (16, 32, 2)
