from fractions import Fraction as F

import numpy as np
import pytest

from poemkit.errors import InsufficientNeighbors, MismatchedLadder, NonBracketing
from poemkit.estimator import fit_expansion
from poemkit.grid import build_ladder, irreducible_unit
from poemkit.midas import (DiffField, difference_system, differences, fit_from_differences,
                           interp_weights, interpolate_differences, midas_window, run_midas,
                           stencil_for)


def test_weights_for_one_third():
    st = interp_weights(F(1, 3), (F(0), F(1, 2)))
    assert st.weights == (F(1, 3), F(2, 3))
    st = stencil_for(irreducible_unit([4, 6, 9]), F(1, 3), (1, 2))
    assert st.neighbors == (F(0), F(1, 2))
    assert st.weights == (F(1, 3), F(2, 3))


def test_weights_point_already_on_lattice():
    st = stencil_for(irreducible_unit([4, 6, 9]), F(1, 2), (1, 2))
    assert st.neighbors == (F(1, 2),) and st.weights == (F(1),)


def test_bilinear_and_edge_weights():
    st = interp_weights((F(1, 3), F(2, 3)), [(F(0), F(1, 2)), (F(0), F(1)),
                                             (F(1, 2), F(1, 2)), (F(1, 2), F(1))])
    assert sum(st.weights) == 1
    w = dict(zip(st.neighbors, st.weights))
    assert w[(F(0), F(1, 2))] == F(1, 3) * F(2, 3)
    assert w[(F(1, 2), F(1))] == F(2, 3) * F(1, 3)
    edge = interp_weights((F(0), F(1, 3)), [(F(0), F(0)), (F(0), F(1, 2))])
    assert edge.weights == (F(1, 3), F(2, 3))


def test_bilinear_reproduces_bilinear_function():
    f = lambda x, y: 1 + 2 * x - 3 * y + 5 * x * y  # noqa: E731
    unit = irreducible_unit([4, 6, 9], dims=2)
    st = stencil_for(unit, (F(1, 3), F(2, 3)), (1, 2))
    assert st.apply(lambda c: float(f(*c))) == pytest.approx(float(f(F(1, 3), F(2, 3))))


def test_non_bracketing_neighbours():
    with pytest.raises(NonBracketing):
        interp_weights(F(3, 4), (F(0), F(1, 2)))
    with pytest.raises(NonBracketing):
        interp_weights(F(1, 3), (F(0),))
    with pytest.raises(NonBracketing):
        interp_weights((F(1, 3), F(1, 3)), [(F(0), F(0)), (F(1), F(1)), (F(0), F(1))])


def test_difference_system_matches_two_by_two_form():
    r, p1, p2 = 2 / 3, 2, 3
    M = difference_system((p1, p2), r)
    assert np.allclose(M, [[r ** p1 - 1, r ** p2 - 1],
                           [(r ** p1 - 1) * r ** p1, (r ** p2 - 1) * r ** p2]])


def _piecewise_linear(x, repeats, nodes):
    """Periodic function, linear inside each unit, with the given margin values."""
    xp = np.arange(repeats + 1) / repeats
    fp = np.append(nodes, nodes[0])
    return np.interp(x, xp, fp)


def _synthetic_fields(s, repeats, orders, r, dims=1, seed=0):
    """Fields phi_e + T1 r^((l-1)p1) + T2 r^((l-1)p2) with terms linear per unit."""
    rng = np.random.default_rng(seed)
    nodes = rng.standard_normal((2, dims, repeats)) * 1e-2

    def terms_at(n):
        x = np.arange(n) / n
        out = []
        for m in range(2):
            t = _piecewise_linear(x, repeats, nodes[m, 0])
            if dims == 2:
                t = np.outer(t, _piecewise_linear(x, repeats, nodes[m, 1]))
            out.append(t)
        return out

    def phi_e(n):
        x = np.arange(n) / n
        v = 2 + np.cos(2 * np.pi * x)
        return v if dims == 1 else np.add.outer(v, np.sin(2 * np.pi * x))

    fields, exact, terms = [], [], []
    for l, sl in enumerate(s):
        n = sl * repeats
        t = terms_at(n)
        fields.append(phi_e(n) + sum(tm * r ** (l * p) for tm, p in zip(t, orders)))
        exact.append(phi_e(n))
        terms.append(t)
    return fields, exact, terms


@pytest.mark.parametrize("s,r", [((4, 6, 9), F(2, 3)), ((9, 12, 16), F(3, 4)),
                                 ((1, 2, 4), F(1, 2))])
def test_midas_exact_for_linear_terms_1d(s, r):
    orders = (2.0, 3.0)
    fields, exact, _ = _synthetic_fields(s, 5, orders, float(r))
    wf = midas_window(fields, orders, r, h=1 / (5 * s[0]), exact_fields=exact)
    assert wf.objective.sum() == 5 * (len(irreducible_unit(s).objective))
    assert np.allclose(wf.fit.phi_e_hat, wf.phi_exact, atol=1e-13)
    # all-shared points carry the true coarsest-level error
    assert np.allclose(wf.eps_tilde[~wf.objective], wf.eps_shared, atol=1e-13)


@pytest.mark.parametrize("policy", ["two-level", "finest-pair"])
def test_midas_exact_for_bilinear_terms_2d(policy):
    s, r, orders = (4, 6, 9), F(2, 3), (2.0, 3.0)
    fields, exact, terms = _synthetic_fields(s, 3, orders, float(r), dims=2, seed=4)
    wf = midas_window(fields, orders, r, h=1 / 12, dims=2, policy=policy, exact_fields=exact)
    assert wf.objective.any()
    assert np.allclose(wf.fit.phi_e_hat, wf.phi_exact, atol=1e-13)


def test_midas_terms_match_truth_at_objective_points():
    s, r, orders, R = (4, 6, 9), F(2, 3), (2.0, 3.0), 2
    fields, exact, terms = _synthetic_fields(s, R, orders, float(r), seed=2)
    wf = midas_window(fields, orders, r, h=1 / 8, exact_fields=exact)
    # support order: x = 0 (all-shared), then objective 1/3, 1/2, 2/3; each over the units
    coords = [0, 1 / 3, 1 / 2, 2 / 3]
    X = np.array([(m + c) / R for c in coords for m in range(R)])
    n = s[0] * R
    for m in range(2):
        # terms are linear inside each unit, so interpolating the coarsest grid is exact
        xp = np.append(np.arange(n) / n, 1.0)
        truth = np.interp(X, xp, np.append(terms[0][m], terms[0][m][0]))
        assert np.allclose(wf.fit.terms[m], truth, atol=1e-14)


def test_fit_from_differences_agrees_with_fit_expansion():
    rng = np.random.default_rng(11)
    orders, r = (2.0, 3.0), 0.75
    phi = 1 + rng.standard_normal((3, 50)) * 1e-2
    full = fit_expansion(phi, orders, r)
    diff = fit_from_differences([phi[1] - phi[0], phi[2] - phi[1]], orders, r, phi[0], 1)
    assert np.allclose(diff.terms, full.terms, atol=1e-13)
    assert np.allclose(diff.phi_e_hat, full.phi_e_hat, atol=1e-13)
    # subtracting from a finer level gives the same estimate
    diff3 = fit_from_differences([phi[1] - phi[0], phi[2] - phi[1]], orders, r, phi[2], 3)
    assert np.allclose(diff3.phi_e_hat, full.phi_e_hat, atol=1e-13)


def test_differences_and_interpolation_provenance():
    unit = irreducible_unit([4, 6, 9])
    x4, x6 = np.arange(4) / 4, np.arange(6) / 6
    df = differences(x6 ** 0 * 2 + x6, 1 + x4, unit, (2, 1))
    assert set(df.values) == {F(0), F(1, 2), F(1)}
    assert all(v == "direct" for v in df.provenance.values())
    ext = interpolate_differences({(2, 1): df}, unit, [F(1, 3), F(1, 2)])[(2, 1)]
    assert ext.provenance[F(1, 3)] == "interpolated"
    assert ext.provenance[F(1, 2)] == "direct"
    assert np.allclose(ext[F(1, 3)], 1.0)
    with pytest.raises(ValueError):
        differences(x4, x6, unit, (1, 2))
    with pytest.raises(MismatchedLadder):
        differences(np.zeros(5), x4, unit, (2, 1))


def test_missing_neighbour_is_reported():
    unit = irreducible_unit([4, 6, 9])
    df = DiffField((2, 1), {F(0): np.zeros(1)})
    with pytest.raises(InsufficientNeighbors):
        interpolate_differences({(2, 1): df}, unit, [F(1, 3)])


def test_run_midas_windows_and_errors():
    lad = build_ladder(4, "2/3", 3, 1, t_end=2)
    fields, exact, _ = _synthetic_fields((4, 6, 9), 1, (2.0, 3.0), 2 / 3)
    fits = run_midas(lad, fields, (2, 3), exact_fields=exact)
    assert len(fits) == 1 and fits[0].levels == (1, 2, 3)
    assert fits[0].h == pytest.approx(0.25)
    with pytest.raises(MismatchedLadder):
        run_midas(lad, fields[:2], (2, 3))
    with pytest.raises(MismatchedLadder):
        midas_window(fields[:2], (2, 3), F(2, 3), 0.25)
