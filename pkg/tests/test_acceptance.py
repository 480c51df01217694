"""End-to-end checks on the bundled studies; each test prints one result line."""
import time
from fractions import Fraction as F
from functools import reduce
from math import gcd

import numpy as np

from conftest import preset_results
from poemkit.estimator import fit_expansion
from poemkit.grid import irreducible_unit, shared_fraction
from poemkit.midas import fit_from_differences, interp_weights, stencil_for
from poemkit.study import cost_model, load_config

RATIOS = (0.5, 2 / 3, 0.75, 0.8, 0.9)


def _single(name):
    (res,) = preset_results(name).values()
    return res


def _say(n, text):
    print(f"\ncriterion {n:2d}: {text}")


def test_criterion_01():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst_fit = worst_diff = 0.0
    for _ in range(1000):
        r = RATIOS[rng.integers(len(RATIOS))]
        p1 = rng.integers(1, 5) * 0.5
        p2 = p1 + rng.integers(1, 5) * 0.5
        n = 16
        pe = rng.uniform(-3, 3, n)
        terms = rng.uniform(-1, 1, (2, n)) * 10.0 ** rng.uniform(-6, 0, (2, 1))
        phi = np.array([pe + sum(t * r ** (l * p) for t, p in zip(terms, (p1, p2)))
                        for l in range(3)])
        scale = np.max(np.abs(phi))
        fit = fit_expansion(phi, (p1, p2), r)
        err = max(np.max(np.abs(fit.phi_e_hat - pe)), np.max(np.abs(fit.terms - terms)))
        worst_fit = max(worst_fit, err / scale)
        diff = fit_from_differences([phi[1] - phi[0], phi[2] - phi[1]], (p1, p2), r, phi[0], 1)
        dev = max(np.max(np.abs(diff.phi_e_hat - fit.phi_e_hat)),
                  np.max(np.abs(diff.terms - fit.terms)))
        worst_diff = max(worst_diff, dev / scale)
    elapsed = time.perf_counter() - start
    _say(1, f"max recovery error {worst_fit:.2e}, difference-form gap {worst_diff:.2e}, "
            f"{elapsed:.2f} s")
    assert worst_fit <= 1e-12 and worst_diff <= 1e-12
    assert elapsed < 1.0


def test_criterion_02():
    res = _single("bw-time")
    assert res.config.ladders()[0].dx(1) == F(1, 100) and res.config.levels >= 6
    slopes = res.report.term_slopes()[-1]
    _say(2, f"finest term slopes {slopes[0]:.4f}, {slopes[1]:.4f} (target 1, 2)")
    assert abs(slopes[0] - 1) <= 0.05 and abs(slopes[1] - 2) <= 0.05


def test_criterion_03():
    res = _single("bw-time-wrong")
    slopes = res.report.term_slopes()[-1]
    it = res.iteration
    _say(3, f"term slopes with (2, 3): {slopes[0]:.4f}, {slopes[1]:.4f}; "
            f"iteration ends at {it.final} ({it.status})")
    assert np.all(np.abs(slopes - 1) <= 0.1)
    assert it.converged and it.final == (1.0, 2.0)


def test_criterion_04():
    res = _single("rk2u2-time-wrong")
    slopes = res.report.term_slopes()[-1]
    _say(4, f"term slopes with (1, 2): {slopes[0]:.4f}, {slopes[1]:.4f} (target 3, 2)")
    assert abs(slopes[0] - 3) <= 0.1 and abs(slopes[1] - 2) <= 0.1


def test_criterion_05():
    rep = _single("rk2u2-cfl").report
    # (a) actual level errors, slope tabulated at the coarser level of each pair
    lh_lev = np.array([e.log_h for e in rep.level_errors])[:-1]
    lev = np.array([rep.level_error_slopes(n) for n in ("l1", "l2", "linf")])[:, lh_lev < -1.5]
    # (b) asymptotic flag
    lh = rep.log_h()
    flags = np.array([w.asymptotic for w in rep.windows])
    # (c) extrapolated-solution error slopes
    es = rep.slopes_of("es_ex")[lh[:-1] < -1.5]
    # (d) estimated vs actual error on the shared points
    rel = np.array([abs(w.eps_tilde_common.l2 / w.eps_common.l2 - 1)
                    for w in rep.windows if w.asymptotic])
    _say(5, f"(a) level slopes {lev.min():.4f}..{lev.max():.4f}; "
            f"(b) asymptotic from log h {lh[flags].max():.3f}; "
            f"(c) es_ex slopes {es.min():.3f}..{es.max():.3f}; "
            f"(d) max rel diff {rel.max():.1e}")
    assert lev.size and np.all(np.abs(lev / 2 - 1) <= 0.01)
    assert np.array_equal(flags, lh < -2.7)
    assert es.size and np.all(np.abs(es - 4) <= 0.1)
    assert rel.size and np.all(rel <= 0.05)


def test_criterion_06():
    rep = _single("rk2u2-diffusion").report
    es = rep.slopes_of("es_ex")[-2:]
    _say(6, f"finest es_ex slopes {', '.join(f'{s:.4f}' for s in es)} (target 4)")
    assert np.all(np.abs(es - 4) <= 0.1)


def test_criterion_07():
    rep = _single("advect2d-cfl").report
    es = rep.slopes_of("es_ex")[-1]
    _say(7, f"finest es_ex slope {es:.4f} (target 4)")
    assert abs(es - 4) <= 0.1


def test_criterion_08():
    results = preset_results("midas-1d-consistency")
    ref = results["r1-2"].report
    rh = ref.log_h()[::-1]
    rt = np.log10(ref.term_norm_matrix())[::-1]

    def reference(log_h):
        return 10 ** np.array([np.interp(log_h, rh, rt[:, m]) for m in range(rt.shape[1])])

    worst_shared = worst_ref = coarse = 0.0
    for label in ("r2-3", "r3-4", "r4-5"):
        windows = results[label].report.windows
        for i, w in enumerate(windows):
            obj = np.array(w.term_norms_objective)
            d_ref = np.max(np.abs(obj / reference(w.log_h) - 1))
            if i < len(windows) - 2:
                coarse = max(coarse, d_ref)
                continue
            assert rh[0] <= w.log_h <= rh[-1]
            worst_shared = max(worst_shared, np.max(np.abs(obj / np.array(w.term_norms_shared)
                                                           - 1)))
            worst_ref = max(worst_ref, d_ref)
    _say(8, f"two finest windows: objective vs shared {worst_shared:.2%}, vs r = 1/2 "
            f"reference {worst_ref:.2%} (coarser windows up to {coarse:.1%}, not asserted)")
    assert worst_shared < 0.02 and worst_ref < 0.05


def test_criterion_09():
    for counts in ([12, 18, 27], [36, 48, 64], [100, 200, 400], [20, 25]):
        unit = irreducible_unit(counts)
        g = reduce(gcd, counts)
        assert unit.repeats == g
        assert tuple(c // g for c in counts) == unit.s_per_level
        assert reduce(gcd, unit.s_per_level) == 1
    u = irreducible_unit([4, 6, 9])
    fractions = (shared_fraction(u), shared_fraction(u, include_midas=True),
                 shared_fraction(irreducible_unit([1, 2, 4])))
    weights = interp_weights(F(1, 3), (F(0), F(1, 2))).weights
    assert stencil_for(u, F(1, 3), (1, 2)).weights == weights
    _say(9, f"shared fractions {', '.join(map(str, fractions))}; "
            f"weights {', '.join(map(str, weights))}")
    assert fractions == (F(1, 9), F(4, 9), F(1, 4))
    assert weights == (F(1, 3), F(2, 3))


def test_criterion_10():
    (a,), (b,) = load_config("cost-2d-r1-2"), load_config("cost-2d-r3-4")
    rep = cost_model(a, b)
    text = rep.text()
    _say(10, f"work units {rep.work_a} vs {rep.work_b}, ratio {rep.ratio:.4f}, "
             "reference wall-time figure 4.55x")
    assert rep.work_b < rep.work_a
    assert str(rep.work_a) in text and str(rep.work_b) in text
    assert f"{rep.ratio:.4f}" in text and "4.55" in text
