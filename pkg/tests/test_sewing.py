"""Sewing engine: Riemann sums, allocation identity, Doob-Meyer split,
rate envelopes, convergence studies, uniqueness probe, built-in germs."""

import types

import numpy as np
import pytest
from numpy.testing import assert_allclose

import sewkit.controls as ctrl
import sewkit.sewing as sw


# -- germs and Riemann sums ------------------------------------------------------


def test_increment_germ_is_exactly_additive():
    germ = sw.increment_germ()
    path = types.SimpleNamespace(b=lambda t: np.sin(3.0 * t))
    assert sw.delta(germ, path, 0.1, 0.4, 0.9) == 0.0
    pts = np.linspace(0.0, 1.0, 11)
    assert_allclose(sw.riemann_sum(germ, path, pts),
                    path.b(1.0) - path.b(0.0), rtol=1e-14)


def test_riemann_sum_single_point_is_zero():
    germ = sw.increment_germ()
    path = types.SimpleNamespace(b=lambda t: t**2)
    assert sw.riemann_sum(germ, path, [0.5]) == 0.0


def test_young_germ_defect_scaling():
    f = np.cos
    g = np.sin
    germ = sw.young_germ(f, g)
    d1 = abs(sw.delta(germ, None, 1.0, 1.05, 1.1))
    d2 = abs(sw.delta(germ, None, 1.0, 1.025, 1.05))
    # defect ~ |f'||g'| h^2: quarters when the interval halves
    assert 0.2 < d2 / d1 < 0.3


# -- sew: dyadic limit with Cauchy trace ------------------------------------------


def test_sew_zero_germ_is_exact():
    res = sw.sew(sw.zero_germ(), None, ctrl.LinearControl(), 0.0, 1.0, levels=range(5))
    assert res.value == 0.0
    assert res.nondecaying is False


def test_sew_young_converges_to_stieltjes_integral():
    f, g = np.cos, np.sin
    germ = sw.young_germ(f, g)
    res = sw.sew(germ, None, ctrl.LinearControl(), 0.0, 1.0, levels=range(15))
    exact = 0.5 + 0.25 * np.sin(2.0)  # int_0^1 cos^2
    assert abs(res.value - exact) < 5e-5  # first order: ~2^-14 at this depth
    assert res.cauchy_diff[-1] < res.cauchy_diff[0]
    rows = res.trace_rows()
    assert len(rows) == len(res.levels)
    assert set(rows[0]) >= {"level", "mesh_w", "value_norm", "cauchy_diff"}


def test_sew_flags_nondecaying_germ():
    # A_{s,t} = sqrt(t-s): Riemann sums blow up, no sewn limit
    germ = sw.Germ("sqrt", lambda ctx, s, t: np.sqrt(t - s))
    res = sw.sew(germ, None, ctrl.LinearControl(), 0.0, 1.0, levels=range(9))
    assert res.nondecaying is True


# -- allocation identity -----------------------------------------------------------


def test_allocation_hand_example():
    # partition {0, 0.5, 2} inside [0,2], linear control: the only bucket
    # with both a coarse point and a refinement point is the top split
    germ = sw.Germ("square", lambda ctx, s, t: (t - s) ** 2)
    w = ctrl.LinearControl()
    pts = np.array([0.0, 0.5, 2.0])
    terms = sw.allocate(germ, None, pts, w)
    assert len(terms) == 1
    assert_allclose(terms[0].value, 0.5**2 + 1.5**2 - 2.0**2, rtol=1e-14)


@pytest.mark.parametrize("seed", [0, 1, 7])
@pytest.mark.parametrize("make_control", [
    ctrl.LinearControl,
    lambda: ctrl.PowerControl(c=1.0, kappa=2.0),
    lambda: ctrl.BesovDataControl(4.0, 0.3, 1.0, [0.0, 1.0], [1.0, 2.0]),
])
def test_allocation_identity_random_partitions(seed, make_control):
    rng = np.random.default_rng(seed)
    control = make_control()
    germ = sw.Germ("rand", lambda ctx, s, t: np.sin(5.0 * s) * (t - s) + (t - s) ** 2)
    pts = np.concatenate([[0.0], np.sort(rng.uniform(0.0, 1.0, size=13)), [1.0]])
    terms = sw.allocate(germ, None, pts, control)
    lhs = sw.riemann_sum(germ, None, pts) - germ(None, 0.0, 1.0)
    assert_allclose(sum(t.value for t in terms), lhs, rtol=1e-12, atol=1e-14)


def test_allocation_levels_bound():
    pts = np.linspace(0.0, 1.0, 9)
    terms_bound = sw.allocation_levels_bound(pts)
    germ = sw.Germ("sq", lambda ctx, s, t: (t - s) ** 2)
    terms = sw.allocate(germ, None, pts, ctrl.LinearControl())
    assert max(t.level for t in terms) <= terms_bound


# -- Doob-Meyer sums ---------------------------------------------------------------


def test_doob_meyer_sums_split_riemann_sum():
    rng = np.random.default_rng(3)
    n = 64
    dw = rng.standard_normal(n) / np.sqrt(n)
    b = np.concatenate([[0.0], np.cumsum(dw)])
    grid = np.linspace(0.0, 1.0, n + 1)

    def bval(ctx, t):
        return b[int(round(t * n))]

    germ = sw.Germ(
        "bsq",
        lambda ctx, s, t: bval(ctx, t) ** 2 - bval(ctx, s) ** 2,
        cond_mean=lambda ctx, s, t: t - s,
    )
    pts = grid[::8]
    mart, pred = sw.doob_meyer_sums(germ, None, pts)
    assert_allclose(pred, 1.0, rtol=1e-12)
    assert_allclose(mart + pred, sw.riemann_sum(germ, None, pts), rtol=1e-12)
    assert_allclose(mart, b[-1] ** 2 - 1.0, rtol=1e-12)


def test_doob_meyer_requires_oracle():
    with pytest.raises(ValueError):
        sw.doob_meyer_sums(sw.zero_germ(), None, [0.0, 1.0])


# -- rate envelope ------------------------------------------------------------------


def test_rate_bound_shape():
    bounds = sw.GermBounds(gamma1=1.0, gamma2=2.0, eps1=1.0, eps2=0.5, p_hat=2.0)
    w_tot = 1.0
    r1 = sw.rate_bound(bounds, 0.1, w_tot)
    r2 = sw.rate_bound(bounds, 0.025, w_tot)
    assert r2 < r1
    # drift part scales like mesh^1, martingale like mesh^0.5
    assert_allclose(r1, 1.0 * 0.1 + 2.0 * 0.1**0.5, rtol=1e-14)
    with pytest.raises(ValueError):
        sw.GermBounds(1.0, 1.0, eps1=0.0, eps2=0.5, p_hat=2.0)
    with pytest.raises(ValueError):
        sw.GermBounds(1.0, 1.0, eps1=0.5, eps2=0.5, p_hat=2.5)


# -- convergence study ---------------------------------------------------------------


def test_convergence_study_young_slope_near_one():
    germ = sw.young_germ(np.cos, np.sin)
    exact = 0.5 + 0.25 * np.sin(2.0)
    study = sw.convergence_study(germ, [None], ctrl.LinearControl(), lambda ctx: exact,
                                 0.0, 1.0, levels=range(4, 11))
    assert study.degenerate is False
    assert study.slope == pytest.approx(1.0, abs=0.1)
    assert study.rms_error[-1] < study.rms_error[0]


def test_convergence_study_degenerate_for_additive_germ():
    germ = sw.increment_germ()
    path = types.SimpleNamespace(b=lambda t: t**3)
    study = sw.convergence_study(germ, [path], ctrl.LinearControl(),
                                 lambda ctx: 1.0, 0.0, 1.0, levels=[0, 1, 2, 3])
    assert study.degenerate is True
    assert study.slope is None


def test_convergence_study_needs_three_levels():
    with pytest.raises(ValueError):
        sw.convergence_study(sw.zero_germ(), [None], ctrl.LinearControl(),
                             lambda ctx: 0.0, 0.0, 1.0, levels=[1, 2])


# -- uniqueness probe ----------------------------------------------------------------


def test_uniqueness_probe_decaying_remainder():
    # R_{s,t} = (t-s)^1.5 has zero sewn limit
    probe = sw.uniqueness_probe(lambda ctx, s, t: (t - s) ** 1.5, [None],
                                ctrl.LinearControl(), 0.0, 1.0, levels=[0, 2, 4, 8])
    assert probe["decays"] is True
    # sums scale like 2^(-h/2) exactly
    assert_allclose(probe["rms"], [1.0, 0.5, 0.25, 0.0625], rtol=1e-12)


def test_uniqueness_probe_flags_additive_remainder():
    # R_{s,t} = t - s is itself additive: Riemann sums stay at 1
    probe = sw.uniqueness_probe(lambda ctx, s, t: t - s, [None],
                                ctrl.LinearControl(), 0.0, 1.0, levels=[0, 2, 4])
    assert probe["decays"] is False
    assert_allclose(probe["rms"], 1.0, rtol=1e-14)


# -- table germ ----------------------------------------------------------------------


def test_table_germ_looks_up_between_grid_points():
    pts = np.linspace(0.0, 1.0, 5)
    table = np.zeros((5, 5))
    for i in range(5):
        for j in range(i, 5):
            table[i, j] = pts[j] ** 2 - pts[i] ** 2
    germ = sw.table_germ(pts, table)
    assert_allclose(germ(None, 0.25, 0.75), 0.75**2 - 0.25**2, rtol=1e-14)
    assert_allclose(sw.riemann_sum(germ, None, pts), 1.0, rtol=1e-14)
