import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ltvkit.common import Caps, Status
from ltvkit.envelopes import (Envelope, EnvelopeKind, PairGrid, check_envelope, collect_samples,
                              falsify_uniform, fit_envelope, fit_from_samples, fit_gain_bound,
                              nues_status, refine_envelope, slack_from_samples)
from ltvkit.system import ExprMatrix

from conftest import scalar

PI = math.pi


def test_nues_forward_of_stable_scalar():
    ev = scalar("-1")
    env = fit_envelope(ev, EnvelopeKind.NUES_FORWARD, PairGrid.square(0, 5, 11))
    assert (env.rate, env.nu) == (1.0, 0.0)
    assert env.prefactor == pytest.approx(1.0, abs=1e-8)
    assert nues_status(env) is Status.CERTIFIED


def test_ubg_of_zero_system():
    env = fit_envelope(scalar("0"), EnvelopeKind.UBG, PairGrid.square(-3, 3, 7))
    assert (env.prefactor, env.rate) == (1.0, 0.0)


@pytest.fixture(scope="module")
def s1_nubg():
    ev = scalar("-t*sin(t)", domain=(-20.0, 20.0))
    grid = PairGrid.square(-10, 10, 21)
    return ev, grid, collect_samples(ev, EnvelopeKind.NUBG, grid)


def test_s1_needs_nonuniform_exponent(s1_nubg):
    ev, grid, samples = s1_nubg
    free = fit_from_samples(samples, EnvelopeKind.NUBG)
    pinned = fit_from_samples(samples, EnvelopeKind.NUBG, nu_grid=[0.0])
    assert free.nu > 0 and free.slack >= 0
    assert pinned.prefactor >= 10 * free.prefactor


def test_fit_soundness_and_minimality(s1_nubg):
    ev, grid, samples = s1_nubg
    env = fit_from_samples(samples, EnvelopeKind.NUBG)
    assert check_envelope(ev, env, grid).min_slack >= 0.0
    worse = env.scaled(0.99)
    assert slack_from_samples(worse, samples)[0] < 0


def test_halved_prefactor_gives_witness(s1_nubg):
    ev, grid, samples = s1_nubg
    env = fit_from_samples(samples, EnvelopeKind.NUBG).scaled(0.5)
    report = check_envelope(ev, env, grid)
    assert report.min_slack == pytest.approx(-math.log(2), abs=1e-12)
    assert report.witness in {(t, s) for t in grid.ts for s in grid.ss}


def test_ubg_and_nubg_with_zero_exponent_agree(s1_nubg):
    ev, grid, _ = s1_nubg
    ubg = fit_envelope(ev, EnvelopeKind.UBG, grid)
    as_nubg = Envelope(EnvelopeKind.NUBG, ubg.log_prefactor, ubg.rate, 0.0)
    assert check_envelope(ev, as_nubg, grid).min_slack == pytest.approx(ubg.slack, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-6, 6), min_size=2, max_size=6), st.floats(-6, 6),
       st.sampled_from([0.0, 0.5, 1.0]), st.sampled_from([0.0, 0.3]))
def test_enlarging_grid_never_lowers_fixed_pair_prefactor(nodes, extra, rate, nu):
    ev = scalar("-t*sin(t)", domain=(-20.0, 20.0))
    small = collect_samples(ev, EnvelopeKind.NUBG, PairGrid(nodes, nodes))
    big = collect_samples(ev, EnvelopeKind.NUBG, PairGrid(nodes + [extra], nodes + [extra]))
    a = fit_from_samples(small, EnvelopeKind.NUBG, [rate], [nu])
    b = fit_from_samples(big, EnvelopeKind.NUBG, [rate], [nu])
    assert b.log_prefactor >= a.log_prefactor


def test_refinement_never_worsens(s1_nubg):
    ev, grid, samples = s1_nubg
    env = fit_from_samples(samples, EnvelopeKind.NUBG)
    fine = refine_envelope(ev, env, grid, levels=2)
    assert fine.log_prefactor <= env.log_prefactor
    assert fine.rate <= Caps().rate and fine.nu <= Caps().nu
    assert fine.slack >= 0


def test_falsify_uniform_on_s1():
    ev = scalar("-t*sin(t)", domain=(-40.0, 40.0))
    anchors = [2 * n * PI for n in range(1, 6)]
    rep = falsify_uniform(ev, PI / 2, anchors, cap=1e4)
    for n, (t, v) in enumerate(rep.values, start=1):
        assert v == pytest.approx(math.exp(2 * n * PI - 1), rel=1e-6)
    # the closed form gives 196.996; the rounded figure 197.03 is only approximate
    assert rep.values[0][1] == pytest.approx(197.03, abs=0.05)
    assert rep.status is Status.FALSIFIED and rep.witness[0] == pytest.approx(4 * PI)
    below_last = math.exp(2 * PI * 5 - 1) * 0.999
    assert falsify_uniform(ev, PI / 2, anchors, cap=below_last).status is Status.FALSIFIED


@pytest.mark.parametrize("a, value", [("0", 1.0), ("-1", math.exp(-PI / 2))])
def test_falsify_uniform_inconclusive(a, value):
    rep = falsify_uniform(scalar(a), PI / 2, [0.0, 1.0, 2.0, 3.0])
    assert rep.status is Status.INCONCLUSIVE
    assert all(v == pytest.approx(value, rel=1e-8) for _, v in rep.values)


def test_nues_status_reads_growth_and_neutral():
    grid = PairGrid.square(0, 4, 9)
    assert nues_status(fit_envelope(scalar("1"), "NuesForward", grid)) is Status.FALSIFIED
    assert nues_status(fit_envelope(scalar("0"), "NuesForward", grid)) is Status.INCONCLUSIVE


def test_gain_bound_fits():
    g = fit_gain_bound(ExprMatrix.parse([["0.5*exp(-abs(t))"]]), np.linspace(-5, 5, 11), decay=True)
    assert g.prefactor == pytest.approx(0.5) and g.rate == 1.0
    zero = fit_gain_bound(ExprMatrix.parse([["0"]]), [0.0, 1.0], decay=True)
    assert zero.prefactor == 0.0
    grow = fit_gain_bound(ExprMatrix.parse([["exp(2*abs(t))"]]), np.linspace(-2, 2, 5), decay=False)
    assert grow.rate == 2.0 and grow.prefactor == pytest.approx(1.0)
