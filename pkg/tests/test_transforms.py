import math

import numpy as np
import pytest

from ltvkit.system import ExprMatrix, LtvSystem, TransitionEvaluator
from ltvkit.transforms import (FeedbackGain, GainRole, adjoint, dual, observer_error_system,
                               output_injection, perturb, state_feedback,
                               verify_adjoint_dual_transitions)

m = ExprMatrix.parse


def sys1(a, b=None, c=None, domain=(-5.0, 5.0)):
    return LtvSystem("x", m([[a]]), B=None if b is None else m([[b]]),
                     C=None if c is None else m([[c]]), domain=domain)


def at(M, t):
    return M(t)[0, 0]


def test_adjoint_scalar():
    a = adjoint(sys1("-1", c="1"))
    assert at(a.A, 0.3) == 1.0 and at(a.B, 0.3) == -1.0


def test_adjoint_identity_output():
    s = LtvSystem("z", m([["0", "0"], ["0", "0"]]), C=m([["1", "0"], ["0", "1"]]))
    a = adjoint(s)
    np.testing.assert_array_equal(a.A(1.0), np.zeros((2, 2)))
    np.testing.assert_array_equal(a.B(1.0), -np.eye(2))


def test_dual_constants_and_domain():
    s = LtvSystem("c", m([["1", "2"], ["3", "4"]]), C=m([["5", "6"]]), domain=(-1.0, 3.0))
    d = dual(s)
    np.testing.assert_array_equal(d.A(0.7), s.A(0.7).T)
    np.testing.assert_array_equal(d.B(0.7), s.C(0.7).T)
    assert d.domain == (-3.0, 1.0)


@pytest.mark.parametrize("a, t", [("t", 1.5), ("-t*sin(t)", 0.9), ("-t*sin(t)", -2.2)])
def test_dual_substitution(a, t):
    d = dual(sys1(a, c="1"))
    f = {"t": lambda x: x, "-t*sin(t)": lambda x: -x * math.sin(x)}[a]
    assert at(d.A, t) == pytest.approx(f(-t), abs=1e-15)


def test_transition_identities():
    zero = TransitionEvaluator(sys1("0"))
    r = verify_adjoint_dual_transitions(zero, [(1.0, 0.0), (-2.0, 3.0)])
    assert r.adjoint <= 1e-10 and r.dual <= 1e-10
    stable = TransitionEvaluator(sys1("-1"))
    assert verify_adjoint_dual_transitions(stable, [(1.0, 0.0)]).adjoint <= 1e-8
    s1 = TransitionEvaluator(sys1("-t*sin(t)", domain=(-20.0, 20.0)))
    nodes = np.linspace(-3, 3, 5)
    r = verify_adjoint_dual_transitions(s1, [(t, s) for t in nodes for s in nodes])
    assert max(r.adjoint, r.dual) <= 1e-6


@pytest.mark.parametrize("a, k, expected", [
    ("0", "0", lambda t: 0.0),
    ("0", "1", lambda t: -1.0),
    ("-1", "exp(-2*abs(t))", lambda t: -1 - math.exp(-2 * abs(t))),
])
@pytest.mark.parametrize("role", [GainRole.OUTPUT_INJECTION, GainRole.OBSERVER])
def test_output_injection_examples(a, k, expected, role):
    fn = output_injection if role is GainRole.OUTPUT_INJECTION else observer_error_system
    closed = fn(sys1(a, c="1"), FeedbackGain(role, m([[k]])))
    for t in (-1.0, 0.0, 2.0):
        assert at(closed.A, t) == pytest.approx(expected(t), abs=1e-15)


def test_output_feedback_goes_through_b():
    closed = output_injection(sys1("0", b="2", c="1"), FeedbackGain(GainRole.OUTPUT_FEEDBACK, m([["3"]])))
    assert at(closed.A, 0.0) == -6.0


@pytest.mark.parametrize("a, b, f, expected", [
    ("1", "1", "0", lambda t: 1.0),
    ("1", "1", "2", lambda t: -1.0),
    ("0", "exp(t/2)", "exp(-3*abs(t))", lambda t: -math.exp(t / 2) * math.exp(-3 * abs(t))),
])
def test_state_feedback_examples(a, b, f, expected):
    closed = state_feedback(sys1(a, b=b), FeedbackGain(GainRole.STATE_FEEDBACK, m([[f]])))
    for t in (-1.0, 0.5):
        assert at(closed.A, t) == pytest.approx(expected(t), rel=1e-15)
    assert at(closed.B, 0.5) == pytest.approx(at(m([[b]]), 0.5))


def test_perturbation_adds():
    p = perturb(sys1("-1"), FeedbackGain(GainRole.PERTURBATION, m([["0.5"]])))
    assert at(p.A, 0.0) == -0.5


def test_gain_shapes_checked():
    with pytest.raises(ValueError, match="must be"):
        state_feedback(sys1("0", b="1"), FeedbackGain(GainRole.STATE_FEEDBACK, m([["1", "2"]])))
    with pytest.raises(ValueError):
        state_feedback(sys1("0", b="1"), FeedbackGain(GainRole.OBSERVER, m([["1"]])))
    with pytest.raises(ValueError):
        adjoint(sys1("0"))
