import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import solve_ivp

from ltvkit.integrate import solve
from ltvkit.linalg import extreme_eigs, jacobi_eigvalsh, log_spectral_norm, spectral_norm


def test_solve_matches_closed_form():
    # y' = -t y, y(0) = 1  ->  exp(-t^2 / 2)
    ys = solve(lambda t, y: -t * y, 0.0, np.array([1.0]), [0.5, 1.0, 3.0])
    for t, y in zip([0.5, 1.0, 3.0], ys):
        assert y[0] == pytest.approx(math.exp(-t * t / 2), rel=1e-8)


def test_solve_backward_and_against_scipy():
    f = lambda t, y: np.array([y[1], -(1 + 0.5 * math.sin(t)) * y[0]])
    stops = [-0.5, -2.0, -4.0]
    ours = solve(f, 0.0, np.array([1.0, 0.0]), stops)
    ref = solve_ivp(f, (0.0, -4.0), [1.0, 0.0], t_eval=stops, rtol=1e-11, atol=1e-13, method="DOP853")
    for k, y in enumerate(ours):
        np.testing.assert_allclose(y, ref.y[:, k], rtol=1e-7, atol=1e-9)


def test_stop_equal_to_start_is_identity():
    y0 = np.array([2.0, 3.0])
    assert np.array_equal(solve(lambda t, y: y, 1.0, y0, [1.0])[0], y0)


def test_nonmonotone_stops_rejected():
    with pytest.raises(ValueError):
        solve(lambda t, y: y, 0.0, np.array([1.0]), [2.0, 1.0])


def test_renormalized_growth_stays_finite():
    # exp(400) overflows nothing, but the raw path would be stiff in scale
    ys = solve(lambda t, y: 40.0 * y, 0.0, np.array([1.0]), [10.0], degrees=np.ones(1))
    assert math.log(ys[0][0]) == pytest.approx(400.0, rel=1e-8)


symmetric = arrays(np.float64, (4, 4), elements=st.floats(-100, 100)).map(lambda a: a + a.T)


@settings(max_examples=200, deadline=None)
@given(symmetric)
def test_jacobi_matches_numpy(S):
    ours = jacobi_eigvalsh(S)
    ref = np.linalg.eigvalsh(S)
    scale = max(1.0, float(np.max(np.abs(ref))))
    assert np.max(np.abs(ours - ref)) <= 1e-10 * scale


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (3, 2), elements=st.floats(-50, 50)))
def test_spectral_norm_matches_svd(M):
    ref = float(np.linalg.svd(M, compute_uv=False)[0])
    assert spectral_norm(M) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_extreme_eigs_scalar_and_log_norm():
    assert extreme_eigs(np.array([[3.0]])) == (3.0, 3.0)
    assert log_spectral_norm(np.diag([math.e, 1.0])) == pytest.approx(1.0)


def test_jacobi_tiny_offdiagonal_beside_large_diagonal():
    S = np.full((4, 4), 2.38418579e-07)
    S[0, 0] = 92.0
    ours = jacobi_eigvalsh(S)
    assert np.max(np.abs(ours - np.linalg.eigvalsh(S))) <= 1e-10 * 92.0
