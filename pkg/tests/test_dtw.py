import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loadshape import dtw
from loadshape.errors import LengthMismatchError, TooLongError, TooShortError


def test_matches_bruteforce_on_random_pairs():
    rng = np.random.default_rng(2016)
    for _ in range(200):
        x, y = rng.integers(0, 3, (2, 6)).astype(float)
        assert dtw.dtw_distance(x, y) == dtw.dtw_bruteforce(x, y)


def test_matches_bruteforce_on_shifted_impulses():
    for a, b in itertools.product(range(6), repeat=2):
        x = np.zeros(6)
        y = np.zeros(6)
        x[a] = y[b] = 1.0
        assert dtw.dtw_distance(x, y) == dtw.dtw_bruteforce(x, y)


def test_small_shift_is_free_large_shift_is_not():
    x = np.zeros(24)
    y = np.zeros(24)
    x[10] = y[11] = 1.0
    assert dtw.dtw_distance(x, y) == 0.0
    assert dtw.dtw_distance(x, x) == 0.0


@pytest.mark.parametrize("c1,c2", [(0.0, 1.0), (2.5, 0.5), (3.0, 3.0)])
def test_constant_curves(c1, c2):
    assert dtw.dtw_distance(np.full(24, c1), np.full(24, c2)) == pytest.approx(24 * (c1 - c2) ** 2)


def test_properties_on_random_pairs():
    rng = np.random.default_rng(7)
    for _ in range(200):
        x, y = rng.uniform(0, 2, (2, 24))
        d = dtw.dtw_distance(x, y)
        assert d == pytest.approx(dtw.dtw_distance(y, x), abs=1e-12)
        assert dtw.dtw_distance(x, x) == 0.0
        assert d <= float(((x - y) ** 2).sum()) + 1e-12


@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=4, max_size=8),
       st.randoms(use_true_random=False))
@settings(max_examples=60, deadline=None)
def test_bruteforce_property(xs, r):
    x = np.array(xs)
    y = np.array([r.uniform(0, 10) for _ in xs])
    assert dtw.dtw_distance(x, y) == dtw.dtw_bruteforce(x, y)


def test_path_reproduces_distance():
    rng = np.random.default_rng(3)
    for _ in range(50):
        x, y = rng.uniform(0, 1, (2, 24))
        path = dtw.dtw_path(x, y)
        assert path.anchors[0] == (0, 0) and path.anchors[-1] == (23, 23)
        assert all(s in dtw.STEPS for s in path.steps)
        assert path.cost(x, y) == pytest.approx(dtw.dtw_distance(x, y), rel=1e-12)


def test_accumulated_cost_boundary():
    x = np.array([1.0, 0, 0, 0])
    y = np.array([0.0, 0, 0, 2])
    C = dtw.accumulated_cost(x, y)
    assert C[0, 0] == 1.0
    assert np.isinf(C[0, 1]) and np.isinf(C[1, 0])
    assert C[-1, -1] == dtw.dtw_distance(x, y)


def test_input_errors():
    with pytest.raises(LengthMismatchError):
        dtw.dtw_distance(np.ones(5), np.ones(6))
    with pytest.raises(TooShortError):
        dtw.dtw_distance(np.ones(3), np.ones(3))
    with pytest.raises(TooLongError):
        dtw.dtw_bruteforce(np.ones(9), np.ones(9))


def test_pairwise_and_cross_agree():
    X = np.random.default_rng(5).uniform(0, 1, (6, 24))
    D = dtw.pairwise_distances(X)
    np.testing.assert_array_equal(D, D.T)
    np.testing.assert_array_equal(np.diag(D), 0.0)
    np.testing.assert_allclose(dtw.cross_distances(X, X), D, rtol=0, atol=1e-15)
    assert D[1, 4] == dtw.dtw_distance(X[1], X[4])
