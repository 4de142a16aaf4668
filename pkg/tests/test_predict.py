import datetime as dt

import mpmath
import numpy as np
import pytest

from loadshape import dtw, predict
from loadshape.curves import DayType, validate_curve
from loadshape.errors import InsufficientHistoryError, NoHistoryError, ZeroActualError

import tables


def golden_alpha(shapes, actuals, beta):
    """Weighted least-squares scale by golden-section search at 50 digits."""
    mpmath.mp.dps = 50
    M = len(shapes)
    S = [[mpmath.mpf(float(v)) for v in s] for s in shapes]
    X = [[mpmath.mpf(float(v)) for v in x] for x in actuals]
    w = [mpmath.mpf(beta) ** (M - 1 - i) for i in range(M)]

    def f(a):
        return sum(w[i] * sum((a * s - x) ** 2 for s, x in zip(S[i], X[i])) for i in range(M))

    lo, hi = mpmath.mpf(-1e3), mpmath.mpf(1e3)
    g = (mpmath.sqrt(5) - 1) / 2
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > mpmath.mpf(10) ** -20:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = f(d)
    return float((lo + hi) / 2)


def test_dp_enc_examples():
    rng = np.random.default_rng(0)
    P = rng.uniform(0, 1, (12, 24))
    P /= P.sum(axis=1, keepdims=True)
    assert predict.dp_enc(P[2], P) == 3
    assert predict.dp_enc(5 * P[2], P) == 3
    for _ in range(20):
        x = rng.uniform(0, 1, 24)
        xn = x / x.sum()
        expected = 1 + int(np.argmin([dtw.dtw_distance(xn, p) for p in P]))
        assert predict.dp_enc(x, P) == expected
        assert predict.dp_enc(7.5 * x, P) == predict.dp_enc(x, P)


def test_table_probabilities_from_counts():
    for counts, probs, period in ((tables.AM_COUNTS, tables.AM_PROBS, 1), (tables.PM_COUNTS, tables.PM_PROBS, 2)):
        model = predict.estimate_transitions(*tables.expand(counts), k=3, period=period, n_periods=2)
        for (ctx, out), p in probs.items():
            assert round(float(model.probabilities[ctx][out - 1]), 2) == p


def test_table_from_encoded_history():
    values, protos, days = tables.history()
    enc = predict.encode_days(values, protos)
    assert [tuple(r) for r in enc] == days
    for period, counts in ((1, tables.AM_COUNTS), (2, tables.PM_COUNTS)):
        model = predict.p_transition(enc, period, 3)
        observed = {(ctx, o + 1): int(c[o]) for ctx, c in model.counts.items() for o in range(3) if c[o]}
        assert observed == counts
    fc = predict.shape_predict(values, protos)
    assert predict.predict_encoding(fc.models, (2, 1)) == (2, 1)
    assert fc.indices == predict.predict_encoding(fc.models, days[-1])


def test_context_tuples_two_periods():
    enc = np.array([[1, 2], [3, 1]])
    assert predict.context_of(enc, 1, 1) == (1, 2)
    assert predict.context_of(enc, 1, 2) == (3, 2)


def test_identical_days_predict_same_encoding():
    P = tables.prototypes()
    day = np.concatenate([P[0][1], P[1][2]])
    fc = predict.shape_predict(np.tile(day, (6, 1)), P)
    assert fc.indices == (2, 3)


def test_cyclic_history_predicts_successor():
    P = tables.prototypes(24)[:1]
    rows = [P[0][i % 3] for i in range(10)]
    fc = predict.shape_predict(np.vstack(rows), P)
    assert fc.indices == ((10 % 3) + 1,)


def test_probabilities_sum_to_one():
    rng = np.random.default_rng(4)
    enc = rng.integers(1, 6, (30, 3))
    for p in (1, 2, 3):
        model = predict.p_transition(enc, p, 5)
        for probs in model.probabilities.values():
            assert abs(probs.sum() - 1.0) < 1e-12


def test_unseen_context_backs_off():
    model = predict.estimate_transitions([(1,), (1,), (2,)], [2, 2, 3], k=3, period=1, n_periods=1)
    assert model.predict((3,)) == 2
    empty = predict.estimate_transitions([], [], k=3, period=1, n_periods=1, fallback=[])
    assert empty.predict((1,)) == 1


def test_day_type_split_uses_matching_days():
    enc = np.array([[1], [2], [1], [3], [1], [3]])
    types = [DayType.WEEKDAY, DayType.WEEKDAY, DayType.WEEKDAY, DayType.WEEKEND, DayType.WEEKDAY, DayType.WEEKEND]
    wd = predict.p_transition(enc, 1, 3, types, DayType.WEEKDAY)
    we = predict.p_transition(enc, 1, 3, types, DayType.WEEKEND)
    assert wd.predict((1,)) == 2 and we.predict((1,)) == 3


@pytest.mark.parametrize("beta", [1.0, 0.9, 0.5])
def test_alpha_matches_numeric_minimizer(beta):
    rng = np.random.default_rng(int(beta * 100))
    for _ in range(15):
        m = int(rng.integers(1, 5))
        S = rng.uniform(0, 1, (m, 24))
        X = rng.uniform(0, 3, (m, 24))
        alpha, scaled = predict.scale_forecast(S[0], S, X, beta)
        assert abs(alpha - golden_alpha(S, X, beta)) <= 1e-9 * max(1.0, abs(alpha))
        np.testing.assert_allclose(scaled, alpha * S[0])


def test_alpha_examples():
    x = np.random.default_rng(1).uniform(0, 1, 24)
    assert predict.scale_forecast(x, [x], [x])[0] == pytest.approx(1.0)
    S = np.random.default_rng(2).uniform(0, 1, (4, 24))
    X = np.random.default_rng(3).uniform(0, 1, (4, 24))
    displayed = sum(float(s @ x) for s, x in zip(S, X)) / sum(float(s @ s) for s in S)
    assert predict.scale_forecast(S[0], S, X, 1.0)[0] == displayed
    with pytest.raises(NoHistoryError):
        predict.scale_forecast(x, np.empty((0, 24)), np.empty((0, 24)))


def test_scale_naive():
    shape = np.full(24, 1 / 24)
    past = np.vstack([np.full(24, 2.0), np.full(24, 4.0)])
    factor, out = predict.scale_naive(shape, past)
    assert factor == pytest.approx(72.0)
    assert out.sum() == pytest.approx(72.0)
    _, out = predict.scale_naive(np.arange(24.0), past[:1])
    assert out.sum() == pytest.approx(48.0)


def test_dtwe():
    rng = np.random.default_rng(5)
    x, y = rng.uniform(0.1, 1, (2, 24))
    assert predict.dtwe(x, x) == 0.0
    assert predict.dtwe(np.full(24, 3.0), np.full(24, 2.0)) == pytest.approx(0.5)
    assert predict.dtwe(x, y) == pytest.approx(np.sqrt(dtw.dtw_distance(x, y) / np.sum(y ** 2)))
    with pytest.raises(ZeroActualError):
        predict.dtwe(x, np.zeros(24))


def test_forecast_uses_naive_without_past_forecasts():
    values, protos, _ = tables.history()
    fc = predict.forecast_next_day(values[:2], protos)
    assert fc.scaling == "naive"
    fc = predict.forecast_next_day(values, protos)
    assert fc.scaling == "fit" and len(fc.alphas) == 2 and fc.values.shape == (24,)
    with pytest.raises(InsufficientHistoryError):
        predict.shape_predict(values[:1], protos)


def test_persistence():
    h = np.arange(48.0).reshape(2, 24)
    np.testing.assert_array_equal(predict.persistence_forecast(h), h[1])


def _identical_days(n_house=3, days=6):
    curves = []
    for h in range(n_house):
        values = np.r_[np.linspace(1.0, 1.0 + h, 12), np.linspace(2.0 + h, 1.0, 12)]
        for d in range(days):
            curves.append(validate_curve(values, f"h{h}", dt.date(2021, 6, 7) + dt.timedelta(days=d)))
    return curves


def test_model_select_identical_days_zero():
    rows = predict.model_select(_identical_days(n_house=2), [2], [1])
    assert len(rows) == 1 and rows[0].mean_dtwe == pytest.approx(0.0, abs=1e-12)


def test_model_select_table_shape():
    rows = predict.model_select(_identical_days(), [2, 3], [1, 2])
    assert [(r.k, r.n_periods) for r in rows] == [(2, 1), (2, 2), (3, 1), (3, 2)]


def test_model_select_needs_three_days():
    with pytest.raises(InsufficientHistoryError):
        predict.model_select(_identical_days(days=2), [2], [1])
