from __future__ import annotations

import math
import random

import pytest

from _oracles import newton_logistic_univariate

from patchcrew.evalkit.logistic import logistic_fit


def _synthetic(n: int, intercept: float, slope: float,
               seed: int) -> tuple[list[float], list[int]]:
    rng = random.Random(seed)
    xs, ys = [], []
    for _ in range(n):
        x = rng.gauss(0.0, 1.0)
        p = 1.0 / (1.0 + math.exp(-(intercept + slope * x)))
        xs.append(x)
        ys.append(1 if rng.random() < p else 0)
    return xs, ys


def test_recovers_known_coefficients_within_wald_bounds():
    truth = (-0.4, 1.3)
    xs, ys = _synthetic(500, *truth, seed=2024)
    fit = logistic_fit(xs, ys)
    assert fit.converged
    for est, se, true_value in zip(fit.coefficients, fit.std_errors, truth):
        assert abs(est - true_value) < 3 * se
        assert se > 0


def test_matches_independent_newton_solver():
    xs, ys = _synthetic(300, 0.7, -0.9, seed=77)
    fit = logistic_fit(xs, ys)
    b0, b1 = newton_logistic_univariate(xs, [float(v) for v in ys])
    assert fit.coefficients[0] == pytest.approx(b0, abs=1e-6)
    assert fit.coefficients[1] == pytest.approx(b1, abs=1e-6)


def test_log_likelihood_never_decreases():
    xs, ys = _synthetic(200, 0.2, 2.5, seed=5)
    fit = logistic_fit(xs, ys)
    history = fit.ll_history
    assert len(history) >= 2
    assert all(b >= a - 1e-12 for a, b in zip(history, history[1:]))
    assert fit.log_likelihood == history[-1]
    assert fit.log_likelihood < 0


def test_multivariate_fit():
    rng = random.Random(99)
    rows, ys = [], []
    for _ in range(400):
        x1, x2 = rng.gauss(0, 1), rng.gauss(0, 1)
        p = 1.0 / (1.0 + math.exp(-(0.5 + 1.0 * x1 - 1.5 * x2)))
        rows.append([x1, x2])
        ys.append(1 if rng.random() < p else 0)
    fit = logistic_fit(rows, ys)
    assert fit.converged
    assert len(fit.coefficients) == 3
    assert fit.coefficients[1] > 0
    assert fit.coefficients[2] < 0


def test_perfect_separation_is_flagged():
    xs = [float(i) for i in range(-10, 10)]
    ys = [0 if x < 0 else 1 for x in xs]
    fit = logistic_fit(xs, ys)
    assert not fit.converged
    assert "separation" in fit.diagnostic


def test_strong_signal_p_value_is_small():
    xs, ys = _synthetic(500, 0.0, 2.0, seed=11)
    fit = logistic_fit(xs, ys)
    assert fit.converged
    assert fit.p_values[1] < 1e-6
    assert 0.0 <= fit.p_values[0] <= 1.0


def test_null_signal_p_value_is_large():
    rng = random.Random(3)
    xs = [rng.gauss(0, 1) for _ in range(400)]
    ys = [rng.randint(0, 1) for _ in range(400)]
    fit = logistic_fit(xs, ys)
    assert fit.converged
    assert fit.p_values[1] > 0.01


@pytest.mark.parametrize("features,labels,message", [
    ([1.0, 2.0, 3.0], [0, 0, 0], "both classes"),
    ([1.0, 2.0, 3.0], [0, 1], "length"),
    ([1.0, float("nan"), 3.0], [0, 1, 0], "finite"),
    ([1.0, 2.0, 3.0], [0, 2, 1], "binary"),
    ([1.0], [1], "both classes"),
    ([[1.0, 2.0], [3.0, 4.0]], [0, 1], "rows"),
])
def test_input_validation(features, labels, message):
    with pytest.raises(ValueError, match=message):
        logistic_fit(features, labels)


def test_collinear_features_rejected():
    xs = [[float(i), 2.0 * float(i)] for i in range(8)]
    ys = [0, 1, 0, 1, 0, 1, 0, 1]
    with pytest.raises(ValueError, match="singular"):
        logistic_fit(xs, ys)
