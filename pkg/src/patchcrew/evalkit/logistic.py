"""Logistic regression: IRLS fit, Wald standard errors, two-sided p-values.

The fit is Newton-Raphson on the log-likelihood (equivalently iteratively
reweighted least squares) with step halving, so the log-likelihood never
decreases across iterations. Perfect separation makes the MLE diverge;
that is detected (saturated fitted probabilities or runaway coefficients)
and reported as converged=False with a diagnostic instead of pretending
the estimates mean anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_ITERATIONS = 100
CONVERGENCE_TOL = 1e-8
SEPARATION_COEF_BOUND = 30.0
_ETA_CLIP = 35.0


@dataclass(frozen=True)
class LogisticFit:
    coefficients: tuple[float, ...]  # intercept first
    std_errors: tuple[float, ...]
    p_values: tuple[float, ...]
    converged: bool
    iterations: int
    log_likelihood: float
    ll_history: tuple[float, ...]
    diagnostic: str = ""


def _log_likelihood(eta: np.ndarray, y: np.ndarray) -> float:
    # sum y*eta - log(1 + exp(eta)), computed stably
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def logistic_fit(features, labels) -> LogisticFit:
    """Fit labels ~ intercept + features.

    features: n x p matrix (rows = observations); labels: n binary values.
    Raises ValueError on degenerate inputs (single label class, NaN or inf
    features, fewer rows than parameters, singular information matrix).
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError("features must be a 2-d matrix")
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError("labels length must match feature rows")
    if not np.isfinite(X).all():
        raise ValueError("features must be finite")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be binary 0/1")
    if len(np.unique(y)) < 2:
        raise ValueError("labels must contain both classes")
    if n < p + 1:
        raise ValueError(f"need at least {p + 1} rows for {p} features")

    design = np.hstack([np.ones((n, 1)), X])
    k = p + 1
    beta = np.zeros(k)
    eta = design @ beta
    ll = _log_likelihood(eta, y)
    history = [ll]
    converged = False
    diagnostic = ""
    iterations = 0
    info = np.eye(k)

    for iteration in range(1, MAX_ITERATIONS + 1):
        iterations = iteration
        mu = 1.0 / (1.0 + np.exp(-np.clip(eta, -_ETA_CLIP, _ETA_CLIP)))
        weights = mu * (1.0 - mu)
        info = design.T @ (design * weights[:, None])
        grad = design.T @ (y - mu)
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            if np.max(np.abs(beta)) > SEPARATION_COEF_BOUND / 3:
                diagnostic = ("perfect separation suspected: information "
                              "matrix became singular while coefficients "
                              "diverged")
                break
            raise ValueError("singular information matrix") from None

        # step halving keeps the log-likelihood monotone
        scale = 1.0
        for _ in range(20):
            candidate = beta + scale * step
            cand_eta = design @ candidate
            cand_ll = _log_likelihood(cand_eta, y)
            if cand_ll >= ll - 1e-12:
                break
            scale /= 2.0
        beta = beta + scale * step
        eta = design @ beta
        ll = _log_likelihood(eta, y)
        history.append(ll)

        saturated = (np.all(mu[y == 1.0] > 1.0 - 1e-8)
                     and np.all(mu[y == 0.0] < 1e-8))
        if np.max(np.abs(beta)) > SEPARATION_COEF_BOUND or saturated:
            diagnostic = ("perfect separation suspected: fitted "
                          "probabilities saturated")
            break
        if np.max(np.abs(scale * step)) < CONVERGENCE_TOL:
            converged = True
            break

    if not converged and not diagnostic:
        diagnostic = f"no convergence within {MAX_ITERATIONS} iterations"

    mu = 1.0 / (1.0 + np.exp(-np.clip(eta, -_ETA_CLIP, _ETA_CLIP)))
    weights = mu * (1.0 - mu)
    info = design.T @ (design * weights[:, None])
    try:
        covariance = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        if diagnostic:
            covariance = np.full((k, k), np.inf)
        else:
            raise ValueError("singular information matrix") from None
    variances = np.diag(covariance)
    std_errors = np.sqrt(np.where(variances > 0, variances, np.inf))
    with np.errstate(invalid="ignore"):
        z = np.where(std_errors > 0, beta / std_errors, 0.0)
    p_values = np.array([math.erfc(abs(v) / math.sqrt(2.0)) if math.isfinite(v)
                         else 1.0 for v in z])

    return LogisticFit(
        coefficients=tuple(float(b) for b in beta),
        std_errors=tuple(float(s) for s in std_errors),
        p_values=tuple(float(p) for p in p_values),
        converged=converged,
        iterations=iterations,
        log_likelihood=ll,
        ll_history=tuple(history),
        diagnostic=diagnostic,
    )
