"""Two-component 1-D Gaussian mixture, AIC, and the lambda grid search.

EM is hand-rolled rather than delegated so that initialization,
convergence, and the variance floor are exactly reproducible: the
grid search refits the mixture at 90 lambda values and golden tests
pin the outcome.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateDataError, InsufficientDataError, LambdaSearchError
from .pmi import recombine

VARIANCE_FLOOR = 1e-6
EM_TOL = 1e-8
EM_MAX_ITER = 500

#: free parameters of a 2-component 1-D mixture: 2 means + 2 variances + 1 weight
MIXTURE_N_PARAMS = 5


@dataclass(frozen=True)
class MixtureModel:
    weights: tuple[float, float]
    means: tuple[float, float]
    variances: tuple[float, float]
    loglik: float
    iterations: int
    converged: bool
    loglik_history: tuple[float, ...]

    @property
    def high_mean_component(self) -> int:
        return 0 if self.means[0] >= self.means[1] else 1


def _log_densities(x: np.ndarray, weights, means, variances) -> np.ndarray:
    """log(w_k * N(x | mu_k, var_k)) as an (n, 2) array."""
    out = np.empty((x.size, 2))
    for k in range(2):
        out[:, k] = (
            math.log(weights[k])
            - 0.5 * math.log(2.0 * math.pi * variances[k])
            - (x - means[k]) ** 2 / (2.0 * variances[k])
        )
    return out


def _e_step(x, weights, means, variances):
    log_joint = _log_densities(x, weights, means, variances)
    log_norm = np.logaddexp(log_joint[:, 0], log_joint[:, 1])
    responsibilities = np.exp(log_joint - log_norm[:, None])
    return responsibilities, float(np.sum(log_norm))


def fit_gmm_em(scores: Sequence[float], seed: int = 0, restarts: int = 0) -> MixtureModel:
    """Fit the mixture by EM from quantile initialization.

    Deterministic given data and seed: means start at the 25th/75th
    percentiles with equal weights and pooled variance; the seed only
    matters when optional random restarts are requested.
    """
    x = np.asarray(list(scores), dtype=float)
    if x.size < 4:
        raise InsufficientDataError(f"need at least 4 scores to fit a mixture, got {x.size}")
    if not np.all(np.isfinite(x)):
        bad = np.flatnonzero(~np.isfinite(x))
        raise ValueError(f"scores must be finite; offending indices {bad[:5].tolist()}")
    if np.ptp(x) == 0.0:
        raise DegenerateDataError("all scores identical; nothing to cluster")

    means = (float(np.quantile(x, 0.25)), float(np.quantile(x, 0.75)))
    if means[0] == means[1]:
        means = (float(x.min()), float(x.max()))
    inits = [means]
    if restarts > 0:
        rng = np.random.default_rng(seed)
        for _ in range(restarts):
            pair = rng.choice(x, size=2, replace=False)
            if pair[0] != pair[1]:
                inits.append((float(pair.min()), float(pair.max())))

    best: MixtureModel | None = None
    for init_means in inits:
        model = _fit_once(x, init_means)
        if best is None or model.loglik > best.loglik:
            best = model
    return best


def _fit_once(x: np.ndarray, init_means) -> MixtureModel:
    n = x.size
    weights = np.array([0.5, 0.5])
    means = np.array(init_means, dtype=float)
    variances = np.full(2, max(float(np.var(x)), VARIANCE_FLOOR))

    history: list[float] = []
    previous = -math.inf
    converged = False
    iterations = 0
    for iterations in range(1, EM_MAX_ITER + 1):
        responsibilities, loglik = _e_step(x, weights, means, variances)
        history.append(loglik)
        if loglik - previous < EM_TOL and iterations > 1:
            converged = True
            break
        previous = loglik

        counts = responsibilities.sum(axis=0)
        counts = np.maximum(counts, 1e-300)
        weights = counts / n
        means = (responsibilities * x[:, None]).sum(axis=0) / counts
        variances = (responsibilities * (x[:, None] - means[None, :]) ** 2).sum(axis=0) / counts
        variances = np.maximum(variances, VARIANCE_FLOOR)

    return MixtureModel(
        weights=(float(weights[0]), float(weights[1])),
        means=(float(means[0]), float(means[1])),
        variances=(float(variances[0]), float(variances[1])),
        loglik=history[-1],
        iterations=iterations,
        converged=converged,
        loglik_history=tuple(history),
    )


def aic(model: MixtureModel, n_params: int = MIXTURE_N_PARAMS) -> float:
    """Akaike information criterion: 2k - 2 log L."""
    return 2.0 * n_params - 2.0 * model.loglik


def classify_by_mixture(scores: Sequence[float], model: MixtureModel) -> list[bool]:
    """True for points whose posterior favors the higher-mean component.

    Exact posterior ties go to the higher-mean component, and the
    higher-mean rule makes the labels invariant to component order.
    """
    x = np.asarray(list(scores), dtype=float)
    log_joint = _log_densities(x, model.weights, model.means, model.variances)
    high = model.high_mean_component
    return list(log_joint[:, high] >= log_joint[:, 1 - high])


def f1_score(predicted: Sequence[bool], truth: Sequence[bool]) -> float:
    """F1 on the positive class; 0 when a denominator vanishes."""
    if len(predicted) != len(truth):
        raise ValueError(f"length mismatch: {len(predicted)} predictions vs {len(truth)} labels")
    if not any(truth):
        raise ValueError("truth has no positive labels")
    tp = sum(1 for p, t in zip(predicted, truth) if p and t)
    fp = sum(1 for p, t in zip(predicted, truth) if p and not t)
    fn = sum(1 for p, t in zip(predicted, truth) if not p and t)
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class LambdaSearchResult:
    """Outcome of the AIC grid search; grid rows are (lambda, aic)."""

    best_lambda: float
    grid: tuple[tuple[float, float], ...]
    scores_at_best: tuple[float, ...]


def lambda_grid(lo: float, hi: float, points: int) -> np.ndarray:
    if points < 2 or lo >= hi:
        raise ValueError(f"need points >= 2 and lo < hi, got {points} over [{lo}, {hi}]")
    return np.linspace(lo, hi, points)


def tune_lambda_grid(
    score_components: Sequence[tuple[float, float, float, float]],
    lo: float = 0.5,
    hi: float = 5.0,
    points: int = 90,
    seed: int = 0,
) -> LambdaSearchResult:
    """Pick the lambda whose recombined scores give the lowest mixture AIC.

    Pure recombination: the components were estimated once and no model
    call happens here. Failed fits at a grid point are recorded with an
    infinite AIC and skipped; ties go to the smaller lambda.
    """
    components = [tuple(float(v) for v in c) for c in score_components]
    grid_rows: list[tuple[float, float]] = []
    best_lambda: float | None = None
    best_aic = math.inf
    for lam in lambda_grid(lo, hi, points):
        lam = float(lam)
        scores = [recombine(*c, lam) for c in components]
        try:
            model = fit_gmm_em(scores, seed=seed)
        except (DegenerateDataError, InsufficientDataError):
            grid_rows.append((lam, math.inf))
            continue
        value = aic(model)
        grid_rows.append((lam, value))
        if value < best_aic:
            best_aic = value
            best_lambda = lam
    if best_lambda is None:
        raise LambdaSearchError(f"mixture fit failed at every lambda in [{lo}, {hi}]")
    return LambdaSearchResult(
        best_lambda=best_lambda,
        grid=tuple(grid_rows),
        scores_at_best=tuple(recombine(*c, best_lambda) for c in components),
    )
