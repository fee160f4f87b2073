"""Scikit-learn style wrappers around the scoring pipeline.

Sentence generation and PMI scoring are transformers; the mixture and
the end-to-end classifier follow the fit/predict contract, so the
whole thing drops into sklearn pipelines and model-selection tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from .core import Triple
from .mixture import (
    MIXTURE_N_PARAMS,
    aic,
    classify_by_mixture,
    fit_gmm_em,
    tune_lambda_grid,
)
from .pipeline import RunConfig, score_triples
from .pmi import PmiScore
from .sentences import MODE_COHERENCY, CandidateSentence


def _check_triples(X) -> list[Triple]:
    triples = list(X)
    for item in triples:
        if not isinstance(item, Triple):
            raise TypeError(f"expected Triple instances, got {type(item).__name__}")
    return triples


def _check_scores(X) -> np.ndarray:
    x = np.asarray(X, dtype=float)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D score array, got shape {x.shape}")
    return x


class SentenceGenerator(BaseEstimator, TransformerMixin):
    """Triple -> CandidateSentence under a fixed generation mode."""

    def __init__(self, mode="template", causal_backend=None, registry=None, tagger=None):
        self.mode = mode
        self.causal_backend = causal_backend
        self.registry = registry
        self.tagger = tagger

    def fit(self, X, y=None):
        self._config().validate_for_generation()
        return self

    def transform(self, X) -> list[CandidateSentence]:
        from .pipeline import sentence_for

        config = self._config()
        config.validate_for_generation()
        return [sentence_for(triple, config) for triple in _check_triples(X)]

    def _config(self) -> RunConfig:
        return RunConfig(
            mode=self.mode,
            causal_backend=self.causal_backend,
            registry=self.registry,
            tagger=self.tagger,
        )


class PmiScorer(BaseEstimator, TransformerMixin):
    """Triple -> the four greedy span log-likelihood components.

    transform returns an (n, 4) array ordered (cond_tail, marg_tail,
    cond_head, marg_head); score_samples recombines them at ``lam``.
    """

    def __init__(
        self,
        masked_backend=None,
        causal_backend=None,
        mode="template",
        lam=1.0,
        concurrency=1,
        registry=None,
        tagger=None,
    ):
        self.masked_backend = masked_backend
        self.causal_backend = causal_backend
        self.mode = mode
        self.lam = lam
        self.concurrency = concurrency
        self.registry = registry
        self.tagger = tagger

    def fit(self, X, y=None):
        self._config().validate_for_scoring()
        return self

    def transform(self, X) -> np.ndarray:
        config = self._config()
        config.validate_for_scoring()
        scored = score_triples(config, _check_triples(X))
        return np.asarray([components for _, components in scored], dtype=float)

    def score_samples(self, X) -> np.ndarray:
        components = self.transform(X)
        return np.asarray(
            [PmiScore.from_components(*row, self.lam).value for row in components], dtype=float
        )

    def _config(self) -> RunConfig:
        return RunConfig(
            mode=self.mode,
            masked_backend=self.masked_backend,
            causal_backend=self.causal_backend,
            concurrency=self.concurrency,
            registry=self.registry,
            tagger=self.tagger,
        )


class GaussianMixture1D(BaseEstimator):
    """Two-component 1-D Gaussian mixture with the higher-mean-is-positive rule."""

    def __init__(self, seed=0, restarts=0):
        self.seed = seed
        self.restarts = restarts

    def fit(self, X, y=None):
        model = fit_gmm_em(_check_scores(X), seed=self.seed, restarts=self.restarts)
        self.model_ = model
        self.weights_ = np.asarray(model.weights)
        self.means_ = np.asarray(model.means)
        self.variances_ = np.asarray(model.variances)
        self.converged_ = model.converged
        self.n_iter_ = model.iterations
        return self

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        return np.asarray(classify_by_mixture(_check_scores(X), self.model_), dtype=bool)

    def aic(self, X=None) -> float:
        self._check_fitted()
        return aic(self.model_, MIXTURE_N_PARAMS)

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before predict/aic")


class TripleValidityClassifier(BaseEstimator, ClassifierMixin):
    """Unsupervised end-to-end triple classifier.

    fit scores the triples, picks lambda (AIC grid search unless ``lam``
    is fixed), and fits the mixture on those scores; transductive labels
    for the fitted set land in ``labels_``. predict scores new triples
    and reuses the fitted mixture.
    """

    def __init__(
        self,
        masked_backend=None,
        causal_backend=None,
        mode=MODE_COHERENCY,
        lam=None,
        grid_lo=0.5,
        grid_hi=5.0,
        grid_points=90,
        seed=0,
        concurrency=1,
        registry=None,
        tagger=None,
    ):
        self.masked_backend = masked_backend
        self.causal_backend = causal_backend
        self.mode = mode
        self.lam = lam
        self.grid_lo = grid_lo
        self.grid_hi = grid_hi
        self.grid_points = grid_points
        self.seed = seed
        self.concurrency = concurrency
        self.registry = registry
        self.tagger = tagger

    def fit(self, X, y=None):
        config = self._config()
        config.validate_for_scoring()
        triples = _check_triples(X)
        scored = score_triples(config, triples)
        components = [c for _, c in scored]
        if self.lam is None:
            search = tune_lambda_grid(
                components, self.grid_lo, self.grid_hi, self.grid_points, self.seed
            )
            self.lambda_ = search.best_lambda
            self.grid_ = search.grid
            scores = np.asarray(search.scores_at_best)
        else:
            self.lambda_ = float(self.lam)
            self.grid_ = None
            scores = np.asarray(
                [PmiScore.from_components(*c, self.lambda_).value for c in components]
            )
        self.mixture_ = GaussianMixture1D(seed=self.seed).fit(scores)
        self.scores_ = scores
        self.labels_ = self.mixture_.predict(scores)
        return self

    def score_samples(self, X) -> np.ndarray:
        self._check_fitted()
        config = self._config()
        scored = score_triples(config, _check_triples(X))
        return np.asarray(
            [PmiScore.from_components(*c, self.lambda_).value for _, c in scored]
        )

    def decision_function(self, X) -> np.ndarray:
        return self.score_samples(X)

    def predict(self, X) -> np.ndarray:
        return self.mixture_.predict(self.score_samples(X))

    def _check_fitted(self):
        if not hasattr(self, "lambda_"):
            raise NotFittedError("call fit before predict/score_samples")

    def _config(self) -> RunConfig:
        return RunConfig(
            mode=self.mode,
            masked_backend=self.masked_backend,
            causal_backend=self.causal_backend,
            seed=self.seed,
            concurrency=self.concurrency,
            registry=self.registry,
            tagger=self.tagger,
        )
