import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats
from sklearn.metrics import f1_score as sklearn_f1

from helpers import CountingBackend
from triplemine.backends import make_lookup_backend
from triplemine.errors import DegenerateDataError, InsufficientDataError, LambdaSearchError
from triplemine.mixture import (
    MIXTURE_N_PARAMS,
    MixtureModel,
    aic,
    classify_by_mixture,
    f1_score,
    fit_gmm_em,
    lambda_grid,
    tune_lambda_grid,
)
from triplemine.pmi import recombine


def planted_scores(seed=7, n_per=200, means=(0.0, 10.0)):
    rng = np.random.default_rng(seed)
    low = rng.normal(means[0], 1.0, n_per)
    high = rng.normal(means[1], 1.0, n_per)
    scores = np.concatenate([low, high])
    labels = np.concatenate([np.zeros(n_per, bool), np.ones(n_per, bool)])
    return scores, labels


class TestFitGmmEm:
    def test_planted_clusters_recovered(self):
        scores, labels = planted_scores()
        model = fit_gmm_em(scores, seed=0)
        assert sorted(model.means) == pytest.approx([0.0, 10.0], abs=0.5)
        predicted = classify_by_mixture(scores, model)
        accuracy = np.mean(np.asarray(predicted) == labels)
        assert accuracy >= 0.99

    def test_loglik_monotone(self):
        scores, _ = planted_scores()
        model = fit_gmm_em(scores, seed=0)
        history = np.asarray(model.loglik_history)
        assert np.all(np.diff(history) >= -1e-9)
        assert model.converged

    def test_two_point_clusters_hit_variance_floor(self):
        model = fit_gmm_em([0.0, 0.0, 10.0, 10.0])
        assert sorted(model.means) == pytest.approx([0.0, 10.0], abs=1e-6)
        assert model.variances[0] == pytest.approx(1e-6)
        assert model.variances[1] == pytest.approx(1e-6)

    def test_constant_data_is_degenerate(self):
        with pytest.raises(DegenerateDataError):
            fit_gmm_em([3.0, 3.0, 3.0, 3.0])

    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError):
            fit_gmm_em([1.0, 2.0, 3.0])

    def test_non_finite_scores_rejected(self):
        with pytest.raises(ValueError):
            fit_gmm_em([1.0, 2.0, float("nan"), 4.0])

    def test_deterministic_given_data_and_seed(self):
        scores, _ = planted_scores(seed=3)
        assert fit_gmm_em(scores, seed=5) == fit_gmm_em(scores, seed=5)

    def test_weights_sum_to_one(self):
        scores, _ = planted_scores()
        model = fit_gmm_em(scores)
        assert model.weights[0] + model.weights[1] == pytest.approx(1.0, abs=1e-9)
        assert model.weights[0] > 0 and model.weights[1] > 0

    def test_restarts_stay_deterministic(self):
        scores, _ = planted_scores(seed=11)
        a = fit_gmm_em(scores, seed=2, restarts=3)
        b = fit_gmm_em(scores, seed=2, restarts=3)
        assert a == b

    def test_skewed_quantile_init_still_splits(self):
        # q25 == q75 here, which falls back to min/max initialization
        data = [0.0] * 20 + [10.0, 10.5, 9.5, 10.2]
        model = fit_gmm_em(data)
        assert sorted(model.means) == pytest.approx([0.0, 10.05], abs=0.5)


class TestAic:
    def test_formula(self):
        model = _model_with_loglik(0.0)
        assert aic(model) == 10.0
        assert aic(_model_with_loglik(-100.0)) == 210.0

    def test_two_components_beat_one_on_bimodal_data(self):
        scores, _ = planted_scores()
        two = aic(fit_gmm_em(scores), MIXTURE_N_PARAMS)
        # independent single-Gaussian fit: MLE mean/variance, k = 2
        mu, sigma = float(np.mean(scores)), float(np.std(scores))
        one_loglik = float(np.sum(stats.norm.logpdf(scores, mu, sigma)))
        one = 2 * 2 - 2 * one_loglik
        assert two < one


def _model_with_loglik(loglik):
    return MixtureModel(
        weights=(0.5, 0.5),
        means=(0.0, 1.0),
        variances=(1.0, 1.0),
        loglik=loglik,
        iterations=1,
        converged=True,
        loglik_history=(loglik,),
    )


class TestClassifyByMixture:
    def test_high_scores_labeled_true(self):
        scores, labels = planted_scores()
        model = fit_gmm_em(scores)
        predicted = np.asarray(classify_by_mixture(scores, model))
        assert np.mean(predicted == labels) >= 0.99

    def test_invariant_under_component_relabeling(self):
        scores, _ = planted_scores()
        model = fit_gmm_em(scores)
        swapped = MixtureModel(
            weights=model.weights[::-1],
            means=model.means[::-1],
            variances=model.variances[::-1],
            loglik=model.loglik,
            iterations=model.iterations,
            converged=model.converged,
            loglik_history=model.loglik_history,
        )
        assert classify_by_mixture(scores, model) == classify_by_mixture(scores, swapped)

    def test_posterior_tie_goes_to_higher_mean(self):
        model = _model_with_loglik(0.0)  # symmetric components around 0.5
        assert classify_by_mixture([0.5], model) == [True]

    def test_uniform_labels_when_one_component_dominates(self):
        model = MixtureModel(
            weights=(0.5, 0.5),
            means=(0.0, 100.0),
            variances=(1.0, 1.0),
            loglik=0.0,
            iterations=1,
            converged=True,
            loglik_history=(0.0,),
        )
        assert classify_by_mixture([0.0, 1.0, -2.0], model) == [False, False, False]


class TestF1Score:
    def test_perfect(self):
        assert f1_score([True, False, True], [True, False, True]) == 1.0

    def test_two_thirds(self):
        # TP=2, FP=1, FN=1
        predicted = [True, True, True, False]
        truth = [True, True, False, True]
        assert f1_score(predicted, truth) == pytest.approx(2 / 3)

    def test_no_predicted_positives_is_zero(self):
        assert f1_score([False, False], [True, False]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            f1_score([True], [True, False])

    def test_no_true_positives_in_truth(self):
        with pytest.raises(ValueError):
            f1_score([True], [False])

    @given(
        st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=60).filter(
            lambda pairs: any(t for _, t in pairs)
        )
    )
    def test_matches_sklearn(self, pairs):
        predicted = [p for p, _ in pairs]
        truth = [t for _, t in pairs]
        expected = sklearn_f1(truth, predicted, zero_division=0)
        assert f1_score(predicted, truth) == pytest.approx(expected)


def synthetic_components(seed=13, n_per=60):
    """Two groups whose separation under recombination depends on lambda."""
    rng = np.random.default_rng(seed)
    components = []
    for _ in range(n_per):  # "valid": conditional beats marginal
        cond = rng.normal(-1.0, 0.2)
        components.append((cond, cond - 3.0 + rng.normal(0, 0.3), cond - 0.5, cond - 3.2 + rng.normal(0, 0.3)))
    for _ in range(n_per):  # "invalid": no lift
        cond = rng.normal(-4.0, 0.2)
        components.append((cond, cond + rng.normal(0, 0.3), cond - 0.3, cond + rng.normal(0, 0.3)))
    return components


class TestLambdaGrid:
    def test_two_points_is_just_the_endpoints(self):
        assert list(lambda_grid(0.5, 5.0, 2)) == [0.5, 5.0]

    def test_default_grid_shape(self):
        grid = lambda_grid(0.5, 5.0, 90)
        assert len(grid) == 90
        assert grid[0] == 0.5 and grid[-1] == 5.0

    def test_bad_grid_rejected(self):
        with pytest.raises(ValueError):
            lambda_grid(5.0, 0.5, 90)
        with pytest.raises(ValueError):
            lambda_grid(0.5, 5.0, 1)


class TestTuneLambdaGrid:
    def test_matches_brute_force_oracle(self):
        components = synthetic_components()
        result = tune_lambda_grid(components, 0.5, 5.0, 90, seed=0)

        best_lambda, best_aic = None, math.inf
        oracle_grid = []
        for lam in np.linspace(0.5, 5.0, 90):
            scores = [recombine(*c, float(lam)) for c in components]
            value = aic(fit_gmm_em(scores, seed=0))
            oracle_grid.append((float(lam), value))
            if value < best_aic:
                best_lambda, best_aic = float(lam), value
        assert result.best_lambda == best_lambda
        assert result.grid == tuple(oracle_grid)
        assert list(result.scores_at_best) == [recombine(*c, best_lambda) for c in components]

    def test_no_backend_calls_during_recombination(self):
        backend = CountingBackend(make_lookup_backend(default=0.5))
        components = synthetic_components()
        before = (backend.masked_calls, backend.causal_calls)
        tune_lambda_grid(components, 0.5, 5.0, 30)
        assert (backend.masked_calls, backend.causal_calls) == before == (0, 0)

    def test_aic_tie_prefers_smaller_lambda(self):
        # every lambda yields the same +/-lambda two-spike data, so all
        # grid AICs are equal and the first grid point must win
        components = [(1.0, 0.0, 1.0, 0.0)] * 10 + [(-1.0, 0.0, -1.0, 0.0)] * 10
        result = tune_lambda_grid(components, 0.5, 5.0, 10)
        values = [value for _, value in result.grid]
        assert max(values) - min(values) < 1e-6
        assert result.best_lambda == 0.5

    def test_all_failures_is_a_search_error(self):
        components = [(0.0, 0.0, 0.0, 0.0)] * 10  # constant scores at every lambda
        with pytest.raises(LambdaSearchError):
            tune_lambda_grid(components, 0.5, 5.0, 5)

    def test_failed_grid_points_are_recorded_and_skipped(self):
        # scores collapse to a constant exactly at lambda=1 (1*1-0 == 1*2-1),
        # so that row is recorded as inf while the rest of the grid survives
        components = [(1.0, 0.0, 1.0, 0.0)] * 10 + [(2.0, 1.0, 2.0, 1.0)] * 10
        result = tune_lambda_grid(components, 0.5, 1.5, 3)
        assert [lam for lam, _ in result.grid] == [0.5, 1.0, 1.5]
        assert result.grid[1][1] == math.inf
        assert math.isfinite(result.grid[0][1]) and math.isfinite(result.grid[2][1])
        assert result.best_lambda == 0.5
