import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grouprec.cbn import (CbnHyperparams, CbnModel, TrainingDivergedError, TrainingExample,
                          compute_contribution_rates, example_gradients, example_loss,
                          rejection_probability, sample_negatives, selection_probability, train)
from grouprec.data import SyntheticSpec, generate_synthetic

from conftest import make_dataset

HP = CbnHyperparams(mu1=1.5, sigma1_sq=2.0, mu2=-0.5, sigma2_sq=0.5)


def one_cell_model(pi, I, S):
    return CbnModel(np.array([[I]]), np.array([[S]]), np.array([[pi]]))


def central_diff(fn, x, h=1e-5):
    return (fn(x + h) - fn(x - h)) / (2 * h)


def fd_gradients(ex, pi, I, S, hp, h=1e-5):
    """Finite-difference oracle built only on example_loss."""
    dI = central_diff(lambda v: example_loss(ex, one_cell_model(pi, v, S), hp), I, h)
    dS = central_diff(lambda v: example_loss(ex, one_cell_model(pi, I, v), hp), S, h)
    return dI, dS


class TestContributionRates:
    def test_direct_shares(self):
        ds = make_dataset([(0, 0), (0, 1), (0, 2), (0, 3)], [0, 0, 1, 2], 3)
        np.testing.assert_allclose(compute_contribution_rates(ds)[0], [0.5, 0.25, 0.25])

    def test_idle_user_uniform(self):
        ds = make_dataset([(0, 0)], [0], 4, num_users=2)
        np.testing.assert_allclose(compute_contribution_rates(ds)[1], [0.25] * 4)

    def test_rows_stochastic(self, rng):
        inter = {(int(u), int(j)) for u, j in rng.integers(0, [30, 40], size=(300, 2))}
        ds = make_dataset(inter, rng.integers(0, 6, 40), 6, num_users=35)
        pi = compute_contribution_rates(ds)
        assert np.all((pi >= 0) & (pi <= 1))
        np.testing.assert_allclose(pi.sum(axis=1), 1.0, atol=1e-9)


class TestSelectionProbability:
    def test_zero_logit(self):
        assert selection_probability(1.0, 0.0, 0.0) == 0.5
        assert selection_probability(0.5, 2.0, -1.0) == 0.5

    def test_saturated(self):
        assert selection_probability(1.0, 45.0, 12.0) >= 1 - 1e-20

    def test_no_overflow(self):
        with np.errstate(over="raise"):
            hi = selection_probability(1.0, 1000.0, 0.0)
            lo = selection_probability(1.0, -1000.0, 0.0)
        assert hi == 1.0 and lo == 0.0

    def test_vectorized_matches_scalar(self, rng):
        z = rng.uniform(-30, 30, 50)
        vec = selection_probability(1.0, z, 0.0)
        assert np.all(vec == [selection_probability(1.0, float(x), 0.0) for x in z])

    @given(st.floats(-1e3, 1e3), st.floats(0, 1), st.floats(-1e3, 1e3))
    def test_completeness(self, I, pi, S):
        assert selection_probability(pi, I, S) + rejection_probability(pi, I, S) == 1.0


class TestLoss:
    def test_neutral_positive(self):
        ex = TrainingExample(0, 0, 0, 1)
        m = one_cell_model(1.0, HP.mu1, -HP.mu1)
        hp = replace(HP, mu2=-HP.mu1)
        assert example_loss(ex, m, hp) == pytest.approx(math.log(2))

    def test_neutral_negative(self):
        ex = TrainingExample(0, 0, 0, 0)
        hp = replace(HP, mu2=-HP.mu1)
        assert example_loss(ex, one_cell_model(1.0, HP.mu1, -HP.mu1), hp) == pytest.approx(math.log(2))

    def test_prior_only(self):
        hp = CbnHyperparams(mu1=0.0, sigma1_sq=4.0, mu2=60.0, sigma2_sq=1.0)
        ex = TrainingExample(0, 0, 0, 1)
        # I one standard deviation above its mean, p ~ 1
        assert example_loss(ex, one_cell_model(1.0, 2.0, 60.0), hp) == pytest.approx(0.5, abs=1e-12)

    def test_clamped_log(self):
        ex = TrainingExample(0, 0, 0, 0)
        hp = CbnHyperparams(mu1=500.0, sigma1_sq=1.0, mu2=0.0, sigma2_sq=1.0)
        loss = example_loss(ex, one_cell_model(1.0, 500.0, 0.0), hp)
        assert loss == pytest.approx(-math.log(1e-12), rel=1e-6)


class TestGradients:
    def test_plug_in_positive(self):
        g = example_gradients(TrainingExample(0, 0, 0, 1), one_cell_model(1.0, HP.mu1, -HP.mu1),
                              replace(HP, mu2=-HP.mu1))
        assert g == pytest.approx((-0.5, -0.5))

    def test_plug_in_negative(self):
        g = example_gradients(TrainingExample(0, 0, 0, 0), one_cell_model(0.0, HP.mu1, 0.0),
                              replace(HP, mu2=0.0))
        assert g == pytest.approx((0.0, 0.5))

    def test_matches_finite_differences(self, rng):
        for _ in range(200):
            pi, I, S = rng.uniform(0, 1), rng.normal(0, 4), rng.normal(0, 4)
            ex = TrainingExample(0, 0, 0, int(rng.integers(0, 2)))
            analytic = example_gradients(ex, one_cell_model(pi, I, S), HP)
            numeric = fd_gradients(ex, pi, I, S, HP)
            for a, n in zip(analytic, numeric):
                assert abs(a - n) <= 1e-4 * max(abs(a), abs(n), 1e-3)


class TestNegatives:
    def test_saturated_user_gets_none(self):
        ds = make_dataset([(0, 0), (0, 1), (0, 2), (1, 0)], [0, 0, 0], 1)
        negs = sample_negatives(ds, 1.0, seed=0)
        assert len(negs) == 1 and negs[0].user == 1 and negs[0].item in (1, 2)

    def test_zero_ratio(self):
        ds = make_dataset([(0, 0)], [0, 0], 1)
        assert sample_negatives(ds, 0.0, seed=0) == []

    def test_count_and_membership(self):
        ds = make_dataset([(0, j) for j in range(10)], [0] * 110, 1)
        negs = sample_negatives(ds, 1.0, seed=3)
        assert len(negs) == 10
        items = [n.item for n in negs]
        assert len(set(items)) == 10 and not set(items) & set(range(10))
        assert all(n.label == 0 for n in negs)

    def test_ceiling(self):
        ds = make_dataset([(0, j) for j in range(30)], [0] * 100, 1)
        assert len(sample_negatives(ds, 0.1, seed=0)) == 3
        assert len(sample_negatives(ds, 0.11, seed=0)) == 4

    def test_deterministic(self):
        ds = make_dataset([(0, j) for j in range(5)], [0] * 50, 1)
        assert sample_negatives(ds, 2.0, seed=9) == sample_negatives(ds, 2.0, seed=9)


@pytest.fixture(scope="module")
def small_synthetic():
    spec = SyntheticSpec(num_users=60, num_items=40, num_topics=4, seed=1)
    return spec, generate_synthetic(spec)


class TestTrain:
    def test_huge_threshold_stops_after_one_epoch(self, small_synthetic):
        _, (ds, _, _) = small_synthetic
        _, rep = train(ds, CbnHyperparams(convergence_threshold=1e9, seed=0))
        assert rep.epochs_run == 1 and rep.converged

    def test_zero_learning_rate_is_identity(self, small_synthetic):
        _, (ds, _, _) = small_synthetic
        hp = CbnHyperparams(mu1=3.0, mu2=-2.0, learning_rate=0.0, max_epochs=3)
        model, _ = train(ds, hp)
        assert np.all(model.I == 3.0) and np.all(model.S == -2.0)

    def test_tight_priors_pin_parameters(self, small_synthetic):
        _, (ds, _, _) = small_synthetic
        hp = CbnHyperparams(mu1=2.0, sigma1_sq=1e-4, mu2=-1.0, sigma2_sq=1e-4,
                            learning_rate=1e-4, max_epochs=5)
        model, _ = train(ds, hp)
        np.testing.assert_allclose(model.I, 2.0, atol=1e-3)
        np.testing.assert_allclose(model.S, -1.0, atol=1e-3)

    def test_outputs_finite_and_pi_fixed(self, small_synthetic):
        _, (ds, _, _) = small_synthetic
        model, rep = train(ds, CbnHyperparams(mu1=0, sigma1_sq=25, mu2=0, sigma2_sq=1, max_epochs=20))
        assert np.isfinite(model.I).all() and np.isfinite(model.S).all()
        np.testing.assert_array_equal(model.pi, compute_contribution_rates(ds))
        assert all(math.isfinite(j) for j in rep.objective_trace)
        assert len(rep.objective_trace) == rep.epochs_run

    def test_objective_mostly_decreasing(self, small_synthetic):
        spec, (ds, _, _) = small_synthetic
        hp = CbnHyperparams(mu1=spec.mu1, sigma1_sq=spec.sigma1_sq, mu2=spec.mu2,
                            sigma2_sq=spec.sigma2_sq, convergence_threshold=1e-9, max_epochs=60)
        _, rep = train(ds, hp)
        tr = np.asarray(rep.objective_trace)
        assert np.mean(np.diff(tr) <= 0) >= 0.9
        assert tr[-1] < rep.initial_objective

    def test_deterministic(self, small_synthetic):
        _, (ds, _, _) = small_synthetic
        hp = CbnHyperparams(mu1=0, sigma1_sq=25, mu2=0, sigma2_sq=1, max_epochs=10, seed=4)
        a, _ = train(ds, hp)
        b, _ = train(ds, hp)
        np.testing.assert_array_equal(a.I, b.I)
        np.testing.assert_array_equal(a.S, b.S)

    def test_divergence_names_epoch(self, small_synthetic):
        _, (ds, _, _) = small_synthetic
        # step size far beyond 2 * sigma^2 makes the prior pull blow up
        hp = CbnHyperparams(mu1=0, sigma1_sq=1e-3, mu2=0, sigma2_sq=1e-3, learning_rate=1.0)
        with pytest.raises(TrainingDivergedError, match=r"epoch \d+"):
            train(ds, hp)

    def test_empty_dataset_rejected(self):
        ds = make_dataset([], [0], 1, num_users=1)
        with pytest.raises(ValueError):
            train(ds, CbnHyperparams())


def test_model_json_round_trip(rng):
    m = CbnModel(rng.normal(size=(7, 3)) * 1e3, rng.normal(size=(7, 3)) / 7,
                 rng.dirichlet(np.ones(3), size=7))
    back = CbnModel.from_json(m.to_json(CbnHyperparams()))
    for name in ("I", "S", "pi"):
        np.testing.assert_allclose(getattr(back, name), getattr(m, name), rtol=0, atol=1e-15)


def test_hyperparam_validation():
    with pytest.raises(ValueError):
        CbnHyperparams(sigma1_sq=0)
    with pytest.raises(ValueError):
        CbnHyperparams(convergence_threshold=0)
    with pytest.raises(ValueError):
        CbnHyperparams(negative_ratio=-1)
