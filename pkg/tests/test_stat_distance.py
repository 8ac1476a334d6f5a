"""Distances, trial-count floors, and likelihood-ratio discrimination."""

import math

import numpy as np
import pytest

from guesslab import (
    BadEpsilon,
    BadSampleSize,
    Command,
    CommandNotInSet,
    CommandWeights,
    DimensionMismatch,
    Distribution,
    HilbertSpace,
    MeasurementFn,
    Model,
    OutcomeRecord,
    SpectraMismatch,
    StateFn,
    UnitaryFn,
    Verdict,
    construct_orthogonal_pair,
    discriminate,
    indistinguishable_in_trials,
    log_likelihood_ratio,
    min_sample_size,
    outcome_distribution,
    spectral_norm_diff,
    statistical_distance,
    vector_distance_bound,
    weighted_model_distance,
)
from guesslab.errors import LengthMismatch
from guesslab.linalg import random_state, random_unitary, rotation_matrix


def _random_distribution(rng, size):
    raw = rng.random(size) + 1e-3
    return raw / raw.sum()


class TestStatisticalDistance:
    def test_frozen_examples(self):
        assert statistical_distance([1, 0], [0.5, 0.5]) == pytest.approx(
            math.pi / 4, abs=1e-12
        )
        assert statistical_distance([1, 0], [0, 1]) == pytest.approx(
            math.pi / 2, abs=1e-12
        )
        assert statistical_distance([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_is_a_metric_on_random_triples(self, rng):
        for _ in range(1000):
            size = int(rng.integers(2, 6))
            p = _random_distribution(rng, size)
            q = _random_distribution(rng, size)
            r = _random_distribution(rng, size)
            dpq = statistical_distance(p, q)
            assert dpq >= 0.0
            assert dpq == pytest.approx(statistical_distance(q, p), abs=1e-12)
            assert statistical_distance(p, p) == pytest.approx(0.0, abs=1e-7)
            assert dpq <= statistical_distance(p, r) + statistical_distance(r, q) + 1e-9

    def test_range_is_zero_to_quarter_circle(self, rng):
        for _ in range(200):
            p = _random_distribution(rng, 4)
            q = _random_distribution(rng, 4)
            assert 0.0 <= statistical_distance(p, q) <= math.pi / 2

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            statistical_distance([1, 0], [1, 0, 0])

    def test_distribution_must_sum_to_one(self):
        with pytest.raises(ValueError):
            statistical_distance([0.5, 0.6], [1, 0])


class TestIndistinguishability:
    def test_needs_square_root_many_trials(self):
        p, q = [1, 0], [0.5, 0.5]
        assert indistinguishable_in_trials(p, q, 1)
        assert not indistinguishable_in_trials(p, q, 2)

    def test_identical_distributions_never_become_distinguishable(self):
        assert indistinguishable_in_trials([0.5, 0.5], [0.5, 0.5], 10**9)

    def test_rejects_bad_trial_count(self):
        with pytest.raises(BadSampleSize):
            indistinguishable_in_trials([1, 0], [0, 1], 0)


class TestOverlapBound:
    def test_bound_holds_for_random_shared_dynamics(self, rng):
        b = Command("0")
        for _ in range(500):
            dim = int(rng.integers(2, 5))
            va = random_state(rng, dim)
            vb = random_state(rng, dim)
            u = random_unitary(rng, dim)
            q = random_unitary(rng, dim)
            terms = [(float(j), q[:, j:j + 1] @ q[:, j:j + 1].conj().T)
                     for j in range(dim)]
            m = MeasurementFn({b: terms})
            model_a = Model(HilbertSpace(dim), StateFn({b: va}), UnitaryFn({b: u}), m, (b,))
            model_b = Model(HilbertSpace(dim), StateFn({b: vb}), UnitaryFn({b: u}), m, (b,))
            d = statistical_distance(
                outcome_distribution(model_a, b), outcome_distribution(model_b, b)
            )
            assert d <= vector_distance_bound(va, vb) + 1e-9

    def test_orthogonal_fits_make_the_bound_maximally_loose(self):
        rec = OutcomeRecord({Command("0"): [(0.0, 1), (1.0, 1)]})
        first, second = construct_orthogonal_pair(rec)
        b = Command("0")
        actual = statistical_distance(
            outcome_distribution(first, b), outcome_distribution(second, b)
        )
        bound = vector_distance_bound(first.v(b), second.v(b))
        assert actual == pytest.approx(0.0, abs=1e-7)
        assert bound == pytest.approx(math.pi / 2, abs=1e-12)

    def test_bound_requires_unit_vectors(self):
        with pytest.raises(ValueError):
            vector_distance_bound([1.0, 1.0], [1.0, 0.0])
        with pytest.raises(DimensionMismatch):
            vector_distance_bound([1.0, 0.0], [1.0, 0.0, 0.0])


class TestRotationPairChain:
    """A small unitary gap caps the observable distance, saturated by rotations."""

    def test_rotation_gap_has_exactly_the_named_spectral_norm(self, rng):
        for _ in range(100):
            eps = float(rng.uniform(1e-4, 0.02))
            angle = 2.0 * math.asin(eps / 2.0)
            gap = spectral_norm_diff(np.eye(2), rotation_matrix(angle))
            assert gap == pytest.approx(eps, abs=1e-12)

    def test_observed_distance_stays_within_the_gap(self, rng):
        b = Command("0")
        v = np.array([1.0, 0.0], dtype=complex)
        m = MeasurementFn.diagonal({b: [0.0, 1.0]}, 2)
        for _ in range(100):
            eps = float(rng.uniform(1e-4, 0.02))
            angle = 2.0 * math.asin(eps / 2.0)
            model_a = Model(HilbertSpace(2), StateFn({b: v}),
                            UnitaryFn({b: np.eye(2, dtype=complex)}), m, (b,))
            model_b = Model(HilbertSpace(2), StateFn({b: v}),
                            UnitaryFn({b: rotation_matrix(angle)}), m, (b,))
            d = statistical_distance(
                outcome_distribution(model_a, b), outcome_distribution(model_b, b)
            )
            assert d <= eps + 1e-6
            assert d == pytest.approx(angle, abs=1e-6)


class TestMinSampleSize:
    @pytest.mark.parametrize("eps,expected", [
        (0.2, 25),
        (0.1, 100),
        (0.05, 400),
        (1.0, 1),
        (2.0, 1),
        (0.3, 12),
    ])
    def test_frozen_examples(self, eps, expected):
        assert min_sample_size(eps) == expected

    def test_float_noise_does_not_bump_the_ceiling(self):
        # 1 / 0.1**2 lands just below 100 in floats; the snap keeps it at 100
        assert min_sample_size(0.1) == 100
        assert min_sample_size(0.02) == 2500

    def test_monotone_in_the_gap(self, rng):
        epsilons = sorted(float(rng.uniform(0.01, 2.0)) for _ in range(200))
        sizes = [min_sample_size(e) for e in epsilons]
        assert all(a >= b for a, b in zip(sizes, sizes[1:]))

    @pytest.mark.parametrize("eps", [0.0, -0.1, 2.5, math.inf])
    def test_rejects_out_of_range(self, eps):
        with pytest.raises(BadEpsilon):
            min_sample_size(eps)


class TestLikelihoodRatio:
    def test_frozen_example(self):
        llr = log_likelihood_ratio([90, 10], [0.9, 0.1], [0.5, 0.5])
        assert llr == pytest.approx(90 * math.log(1.8) + 10 * math.log(0.2), abs=1e-9)
        assert llr == pytest.approx(36.81, abs=0.01)

    def test_verdicts(self):
        p, q = [0.9, 0.1], [0.5, 0.5]
        assert discriminate([90, 10], p, q) is Verdict.FAVOR_P
        assert discriminate([45, 55], p, q) is Verdict.FAVOR_Q
        assert discriminate([1, 0], p, q) is Verdict.UNDECIDED

    def test_default_threshold_is_nineteen_to_one(self):
        from guesslab.stat_distance import DEFAULT_LLR_THRESHOLD
        assert DEFAULT_LLR_THRESHOLD == pytest.approx(math.log(19.0))

    def test_zero_probabilities_are_smoothed_not_fatal(self):
        llr = log_likelihood_ratio([5, 5], [1.0, 0.0], [0.5, 0.5])
        assert math.isfinite(llr)
        assert llr < 0  # the impossible outcome crushes p's likelihood

    def test_rejects_empty_and_mismatched_tallies(self):
        with pytest.raises(BadSampleSize):
            log_likelihood_ratio([0, 0], [0.5, 0.5], [0.4, 0.6])
        with pytest.raises(LengthMismatch):
            log_likelihood_ratio([1, 2, 3], [0.5, 0.5], [0.4, 0.6])


class TestWeightedModelDistance:
    @pytest.fixture
    def pair(self):
        b0, b1 = Command("0"), Command("1")
        m = MeasurementFn.diagonal({b0: [0.0, 1.0], b1: [0.0, 1.0]}, 2)
        e0 = np.array([1.0, 0.0], dtype=complex)
        plus = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
        ident = UnitaryFn.identity([b0, b1], 2)
        model_a = Model(HilbertSpace(2), StateFn({b0: e0, b1: e0}), ident, m, (b0, b1))
        model_b = Model(HilbertSpace(2), StateFn({b0: e0, b1: plus}), ident, m, (b0, b1))
        return model_a, model_b

    def test_weights_average_per_command_distances(self, pair):
        model_a, model_b = pair
        b0, b1 = model_a.commands
        d_only_b1 = weighted_model_distance(model_a, model_b, CommandWeights({b1: 1.0}))
        assert d_only_b1 == pytest.approx(math.pi / 4, abs=1e-9)
        uniform = weighted_model_distance(
            model_a, model_b, CommandWeights.uniform([b0, b1])
        )
        assert uniform == pytest.approx(math.pi / 8, abs=1e-9)

    def test_record_and_model_routes_agree_on_exact_frequencies(self, pair):
        model_a, model_b = pair
        b1 = model_a.commands[1]
        record = OutcomeRecord({b1: [(0.0, 1), (1.0, 1)]})
        weights = CommandWeights({b1: 1.0})
        via_record = weighted_model_distance(model_a, record, weights)
        via_model = weighted_model_distance(model_a, model_b, weights)
        assert via_record == pytest.approx(via_model, abs=1e-7)

    def test_alignment_is_by_eigenvalue_not_position(self, pair):
        model_a, _ = pair
        b0 = model_a.commands[0]
        # same outcomes listed in the opposite order: distance must be zero
        record = OutcomeRecord({b0: [(1.0, 1), (0.0, 9999999)]})
        d = weighted_model_distance(model_a, record, CommandWeights({b0: 1.0}))
        assert d == pytest.approx(0.0, abs=1e-3)

    def test_unknown_record_value_is_a_spectra_mismatch(self, pair):
        model_a, _ = pair
        b0 = model_a.commands[0]
        record = OutcomeRecord({b0: [(5.0, 1)]})
        with pytest.raises(SpectraMismatch):
            weighted_model_distance(model_a, record, CommandWeights({b0: 1.0}))

    def test_weight_on_absent_command_is_rejected(self, pair):
        model_a, _ = pair
        record = OutcomeRecord({model_a.commands[0]: [(0.0, 1)]})
        with pytest.raises(CommandNotInSet):
            weighted_model_distance(
                model_a, record, CommandWeights({model_a.commands[1]: 1.0})
            )


class TestValidation:
    def test_distribution_rejects_negative_entries(self):
        with pytest.raises(ValueError):
            Distribution((0.5, 0.6, -0.1))

    def test_distribution_from_counts(self):
        d = Distribution.from_counts([3, 1])
        assert d.probs == pytest.approx((0.75, 0.25))

    def test_command_weights_must_normalize(self):
        with pytest.raises(ValueError):
            CommandWeights({Command("0"): 0.4})
        with pytest.raises(ValueError):
            CommandWeights({Command("0"): 1.5, Command("1"): -0.5})

    def test_uniform_weights(self):
        w = CommandWeights.uniform([Command("0"), Command("1")])
        assert dict(w.items())[Command("0")] == pytest.approx(0.5)
