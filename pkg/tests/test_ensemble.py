import io
import json

import numpy as np
import pytest

from appkeep import ensemble
from appkeep.ensemble import (
    BagConfig,
    ModelFormatError,
    aggregate_importance,
    classify,
    member_seed,
    predict_score,
    sample_balanced,
    train_bag,
)
from appkeep.ingest import Label

SMALL_CHOICES = dict(depth_choices=(2, 3), tree_count_choices=(8, 16))


@pytest.fixture(scope="module")
def toy_data():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(200, 5))
    X[:, 2] = rng.integers(0, 2, size=200)  # planted binary signal
    flip = rng.random(200) < 0.15
    y = np.where(flip, 1 - X[:, 2], X[:, 2])
    return X, y.astype(float)


@pytest.fixture(scope="module")
def toy_bag(toy_data):
    X, y = toy_data
    config = BagConfig(n_classifiers=3, subset_size=100, master_seed=42, **SMALL_CHOICES)
    return train_bag(X, y, config)


class TestSampleBalanced:
    def test_equal_halves(self):
        y = np.array([1, 1, 0, 0, 0, 0, 0, 1])
        idx = sample_balanced(y, 10, np.random.default_rng(0))
        assert len(idx) == 10
        assert (y[idx] == 1).sum() == 5
        assert (y[idx] == 0).sum() == 5

    def test_seeded_reproducibility(self):
        y = np.array([1, 0, 1, 0, 1, 0])
        a = sample_balanced(y, 8, np.random.default_rng(9))
        b = sample_balanced(y, 8, np.random.default_rng(9))
        assert np.array_equal(a, b)

    def test_minority_duplicates_expected(self):
        y = np.array([1] + [0] * 99)
        idx = sample_balanced(y, 40, np.random.default_rng(1))
        assert (y[idx] == 1).sum() == 20  # the single positive drawn repeatedly

    def test_missing_class_rejected(self):
        with pytest.raises(ValueError):
            sample_balanced(np.zeros(10), 4, np.random.default_rng(0))

    def test_odd_subset_rejected(self):
        with pytest.raises(ValueError):
            sample_balanced(np.array([0, 1]), 5, np.random.default_rng(0))


class TestMemberSeed:
    def test_stable(self):
        assert member_seed(7, 3) == member_seed(7, 3)

    def test_adding_members_never_reshuffles_earlier_ones(self):
        first_five = [member_seed(123, i) for i in range(5)]
        assert [member_seed(123, i) for i in range(8)][:5] == first_five

    def test_spread(self):
        seeds = {member_seed(0, i) for i in range(100)}
        assert len(seeds) == 100


class TestTrainBag:
    def test_member_count_and_hyperparameter_choices(self, toy_bag):
        assert len(toy_bag.members) == 3
        for member in toy_bag.members:
            assert member.params.max_depth in (2, 3)
            assert member.params.n_trees in (8, 16)

    def test_default_choice_lists(self):
        config = BagConfig(n_classifiers=1, subset_size=2)
        assert config.depth_choices == (2, 3)
        assert config.tree_count_choices == (256, 512)

    def test_deterministic_across_jobs(self, toy_data):
        X, y = toy_data
        config = BagConfig(n_classifiers=4, subset_size=60, master_seed=5, **SMALL_CHOICES)
        serial = train_bag(X, y, config, jobs=1)
        threaded = train_bag(X, y, config, jobs=4)
        for a, b in zip(serial.members, threaded.members):
            assert [t.to_nodes() for t in a.trees] == [t.to_nodes() for t in b.trees]

    def test_balanced_member_samples(self, toy_data):
        # Reproduce the member's sampling stream and check class balance.
        _, y = toy_data
        config = BagConfig(n_classifiers=2, subset_size=50, master_seed=3, **SMALL_CHOICES)
        for i in range(config.n_classifiers):
            rng = np.random.default_rng(member_seed(config.master_seed, i))
            rng.integers(0, len(config.depth_choices))
            rng.integers(0, len(config.tree_count_choices))
            idx = sample_balanced(y, config.subset_size, rng)
            assert (y[idx] == 1).sum() == 25
            assert (y[idx] == 0).sum() == 25

    def test_invalid_config_rejected(self, toy_data):
        X, y = toy_data
        with pytest.raises(ValueError):
            train_bag(X, y, BagConfig(n_classifiers=0, subset_size=10))
        with pytest.raises(ValueError):
            train_bag(X, y, BagConfig(n_classifiers=1, subset_size=11))


class TestPredictScore:
    def test_single_member_bag_equals_member(self, toy_data):
        X, y = toy_data
        config = BagConfig(n_classifiers=1, subset_size=40, master_seed=8, **SMALL_CHOICES)
        bag = train_bag(X, y, config)
        from appkeep.gbdt import predict_proba

        member_scores = predict_proba(bag.members[0], X[:20])
        assert np.array_equal(predict_score(bag, X[:20]), member_scores)

    def test_mean_of_member_probabilities(self, toy_bag, toy_data):
        X, _ = toy_data
        from appkeep.gbdt import predict_proba

        per_member = np.vstack([predict_proba(m, X[:10]) for m in toy_bag.members])
        scores = predict_score(toy_bag, X[:10])
        assert np.allclose(scores, per_member.mean(axis=0), atol=1e-15, rtol=0)
        assert (scores >= per_member.min(axis=0)).all()
        assert (scores <= per_member.max(axis=0)).all()

    def test_invariant_to_member_ordering(self, toy_bag, toy_data):
        X, _ = toy_data
        scores = predict_score(toy_bag, X[:25])
        reversed_bag = ensemble.BagModel(
            config=toy_bag.config,
            members=list(reversed(toy_bag.members)),
            schema=None,
        )
        assert np.array_equal(scores, predict_score(reversed_bag, X[:25]))

    def test_width_mismatch_rejected(self, toy_bag):
        with pytest.raises(ValueError):
            predict_score(toy_bag, np.zeros(3))


class TestClassify:
    def test_above_threshold_is_removed(self, toy_bag, toy_data):
        X, _ = toy_data
        scores = predict_score(toy_bag, X)
        row = int(np.argmax(scores))
        assert classify(toy_bag, X[row], threshold=0.5) is Label.REMOVED

    def test_score_exactly_at_threshold_is_stable(self, toy_bag, toy_data):
        X, _ = toy_data
        score = float(predict_score(toy_bag, X[0]))
        assert classify(toy_bag, X[0], threshold=score) is Label.STABLE

    def test_bad_threshold_rejected(self, toy_bag, toy_data):
        X, _ = toy_data
        with pytest.raises(ValueError):
            classify(toy_bag, X[0], threshold=1.5)

    def test_majority_vote_flag(self, toy_data):
        X, y = toy_data
        config = BagConfig(
            n_classifiers=3, subset_size=60, master_seed=2, vote="majority", **SMALL_CHOICES
        )
        bag = train_bag(X, y, config)
        labels = classify(bag, X[:10], threshold=0.5)
        assert all(l in (Label.REMOVED, Label.STABLE) for l in labels)


class TestAggregateImportance:
    def test_sums_to_one(self, toy_bag):
        total = sum(score for _, score in aggregate_importance(toy_bag))
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_single_member_is_normalized_member_importance(self, toy_data):
        X, y = toy_data
        config = BagConfig(n_classifiers=1, subset_size=60, master_seed=4, **SMALL_CHOICES)
        bag = train_bag(X, y, config)
        from appkeep.gbdt import feature_importance

        member = feature_importance(bag.members[0])
        expected = member / member.sum()
        got = dict(aggregate_importance(bag))
        for i, value in enumerate(expected):
            assert got[f"f{i}"] == pytest.approx(value, abs=1e-12)

    def test_planted_feature_ranks_first(self, toy_bag):
        assert aggregate_importance(toy_bag)[0][0] == "f2"

    def test_entries_non_negative_and_sorted(self, toy_bag):
        ranked = aggregate_importance(toy_bag)
        scores = [score for _, score in ranked]
        assert all(score >= 0 for score in scores)
        assert scores == sorted(scores, reverse=True)


@pytest.fixture(scope="module")
def real_dataset():
    """A small synthetic dataset run through the real feature pipeline, so
    serialization tests carry a genuine schema."""
    from appkeep import evaluate, pipeline

    data = evaluate.gen_synthetic(150, seed=5)
    labeled = [
        (record, Label.REMOVED if flag else Label.STABLE)
        for record, flag in zip(data.records, data.labels)
    ]
    labeled, groups, _ = pipeline.resolve_manifests(labeled)
    schema, _profiles, X, y = pipeline.fit_and_vectorize(labeled, groups, "developer")
    return schema, X, y


def _real_bag(real_dataset, n_classifiers=2, seed=6):
    schema, X, y = real_dataset
    config = BagConfig(
        n_classifiers=n_classifiers, subset_size=60, master_seed=seed, **SMALL_CHOICES
    )
    return train_bag(X, y, config, schema=schema), X


class TestSerialization:
    def test_round_trip_bit_identical_scores(self, real_dataset):
        bag, X = _real_bag(real_dataset)
        bag.threshold = 0.4
        text = ensemble.dumps(bag)
        clone = ensemble.loads(text)
        rng = np.random.default_rng(0)
        vectors = X[rng.integers(0, X.shape[0], size=100)]
        assert np.array_equal(predict_score(bag, vectors), predict_score(clone, vectors))
        assert clone.threshold == 0.4
        assert ensemble.dumps(clone) == text

    def test_unknown_format_version_rejected(self, real_dataset):
        bag, _ = _real_bag(real_dataset)
        doc = json.loads(ensemble.dumps(bag))
        doc["format_version"] = 99
        with pytest.raises(ModelFormatError, match="format_version"):
            ensemble.loads(json.dumps(doc))

    def test_truncated_document_rejected(self, real_dataset):
        bag, _ = _real_bag(real_dataset, n_classifiers=1)
        text = ensemble.dumps(bag)
        with pytest.raises(ModelFormatError):
            ensemble.loads(text[: len(text) // 2])

    def test_schema_width_mismatch_rejected(self, real_dataset):
        bag, _ = _real_bag(real_dataset, n_classifiers=1)
        doc = json.loads(ensemble.dumps(bag))
        doc["schema"]["feature_names"] = doc["schema"]["feature_names"][:-1]
        with pytest.raises(ModelFormatError, match="width"):
            ensemble.loads(json.dumps(doc))

    def test_save_without_schema_rejected(self, toy_bag):
        with pytest.raises(ValueError):
            ensemble.dumps(toy_bag)

    def test_save_to_file_object(self, real_dataset):
        bag, _ = _real_bag(real_dataset, n_classifiers=1)
        sink = io.StringIO()
        ensemble.save(bag, sink)
        assert ensemble.loads(sink.getvalue()).config.subset_size == 60
