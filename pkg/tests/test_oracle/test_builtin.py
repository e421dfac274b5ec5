"""Tests for the builtin logistic surrogate."""

import json

import numpy as np
import pytest

from capfi.config.settings import BuiltinOracleConfig, TrainingConfig
from capfi.core.permutation import PermutationPlan, permute_within_context
from capfi.data.subsets import build_subsets
from capfi.features.transforms import feature_matrix
from capfi.oracle.base import Oracle
from capfi.oracle.builtin import (
    BuiltinOracle,
    build_builtin_oracle,
    gradient_check,
    load_model,
    logistic_loss,
    save_model,
    sigmoid,
    train_builtin,
)
from capfi.utils.exceptions import ConfigError, LayoutMismatchError, TrainingError


def config(modalities=("bbox", "pose", "local_context", "speed"), epochs=200, **kwargs):
    return BuiltinOracleConfig(
        name="logreg",
        modalities=list(modalities),
        training=TrainingConfig(learning_rate=0.5, epochs=epochs, l2=1e-3, seed=0),
        **kwargs,
    )


@pytest.fixture
def separable(make_sample, make_manifest):
    """Fast ego speed means no crossing."""
    samples = [
        make_sample(f"p{i}", label=1, speed=[5.0 + i] * 4, offset=float(i)) for i in range(4)
    ] + [make_sample(f"n{i}", label=0, speed=[30.0 + i] * 4, offset=float(i)) for i in range(4)]
    return make_manifest(samples)


def test_sigmoid_is_stable():
    values = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
    np.testing.assert_array_equal(values, [0.0, 0.5, 1.0])


def test_zero_epochs_scores_one_half(separable):
    model = train_builtin(separable, config=config(epochs=0))
    np.testing.assert_array_equal(model.predict_proba(feature_matrix(separable, model.layout)), 0.5)


def test_learns_separable_toy(separable):
    model = train_builtin(separable, config=config(modalities=["speed"], epochs=500))
    scores = model.predict_proba(feature_matrix(separable, model.layout))
    hard = (scores >= 0.5).astype(int)
    np.testing.assert_array_equal(hard, separable.labels)


def test_training_is_deterministic(pool):
    first = train_builtin(pool, config=config())
    second = train_builtin(pool, config=config())
    np.testing.assert_array_equal(first.weights, second.weights)


def test_loss_never_increases(pool):
    history = train_builtin(pool, config=config(epochs=100)).loss_history
    assert len(history) == 101
    assert all(later <= earlier + 1e-12 for earlier, later in zip(history, history[1:]))
    assert history[-1] < history[0]


def test_gradient_matches_finite_differences(pool):
    model = train_builtin(pool, config=config(epochs=50))
    features = feature_matrix(pool, model.layout)
    assert gradient_check(model, features, pool.labels) < 1e-5
    # single sample
    assert gradient_check(model, features[:1], pool.labels[:1]) < 1e-5


def test_gradient_at_zero_weights(pool):
    model = train_builtin(pool, config=config(epochs=0))
    assert not model.weights.any()
    features = feature_matrix(pool, model.layout)
    assert gradient_check(model, features, pool.labels) < 1e-5


def test_single_class_training_fails(make_sample, make_manifest):
    manifest = make_manifest([make_sample(f"s{i}", label=1, offset=float(i)) for i in range(5)])
    with pytest.raises(TrainingError):
        train_builtin(manifest, config=config())


def test_training_subset_and_fraction(pool):
    ids = pool.ids[:200]
    model = train_builtin(pool, ids=ids, config=config(epochs=10))
    assert model.loss_history
    half = config(epochs=10, train_fraction=0.5)
    np.testing.assert_array_equal(train_builtin(pool, config=half).weights, train_builtin(pool, config=half).weights)
    assert not np.array_equal(train_builtin(pool, config=half).weights, train_builtin(pool, config=config(epochs=10)).weights)


def test_save_and_load(tmp_path, pool):
    model = train_builtin(pool, config=config(epochs=30))
    path = save_model(model, tmp_path / "model.json")
    loaded = load_model(path)
    assert loaded.layout.signature == model.layout.signature
    np.testing.assert_array_equal(loaded.weights, model.weights)
    features = feature_matrix(pool, model.layout)
    np.testing.assert_array_equal(loaded.predict_proba(features), model.predict_proba(features))
    assert logistic_loss(loaded.weights, loaded.standardize(features), pool.labels, 1e-3) == pytest.approx(
        logistic_loss(model.weights, model.standardize(features), pool.labels, 1e-3)
    )


def test_load_rejects_bad_files(tmp_path, pool):
    path = save_model(train_builtin(pool, config=config(epochs=1)), tmp_path / "model.json")
    document = json.loads(path.read_text(encoding="utf-8"))

    wrong_format = tmp_path / "format.json"
    wrong_format.write_text(json.dumps({**document, "format": "other"}), encoding="utf-8")
    short = tmp_path / "short.json"
    short.write_text(json.dumps({**document, "weights": document["weights"][:-1]}), encoding="utf-8")
    broken = tmp_path / "broken.json"
    broken.write_text("[", encoding="utf-8")

    for bad in (wrong_format, short, broken, tmp_path / "missing.json"):
        with pytest.raises(ConfigError):
            load_model(bad)


def test_fast_path_matches_generic_rescoring(pool):
    oracle = BuiltinOracle(train_builtin(pool, config=config(epochs=50)))
    bound = oracle.bind(pool)
    subsets = build_subsets(pool)
    for notation in ("S_NC", "S_Green"):
        for feature in ("bbox", "speed", "pose"):
            plan = PermutationPlan(feature, subsets[notation], base_seed=4, repetitions=2)
            for j in range(2):
                view = permute_within_context(pool, plan, j)
                fast = bound.view_scores(view)
                generic = Oracle.view_scores(oracle, bound, view)
                np.testing.assert_allclose(fast, generic, rtol=0, atol=1e-12)


def test_predict_keeps_input_order(pool):
    oracle = BuiltinOracle(train_builtin(pool, config=config(epochs=20)))
    samples = list(pool.samples[:5])[::-1]
    predictions = oracle.predict(samples)
    assert [p.sample_id for p in predictions] == [s.id for s in samples]
    assert oracle.predict([]) == []


def test_bind_rejects_other_dims(pool, small_manifest):
    oracle = BuiltinOracle(train_builtin(pool, config=config(epochs=1)))
    with pytest.raises(LayoutMismatchError):
        oracle.bind(small_manifest)


def test_build_writes_then_reuses_weights(tmp_path, pool):
    weights = tmp_path / "weights.json"
    first = build_builtin_oracle(config(epochs=20, weights_path=weights), pool)
    assert weights.exists()
    second = build_builtin_oracle(config(epochs=999, weights_path=weights), pool)
    np.testing.assert_array_equal(first.model.weights, second.model.weights)
    assert second.metadata.layout == first.layout.signature
