"""Classifier tests: softmax identities, the finite-difference gradient oracle,
training behavior, evaluation, and model file round-trips."""

import numpy as np
import pytest

from facecue import affect
from facecue.affect import (
    AffectError,
    ClassifierModel,
    Hyperparams,
    LabeledDataset,
    TrainingInfo,
    evaluate,
    gradient,
    load_model,
    loss_value,
    predict,
    predict_proba,
    save_model,
    softmax,
    train,
)
from facecue.types import ExpressionLabel
from facecue.vision import FEATURE_LENGTH, FEATURE_SPEC_VERSION


def zero_model():
    return ClassifierModel(
        weights=np.zeros((8, FEATURE_LENGTH)),
        biases=np.zeros(8),
        feature_spec_version=FEATURE_SPEC_VERSION,
        training=TrainingInfo(epochs=0, final_loss=0.0, seed=0),
    )


def random_instance(rng, n=12):
    model = ClassifierModel(
        weights=rng.normal(scale=0.5, size=(8, FEATURE_LENGTH)),
        biases=rng.normal(scale=0.5, size=8),
        feature_spec_version=FEATURE_SPEC_VERSION,
        training=TrainingInfo(epochs=0, final_loss=0.0, seed=0),
    )
    dataset = LabeledDataset(
        features=rng.normal(size=(n, FEATURE_LENGTH)),
        labels=rng.integers(0, 8, size=n),
    )
    return model, dataset


def fd_gradient(model, dataset, l2, h=1e-5):
    """Central finite differences over every parameter: the gradient oracle."""
    dw = np.zeros_like(model.weights)
    db = np.zeros_like(model.biases)
    for idx in np.ndindex(model.weights.shape):
        model.weights[idx] += h
        up = loss_value(model, dataset, l2)
        model.weights[idx] -= 2 * h
        down = loss_value(model, dataset, l2)
        model.weights[idx] += h
        dw[idx] = (up - down) / (2 * h)
    for k in range(8):
        model.biases[k] += h
        up = loss_value(model, dataset, l2)
        model.biases[k] -= 2 * h
        down = loss_value(model, dataset, l2)
        model.biases[k] += h
        db[k] = (up - down) / (2 * h)
    return dw, db


def rel_error(a, b):
    """allclose-style relative error: |a-b| / max(1, |a|, |b|), elementwise max."""
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return float((np.abs(a - b) / denom).max())


def test_zero_model_is_uniform():
    p = predict_proba(zero_model(), np.random.default_rng(0).normal(size=FEATURE_LENGTH))
    assert np.abs(p - 0.125).max() < 1e-12


def test_softmax_shift_invariance():
    rng = np.random.default_rng(1)
    logits = rng.normal(size=(5, 8))
    shifted = softmax(logits + 3.7)
    assert np.abs(shifted - softmax(logits)).max() < 1e-12


def test_predict_is_on_the_simplex():
    rng = np.random.default_rng(2)
    model, dataset = random_instance(rng, n=40)
    p = predict_proba(model, dataset.features)
    assert np.abs(p.sum(axis=1) - 1.0).max() < 1e-9
    assert (p >= 0).all() and (p <= 1).all()
    scored = predict(model, dataset.features[0], timestamp_us=55)
    scored.validate()
    assert scored.timestamp_us == 55


def test_predict_rejects_bad_features():
    with pytest.raises(AffectError):
        predict_proba(zero_model(), np.zeros(10))
    bad = np.zeros(FEATURE_LENGTH)
    bad[0] = np.nan
    with pytest.raises(AffectError):
        predict_proba(zero_model(), bad)


def test_trained_model_classifies_training_exemplar(trained_model, training_set):
    happiness = int(ExpressionLabel.HAPPINESS)
    idx = int(np.flatnonzero(training_set.labels == happiness)[0])
    p = predict_proba(trained_model, training_set.features[idx])
    assert int(p.argmax()) == happiness


def test_gradient_closed_form_at_zero_weights():
    """At zero weights predictions are uniform, so db_k = 0.125 - freq_k."""
    rng = np.random.default_rng(3)
    dataset = LabeledDataset(
        features=rng.normal(size=(64, FEATURE_LENGTH)),
        labels=np.repeat(np.arange(8), 8),
    )
    _dw, db = gradient(zero_model(), dataset, l2_lambda=0.0)
    assert np.abs(db - (0.125 - 0.125)).max() < 1e-12
    skewed = LabeledDataset(features=dataset.features, labels=np.zeros(64, dtype=np.int64))
    _dw, db = gradient(zero_model(), skewed, l2_lambda=0.0)
    expected = np.full(8, 0.125)
    expected[0] -= 1.0
    assert np.abs(db - expected).max() < 1e-12


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(4)
    for _ in range(3):
        model, dataset = random_instance(rng, n=8)
        l2 = float(rng.uniform(0, 1e-3))
        dw, db = gradient(model, dataset, l2)
        fdw, fdb = fd_gradient(model, dataset, l2)
        assert rel_error(dw, fdw) < 1e-5
        assert rel_error(db, fdb) < 1e-5


def test_gradient_duplication_invariance():
    rng = np.random.default_rng(5)
    model, dataset = random_instance(rng, n=10)
    doubled = LabeledDataset(
        features=np.concatenate([dataset.features, dataset.features]),
        labels=np.concatenate([dataset.labels, dataset.labels]),
    )
    dw1, db1 = gradient(model, dataset, l2_lambda=0.0)
    dw2, db2 = gradient(model, doubled, l2_lambda=0.0)
    assert np.abs(dw1 - dw2).max() < 1e-12
    assert np.abs(db1 - db2).max() < 1e-12


def test_gradient_rejects_empty_and_mismatched():
    with pytest.raises(AffectError):
        gradient(zero_model(), LabeledDataset(features=np.zeros((0, FEATURE_LENGTH)), labels=np.zeros(0, dtype=int)))
    with pytest.raises(AffectError):
        gradient(zero_model(), LabeledDataset(features=np.zeros((3, 10)), labels=np.zeros(3, dtype=int)))


def test_single_example_memorized():
    rng = np.random.default_rng(6)
    dataset = LabeledDataset(features=rng.normal(size=(1, FEATURE_LENGTH)), labels=np.array([3]))
    model = train(dataset, Hyperparams(learning_rate=0.05, epochs=2000, l2_lambda=0.0))
    assert model.training.final_loss < 0.01


def test_huge_l2_collapses_to_uniform():
    rng = np.random.default_rng(7)
    dataset = LabeledDataset(features=rng.normal(size=(16, FEATURE_LENGTH)), labels=rng.integers(0, 8, 16))
    model = train(dataset, Hyperparams(learning_rate=1e-7, epochs=50, l2_lambda=1e6))
    p = predict_proba(model, dataset.features)
    assert np.abs(p - 0.125).max() < 1e-3


def test_synthetic_dataset_accuracy(trained_model, training_set):
    assert evaluate(trained_model, training_set).accuracy >= 0.95


def test_loss_monotone_at_small_rate(training_set):
    model = train(training_set, Hyperparams(learning_rate=1e-3, epochs=300))
    hist = model.training.loss_history
    assert len(hist) == 301
    for before, after in zip(hist, hist[1:]):
        assert after <= before + 1e-12


def test_training_is_bit_deterministic(training_set):
    hp = Hyperparams(learning_rate=0.05, epochs=120)
    a = train(training_set, hp)
    b = train(training_set, hp)
    assert np.array_equal(a.weights, b.weights)
    assert np.array_equal(a.biases, b.biases)
    assert a.training.final_loss == b.training.final_loss


def test_empty_dataset_rejected():
    with pytest.raises(AffectError):
        train(LabeledDataset(features=np.zeros((0, FEATURE_LENGTH)), labels=np.zeros(0, dtype=int)))


def test_divergence_reports_epoch():
    rng = np.random.default_rng(8)
    dataset = LabeledDataset(features=rng.normal(scale=10, size=(20, FEATURE_LENGTH)), labels=rng.integers(0, 8, 20))
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(affect.TrainingDivergedError) as exc:
            train(dataset, Hyperparams(learning_rate=1e9, epochs=50))
    assert exc.value.epoch >= 0


# --- evaluation ---------------------------------------------------------------

def test_constant_predictor_on_single_class():
    model = zero_model()
    model.biases[int(ExpressionLabel.HAPPINESS)] = 10.0  # always predicts happiness
    feats = np.random.default_rng(9).normal(size=(10, FEATURE_LENGTH))
    dataset = LabeledDataset(features=feats, labels=np.full(10, int(ExpressionLabel.HAPPINESS)))
    report = evaluate(model, dataset)
    assert report.accuracy == 1.0
    h = int(ExpressionLabel.HAPPINESS)
    assert report.confusion[h, h] == 10
    assert report.confusion.sum() == 10


def test_perfect_predictions_are_diagonal(trained_model, training_set):
    report = evaluate(trained_model, training_set)
    if report.accuracy == 1.0:
        off_diag = report.confusion.sum() - np.trace(report.confusion)
        assert off_diag == 0
    assert report.confusion.sum() == len(training_set)


def test_uncorrelated_predictor_near_chance():
    """Monte-Carlo: predictions independent of balanced labels -> accuracy ~ 1/8."""
    rng = np.random.default_rng(10)
    model, _ = random_instance(rng)
    features = rng.normal(size=(10_000, FEATURE_LENGTH))
    labels = np.tile(np.arange(8), 1250)
    rng.shuffle(labels)
    report = evaluate(model, LabeledDataset(features=features, labels=labels))
    assert abs(report.accuracy - 0.125) <= 0.02


def test_evaluate_rejects_empty():
    with pytest.raises(AffectError):
        evaluate(zero_model(), LabeledDataset(features=np.zeros((0, FEATURE_LENGTH)), labels=np.zeros(0, dtype=int)))


# --- model files -----------------------------------------------------------------

def test_model_round_trip(tmp_path, trained_model):
    path = tmp_path / "model.json"
    save_model(trained_model, path)
    loaded = load_model(path)
    assert np.array_equal(loaded.weights, trained_model.weights)
    assert np.array_equal(loaded.biases, trained_model.biases)
    assert loaded.training.final_loss == trained_model.training.final_loss


def test_model_version_mismatch_refused(tmp_path, trained_model):
    path = tmp_path / "model.json"
    save_model(trained_model, path)
    doc = path.read_text().replace(FEATURE_SPEC_VERSION, "something-else")
    path.write_text(doc)
    with pytest.raises(AffectError):
        load_model(path)
