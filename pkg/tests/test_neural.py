import numpy as np
import pytest

from twsbench.core.errors import (
    EmptyInputError,
    InvalidParamsError,
    ShapeMismatchError,
    UnknownSchemeError,
)
from twsbench.dataset.synthetic import generate_synthetic
from twsbench.dataset.types import SplitSpec, SyntheticConfig
from twsbench.evaluation.metrics import compute_metrics
from twsbench.features import TaskSpec, assemble_supervised
from twsbench.models.neural import (
    Adam,
    EarlyStopping,
    LSTMModel,
    QuantileSpec,
    TFTLiteModel,
    TrainConfig,
    build_model,
    fit_model,
    init_weights,
    load_checkpoint,
    median_loss,
    orthogonal,
    pinball_loss_and_grad,
    quantile_loss,
    save_checkpoint,
    save_history,
    train_model,
)


def _batch(batch=2, seq_len=4, horizon=2, seed=0):
    rng = np.random.default_rng(seed)
    sequence = rng.normal(size=(batch, seq_len, 16))
    sequence[:, :, 15] = rng.integers(0, 200, size=(batch, seq_len))
    static = rng.normal(size=(batch, 11))
    targets = rng.normal(size=(batch, horizon)) * 3.0
    return sequence, static, targets


def _models(horizon=2):
    quantiles = (0.1, 0.5, 0.9)
    return [
        LSTMModel(hidden_size=3, horizon=horizon, quantiles=quantiles, seed=1, time_mean=100.0, time_std=50.0),
        TFTLiteModel(hidden_size=4, nheads=2, horizon=horizon, quantiles=quantiles, seed=2, time_mean=100.0, time_std=50.0),
    ]


@pytest.mark.parametrize("model", _models(), ids=["lstm", "tft"])
def test_gradients_match_finite_differences(model):
    sequence, static, targets = _batch()
    _, grads = model.loss_and_grads(sequence, static, targets)
    assert set(grads) == set(model.params)

    step = 1e-5
    for name, value in model.params.items():
        numeric = np.zeros_like(value)
        for idx in np.ndindex(value.shape):
            original = value[idx]
            value[idx] = original + step
            up = model.loss(sequence, static, targets)
            value[idx] = original - step
            down = model.loss(sequence, static, targets)
            value[idx] = original
            numeric[idx] = (up - down) / (2.0 * step)
        np.testing.assert_allclose(grads[name], numeric, rtol=1e-4, atol=1e-8, err_msg=name)


@pytest.mark.parametrize("model", _models(), ids=["lstm", "tft"])
def test_gradients_are_finite(model):
    sequence, static, targets = _batch(batch=5, seed=3)
    loss, grads = model.loss_and_grads(sequence, static, targets)
    assert np.isfinite(loss)
    assert all(np.isfinite(g).all() for g in grads.values())


@pytest.mark.parametrize("model", _models(horizon=1), ids=["lstm", "tft"])
def test_zero_weights_predict_head_bias(model):
    for value in model.params.values():
        value[...] = 0.0
    model.params["head.b"][:] = [1.0, 2.0, 3.0]

    sequence, static, _ = _batch(batch=3, horizon=1)
    predictions = model.predict_quantiles(sequence, static)
    assert predictions.shape == (3, 1, 3)
    np.testing.assert_allclose(predictions, np.broadcast_to([1.0, 2.0, 3.0], (3, 1, 3)))
    np.testing.assert_allclose(model.predict(sequence, static), 2.0)


def test_lstm_shapes():
    model = LSTMModel(hidden_size=8)
    sequence, static, _ = _batch(batch=1, seq_len=12, horizon=1)
    assert model.hidden_states(sequence, static).shape == (1, 12, 8)
    assert model.predict_quantiles(sequence, static).shape == (1, 1, 1)


def test_wrong_channel_count_is_rejected():
    model = LSTMModel(hidden_size=4)
    with pytest.raises(ShapeMismatchError):
        model.predict(np.zeros((2, 5, 15)), np.zeros((2, 11)))


def test_identical_keys_give_uniform_attention():
    model = TFTLiteModel(hidden_size=4, nheads=1, seed=0)
    model.params["attn.W_k"][...] = 0.0
    model.params["attn.b_k"][...] = 0.0
    sequence, static, _ = _batch(batch=2, seq_len=6, horizon=1)
    np.testing.assert_allclose(model.attention(sequence, static), 1.0 / 6.0)


def test_attention_rows_sum_to_one():
    model = TFTLiteModel(hidden_size=8, nheads=4, seed=5)
    sequence, static, _ = _batch(batch=3, seq_len=7, horizon=1)
    weights = model.attention(sequence, static)
    assert weights.shape == (3, 7)
    np.testing.assert_allclose(weights.sum(axis=1), 1.0)


def test_time_index_ablation_ignores_time_shift():
    model = TFTLiteModel(hidden_size=4, nheads=2, seed=3, use_time_index=False)
    sequence, static, _ = _batch(batch=4, seq_len=5, horizon=1)
    shifted = sequence.copy()
    shifted[:, :, 15] += 1000.0
    np.testing.assert_array_equal(model.predict(sequence, static), model.predict(shifted, static))

    with_time = TFTLiteModel(hidden_size=4, nheads=2, seed=3, use_time_index=True)
    assert not np.array_equal(with_time.predict(sequence, static), with_time.predict(shifted, static))


def test_heads_must_divide_width():
    with pytest.raises(InvalidParamsError):
        TFTLiteModel(hidden_size=10, nheads=4)


def test_orthogonal_columns():
    rng = np.random.default_rng(0)
    Q = orthogonal((8, 4), rng)
    np.testing.assert_allclose(Q.T @ Q, np.eye(4), atol=1e-10)
    wide = orthogonal((3, 7), rng)
    np.testing.assert_allclose(wide @ wide.T, np.eye(3), atol=1e-10)


def test_init_is_seeded_and_sets_forget_bias():
    shapes = {"lstm.W_ih": (8, 3), "lstm.b": (8,)}
    first = init_weights(shapes, "xavier", seed=4, forget_bias=("lstm.b",))
    second = init_weights(shapes, "xavier", seed=4, forget_bias=("lstm.b",))
    np.testing.assert_array_equal(first["lstm.W_ih"], second["lstm.W_ih"])
    np.testing.assert_array_equal(first["lstm.b"], [0, 0, 1, 1, 0, 0, 0, 0])
    with pytest.raises(UnknownSchemeError):
        init_weights(shapes, "he", seed=0)


def test_pinball_values():
    assert quantile_loss([0.0], [0.0], 0.3) == 0.0
    assert quantile_loss([0.0], [1.0], 0.9) == pytest.approx(0.1)
    assert quantile_loss([1.0], [0.0], 0.9) == pytest.approx(0.9)
    assert median_loss([0.0, 0.0], [2.0, -2.0]) == pytest.approx(2.0)


def test_median_minimizes_half_pinball():
    sample = np.random.default_rng(1).normal(size=21)
    losses = [quantile_loss(sample, np.full(21, c), 0.5) for c in sample]
    assert sample[int(np.argmin(losses))] == np.median(sample)


def test_inactive_quantiles_get_no_gradient():
    targets = np.array([[1.0]])
    predictions = np.array([[[0.0, 0.0, 0.0]]])
    _, grad = pinball_loss_and_grad(targets, predictions, [0.1, 0.5, 0.9], active=[False, True, False])
    np.testing.assert_array_equal(grad[0, 0], [0.0, -0.5, 0.0])


def test_quantile_levels_validated():
    with pytest.raises(InvalidParamsError):
        QuantileSpec(q=[0.9, 0.1])
    with pytest.raises(InvalidParamsError):
        QuantileSpec(q=[0.0, 0.5])
    assert QuantileSpec(q=[0.1, 0.4, 0.9]).point_index() == 1


def test_adam_first_step_moves_by_learning_rate():
    params = {"w": np.array([1.0, -1.0, 0.5])}
    Adam(params, learning_rate=0.1).step(params, {"w": np.array([2.0, -3.0, 0.5])})
    np.testing.assert_allclose(params["w"], [0.9, -0.9, 0.4], atol=1e-6)


def test_early_stopping_contract():
    stopper = EarlyStopping(min_delta=1e-4, patience=10)
    losses = {1: 1.0, 2: 0.9, 3: 0.8}
    epoch = 0
    while not stopper.should_stop:
        epoch += 1
        stopper.update(epoch, losses.get(epoch, 0.8))
    assert stopper.stopped_epoch == 13
    assert stopper.best_epoch == 3


def test_sub_threshold_improvement_does_not_reset_patience():
    stopper = EarlyStopping(min_delta=1e-4, patience=3)
    for epoch, loss in enumerate([1.0, 0.99995, 0.9999, 0.99985], start=1):
        stopper.update(epoch, loss)
    assert stopper.should_stop
    assert stopper.best_epoch == 4


def test_improvement_of_exactly_min_delta_counts():
    stopper = EarlyStopping(min_delta=0.25, patience=1)
    stopper.update(1, 1.0)
    stopper.update(2, 0.75)
    assert stopper.wait == 0
    assert not stopper.should_stop


@pytest.fixture
def tiny_set(make_series):
    series = [make_series("B0001"), make_series("B0002")]
    return assemble_supervised(series, TaskSpec.regression(4), SplitSpec.neural())


def _config(**overrides):
    values = dict(hidden_size=4, nheads=2, max_epochs=40, batch_size=64, learning_rate=0.01, seed=0)
    values.update(overrides)
    return TrainConfig(**values)


def test_training_restores_best_epoch_weights(tiny_set):
    snapshots = {}
    scripted = {1: 1.0, 2: 0.9, 3: 0.8}

    def validation_loss(model, epoch):
        snapshots[epoch] = model.copy_params()
        return scripted.get(epoch, 0.8)

    result = train_model("lstm", tiny_set, _config(), validation_loss=validation_loss)
    assert result.epochs_run == 13
    assert result.stopped_epoch == 13
    assert result.best_epoch == 3
    for name, value in result.model.params.items():
        np.testing.assert_array_equal(value, snapshots[3][name])
    assert result.model.trained


def test_improving_validation_runs_all_epochs(tiny_set):
    result = train_model("tft", tiny_set, _config(max_epochs=6), validation_loss=lambda m, e: 1.0 / e)
    assert result.epochs_run == 6
    assert result.best_epoch == 6
    assert result.stopped_epoch is None
    assert [r.epoch for r in result.history] == [1, 2, 3, 4, 5, 6]


def test_training_is_seeded(tiny_set):
    first = train_model("lstm", tiny_set, _config(max_epochs=3, dropout=0.2))
    second = train_model("lstm", tiny_set, _config(max_epochs=3, dropout=0.2))
    for name in first.model.params:
        np.testing.assert_array_equal(first.model.params[name], second.model.params[name])


def test_training_needs_validation_rows(tiny_set):
    model = build_model("lstm", tiny_set, _config())
    empty = tiny_set["validation"].subset(np.zeros(len(tiny_set["validation"]), dtype=bool))
    with pytest.raises(EmptyInputError):
        fit_model(model, tiny_set["train"], empty, _config())


def test_train_config_validation():
    with pytest.raises(InvalidParamsError):
        TrainConfig(dropout=1.0)
    with pytest.raises(InvalidParamsError):
        TrainConfig(init="uniform")
    with pytest.raises(InvalidParamsError):
        TrainConfig(quantiles=[0.5, 0.5])


@pytest.mark.parametrize("kind", ["lstm", "tft"])
def test_checkpoint_reload_predicts_identically(tmp_path, tiny_set, kind):
    result = train_model(kind, tiny_set, _config(max_epochs=2))
    save_checkpoint(result.model, tmp_path, kind)
    history_path = save_history(result.history, tmp_path / f"{kind}_history.csv")

    reloaded = load_checkpoint(tmp_path, kind)
    test = tiny_set["test"]
    np.testing.assert_array_equal(reloaded.predict_split(test), result.model.predict_split(test))
    assert history_path.read_text().splitlines()[0] == "epoch,train_loss,val_loss"


@pytest.mark.slow
def test_lstm_beats_mean_predictor_on_synthetic_data():
    series = generate_synthetic(SyntheticConfig.ol_like(n_basins=8, seed=0))
    sset = assemble_supervised(series, TaskSpec.regression(12), SplitSpec.neural())
    result = train_model("lstm", sset, _config(hidden_size=32, max_epochs=50, learning_rate=0.005))

    test = sset["test"]
    y_pred = sset.inverse_targets(test, result.model.predict_split(test))[:, 0]
    y_true = test.targets_raw[:, 0]
    nse = [
        compute_metrics(y_true[test.basin_ids == b], y_pred[test.basin_ids == b]).nse for b in test.basins()
    ]
    assert np.median(nse) > 0.0
