"""
Mini-batch training with validation early stopping.
"""

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Literal, Optional

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, model_validator
from tqdm import tqdm

from twsbench.core.errors import DivergenceError, EmptyInputError, InvalidParamsError
from twsbench.core.parallel import derive_seed
from twsbench.features.assemble import TREND_CHANNEL, SupervisedSet, SupervisedSplit
from twsbench.models.neural.base import SequenceModel
from twsbench.models.neural.init import SCHEMES
from twsbench.models.neural.loss import QuantileSpec
from twsbench.models.neural.lstm import LSTMModel
from twsbench.models.neural.optim import Adam
from twsbench.models.neural.tft_lite import TFTLiteModel
from twsbench.utils.constants import BATCH_SIZE, MIN_DELTA, PAPER_MAX_EPOCHS, PATIENCE

ModelKind = Literal["lstm", "tft"]


class TrainConfig(BaseModel):
    """Optimization and architecture settings for one neural fit."""

    model_config = ConfigDict(extra="forbid")

    learning_rate: float = 0.001
    dropout: float = 0.0
    batch_size: int = BATCH_SIZE
    max_epochs: int = PAPER_MAX_EPOCHS
    min_delta: float = MIN_DELTA
    patience: int = PATIENCE
    quantiles: List[float] = [0.5]
    seed: int = 0
    init: str = "xavier"
    hidden_size: int = 32
    nheads: int = 4
    use_time_index: bool = True
    show_progress: bool = False

    @model_validator(mode="after")
    def _check(self) -> "TrainConfig":
        if not self.learning_rate > 0:
            raise InvalidParamsError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidParamsError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.patience < 1:
            raise InvalidParamsError(f"patience must be >= 1, got {self.patience}")
        if self.batch_size < 1 or self.max_epochs < 1 or self.hidden_size < 1:
            raise InvalidParamsError("batch_size, max_epochs and hidden_size must be >= 1")
        if self.min_delta < 0:
            raise InvalidParamsError("min_delta must be >= 0")
        if self.init not in SCHEMES:
            raise InvalidParamsError(f"init must be one of {SCHEMES}, got {self.init!r}")
        QuantileSpec(q=self.quantiles)
        return self


class EarlyStopping:
    """
    Tracks validation loss per epoch.

    An epoch counts as an improvement when its loss is below the best so far
    by at least min_delta; the best epoch follows the raw minimum. Training
    stops once `patience` consecutive epochs fail to improve.
    """

    def __init__(self, min_delta: float = MIN_DELTA, patience: int = PATIENCE):
        self.min_delta = min_delta
        self.patience = patience
        self.best_loss = np.inf
        self.best_epoch = 0
        self.wait = 0
        self.stopped_epoch: Optional[int] = None

    def update(self, epoch: int, loss: float) -> bool:
        """Record an epoch; returns True when it is the new best."""
        improved = loss <= self.best_loss - self.min_delta
        is_best = loss < self.best_loss
        if is_best:
            self.best_loss = loss
            self.best_epoch = epoch
        self.wait = 0 if improved else self.wait + 1
        if self.wait >= self.patience:
            self.stopped_epoch = epoch
        return is_best

    @property
    def should_stop(self) -> bool:
        return self.stopped_epoch is not None


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class TrainingResult:
    model: SequenceModel
    history: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = float("nan")
    stopped_epoch: Optional[int] = None
    seconds: float = 0.0

    @property
    def epochs_run(self) -> int:
        return len(self.history)


ValidationLoss = Callable[[SequenceModel, int], float]


def fit_model(
    model: SequenceModel,
    train: SupervisedSplit,
    val: SupervisedSplit,
    config: TrainConfig,
    validation_loss: Optional[ValidationLoss] = None,
) -> TrainingResult:
    """
    Train in place with Adam on shuffled mini-batches, then restore the
    parameters of the lowest-validation-loss epoch.

    Args:
        model: Freshly initialized model
        train, val: Nonempty splits of one supervised set
        config: Optimization settings
        validation_loss: Optional (model, epoch) -> loss replacing the
            validation pass (scripted stopping tests)

    Returns:
        TrainingResult holding the restored model and per-epoch history
    """
    if len(train) == 0 or len(val) == 0:
        raise EmptyInputError(f"training needs nonempty splits, got train={len(train)} val={len(val)}")

    started = time.perf_counter()
    rng = np.random.default_rng(derive_seed(config.seed, model.kind, "batches"))
    optimizer = Adam(model.params, config.learning_rate)
    stopper = EarlyStopping(config.min_delta, config.patience)
    result = TrainingResult(model=model)
    best_params = model.copy_params()
    n = len(train)

    epochs = range(1, config.max_epochs + 1)
    if config.show_progress:
        epochs = tqdm(epochs, desc=f"{model.kind} epochs")

    for epoch in epochs:
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            rows = order[start : start + config.batch_size]
            loss, grads = model.loss_and_grads(
                train.sequence[rows], train.static[rows], train.targets[rows], rng=rng
            )
            if not np.isfinite(loss) or not all(np.isfinite(g).all() for g in grads.values()):
                raise DivergenceError(f"{model.kind}: non-finite loss or gradient at epoch {epoch}")
            optimizer.step(model.params, grads)
            total += loss * rows.size
        train_loss = total / n

        if validation_loss is not None:
            val_loss = float(validation_loss(model, epoch))
        else:
            val_loss = model.loss(val.sequence, val.static, val.targets)
        if not np.isfinite(val_loss):
            raise DivergenceError(f"{model.kind}: non-finite validation loss at epoch {epoch}")

        result.history.append(EpochRecord(epoch, train_loss, val_loss))
        if stopper.update(epoch, val_loss):
            best_params = model.copy_params()
        logger.debug(f"{model.kind} epoch {epoch}: train {train_loss:.5f}, val {val_loss:.5f}")
        if stopper.should_stop:
            break

    model.params = best_params
    model.trained = True
    result.best_epoch = stopper.best_epoch
    result.best_val_loss = float(stopper.best_loss)
    result.stopped_epoch = stopper.stopped_epoch
    result.seconds = time.perf_counter() - started
    logger.info(
        f"Trained {model.kind}: {result.epochs_run} epochs, best epoch {result.best_epoch} "
        f"(val {result.best_val_loss:.5f})"
    )
    return result


def time_statistics(train: SupervisedSplit) -> Dict[str, float]:
    trend = train.sequence[:, :, TREND_CHANNEL]
    return {"time_mean": float(trend.mean()), "time_std": float(trend.std())}


def build_model(kind: ModelKind, sset: SupervisedSet, config: TrainConfig) -> SequenceModel:
    """Initialize an untrained model sized for sset's task."""
    common = dict(
        hidden_size=config.hidden_size,
        horizon=sset.task.horizon,
        quantiles=config.quantiles,
        dropout=config.dropout,
        init=config.init,
        seed=derive_seed(config.seed, kind, "init"),
        **time_statistics(sset["train"]),
    )
    if kind == "lstm":
        return LSTMModel(**common)
    if kind == "tft":
        return TFTLiteModel(nheads=config.nheads, use_time_index=config.use_time_index, **common)
    raise InvalidParamsError(f"unknown neural model kind {kind!r}")


def train_model(
    kind: ModelKind,
    sset: SupervisedSet,
    config: TrainConfig,
    validation_loss: Optional[ValidationLoss] = None,
) -> TrainingResult:
    """Build and fit one global model on all basins of sset."""
    if "validation" not in sset.splits:
        raise EmptyInputError("neural training needs a validation split")
    model = build_model(kind, sset, config)
    logger.info(f"Training {kind} ({model.n_parameters()} parameters) on {len(sset['train'])} examples")
    return fit_model(model, sset["train"], sset["validation"], config, validation_loss)
