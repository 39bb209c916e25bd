import time
from typing import NamedTuple

import numpy as np
from loguru import logger

from hints_solver.core.errors import DivergedLoss, GridMismatch
from hints_solver.core.models import Dataset, IntArray, TrainConfig
from hints_solver.infrastructure.network.deeponet import DeepOnetModel
from hints_solver.infrastructure.network.optim import Adam

LossHistory = list[dict[str, float]]


def split_indices(count: int, test_fraction: float, seed: int) -> tuple[IntArray, IntArray]:
    """Seeded (train, test) row split; at least one training row when count > 0."""
    order = np.random.default_rng(seed).permutation(count)
    n_test = min(int(round(test_fraction * count)), max(count - 1, 0))
    return np.sort(order[n_test:]), np.sort(order[:n_test])


def train(
    model: DeepOnetModel, dataset: Dataset, cfg: TrainConfig
) -> tuple[DeepOnetModel, LossHistory]:
    """Mini-batch Adam on the weighted loss; updates ``model`` in place and returns it.

    One history row per epoch: mean batch loss over the training rows, loss on the
    held-out rows (NaN when none are held out) and the learning rate used.
    """
    if not dataset.grid.matches(model.grid):
        raise GridMismatch(
            f"Dataset on {dataset.grid.kind} n={dataset.grid.subdivisions[0]} does not match "
            f"the model grid {model.grid.kind} n={model.grid.subdivisions[0]}"
        )
    alpha = cfg.loss_exponent(dataset.equation, dataset.grid.dimension)
    model.alpha = alpha

    train_rows, test_rows = split_indices(dataset.count, cfg.test_fraction, cfg.seed)
    train_set, test_set = dataset.subset(train_rows), dataset.subset(test_rows)
    if 0 < train_set.count < cfg.batch_size:
        logger.warning(
            "Batch size {} exceeds the {} training samples; using full batches",
            cfg.batch_size,
            train_set.count,
        )

    rng = np.random.default_rng(cfg.seed + 1)
    optimizer = Adam(model.params)
    history: LossHistory = []
    report_every = max(cfg.epochs // 20, 1)

    for epoch in range(1, cfg.epochs + 1):
        learning_rate = cfg.learning_rate_at(epoch - 1)
        order = rng.permutation(train_set.count)
        weighted = 0.0
        for start in range(0, train_set.count, cfg.batch_size):
            rows = order[start : start + cfg.batch_size]
            loss, grads = model.backward(
                train_set.k[rows], train_set.f[rows], train_set.u[rows], alpha, cfg.eps
            )
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
                raise DivergedLoss(f"Loss became non-finite at epoch {epoch}")
            optimizer.step(grads, learning_rate)
            weighted += loss * rows.shape[0]

        train_loss = weighted / train_set.count if train_set.count else float("nan")
        test_loss = (
            model.loss(test_set.k, test_set.f, test_set.u, alpha, cfg.eps)
            if test_set.count
            else float("nan")
        )
        history.append(
            {
                "epoch": epoch,
                "train_loss": train_loss,
                "test_loss": test_loss,
                "learning_rate": learning_rate,
            }
        )
        if epoch % report_every == 0 or epoch == cfg.epochs:
            logger.info(
                "Epoch {:>6}: train {:.4e}  test {:.4e}  lr {:.1e}",
                epoch,
                train_loss,
                test_loss,
                learning_rate,
            )
    return model, history


class TrainingOutcome(NamedTuple):
    model: DeepOnetModel
    history: LossHistory
    seconds: float


class TrainingService:
    """Trains a model against a dataset and reports the loss improvement."""

    def __init__(self, cfg: TrainConfig) -> None:
        self.cfg = cfg

    def run(self, model: DeepOnetModel, dataset: Dataset) -> TrainingOutcome:
        logger.info(
            "Training {} parameters on {} samples for {} epochs (batch {})",
            model.parameter_count,
            dataset.count,
            self.cfg.epochs,
            self.cfg.batch_size,
        )
        start = time.perf_counter()
        try:
            model, history = train(model, dataset, self.cfg)
        except DivergedLoss as e:
            logger.error("Training diverged: {}", e)
            raise
        seconds = time.perf_counter() - start

        if len(history) > 1:
            first, last = history[0]["test_loss"], history[-1]["test_loss"]
            logger.info("Test loss {:.4e} -> {:.4e} in {:.1f}s", first, last, seconds)
        return TrainingOutcome(model, history, seconds)
