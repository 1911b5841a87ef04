"""Minibatch training with adaptive-moment updates and early stopping on
validation AUC."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericalError, ValidationError
from ..eval import auc
from ..seeding import derive_seed
from .autodiff import Parameter
from .model import Batch, LinkPredictor, PreparedExample, make_batch


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    epochs: int = 400
    patience: int = 20
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1 or self.patience < 1:
            raise ValidationError("batch_size, epochs and patience must be >= 1")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")


class Adam:
    """Adaptive-moment SGD; no weight decay."""

    def __init__(self, params: list[Parameter], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            p.data = p.data - self.lr * (self.m[i] / bc1) / (np.sqrt(self.v[i] / bc2) + self.eps)


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_auc: float


@dataclass
class TrainResult:
    history: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    best_val_auc: float = 0.0
    stopped_early: bool = False

    def save_log(self, path) -> None:
        payload = {
            "best_epoch": self.best_epoch,
            "best_val_auc": self.best_val_auc,
            "stopped_early": self.stopped_early,
            "epochs": [{"epoch": s.epoch, "train_loss": s.train_loss,
                        "val_auc": s.val_auc} for s in self.history],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
            fh.write("\n")


def _val_auc(model: LinkPredictor, val: list[PreparedExample]) -> float:
    scores = model.scores(val, channel="fused")
    ys = np.array([e.y for e in val])
    return auc(scores[ys == 1.0], scores[ys == 0.0])


def train(model: LinkPredictor, train_examples: list[PreparedExample],
          val_examples: list[PreparedExample], cfg: TrainConfig) -> TrainResult:
    """Shuffled minibatch training; keeps and restores the parameters of
    the best-validation epoch.

    Stops once the validation AUC has not improved for ``patience``
    epochs.  Raises NumericalError (with epoch/batch diagnostics) the
    moment a non-finite loss or parameter appears.
    """
    if not train_examples:
        raise ValidationError("empty training dataset")
    if not val_examples:
        raise ValidationError("empty validation dataset")
    ys = {e.y for e in val_examples}
    if ys != {0.0, 1.0}:
        raise ValidationError("validation set needs both positive and negative pairs")
    opt = Adam(model.parameters(), lr=cfg.learning_rate)
    order_rng = np.random.default_rng(derive_seed(cfg.seed, "train.order"))
    result = TrainResult()
    best_state = model.state_arrays()
    best_auc = -np.inf
    best_epoch = 0
    n = len(train_examples)
    for epoch in range(1, cfg.epochs + 1):
        perm = order_rng.permutation(n)
        total_loss = 0.0
        for b, lo in enumerate(range(0, n, cfg.batch_size)):
            batch = make_batch([train_examples[i] for i in perm[lo:lo + cfg.batch_size]])
            opt.zero_grad()
            loss, _ = model.loss(batch)
            value = float(loss.data)
            if not np.isfinite(value):
                raise NumericalError(
                    f"non-finite loss {value} at epoch {epoch}, batch {b}")
            loss.backward()
            opt.step()
            total_loss += value * batch.y.shape[0]
        for p in model.parameters():
            if not np.all(np.isfinite(p.data)):
                raise NumericalError(f"non-finite parameter after epoch {epoch}")
        val_auc = _val_auc(model, val_examples)
        result.history.append(EpochStats(epoch=epoch, train_loss=total_loss / n,
                                         val_auc=val_auc))
        if val_auc > best_auc:
            best_auc = val_auc
            best_epoch = epoch
            best_state = model.state_arrays()
        elif epoch - best_epoch >= cfg.patience:
            result.stopped_early = True
            break
    model.load_state_arrays(best_state)
    result.best_epoch = best_epoch
    result.best_val_auc = float(best_auc)
    return result
