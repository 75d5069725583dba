"""Desk-scale training: RMSProp with a decaying learning rate over the
CNN + MDLSTM + CTC stack, with per-epoch loss/CER logging, a seeded
95:5 train/validation split and best-validation model selection.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import InfeasibleLabelError
from ..lexicon import EvalPair, cer
from . import ctc
from .charset import CharSet
from .model import Model

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    lr_decay: float = 0.99
    batch_size: int = 50
    noise_sigma: float = 0.1
    max_label_len: int = 32
    seed: int = 0
    rmsprop_decay: float = 0.9
    rmsprop_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def lr_at(self, epoch: int) -> float:
        return self.learning_rate * self.lr_decay ** epoch


@dataclass
class RmsPropState:
    cache: dict[str, np.ndarray] = field(default_factory=dict)

    def ensure(self, params: dict[str, np.ndarray]) -> None:
        for name, value in params.items():
            if name not in self.cache:
                self.cache[name] = np.zeros_like(value, dtype=np.float64)


def train_step(
    model: Model,
    batch: Sequence[tuple[np.ndarray, Sequence[int]]],
    cfg: TrainConfig,
    state: RmsPropState,
    epoch: int = 0,
    rng: Optional[np.random.Generator] = None,
) -> tuple[dict[str, np.ndarray], RmsPropState, float]:
    """One optimizer step over a batch of (normalized image, label) pairs.

    Items with infeasible labels are skipped and logged; the loss is the
    mean over the rest. Deterministic given the rng state.
    """
    images = np.stack([img for img, _ in batch])
    logits, fwd_cache = model.forward_batch(
        images, train=True, rng=rng, noise_sigma=cfg.noise_sigma)

    dlogits = np.zeros_like(logits)
    losses = []
    for idx, (_, label) in enumerate(batch):
        try:
            loss, grad = ctc.ctc_loss(logits[idx], list(label))
        except InfeasibleLabelError as exc:
            log.warning("skipping batch item %d: %s", idx, exc)
            continue
        losses.append(loss)
        dlogits[idx] = grad
    if not losses:
        return model.params, state, float("nan")
    dlogits /= len(losses)

    _, grads = model.backward_batch(dlogits, fwd_cache)

    state.ensure(model.params)
    lr = cfg.lr_at(epoch)
    for name, grad in grads.items():
        cache = state.cache[name]
        cache *= cfg.rmsprop_decay
        cache += (1.0 - cfg.rmsprop_decay) * np.square(grad, dtype=np.float64)
        step = lr * grad / (np.sqrt(cache) + cfg.rmsprop_eps)
        model.params[name] -= step.astype(model.params[name].dtype)
    return model.params, state, float(np.mean(losses))


def predict_texts(model: Model, images: np.ndarray, charset: CharSet) -> list[str]:
    logits, _ = model.forward_batch(images, train=False)
    return [ctc.greedy_decode(logits[i], charset) for i in range(len(images))]


def dataset_cer(model: Model, items, charset: CharSet) -> float:
    images = np.stack([img for img, _ in items])
    texts = predict_texts(model, images, charset)
    pairs = [EvalPair(charset.decode(label), text) for (_, label), text in zip(items, texts)]
    return cer(pairs)


@dataclass
class FitResult:
    params: dict[str, np.ndarray]
    history: list[dict]
    best_val_cer: float
    stopped_epoch: int


def fit(
    model: Model,
    items: Sequence[tuple[np.ndarray, Sequence[int]]],
    charset: CharSet,
    cfg: TrainConfig,
    epochs: int,
    val_split: float = 0.05,
    target_cer: Optional[float] = None,
    log_line: Callable[[str], None] = log.info,
) -> FitResult:
    """Full training run. Splits items 95:5 with a seeded shuffle, logs
    one line per epoch, keeps the best-validation parameters and stops
    early once the training CER reaches target_cer."""
    if not items:
        raise ValueError("no training items")
    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(len(items))
    n_val = int(round(val_split * len(items))) if len(items) > 1 else 0
    val_items = [items[i] for i in perm[:n_val]]
    train_items = [items[i] for i in perm[n_val:]]

    state = RmsPropState()
    best_params = {k: v.copy() for k, v in model.params.items()}
    best_val = float("inf")
    history: list[dict] = []
    stopped = epochs - 1

    for epoch in range(epochs):
        order = rng.permutation(len(train_items))
        epoch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_items[i] for i in order[start:start + cfg.batch_size]]
            _, state, loss = train_step(model, batch, cfg, state, epoch=epoch, rng=rng)
            if not np.isnan(loss):
                epoch_losses.append(loss)

        train_cer = dataset_cer(model, train_items, charset)
        val_cer = dataset_cer(model, val_items, charset) if val_items else train_cer
        mean_loss = float(np.mean(epoch_losses)) if epoch_losses else float("nan")
        history.append({"epoch": epoch, "loss": mean_loss,
                        "train_cer": train_cer, "val_cer": val_cer})
        log_line(f"epoch {epoch} loss {mean_loss:.4f} train_cer {train_cer:.4f} val_cer {val_cer:.4f}")

        if val_cer <= best_val:
            best_val = val_cer
            best_params = {k: v.copy() for k, v in model.params.items()}
        if target_cer is not None and train_cer <= target_cer:
            stopped = epoch
            break

    return FitResult(params=best_params, history=history,
                     best_val_cer=best_val, stopped_epoch=stopped)
