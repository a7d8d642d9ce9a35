"""Behavioural-cloning training loop with k-fold validation."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import torch
from torch.nn import functional as F

from .model import ModelConfig, QueuePolicyNet, argmax_smallest, as_tokens
from .state import ACTIONS_MS, action_index

log = logging.getLogger(__name__)


class EmptyDataset(ValueError):
    pass


class DivergedLoss(RuntimeError):
    pass


@dataclass(frozen=True)
class Hyperparams:
    epochs: int = 100
    batch_size: int = 128
    lr: float = 1e-3
    weight_decay: float = 0.01
    betas: tuple[float, float] = (0.9, 0.999)
    folds: int = 5
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)


@dataclass
class TrainResult:
    model: QueuePolicyNet
    log: list[dict]
    fold_accuracy: list[float]

    @property
    def cv_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracy)) if self.fold_accuracy else float("nan")

    def write_log(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["epoch", "fold", "train_loss", "val_accuracy", "learning_rate"],
                               lineterminator="\n")
            w.writeheader()
            w.writerows(self.log)


def _labels(actions) -> np.ndarray:
    a = np.asarray(actions)
    if a.size and a.max() >= len(ACTIONS_MS):
        return np.array([action_index(x) for x in a], dtype=np.int64)
    return a.astype(np.int64)


def fit(x: torch.Tensor, y: torch.Tensor, hp: Hyperparams, seed: int,
        val: tuple[torch.Tensor, torch.Tensor] | None = None, fold: int = -1,
        rows: list | None = None) -> QueuePolicyNet:
    torch.manual_seed(seed)
    model = QueuePolicyNet(hp.model)
    opt = torch.optim.AdamW(model.parameters(), lr=hp.lr, betas=hp.betas,
                            weight_decay=hp.weight_decay)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=hp.epochs, eta_min=0.0)
    gen = torch.Generator().manual_seed(seed)
    n = x.shape[0]
    for epoch in range(hp.epochs):
        lr = opt.param_groups[0]["lr"]
        model.train()
        perm = torch.randperm(n, generator=gen)
        total = 0.0
        for i in range(0, n, hp.batch_size):
            idx = perm[i:i + hp.batch_size]
            loss = F.cross_entropy(model(x[idx]), y[idx])
            if not torch.isfinite(loss):
                raise DivergedLoss(f"non-finite loss at epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(loss.detach()) * idx.numel()
        sched.step()
        acc = float("nan")
        if val is not None and (epoch == hp.epochs - 1):
            acc = accuracy(model, *val)
        if rows is not None:
            rows.append({"epoch": epoch, "fold": fold, "train_loss": total / n,
                         "val_accuracy": acc, "learning_rate": lr})
    return model


def accuracy(model: QueuePolicyNet, x: torch.Tensor, y: torch.Tensor) -> float:
    model.eval()
    with torch.no_grad():
        pred = argmax_smallest(model(x).numpy())
    return float((pred == y.numpy()).mean())


def train(states, actions, hp: Hyperparams = Hyperparams()) -> TrainResult:
    """Fit the policy to expert actions (ms values or class indices).

    Runs ``hp.folds``-fold cross-validation (skipped when folds < 2), then a
    final fit on all data whose weights are returned.
    """
    if len(states) == 0:
        raise EmptyDataset("no training samples")
    torch.use_deterministic_algorithms(True)
    x = as_tokens(states)
    y = torch.as_tensor(_labels(actions))
    n = x.shape[0]
    rows: list[dict] = []
    fold_acc = []
    if hp.folds >= 2 and n >= hp.folds:
        order = np.random.default_rng(hp.seed).permutation(n)
        for f, test_idx in enumerate(np.array_split(order, hp.folds)):
            train_idx = np.setdiff1d(order, test_idx)
            tr, te = torch.as_tensor(train_idx), torch.as_tensor(test_idx)
            fit(x[tr], y[tr], hp, hp.seed + 1 + f, val=(x[te], y[te]), fold=f, rows=rows)
            fold_acc.append(rows[-1]["val_accuracy"])
            log.info("fold %d val accuracy %.3f", f, fold_acc[-1])
    model = fit(x, y, hp, hp.seed, fold=-1, rows=rows)
    model.eval()
    return TrainResult(model, rows, fold_acc)
