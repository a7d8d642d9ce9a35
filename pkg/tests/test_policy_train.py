import csv

import numpy as np
import pytest
import torch

from leoqueue.policy import (ACTIONS_MS, DivergedLoss, EmptyDataset, Hyperparams, ModelConfig,
                             SegmentState, infer, train)

SMALL = ModelConfig(d_model=16, n_heads=2, d_ff=32, n_layers=2)


def state_with(n: int, offset: int = 0) -> SegmentState:
    h = np.zeros(120)
    h[offset:offset + 12 * n:12][:n] = 1
    return SegmentState.from_handovers(h)


def four_class():
    return [state_with(0), state_with(2), state_with(5), state_with(10)], [500, 600, 900, 2000]


def test_memorizes_four_samples():
    states, labels = four_class()
    res = train(states, labels, Hyperparams(epochs=100, folds=0, seed=0))
    assert list(infer(res.model, states)) == labels


def test_empty_dataset():
    with pytest.raises(EmptyDataset):
        train([], [], Hyperparams(epochs=1, model=SMALL))


def test_diverged_loss(monkeypatch):
    import sys
    tr = sys.modules["leoqueue.policy.train"]
    states, labels = four_class()
    real = tr.F.cross_entropy
    monkeypatch.setattr(tr.F, "cross_entropy", lambda *a, **k: real(*a, **k) * float("inf"))
    with pytest.raises(DivergedLoss):
        train(states, labels, Hyperparams(epochs=3, folds=0, model=SMALL))


def test_deterministic_and_logged(tmp_path):
    states, labels = four_class()
    states, labels = states * 5, labels * 5
    hp = Hyperparams(epochs=4, folds=5, batch_size=8, model=SMALL, seed=3)
    a, b = train(states, labels, hp), train(states, labels, hp)
    for (ka, va), (kb, vb) in zip(a.model.state_dict().items(), b.model.state_dict().items()):
        assert ka == kb and torch.equal(va, vb)
    assert len(a.fold_accuracy) == 5
    a.write_log(tmp_path / "log.csv")
    rows = list(csv.DictReader(open(tmp_path / "log.csv")))
    assert list(rows[0]) == ["epoch", "fold", "train_loss", "val_accuracy", "learning_rate"]
    assert len(rows) == 6 * 4
    final = [r for r in rows if r["fold"] == "-1"]
    assert float(final[0]["learning_rate"]) == pytest.approx(1e-3)
    # cosine annealing decays the rate every epoch
    lrs = [float(r["learning_rate"]) for r in final]
    assert all(y < x for x, y in zip(lrs, lrs[1:]))
    assert all(float(r["train_loss"]) >= 0 for r in rows)


def test_duplicated_dataset_same_decisions():
    rng = np.random.default_rng(0)
    states, labels = [], []
    for _ in range(24):
        n = int(rng.integers(0, 8))
        states.append(state_with(n, int(rng.integers(0, 12))))
        labels.append(ACTIONS_MS[min(n // 2, 3)])
    hp = Hyperparams(epochs=30, folds=0, batch_size=128, model=SMALL, seed=1)
    a = train(states, labels, hp)
    b = train(states * 2, labels * 2, hp)
    assert np.array_equal(infer(a.model, states), infer(b.model, states))
