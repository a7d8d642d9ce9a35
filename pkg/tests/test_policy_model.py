import numpy as np
import pytest
import torch
from torch.nn import functional as F

from leoqueue.policy import (ModelConfig, QueuePolicyNet, SegmentState, ShapeMismatch, forward, infer,
                             load_policy, save_policy)
from leoqueue.policy.model import argmax_smallest

SMALL = ModelConfig(seq_len=6, d_model=8, n_heads=2, d_ff=16, n_layers=2, dropout=0.0)


def _state(idx=()):
    h = np.zeros(120)
    h[list(idx)] = 1
    return SegmentState.from_handovers(h)


def _loss(model, x, y):
    return F.cross_entropy(model(x), y)


def test_gradient_matches_finite_differences():
    torch.manual_seed(0)
    model = QueuePolicyNet(SMALL).double()
    x = torch.rand(5, 6, 2, dtype=torch.float64)
    y = torch.tensor([0, 1, 2, 3, 1])
    model.zero_grad()
    _loss(model, x, y).backward()
    analytic = torch.cat([p.grad.reshape(-1) for p in model.parameters()])
    eps = 1e-6
    numeric = []
    with torch.no_grad():
        for p in model.parameters():
            flat = p.view(-1)
            for i in range(flat.numel()):
                old = flat[i].item()
                flat[i] = old + eps
                up = _loss(model, x, y).item()
                flat[i] = old - eps
                down = _loss(model, x, y).item()
                flat[i] = old
                numeric.append((up - down) / (2 * eps))
    numeric = torch.tensor(numeric, dtype=torch.float64)
    rel = (analytic - numeric).norm() / max(analytic.norm(), numeric.norm())
    assert rel < 1e-4
    # element-wise: relative for sizeable entries, absolute for tiny ones
    big = numeric.abs() > 1e-3
    assert ((analytic[big] - numeric[big]).abs() / numeric[big].abs()).max() < 1e-4


def test_softmax_and_loss_sane():
    torch.manual_seed(1)
    model = QueuePolicyNet(SMALL).double().eval()
    x = torch.rand(7, 6, 2, dtype=torch.float64)
    p = torch.softmax(model(x), dim=-1)
    assert torch.allclose(p.sum(-1), torch.ones(7, dtype=torch.float64), atol=1e-9)
    assert _loss(model, x, torch.zeros(7, dtype=torch.long)).item() >= 0


def test_zero_head_equal_logits():
    model = QueuePolicyNet()
    with torch.no_grad():
        model.head.weight.zero_()
        model.head.bias.zero_()
    logits = forward(model, _state([3, 70]))
    assert np.all(logits == logits[0])
    assert infer(model, _state()) == 500


def test_permutation_invariance_without_positions():
    torch.manual_seed(2)
    model = QueuePolicyNet(ModelConfig(positional=False))
    a = _state([3])
    b = _state([90])
    assert np.allclose(forward(model, a), forward(model, b), atol=1e-5)
    model_pe = QueuePolicyNet(ModelConfig(positional=True))
    assert not np.allclose(forward(model_pe, a), forward(model_pe, b), atol=1e-6)


def test_well_formed_outputs():
    torch.manual_seed(3)
    model = QueuePolicyNet()
    rng = np.random.default_rng(0)
    for _ in range(5):
        s = _state(rng.choice(120, rng.integers(0, 6), replace=False))
        lg = forward(model, s)
        assert lg.shape == (4,) and np.all(np.isfinite(lg))
        assert infer(model, s) in (500, 600, 900, 2000)


def test_argmax_ties():
    assert argmax_smallest(np.array([0, 0, 0, 1.0]))[0] == 3
    assert argmax_smallest(np.array([1.0, 0, 0, 1.0]))[0] == 0


def test_shape_mismatch():
    model = QueuePolicyNet(SMALL)
    with pytest.raises(ShapeMismatch):
        model(torch.zeros(1, 120, 2))
    with pytest.raises(ShapeMismatch):
        ModelConfig(d_model=10, n_heads=4) and QueuePolicyNet(ModelConfig(d_model=10, n_heads=4))


def test_declared_shapes():
    sd = QueuePolicyNet().state_dict()
    assert sd["embed1.weight"].shape == (64, 2)
    assert sd["pos"].shape == (120, 64)
    assert sd["layers.5.ff1.weight"].shape == (256, 64)
    assert sd["head.weight"].shape == (4, 64)
    assert not any(k.startswith("layers.6") for k in sd)


def test_policy_persistence(tmp_path):
    torch.manual_seed(4)
    model = QueuePolicyNet()
    save_policy(model, tmp_path / "policy")
    back = load_policy(tmp_path / "policy")
    s = _state([10, 20])
    assert np.array_equal(forward(model, s), forward(back, s))
    raw = (tmp_path / "policy.bin").read_bytes()
    n = sum(v.numel() for v in model.state_dict().values())
    assert len(raw) == 4 * n
    import json
    entry = next(e for e in json.loads((tmp_path / "policy.json").read_text())["tensors"]
                 if e["name"] == "embed1.weight")
    first = model.state_dict()["embed1.weight"].reshape(-1)[0].item()
    off = 4 * entry["offset"]
    assert np.frombuffer(raw[off:off + 4], "<f4")[0] == np.float32(first)
