"""Transformer encoder imitation policy over per-second handover tokens."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .state import ACTIONS_MS, SEGMENT_S, SegmentState


class ShapeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    seq_len: int = SEGMENT_S
    token_dim: int = 2
    d_model: int = 64
    n_heads: int = 4
    d_ff: int = 256
    n_layers: int = 6
    n_actions: int = len(ACTIONS_MS)
    dropout: float = 0.1
    positional: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def sinusoidal_table(seq_len: int, d_model: int) -> torch.Tensor:
    pos = torch.arange(seq_len, dtype=torch.float64)[:, None]
    i = torch.arange(0, d_model, 2, dtype=torch.float64)
    div = torch.exp(-math.log(10000.0) * i / d_model)
    pe = torch.zeros(seq_len, d_model, dtype=torch.float64)
    pe[:, 0::2] = torch.sin(pos * div)
    pe[:, 1::2] = torch.cos(pos * div)[:, : d_model // 2]
    return pe


class SelfAttention(nn.Module):
    def __init__(self, d_model: int, n_heads: int, dropout: float):
        super().__init__()
        if d_model % n_heads:
            raise ShapeMismatch("d_model must be divisible by n_heads")
        self.h = n_heads
        self.qkv = nn.Linear(d_model, 3 * d_model)
        self.out = nn.Linear(d_model, d_model)
        self.drop = nn.Dropout(dropout)

    def forward(self, x):
        b, t, d = x.shape
        q, k, v = self.qkv(x).view(b, t, 3, self.h, d // self.h).permute(2, 0, 3, 1, 4)
        att = (q @ k.transpose(-2, -1)) / math.sqrt(d // self.h)
        att = self.drop(torch.softmax(att, dim=-1))
        y = (att @ v).transpose(1, 2).reshape(b, t, d)
        return self.out(y)


class EncoderLayer(nn.Module):
    """Pre-LN block: x + attn(ln(x)), then x + ffn(ln(x))."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.ln1 = nn.LayerNorm(cfg.d_model)
        self.attn = SelfAttention(cfg.d_model, cfg.n_heads, cfg.dropout)
        self.ln2 = nn.LayerNorm(cfg.d_model)
        self.ff1 = nn.Linear(cfg.d_model, cfg.d_ff)
        self.ff2 = nn.Linear(cfg.d_ff, cfg.d_model)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x):
        x = x + self.drop(self.attn(self.ln1(x)))
        x = x + self.drop(self.ff2(self.drop(F.gelu(self.ff1(self.ln2(x))))))
        return x


class QueuePolicyNet(nn.Module):
    def __init__(self, cfg: ModelConfig = ModelConfig()):
        super().__init__()
        self.cfg = cfg
        self.embed1 = nn.Linear(cfg.token_dim, cfg.d_model)
        self.embed2 = nn.Linear(cfg.d_model, cfg.d_model)
        self.register_buffer("pos", sinusoidal_table(cfg.seq_len, cfg.d_model).float())
        self.layers = nn.ModuleList(EncoderLayer(cfg) for _ in range(cfg.n_layers))
        self.ln_f = nn.LayerNorm(cfg.d_model)
        self.head = nn.Linear(cfg.d_model, cfg.n_actions)

    def forward(self, tokens):
        if tokens.shape[-2:] != (self.cfg.seq_len, self.cfg.token_dim):
            raise ShapeMismatch(f"expected (*, {self.cfg.seq_len}, {self.cfg.token_dim}), got {tuple(tokens.shape)}")
        x = self.embed2(F.gelu(self.embed1(tokens)))
        if self.cfg.positional:
            x = x + self.pos.to(x.dtype)
        for layer in self.layers:
            x = layer(x)
        return self.head(self.ln_f(x).mean(dim=1))


def as_tokens(states) -> torch.Tensor:
    if isinstance(states, SegmentState):
        states = [states]
    if isinstance(states, np.ndarray):
        arr = states
    else:
        arr = np.stack([s.tokens() for s in states])
    return torch.as_tensor(arr, dtype=torch.float32)


def forward(model: QueuePolicyNet, state) -> np.ndarray:
    """Logits for one state (shape (4,)) or a batch (shape (n, 4))."""
    single = isinstance(state, SegmentState)
    model.eval()
    with torch.no_grad():
        out = model(as_tokens(state)).double().numpy()
    return out[0] if single else out


def argmax_smallest(logits: np.ndarray) -> np.ndarray:
    """Row-wise argmax; exact ties resolve to the lowest index (smallest limit)."""
    logits = np.atleast_2d(logits)
    return np.argmax(logits == logits.max(axis=1, keepdims=True), axis=1)


def infer(model: QueuePolicyNet, state) -> int | np.ndarray:
    logits = forward(model, state)
    idx = argmax_smallest(logits)
    limits = np.asarray(ACTIONS_MS)[idx]
    return int(limits[0]) if isinstance(state, SegmentState) else limits


def check_finite(model: nn.Module) -> None:
    for name, p in model.state_dict().items():
        if not torch.isfinite(p).all():
            raise ValueError(f"non-finite values in {name}")
