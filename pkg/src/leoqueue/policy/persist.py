"""Portable weight files: a JSON manifest plus raw little-endian float32 payload.

Layout of ``<stem>.json``::

    {"format": "leoqueue-tensors", "version": 1, "kind": ...,
     "scalars": {...}, "tensors": [{"name", "shape", "offset", "count"}, ...]}

and ``<stem>.bin`` holds the tensors back to back (offset/count in floats).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .expert import ExpertTable
from .model import ModelConfig, QueuePolicyNet

FORMAT = "leoqueue-tensors"


def _write(stem, kind: str, scalars: dict, tensors: dict[str, np.ndarray]) -> None:
    stem = Path(stem)
    entries, blobs, offset = [], [], 0
    for name, arr in tensors.items():
        a = np.ascontiguousarray(arr, dtype="<f4")
        entries.append({"name": name, "shape": list(a.shape), "offset": offset, "count": int(a.size)})
        blobs.append(a.tobytes())
        offset += a.size
    manifest = {"format": FORMAT, "version": 1, "kind": kind, "scalars": scalars, "tensors": entries}
    stem.with_suffix(".json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    stem.with_suffix(".bin").write_bytes(b"".join(blobs))


def _read(stem, kind: str):
    stem = Path(stem)
    manifest = json.loads(stem.with_suffix(".json").read_text())
    if manifest.get("format") != FORMAT or manifest.get("kind") != kind:
        raise ValueError(f"{stem}: not a {kind} file")
    flat = np.frombuffer(stem.with_suffix(".bin").read_bytes(), dtype="<f4")
    tensors = {}
    for e in manifest["tensors"]:
        seg = flat[e["offset"]:e["offset"] + e["count"]]
        if seg.size != e["count"]:
            raise ValueError(f"{stem}: payload truncated at {e['name']}")
        tensors[e["name"]] = seg.reshape(e["shape"]).copy()
    return manifest["scalars"], tensors


def save_policy(model: QueuePolicyNet, stem) -> None:
    tensors = {k: v.detach().cpu().numpy() for k, v in model.state_dict().items()}
    _write(stem, "policy", model.cfg.to_dict(), tensors)


def load_policy(stem) -> QueuePolicyNet:
    scalars, tensors = _read(stem, "policy")
    model = QueuePolicyNet(ModelConfig(**scalars))
    state = {k: torch.from_numpy(v) for k, v in tensors.items()}
    model.load_state_dict(state, strict=True)
    model.eval()
    return model


def save_expert(table: ExpertTable, stem) -> None:
    tensors = {"centroids": table.centroids, "feature_mean": table.feature_mean,
               "feature_std": table.feature_std}
    if table.cluster_rewards is not None:
        tensors["cluster_rewards"] = table.cluster_rewards
    _write(stem, "expert", {"k": table.k, "labels": list(table.labels)}, tensors)


def load_expert(stem) -> ExpertTable:
    scalars, t = _read(stem, "expert")
    return ExpertTable(t["centroids"].astype(float), tuple(int(x) for x in scalars["labels"]),
                       t["feature_mean"].astype(float), t["feature_std"].astype(float),
                       t["cluster_rewards"].astype(float) if "cluster_rewards" in t else None)
