"""Cluster-labelled expert: K-means over handover features, each cluster
labelled with the action that scored the best mean QoE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .state import ACTIONS_MS, Experience, QoEWeights, action_index


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class ExpertTable:
    centroids: np.ndarray       # (k, 2) in z-scored feature space
    labels: tuple[int, ...]     # queue limits in ms
    feature_mean: np.ndarray
    feature_std: np.ndarray
    cluster_rewards: np.ndarray | None = None   # (k, n_actions) mean r, NaN when unseen

    @property
    def k(self) -> int:
        return len(self.labels)

    def scale(self, feats) -> np.ndarray:
        return (np.asarray(feats, dtype=float) - self.feature_mean) / self.feature_std


def kmeans(x: np.ndarray, k: int, seed: int = 0, max_iter: int = 300):
    """Lloyd's algorithm with k-means++ seeding.

    Returns (centroids, assignment).  Ties in assignment go to the lower
    centroid index; an emptied cluster keeps its previous centroid.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < k:
        raise InsufficientData(f"{n} samples for {k} clusters")
    rng = np.random.default_rng(seed)
    centers = [x[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min(((x[:, None, :] - np.asarray(centers)[None]) ** 2).sum(-1), axis=1)
        total = d2.sum()
        if total <= 0:
            # fewer distinct points than clusters; reuse points deterministically
            centers.append(x[rng.integers(n)])
            continue
        centers.append(x[rng.choice(n, p=d2 / total)])
    c = np.asarray(centers, dtype=float)
    assign = np.full(n, -1)
    for _ in range(max_iter):
        d = ((x[:, None, :] - c[None]) ** 2).sum(-1)
        new = np.argmin(d, axis=1)
        if np.array_equal(new, assign):
            break
        assign = new
        for j in range(k):
            m = assign == j
            if m.any():
                c[j] = x[m].mean(axis=0)
    return c, assign


def label_clusters(assign: np.ndarray, k: int, actions: np.ndarray, rewards: np.ndarray):
    """Per-cluster argmax of mean reward over actions (ties -> smaller limit)."""
    n_act = len(ACTIONS_MS)
    means = np.full((k, n_act), np.nan)
    labels = []
    for j in range(k):
        for a in range(n_act):
            m = (assign == j) & (actions == a)
            if m.any():
                means[j, a] = rewards[m].mean()
        row = means[j]
        if np.all(np.isnan(row)):
            raise InsufficientData(f"cluster {j} has no labelled samples")
        best = np.nanmax(row)
        labels.append(ACTIONS_MS[int(np.flatnonzero(row == best)[0])])
    return tuple(labels), means


def experience_features(experiences) -> np.ndarray:
    return np.array([e.state.features() for e in experiences], dtype=float)


def build_expert(experiences: list[Experience], k: int = 4,
                 w: QoEWeights = QoEWeights(), seed: int = 0) -> ExpertTable:
    """``experiences`` must already carry normalized R, F (see normalize_dataset)."""
    if len(experiences) < k:
        raise InsufficientData(f"{len(experiences)} experiences for k={k}")
    feats = experience_features(experiences)
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    std[std == 0] = 1.0
    z = (feats - mean) / std
    centroids, assign = kmeans(z, k, seed)
    actions = np.array([action_index(e.action_ms) for e in experiences])
    rewards = np.array([w.alpha * e.R - w.beta * e.F for e in experiences])
    labels, means = label_clusters(assign, k, actions, rewards)
    return ExpertTable(centroids, labels, mean, std, means)


def expert_action(table: ExpertTable, features) -> int:
    """Queue limit (ms) of the nearest centroid; ties go to the lower index."""
    z = table.scale(features)
    d = ((table.centroids - z) ** 2).sum(axis=1)
    return table.labels[int(np.argmin(d))]


def expert_actions(table: ExpertTable, features) -> np.ndarray:
    z = table.scale(np.atleast_2d(features))
    d = ((z[:, None, :] - table.centroids[None]) ** 2).sum(-1)
    return np.asarray(table.labels)[np.argmin(d, axis=1)]
