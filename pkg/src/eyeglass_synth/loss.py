"""Mining-contrastive loss over cosine similarity, with hard-pair mining.

    L = -1/(2|P|) sum_{(i,j) in P} d(f_i, f_j) + 1/(2|N|) sum_{(i,j) in N} d(f_i, f_j)

P holds the least similar same-identity pairs of a batch, N the most similar
different-identity pairs.  Batches are ``features`` (n, d) plus ``labels``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, MiningError, TrainingError

NORM_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class Embedding:
    vector: np.ndarray
    identity: str
    glass: bool = False

    def __post_init__(self):
        v = np.array(self.vector, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(v)) or np.linalg.norm(v) <= NORM_EPS:
            raise InvalidArgument("embedding must be finite with nonzero norm")
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)


def as_batch(embeddings):
    """List of :class:`Embedding` -> (features, labels)."""
    return (np.stack([e.vector for e in embeddings]), [e.identity for e in embeddings])


@dataclass(frozen=True)
class PairSets:
    """Index pairs (i < j) of the hard positive and hard negative sets."""

    positive: tuple = field(default_factory=tuple)
    negative: tuple = field(default_factory=tuple)

    def validate(self, labels):
        if not self.positive or not self.negative:
            raise InvalidArgument("both hard positive and hard negative sets must be nonempty")
        if set(self.positive) & set(self.negative):
            raise InvalidArgument("a pair appears in both P and N")
        if any(labels[i] != labels[j] for i, j in self.positive):
            raise InvalidArgument("P contains a pair with different labels")
        if any(labels[i] == labels[j] for i, j in self.negative):
            raise InvalidArgument("N contains a pair with equal labels")


def _norms(features):
    n = np.linalg.norm(features, axis=1)
    if np.any(~np.isfinite(n)) or np.any(n <= NORM_EPS):
        raise InvalidArgument("zero-norm or non-finite embedding")
    return n


def cosine_similarity(fi, fj) -> float:
    fi = np.asarray(fi, dtype=np.float64)
    fj = np.asarray(fj, dtype=np.float64)
    ni, nj = np.linalg.norm(fi), np.linalg.norm(fj)
    if ni <= NORM_EPS or nj <= NORM_EPS:
        raise InvalidArgument("cosine similarity of a zero-norm vector")
    # the norm product is symmetric, and so is the dot product
    return float(np.clip(np.dot(fi, fj) / (ni * nj), -1.0, 1.0))


def similarity_matrix(features) -> np.ndarray:
    f = np.asarray(features, dtype=np.float64)
    u = f / _norms(f)[:, None]
    return np.clip(u @ u.T, -1.0, 1.0)


def _pair_similarities(features, pairs):
    f = np.asarray(features, dtype=np.float64)
    n = _norms(f)
    if not len(pairs):
        return np.zeros(0)
    i, j = np.asarray(pairs).T
    return np.clip(np.einsum("kd,kd->k", f[i], f[j]) / (n[i] * n[j]), -1.0, 1.0)


def _fraction_count(rho, total):
    # round() guards against products like 0.1 * 30 = 3.0000000000000004
    return min(total, max(1, math.ceil(round(rho * total, 9))))


def all_pairs(labels):
    """All (i < j) pairs split into (positive, negative) lists."""
    pos, neg = [], []
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            (pos if labels[i] == labels[j] else neg).append((i, j))
    return pos, neg


def mine_pairs(features, labels, rho_p=0.5, rho_n=0.5) -> PairSets:
    """Hardest ``ceil(rho * count)`` positive and negative pairs.

    Positives are ranked by ascending similarity, negatives by descending
    similarity; ties go to the lexicographically smaller (i, j).
    """
    labels = list(labels)
    if not (0 < rho_p <= 1 and 0 < rho_n <= 1):
        raise InvalidArgument("mining fractions must lie in (0, 1]")
    if len(set(labels)) < 2:
        raise MiningError("batch needs at least two identities")
    if len(labels) != len(features):
        raise InvalidArgument("features and labels differ in length")
    pos, neg = all_pairs(labels)
    if not pos:
        raise MiningError("batch has no positive pair")
    sp = _pair_similarities(features, pos)
    sn = _pair_similarities(features, neg)
    # lexsort: last key is primary; pairs are already in lexicographic order
    order_p = np.lexsort((np.arange(len(pos)), sp))
    order_n = np.lexsort((np.arange(len(neg)), -sn))
    kp, kn = _fraction_count(rho_p, len(pos)), _fraction_count(rho_n, len(neg))
    return PairSets(tuple(pos[k] for k in order_p[:kp]), tuple(neg[k] for k in order_n[:kn]))


def mining_contrastive_loss(features, labels, sets: PairSets) -> float:
    sets.validate(list(labels))
    sp = _pair_similarities(features, sets.positive)
    sn = _pair_similarities(features, sets.negative)
    # fsum is exactly rounded, so the result does not depend on pair order
    return -math.fsum(sp) / (2 * len(sp)) + math.fsum(sn) / (2 * len(sn))


def loss_gradient(features, labels, sets: PairSets) -> np.ndarray:
    """dL/df for every embedding, with the mined sets held fixed."""
    sets.validate(list(labels))
    f = np.asarray(features, dtype=np.float64)
    n = _norms(f)
    grad = np.zeros_like(f)
    for pairs, coef in ((sets.positive, -0.5 / len(sets.positive)),
                        (sets.negative, 0.5 / len(sets.negative))):
        i, j = np.asarray(pairs).T
        d = _pair_similarities(f, pairs)[:, None]
        nij = (n[i] * n[j])[:, None]
        gi = f[j] / nij - d * f[i] / (n[i] ** 2)[:, None]
        gj = f[i] / nij - d * f[j] / (n[j] ** 2)[:, None]
        np.add.at(grad, i, coef * gi)
        np.add.at(grad, j, coef * gj)
    return grad


def separation(features, labels) -> float:
    """Mean positive-pair similarity minus mean negative-pair similarity."""
    pos, neg = all_pairs(list(labels))
    return float(np.mean(_pair_similarities(features, pos)) - np.mean(_pair_similarities(features, neg)))


@dataclass
class ToyTrainResult:
    W: np.ndarray
    loss: list
    separation: list


def toy_train(points, labels, steps=500, lr=0.1, rho_p=0.5, rho_n=0.5, W0=None) -> ToyTrainResult:
    """Gradient descent on a linear embedding ``f = W @ x``.

    Loss and separation are recorded before the first step and after every
    step, so each list has ``steps + 1`` values.
    """
    X = np.asarray(points, dtype=np.float64)
    labels = list(labels)
    counts = {l: labels.count(l) for l in set(labels)}
    if len(counts) < 2 or min(counts.values()) < 2:
        raise InvalidArgument("toy_train needs >= 2 identities with >= 2 samples each")
    W = np.eye(X.shape[1]) if W0 is None else np.array(W0, dtype=np.float64)
    losses, seps = [], []

    def record(F, sets):
        losses.append(mining_contrastive_loss(F, labels, sets))
        seps.append(separation(F, labels))

    for step in range(steps + 1):
        F = X @ W.T
        if not np.all(np.isfinite(F)):
            raise TrainingError(f"embeddings diverged at step {step}")
        sets = mine_pairs(F, labels, rho_p, rho_n)
        record(F, sets)
        if not math.isfinite(losses[-1]):
            raise TrainingError(f"loss is NaN at step {step}")
        if step == steps:
            break
        W = W - lr * (loss_gradient(F, labels, sets).T @ X)
    return ToyTrainResult(W, losses, seps)


def gaussian_clusters(n_per_identity=16, dim=8, offset=1.0, sigma=1.0, identities=2, seed=0):
    """Overlapping isotropic Gaussian identity clusters (toy training data)."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(identities, dim))
    centers = offset * centers / np.linalg.norm(centers, axis=1, keepdims=True)
    X = np.concatenate([c + sigma * rng.normal(size=(n_per_identity, dim)) for c in centers])
    labels = [str(k) for k in range(identities) for _ in range(n_per_identity)]
    return X, labels
