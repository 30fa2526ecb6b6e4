"""Linear evaluation of frozen embeddings: random splits, a softmax probe
trained with Adam, and ROC-AUC."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import softmax
from scipy.stats import rankdata

from spgcl.contrastive import AdamState, adam_step
from spgcl.errors import ConfigError, SpgclError
from spgcl.graph import check_features, check_labels
from spgcl.rng import make_rng

DEFAULT_FRACTIONS = (0.1, 0.1, 0.8)
PROBE_EPOCHS = 1000
PROBE_LR = 5e-4


@dataclass(frozen=True)
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


def random_split(n: int, fractions=DEFAULT_FRACTIONS, seed: int = 0) -> Split:
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or min(fractions) < 0 or sum(fractions) > 1 + 1e-9:
        raise ConfigError(f"split fractions must be three non-negative numbers summing to <= 1, got {fractions}")
    sizes = [int(math.floor(f * n + 1e-9)) for f in fractions]
    perm = make_rng(seed).permutation(n)
    a, b = sizes[0], sizes[0] + sizes[1]
    return Split(np.sort(perm[:a]), np.sort(perm[a:b]), np.sort(perm[b:b + sizes[2]]))


def roc_auc(scores, labels) -> float:
    """P(score of a random positive > score of a random negative), ties count 1/2."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos, n_neg = int(labels.sum()), int((~labels).sum())
    if n_pos == 0 or n_neg == 0:
        raise SpgclError("ROC-AUC needs both classes present")
    ranks = rankdata(scores)  # average ranks implement the 1/2 tie rule
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


@dataclass
class ProbeResult:
    accuracy: float
    accuracy_std: float
    accuracies: list
    auc: float | None = None
    auc_std: float | None = None
    weights: np.ndarray | None = None  # last repeat's selected probe (K+1, c), bias in the last row

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "accuracy_std": self.accuracy_std,
                "accuracies": list(self.accuracies), "auc": self.auc, "auc_std": self.auc_std}


def _augment(h):
    return np.hstack([h, np.ones((len(h), 1))])


def fit_probe(h, y, split: Split, num_classes: int, epochs: int = PROBE_EPOCHS, lr: float = PROBE_LR):
    """Full-batch softmax regression; returns the weights with the best validation accuracy."""
    ha = _augment(h)
    xt, yt = ha[split.train], y[split.train]
    onehot = np.eye(num_classes)[yt]
    weights = {"w": np.zeros((ha.shape[1], num_classes))}
    state = AdamState.zeros_like(weights)
    best_w, best_acc = weights["w"], -1.0
    for _ in range(epochs):
        logits = xt @ weights["w"]
        grad = xt.T @ (softmax(logits, axis=1) - onehot) / len(yt)
        weights, state = adam_step(weights, {"w": grad}, state, lr)
        if not len(split.val):
            best_w = weights["w"]
            continue
        acc = float(np.mean(np.argmax(ha[split.val] @ weights["w"], axis=1) == y[split.val]))
        if acc > best_acc:
            best_acc, best_w = acc, weights["w"]
    return best_w


def linear_probe(h, y, split: Split | None = None, repeats: int = 10, seed: int = 0,
                 fractions=DEFAULT_FRACTIONS, epochs: int = PROBE_EPOCHS, lr: float = PROBE_LR) -> ProbeResult:
    """Train a linear classifier on frozen ``h`` and report test accuracy over repeats.

    With ``split`` given every repeat reuses it; otherwise repeat ``r`` draws
    a fresh split from ``seed + r``. AUC is reported for binary labels.
    """
    h = check_features(h)
    y = check_labels(y, len(h))
    c = int(y.max()) + 1
    accs, aucs, w = [], [], None
    for r in range(repeats):
        sp_r = split if split is not None else random_split(len(h), fractions, seed + r)
        missing = set(range(c)) - set(y[sp_r.train].tolist())
        if missing:
            raise SpgclError(f"classes {sorted(missing)} absent from the training split")
        w = fit_probe(h, y, sp_r, c, epochs, lr)
        logits = _augment(h[sp_r.test]) @ w
        accs.append(float(np.mean(np.argmax(logits, axis=1) == y[sp_r.test])))
        if c == 2 and len(set(y[sp_r.test].tolist())) == 2:
            aucs.append(roc_auc(softmax(logits, axis=1)[:, 1], y[sp_r.test] == 1))
    return ProbeResult(
        float(np.mean(accs)), float(np.std(accs)), accs,
        float(np.mean(aucs)) if aucs else None, float(np.std(aucs)) if aucs else None, w)
