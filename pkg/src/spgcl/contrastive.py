"""Single-pass contrastive training: positive mining from embedding similarity,
the transformed graph those positives induce, the contrastive losses, Adam,
and the training loop with its diagnostics."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, fields
from functools import cached_property

import numpy as np

from spgcl.encoder import (EncoderParams, Embeddings, backward, forward, init_params,
                           propagation_matrix, update_running_stats, weight_norm_sum)
from spgcl.errors import ConfigError, NumericalError, ShapeError, SpgclError
from spgcl.graph import Graph, check_features, check_labels, k_hop_nodes
from spgcl.rng import spawn

log = logging.getLogger(__name__)


# ---------------------------------------------------------------- sampling

def sample_pool(g: Graph, b: int, hops: int, rng: np.random.Generator):
    """``b`` seeds uniformly without replacement and the union of their ``hops``-hop neighborhoods."""
    if b > g.num_nodes:
        raise SpgclError(f"batch size {b} exceeds node count {g.num_nodes}")
    if b < 1 or hops < 0:
        raise ConfigError("need b >= 1 and hops >= 0")
    seeds = np.sort(rng.choice(g.num_nodes, size=b, replace=False))
    return seeds, k_hop_nodes(g, seeds, hops)


@dataclass(frozen=True)
class PositiveSet:
    seeds: np.ndarray  # (b,)
    nodes: np.ndarray  # (b, K_pos)
    scores: np.ndarray  # (b, K_pos) cosine similarities

    @property
    def k_pos(self) -> int:
        return self.nodes.shape[1]

    def pairs(self) -> np.ndarray:
        """Directed (seed, positive) pairs, shape (b * K_pos, 2)."""
        return np.stack([np.repeat(self.seeds, self.k_pos), self.nodes.ravel()], axis=1)

    @classmethod
    def from_lists(cls, positives: dict) -> "PositiveSet":
        seeds = np.array(sorted(positives), dtype=np.int64)
        nodes = np.array([positives[s] for s in seeds], dtype=np.int64).reshape(len(seeds), -1)
        return cls(seeds, nodes, np.full(nodes.shape, np.nan))


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na, nb = np.linalg.norm(a, axis=1), np.linalg.norm(b, axis=1)
    na, nb = np.where(na > 0, na, 1.0), np.where(nb > 0, nb, 1.0)
    return (a / na[:, None]) @ (b / nb[:, None]).T


def mine_positives(z, seeds, pool, k_pos: int, include_self: bool = False) -> PositiveSet:
    """Top-``k_pos`` pool nodes by cosine similarity to each seed.

    The seed itself is excluded unless ``include_self``. Ties go to the
    lower node id.
    """
    z = z.z if isinstance(z, Embeddings) else np.asarray(z, dtype=np.float64)
    seeds = np.asarray(seeds, dtype=np.int64)
    pool = np.unique(np.asarray(pool, dtype=np.int64))
    if k_pos < 1:
        raise ConfigError("k_pos must be >= 1")
    in_pool = np.isin(seeds, pool)
    for s, inside in zip(seeds, in_pool):
        avail = len(pool) - (0 if include_self else int(inside))
        if avail < k_pos:
            raise SpgclError(f"seed {s}: pool offers {avail} candidates, need {k_pos}")
    sims = cosine_similarity(z[seeds], z[pool])
    if not include_self:
        sims[seeds[:, None] == pool[None, :]] = -np.inf
    # stable sort on -sim keeps ascending pool id order among ties
    order = np.argsort(-sims, axis=1, kind="stable")[:, :k_pos]
    return PositiveSet(seeds, pool[order], np.take_along_axis(sims, order, axis=1))


@dataclass(frozen=True)
class NegativeSet:
    anchors: np.ndarray  # (m,)
    nodes: np.ndarray  # (m, K_neg)

    def pairs(self) -> np.ndarray:
        k = self.nodes.shape[1]
        return np.stack([np.repeat(self.anchors, k), self.nodes.ravel()], axis=1)


def sample_negatives(anchors, num_nodes: int, k_neg: int, rng: np.random.Generator) -> NegativeSet:
    """``k_neg`` nodes per anchor, uniform over all nodes with replacement."""
    if k_neg < 1:
        raise ConfigError("k_neg must be >= 1")
    anchors = np.asarray(anchors, dtype=np.int64)
    return NegativeSet(anchors, rng.integers(0, num_nodes, size=(len(anchors), k_neg)))


# ------------------------------------------------------- transformed graph

class TransformedGraph:
    """Graph on the original node set whose edges are the mined positive pairs.

    Keeps the directed pairs and a symmetric 0/1 view. Self-pairs, which
    only arise when mining includes the seed itself, become diagonal ones.
    """

    def __init__(self, num_nodes: int, directed):
        directed = np.asarray(directed, dtype=np.int64).reshape(-1, 2)
        if directed.size and (directed.min() < 0 or directed.max() >= num_nodes):
            raise ShapeError("positive pair outside the node set")
        self.num_nodes = int(num_nodes)
        self.directed = np.unique(directed, axis=0).reshape(-1, 2)
        lo = np.minimum(self.directed[:, 0], self.directed[:, 1])
        hi = np.maximum(self.directed[:, 0], self.directed[:, 1])
        self.undirected = np.unique(np.stack([lo, hi], axis=1), axis=0).reshape(-1, 2)

    @classmethod
    def from_positives(cls, pos: PositiveSet, num_nodes: int) -> "TransformedGraph":
        return cls(num_nodes, pos.pairs())

    @property
    def num_undirected(self) -> int:
        return len(self.undirected)

    @cached_property
    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.num_nodes, self.num_nodes))
        a[self.undirected[:, 0], self.undirected[:, 1]] = 1.0
        a[self.undirected[:, 1], self.undirected[:, 0]] = 1.0
        return a

    @cached_property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @cached_property
    def a_sym(self) -> np.ndarray:
        d = self.degrees
        if np.any(d == 0):
            raise SpgclError("zero degree: transformed graph has isolated nodes")
        s = 1.0 / np.sqrt(d)
        return s[:, None] * self.adjacency * s[None, :]

    @cached_property
    def l_sym(self) -> np.ndarray:
        return np.eye(self.num_nodes) - self.a_sym

    @cached_property
    def spectrum(self):
        from spgcl.numerics import symmetric_eig
        return symmetric_eig(self.l_sym)

    def is_regular(self) -> bool:
        out = np.bincount(self.directed[:, 0], minlength=self.num_nodes)
        return bool(np.all(out == out[0]) and np.all(self.degrees == out[0]) and out[0] > 0)

    def edge_homophily(self, y) -> float:
        y = check_labels(y, self.num_nodes)
        e = self.undirected[self.undirected[:, 0] != self.undirected[:, 1]]
        if len(e) == 0:
            raise SpgclError("no edges")
        return float(np.mean(y[e[:, 0]] == y[e[:, 1]]))


def build_transformed_graph(pos: PositiveSet, num_nodes: int) -> TransformedGraph:
    return TransformedGraph.from_positives(pos, num_nodes)


# ------------------------------------------------------------------ losses

def _zmat(z) -> np.ndarray:
    return z.z if isinstance(z, Embeddings) else np.asarray(z, dtype=np.float64)


def empirical_loss_and_grad(z, pos: PositiveSet, neg: NegativeSet):
    """Sampled contrastive objective and its gradient with respect to Z.

    loss = -2/n_pos * sum_{(i,i+)} Z_i.Z_i+  +  1/n_neg * sum_{(j,k)} (Z_j.Z_k)^2
    with n_pos, n_neg the realized pair counts.
    """
    z = _zmat(z)
    pp, nn = pos.pairs(), neg.pairs()
    if len(pp) == 0:
        raise SpgclError("empty positive set")
    if len(nn) == 0:
        raise SpgclError("empty negative set")
    n_pos, n_neg = len(pp), len(nn)
    zi, zp = z[pp[:, 0]], z[pp[:, 1]]
    zj, zk = z[nn[:, 0]], z[nn[:, 1]]
    dots = np.einsum("ij,ij->i", zj, zk)
    loss = -2.0 / n_pos * np.einsum("ij,ij->", zi, zp) + np.sum(dots ** 2) / n_neg

    grad = np.zeros_like(z)
    np.add.at(grad, pp[:, 0], -2.0 / n_pos * zp)
    np.add.at(grad, pp[:, 1], -2.0 / n_pos * zi)
    c = (2.0 / n_neg * dots)[:, None]
    np.add.at(grad, nn[:, 0], c * zk)
    np.add.at(grad, nn[:, 1], c * zj)
    return float(loss), grad


def exact_loss(z, tg: TransformedGraph) -> float:
    """-2 * mean over directed positive pairs of Z_i.Z_j + mean over all N^2 pairs of (Z_j.Z_k)^2."""
    z = _zmat(z)
    if len(tg.directed) == 0:
        raise SpgclError("empty positive edge set")
    e = tg.directed
    pos = np.einsum("ij,ij->i", z[e[:, 0]], z[e[:, 1]]).mean()
    gram = z.T @ z
    return float(-2.0 * pos + np.sum(gram * gram) / len(z) ** 2)


# ------------------------------------------------------------------- Adam

@dataclass
class AdamState:
    t: int
    m: dict
    v: dict

    @classmethod
    def zeros_like(cls, weights: dict) -> "AdamState":
        return cls(0, {k: np.zeros_like(v) for k, v in weights.items()},
                   {k: np.zeros_like(v) for k, v in weights.items()})


def adam_step(weights: dict, grads: dict, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam update. Returns new ``(weights, state)``; inputs are untouched."""
    if set(grads) != set(weights):
        raise ShapeError("gradient names do not match parameter names")
    for k, g in grads.items():
        if np.shape(g) != np.shape(weights[k]):
            raise ShapeError(f"gradient {k} has shape {np.shape(g)}, expected {np.shape(weights[k])}")
        if not np.all(np.isfinite(g)):
            raise NumericalError(f"non-finite gradient for {k}")
    t = state.t + 1
    bc1, bc2 = 1.0 - beta1 ** t, 1.0 - beta2 ** t
    new_w, new_m, new_v = {}, {}, {}
    for k, w in weights.items():
        g = grads[k]
        m = beta1 * state.m[k] + (1.0 - beta1) * g
        v = beta2 * state.v[k] + (1.0 - beta2) * g * g
        new_w[k] = w - lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
        new_m[k], new_v[k] = m, v
    return new_w, AdamState(t, new_m, new_v)


# ---------------------------------------------------------------- training

@dataclass
class TrainConfig:
    """Training hyperparameters. Defaults follow the reference Cora setting."""

    lr: float = 0.001
    k_pos: int = 5
    k_neg: int = 100
    batch: int = 512
    hops: int = 2
    embed: int = 1024
    hidden: int | None = None  # defaults to embed
    proj: int | None = None  # defaults to embed
    epochs: int = 100
    bn_enabled: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("k_pos", "k_neg", "batch", "hops", "embed"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if not self.lr > 0:
            raise ConfigError("lr must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def class_center_distance(z, y) -> float:
    """Mean over nodes of 1 - cos(Z_i, mean of Z over the class of i)."""
    z = _zmat(z)
    y = check_labels(y, len(z))
    c = int(y.max()) + 1
    centers = np.zeros((c, z.shape[1]))
    np.add.at(centers, y, z)
    centers /= np.maximum(np.bincount(y, minlength=c), 1)[:, None]
    cos = np.einsum("ij,ij->i", *_unit_rows(z, centers[y]))
    return float(np.mean(1.0 - cos))


def _unit_rows(a, b):
    na, nb = np.linalg.norm(a, axis=1), np.linalg.norm(b, axis=1)
    return a / np.where(na > 0, na, 1.0)[:, None], b / np.where(nb > 0, nb, 1.0)[:, None]


def _pair_codes(pairs: np.ndarray, n: int) -> np.ndarray:
    return np.unique(pairs[:, 0] * n + pairs[:, 1])


def dynamics_metrics(z, pos_t: PositiveSet, pos_prev: PositiveSet | None, labels=None,
                     covered: np.ndarray | None = None) -> tuple[dict, np.ndarray]:
    """Diagnostics for one epoch's positive selection.

    ``covered`` is the boolean node mask accumulated over previous epochs;
    the updated mask is returned alongside the record. A node counts as
    covered once it is an endpoint of a selected positive pair.
    """
    z = _zmat(z)
    n = len(z)
    pairs = pos_t.pairs()
    covered = np.zeros(n, dtype=bool) if covered is None else covered.copy()
    covered[pairs.ravel()] = True
    cur = _pair_codes(pairs, n)
    rec = {
        "cover_ratio": float(covered.mean()),
        "overlap_ratio": None,
        "class_center_distance": None,
        "tg_edge_homophily": None,
        "true_positive_ratio": None,
    }
    if pos_prev is not None:
        prev = _pair_codes(pos_prev.pairs(), n)
        rec["overlap_ratio"] = float(len(np.intersect1d(cur, prev)) / len(cur))
    if labels is not None:
        y = check_labels(labels, n)
        rec["class_center_distance"] = class_center_distance(z, y)
        rec["true_positive_ratio"] = float(np.mean(y[pairs[:, 0]] == y[pairs[:, 1]]))
        rec["tg_edge_homophily"] = TransformedGraph(n, pairs).edge_homophily(y)
    return rec, covered


def train(g: Graph, x, config: TrainConfig, labels=None, callback=None):
    """Run the single-pass training loop.

    Labels, when given, feed diagnostics only. Returns ``(params, metrics)``
    with one metrics dict per epoch.
    """
    x = check_features(x, g.num_nodes)
    n = g.num_nodes
    hidden = config.hidden or config.embed
    params = init_params(x.shape[1], hidden, config.embed, config.proj, config.bn_enabled, config.seed)
    batch = min(config.batch, n)
    if batch < config.batch:
        log.info("batch %d exceeds node count, using %d", config.batch, batch)
    # one stream for pool sampling, one for negatives
    pool_rng, neg_rng = spawn(config.seed + 1, 2)
    prop = propagation_matrix(g)
    state = AdamState.zeros_like(params.weights)
    metrics, covered, prev = [], None, None
    for epoch in range(config.epochs):
        emb, cache = forward(params, prop, x, mode="train")
        seeds, pool = sample_pool(g, batch, config.hops, pool_rng)
        pos = mine_positives(emb.z, seeds, pool, config.k_pos)
        neg = sample_negatives(seeds, n, config.k_neg, neg_rng)
        loss, grad_z = empirical_loss_and_grad(emb.z, pos, neg)
        grads = backward(params, cache, grad_z)

        rec, covered = dynamics_metrics(emb.z, pos, prev, labels, covered)
        rec = {"epoch": epoch, "loss": loss, **rec,
               "weight_norms": weight_norm_sum(params)}
        metrics.append(rec)
        if callback is not None:
            callback(rec)

        weights, state = adam_step(params.weights, grads, state, config.lr)
        params = update_running_stats(params, cache).with_weights(weights)
        prev = pos
    return params, metrics


def embed(params: EncoderParams, g: Graph, x) -> Embeddings:
    emb, _ = forward(params, g, x, mode="eval")
    return emb


def mine_transformed_graph(params: EncoderParams, g: Graph, x, k_pos: int, hops: int) -> TransformedGraph:
    """Transformed graph from mining positives for every node within the ``hops``-hop pool."""
    z = embed(params, g, x).z
    seeds = np.arange(g.num_nodes)
    pos = mine_positives(z, seeds, k_hop_nodes(g, seeds, hops), k_pos)
    return TransformedGraph.from_positives(pos, g.num_nodes)
