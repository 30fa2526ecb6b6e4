"""Synthetic attributed graphs whose neighbor labels depend only on the center label.

Two generators:

* the contextual stochastic block model (CSBM): Bernoulli(p) edges inside a
  class, Bernoulli(s) across classes, features ``mu[y] + N(0, I)``;
* a neighbor-distribution sampler: every node draws ``d`` neighbor labels
  from the row of a c x c distribution matrix and wires to random members
  of those classes.

Labels are ``i mod c`` unless class priors are given.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from spgcl.errors import ConfigError, SpgclError
from spgcl.graph import Graph
from spgcl.rng import spawn


def two_class_means(separation: float, feature_dim: int) -> np.ndarray:
    """Class means -mu, +mu along the all-ones direction with ||mu+ - mu-|| = separation.

    For identity-covariance noise the Bayes accuracy on raw features is
    Phi(separation / 2).
    """
    direction = np.ones(feature_dim) / np.sqrt(feature_dim)
    mu = 0.5 * separation * direction
    return np.stack([-mu, mu])


@dataclass
class CsbmParams:
    n: int
    p: float
    s: float
    mu: np.ndarray  # (num_classes, F)
    seed: int = 0
    priors: np.ndarray | None = None

    def __post_init__(self):
        self.mu = np.atleast_2d(np.asarray(self.mu, dtype=np.float64))
        if self.n < 2:
            raise ConfigError("CSBM needs n >= 2")
        if not (0.0 <= self.p <= 1.0 and 0.0 <= self.s <= 1.0):
            raise ConfigError("p and s must lie in [0, 1]")
        if self.mu.shape[0] < 2 or self.mu.shape[1] < 1:
            raise ConfigError("mu must be (num_classes >= 2) x (F >= 1)")

    @property
    def num_classes(self) -> int:
        return self.mu.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.mu.shape[1]


def csbm_by_degree(n: int, mean_degree: float, homophily: float, separation: float,
                   feature_dim: int, seed: int = 0) -> CsbmParams:
    """Balanced two-class CSBM with expected degree ``mean_degree`` and expected
    edge homophily ``homophily``."""
    if not 0.0 <= homophily <= 1.0:
        raise ConfigError("homophily must lie in [0, 1]")
    half = n / 2
    p = homophily * mean_degree / max(half - 1, 1)
    s = (1.0 - homophily) * mean_degree / half
    return CsbmParams(n, p, s, two_class_means(separation, feature_dim), seed)


@dataclass
class NeighborDistParams:
    n: int
    neighbor_dist: np.ndarray  # (c, c), row y is the neighbor-label law of class y
    degree: int
    mu: np.ndarray  # (c, F)
    seed: int = 0
    priors: np.ndarray | None = None
    noise_std: float = 1.0

    def __post_init__(self):
        self.neighbor_dist = np.asarray(self.neighbor_dist, dtype=np.float64)
        self.mu = np.atleast_2d(np.asarray(self.mu, dtype=np.float64))
        c = self.mu.shape[0]
        if self.neighbor_dist.shape != (c, c):
            raise ConfigError("neighbor_dist must be c x c with c = number of class means")
        if np.any(self.neighbor_dist < 0) or not np.allclose(self.neighbor_dist.sum(axis=1), 1.0):
            raise ConfigError("each neighbor distribution row must be a probability vector")
        if self.degree < 1:
            raise ConfigError("degree must be >= 1")

    @property
    def num_classes(self) -> int:
        return self.mu.shape[0]


def assign_labels(n: int, c: int, priors, rng: np.random.Generator) -> np.ndarray:
    if priors is None:
        return np.arange(n, dtype=np.int64) % c
    priors = np.asarray(priors, dtype=np.float64)
    if priors.shape != (c,) or np.any(priors < 0) or not np.isclose(priors.sum(), 1.0):
        raise ConfigError("priors must be a probability vector over the classes")
    return rng.choice(c, size=n, p=priors).astype(np.int64)


def sample_features(y: np.ndarray, mu: np.ndarray, rng: np.random.Generator, noise_std: float = 1.0):
    return mu[y] + noise_std * rng.standard_normal((len(y), mu.shape[1]))


def generate_csbm(params: CsbmParams):
    """Return ``(graph, features, labels)``; same params and seed give identical output."""
    label_rng, edge_rng, feat_rng = spawn(params.seed, 3)
    n = params.n
    y = assign_labels(n, params.num_classes, params.priors, label_rng)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(y[iu] == y[ju], params.p, params.s)
    keep = edge_rng.random(len(iu)) < prob
    g = Graph.from_edges(n, np.stack([iu[keep], ju[keep]], axis=1))
    x = sample_features(y, params.mu, feat_rng)
    return g, x, y


def generate_neighbor_dist_graph(params: NeighborDistParams):
    label_rng, edge_rng, feat_rng = spawn(params.seed, 3)
    n, c, d = params.n, params.num_classes, params.degree
    y = assign_labels(n, c, params.priors, label_rng)
    members = [np.flatnonzero(y == k) for k in range(c)]
    pairs = []
    for v in range(n):
        drawn = edge_rng.choice(c, size=d, p=params.neighbor_dist[y[v]])
        for k, cnt in zip(*np.unique(drawn, return_counts=True)):
            pool = members[k][members[k] != v]
            if len(pool) < cnt:
                raise SpgclError(
                    f"node {v}: needs {cnt} neighbors of class {k}, only {len(pool)} available")
            for u in edge_rng.choice(pool, size=cnt, replace=False):
                pairs.append((v, int(u)))
    g = Graph.from_edges(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))
    x = sample_features(y, params.mu, feat_rng, params.noise_std)
    return g, x, y
