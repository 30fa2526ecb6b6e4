"""The four graph augmentations studied spectrally: edge dropping, edge adding,
attribute masking and personalized-PageRank diffusion."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from spgcl.errors import ConfigError, SpgclError
from spgcl.graph import Graph, check_features, normalized_adjacency
from spgcl.numerics import linear_solve
from spgcl.rng import make_rng

KINDS = ("edge_drop", "edge_add", "attr_mask", "ppr_diffusion")


@dataclass(frozen=True)
class AugmentSpec:
    kind: str
    ratio: float = 0.2
    alpha: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown augmentation {self.kind!r}; expected one of {KINDS}")
        _check_ratio(self.ratio)
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError("alpha must lie in (0, 1]")


def _check_ratio(ratio: float) -> None:
    if not 0.0 <= ratio <= 1.0:
        raise ConfigError(f"ratio must lie in [0, 1], got {ratio}")


def _count(ratio: float, total: int) -> int:
    # tolerate representation error such as 0.3 * 10 = 2.9999999999999996
    return int(math.floor(ratio * total + 1e-9))


def drop_edges(g: Graph, ratio: float, rng: np.random.Generator) -> Graph:
    _check_ratio(ratio)
    k = _count(ratio, g.num_edges)
    drop = rng.choice(g.num_edges, size=k, replace=False)
    keep = np.ones(g.num_edges, dtype=bool)
    keep[drop] = False
    return Graph.from_edges(g.num_nodes, g.edges[keep])


def add_edges(g: Graph, ratio: float, rng: np.random.Generator) -> Graph:
    _check_ratio(ratio)
    k = _count(ratio, g.num_edges)
    if k == 0:
        return g
    n = g.num_nodes
    present = g.adjacency() > 0
    iu, ju = np.triu_indices(n, k=1)
    absent = np.flatnonzero(~present[iu, ju])
    if len(absent) < k:
        raise SpgclError(f"cannot add {k} edges: only {len(absent)} absent pairs")
    pick = rng.choice(absent, size=k, replace=False)
    new = np.stack([iu[pick], ju[pick]], axis=1)
    return Graph.from_edges(n, np.concatenate([g.edges, new]))


def mask_attributes(x, ratio: float, rng: np.random.Generator, per_entry: bool = False) -> np.ndarray:
    """Zero out ``floor(ratio * F)`` whole feature columns for every node.

    With ``per_entry=True`` instead zero ``floor(ratio * N * F)`` individual
    entries chosen uniformly.
    """
    x = check_features(x)
    _check_ratio(ratio)
    out = x.copy()
    if per_entry:
        k = _count(ratio, x.size)
        flat = rng.choice(x.size, size=k, replace=False)
        out.reshape(-1)[flat] = 0.0
    else:
        k = _count(ratio, x.shape[1])
        cols = rng.choice(x.shape[1], size=k, replace=False)
        out[:, cols] = 0.0
    return out


def ppr_diffusion(g: Graph, alpha: float) -> np.ndarray:
    """Dense alpha * (I - (1 - alpha) A_sym)^-1 with A_sym the self-loop GCN normalization."""
    if not 0.0 < alpha <= 1.0:
        raise ConfigError("alpha must lie in (0, 1]")
    a_sym = normalized_adjacency(g, "sym_selfloop")
    n = g.num_nodes
    s = alpha * linear_solve(np.eye(n) - (1.0 - alpha) * a_sym, np.eye(n))
    return 0.5 * (s + s.T)


def apply(spec: AugmentSpec, g: Graph, x=None):
    """Run ``spec`` against a graph (and features for masking).

    Returns a Graph for edge augmentations, a feature matrix for masking and
    a dense matrix for diffusion.
    """
    rng = make_rng(spec.seed)
    if spec.kind == "edge_drop":
        return drop_edges(g, spec.ratio, rng)
    if spec.kind == "edge_add":
        return add_edges(g, spec.ratio, rng)
    if spec.kind == "attr_mask":
        if x is None:
            raise ConfigError("attribute masking needs a feature matrix")
        return mask_attributes(x, spec.ratio, rng)
    return ppr_diffusion(g, spec.alpha)
