"""Undirected graphs, normalization matrices and homophily metrics.

The stored edge set never contains self-loops. Operations that need the
``A + I`` convention add the identity themselves, so one storage format
serves both the GCN propagation rule and the loop-free transformed graphs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from spgcl.errors import InputError, ShapeError, SpgclError

NORMALIZATIONS = ("sym_selfloop", "row", "sym")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on nodes ``0..num_nodes-1``.

    ``edges`` holds each undirected pair once as ``(u, v)`` with ``u < v``,
    sorted lexicographically. Use :meth:`from_edges` to build one from raw
    pairs; it collapses duplicates and both orientations, and drops loops.
    """

    num_nodes: int
    edges: np.ndarray
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, num_nodes: int, pairs) -> "Graph":
        num_nodes = int(num_nodes)
        if num_nodes < 0:
            raise SpgclError("num_nodes must be non-negative")
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if pairs.size and (pairs.min() < 0 or pairs.max() >= num_nodes):
            raise ShapeError(f"edge endpoint outside [0, {num_nodes})")
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        edges = np.unique(np.stack([lo, hi], axis=1), axis=0).reshape(-1, 2)

        # CSR neighbor lists, each sorted ascending
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(num_nodes + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(num_nodes, _frozen(edges), _frozen(indptr), _frozen(dst.astype(np.int64)))

    @classmethod
    def empty(cls, num_nodes: int) -> "Graph":
        return cls.from_edges(num_nodes, np.empty((0, 2), dtype=np.int64))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def adjacency(self, sparse: bool = False):
        """0/1 adjacency without self-loops."""
        n = self.num_nodes
        data = np.ones(len(self.indices))
        row = np.repeat(np.arange(n), np.diff(self.indptr))
        a = sp.csr_matrix((data, (row, self.indices)), shape=(n, n))
        return a if sparse else a.toarray()

    def permute(self, perm) -> "Graph":
        """Relabel node ``i`` as ``perm[i]``."""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.num_nodes)):
            raise ShapeError("perm is not a permutation of the node set")
        return Graph.from_edges(self.num_nodes, perm[self.edges])

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.num_nodes == other.num_nodes and np.array_equal(self.edges, other.edges)

    __hash__ = None


def check_labels(y, num_nodes: int | None = None) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ShapeError("labels must be a 1-d array")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise InputError("labels must be integers")
        y = y.astype(np.int64)
    if y.size and y.min() < 0:
        raise InputError("labels must be non-negative class ids")
    if num_nodes is not None and len(y) != num_nodes:
        raise ShapeError(f"{len(y)} labels for {num_nodes} nodes")
    return y.astype(np.int64)


def num_classes(y) -> int:
    return int(np.max(y)) + 1 if len(y) else 0


def check_features(x, num_nodes: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError("features must be an N x F matrix")
    if not np.all(np.isfinite(x)):
        raise InputError("features contain NaN or Inf")
    if num_nodes is not None and x.shape[0] != num_nodes:
        raise ShapeError(f"{x.shape[0]} feature rows for {num_nodes} nodes")
    return x


def edge_homophily(g: Graph, y) -> float:
    """Fraction of edges whose endpoints share a label."""
    y = check_labels(y, g.num_nodes)
    if g.num_edges == 0:
        raise SpgclError("no edges")
    same = y[g.edges[:, 0]] == y[g.edges[:, 1]]
    return float(same.mean())


def node_homophily(g: Graph, y) -> float:
    """Mean over non-isolated nodes of the same-label neighbor fraction."""
    y = check_labels(y, g.num_nodes)
    deg = g.degrees()
    if not np.any(deg > 0):
        raise SpgclError("node homophily undefined: every node is isolated")
    row = np.repeat(np.arange(g.num_nodes), deg)
    same = np.zeros(g.num_nodes)
    np.add.at(same, row, (y[row] == y[g.indices]).astype(float))
    keep = deg > 0
    return float(np.mean(same[keep] / deg[keep]))


def normalized_adjacency(g: Graph, mode: str = "sym_selfloop", sparse: bool = False):
    """Normalized adjacency.

    ``sym_selfloop``: D'^-1/2 (A+I) D'^-1/2 with D' the degrees of A+I.
    ``row``: D'^-1 (A+I), rows sum to one.
    ``sym``: D^-1/2 A D^-1/2 with no added loops; needs every degree >= 1.
    """
    if mode not in NORMALIZATIONS:
        raise SpgclError(f"unknown normalization {mode!r}")
    a = g.adjacency(sparse=True)
    if mode in ("sym_selfloop", "row"):
        a = a + sp.identity(g.num_nodes, format="csr")
    deg = np.asarray(a.sum(axis=1)).ravel()
    if mode == "sym" and np.any(deg == 0):
        raise SpgclError("zero degree: sym normalization needs every node to have an edge")
    if mode == "row":
        out = sp.diags(1.0 / deg) @ a
    else:
        d = sp.diags(1.0 / np.sqrt(deg))
        out = d @ a @ d
    out = sp.csr_matrix(out)
    return out if sparse else out.toarray()


def sym_laplacian(g: Graph, mode: str = "sym_selfloop") -> np.ndarray:
    if mode == "row":
        raise SpgclError("the symmetric Laplacian needs a symmetric normalization")
    return np.eye(g.num_nodes) - normalized_adjacency(g, mode)


def laplacian_from_weights(w: np.ndarray) -> np.ndarray:
    """I - D^-1/2 W D^-1/2 for a dense symmetric weight matrix (e.g. a diffusion)."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ShapeError("weight matrix must be square")
    deg = w.sum(axis=1)
    if np.any(deg <= 0):
        raise SpgclError("zero degree in weighted matrix")
    d = 1.0 / np.sqrt(deg)
    return np.eye(len(w)) - d[:, None] * w * d[None, :]


def k_hop_nodes(g: Graph, sources, hops: int) -> np.ndarray:
    """Sorted union of the ``hops``-hop neighborhoods of ``sources`` (sources included)."""
    seen = np.zeros(g.num_nodes, dtype=bool)
    frontier = np.unique(np.asarray(sources, dtype=np.int64))
    seen[frontier] = True
    for _ in range(hops):
        if frontier.size == 0:
            break
        starts, ends = g.indptr[frontier], g.indptr[frontier + 1]
        nxt = np.concatenate([g.indices[s:e] for s, e in zip(starts, ends)]) if frontier.size else frontier
        nxt = np.unique(nxt)
        nxt = nxt[~seen[nxt]]
        seen[nxt] = True
        frontier = nxt
    return np.flatnonzero(seen)
