"""Two-layer GCN encoder and MLP projection head with a hand-written backward pass.

Forward, with P = D'^-1/2 (A+I) D'^-1/2::

    A1 = P X W1        B1 = bn(A1)    R1 = relu(B1)
    A2 = P R1 W2       H  = bn(A2)
    Q  = H V1 + c1     S  = relu(Q)   U = S V2 + c2
    Z  = U / ||U||_row                 (zero rows stay zero)

``bn`` is batch normalization without affine parameters: batch statistics
in train mode, running averages in eval mode. GCN layers carry no bias.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from spgcl.errors import ShapeError, SpgclError
from spgcl.graph import Graph, check_features, normalized_adjacency
from spgcl.rng import make_rng

BN_EPS = 1e-5
BN_MOMENTUM = 0.1
GCN_KEYS = ("gcn0", "gcn1")
PROJ_KEYS = ("proj0", "proj0_bias", "proj1", "proj1_bias")


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class EncoderParams:
    weights: dict  # name -> array, in checkpoint declaration order
    bn_enabled: bool = False
    bn_mean: tuple = ()
    bn_var: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "weights", {k: _frozen(v) for k, v in self.weights.items()})
        object.__setattr__(self, "bn_mean", tuple(_frozen(m) for m in self.bn_mean))
        object.__setattr__(self, "bn_var", tuple(_frozen(v) for v in self.bn_var))
        w0, w1 = self.weights["gcn0"], self.weights["gcn1"]
        v0, v1 = self.weights["proj0"], self.weights["proj1"]
        if w0.shape[1] != w1.shape[0] or w1.shape[1] != v0.shape[0] or v0.shape[1] != v1.shape[0]:
            raise ShapeError("encoder weight shapes do not chain")
        if self.weights["proj0_bias"].shape != (v0.shape[1],) or self.weights["proj1_bias"].shape != (v1.shape[1],):
            raise ShapeError("projection bias shapes do not match their weights")
        if self.bn_enabled and (len(self.bn_mean) != 2 or len(self.bn_var) != 2):
            raise ShapeError("batch norm needs running stats for both GCN layers")

    @property
    def feature_dim(self) -> int:
        return self.weights["gcn0"].shape[0]

    @property
    def embed_dim(self) -> int:
        return self.weights["gcn1"].shape[1]

    def with_weights(self, weights: dict) -> "EncoderParams":
        return replace(self, weights=weights)

    def tensors(self) -> dict:
        out = dict(self.weights)
        for i, (m, v) in enumerate(zip(self.bn_mean, self.bn_var)):
            out[f"bn{i}_mean"] = m
            out[f"bn{i}_var"] = v
        return out

    @classmethod
    def from_tensors(cls, tensors: dict, bn_enabled: bool) -> "EncoderParams":
        weights = {k: tensors[k] for k in GCN_KEYS + PROJ_KEYS}
        if bn_enabled:
            return cls(weights, True, (tensors["bn0_mean"], tensors["bn1_mean"]),
                       (tensors["bn0_var"], tensors["bn1_var"]))
        return cls(weights, False)


def init_params(feature_dim: int, hidden_dim: int, embed_dim: int, proj_dim: int | None = None,
                bn_enabled: bool = False, seed: int = 0) -> EncoderParams:
    """Uniform(-sqrt(3/fan_in), sqrt(3/fan_in)) weights (unit-variance fan-in scaling), zero biases."""
    if min(feature_dim, hidden_dim, embed_dim) < 1:
        raise ShapeError("all layer widths must be >= 1")
    proj_dim = embed_dim if proj_dim is None else proj_dim
    rng = make_rng(seed)

    def draw(fan_in, fan_out):
        lim = np.sqrt(3.0 / fan_in)
        return rng.uniform(-lim, lim, size=(fan_in, fan_out))

    weights = {
        "gcn0": draw(feature_dim, hidden_dim),
        "gcn1": draw(hidden_dim, embed_dim),
        "proj0": draw(embed_dim, embed_dim),
        "proj0_bias": np.zeros(embed_dim),
        "proj1": draw(embed_dim, proj_dim),
        "proj1_bias": np.zeros(proj_dim),
    }
    if bn_enabled:
        return EncoderParams(weights, True, (np.zeros(hidden_dim), np.zeros(embed_dim)),
                             (np.ones(hidden_dim), np.ones(embed_dim)))
    return EncoderParams(weights, False)


@dataclass(frozen=True)
class Embeddings:
    h: np.ndarray  # encoder output
    z: np.ndarray  # L2-normalized projection


@dataclass
class ForwardCache:
    params: EncoderParams
    mode: str
    prop: sp.csr_matrix
    px: np.ndarray
    b1: np.ndarray
    pr1: np.ndarray
    h: np.ndarray
    q: np.ndarray
    s: np.ndarray
    z: np.ndarray
    row_norm: np.ndarray
    bn_inv_std: list = field(default_factory=list)
    bn_hat: list = field(default_factory=list)
    bn_batch_mean: list = field(default_factory=list)
    bn_batch_var: list = field(default_factory=list)


def propagation_matrix(g: Graph) -> sp.csr_matrix:
    return normalized_adjacency(g, "sym_selfloop", sparse=True)


def _bn_forward(a, params, layer, mode, cache):
    if mode == "train":
        mean, var = a.mean(axis=0), a.var(axis=0)
    else:
        mean, var = params.bn_mean[layer], params.bn_var[layer]
    inv_std = 1.0 / np.sqrt(var + BN_EPS)
    hat = (a - mean) * inv_std
    if cache is not None:
        cache.bn_inv_std.append(inv_std)
        cache.bn_hat.append(hat)
        cache.bn_batch_mean.append(mean)
        cache.bn_batch_var.append(var)
    return hat


def _bn_backward(dy, cache, layer):
    inv_std, hat = cache.bn_inv_std[layer], cache.bn_hat[layer]
    if cache.mode != "train":
        return dy * inv_std
    n = dy.shape[0]
    return inv_std / n * (n * dy - dy.sum(axis=0) - hat * (dy * hat).sum(axis=0))


def row_normalize(u: np.ndarray):
    r = np.linalg.norm(u, axis=1)
    safe = np.where(r > 0, r, 1.0)
    return u / safe[:, None], r


def forward(params: EncoderParams, g: Graph | sp.spmatrix, x, mode: str = "eval",
            keep_cache: bool | None = None):
    """Return ``(Embeddings, cache)``.

    ``g`` may be a Graph or a precomputed propagation matrix. The cache is
    filled in train mode (or when ``keep_cache`` is set) and is None otherwise.
    """
    if mode not in ("train", "eval"):
        raise SpgclError(f"unknown mode {mode!r}")
    keep_cache = (mode == "train") if keep_cache is None else keep_cache
    prop = propagation_matrix(g) if isinstance(g, Graph) else sp.csr_matrix(g)
    x = check_features(x, prop.shape[0])
    if x.shape[1] != params.feature_dim:
        raise ShapeError(f"features have {x.shape[1]} columns, encoder expects {params.feature_dim}")
    w = params.weights
    cache = None
    if keep_cache:
        cache = ForwardCache(params, mode, prop, *([None] * 8))

    px = prop @ x
    a1 = px @ w["gcn0"]
    b1 = _bn_forward(a1, params, 0, mode, cache) if params.bn_enabled else a1
    r1 = np.maximum(b1, 0.0)
    pr1 = prop @ r1
    a2 = pr1 @ w["gcn1"]
    h = _bn_forward(a2, params, 1, mode, cache) if params.bn_enabled else a2
    q = h @ w["proj0"] + w["proj0_bias"]
    s = np.maximum(q, 0.0)
    u = s @ w["proj1"] + w["proj1_bias"]
    z, r = row_normalize(u)
    if cache is not None:
        cache.px, cache.b1, cache.pr1, cache.h = px, b1, pr1, h
        cache.q, cache.s, cache.z, cache.row_norm = q, s, z, r
    return Embeddings(h, z), cache


def backward(params: EncoderParams, cache: ForwardCache, grad_z) -> dict:
    """Gradients of a scalar objective with respect to every weight, given dL/dZ."""
    if cache is None or cache.params is not params:
        raise SpgclError("stale or mismatched forward cache")
    grad_z = np.asarray(grad_z, dtype=np.float64)
    if grad_z.shape != cache.z.shape:
        raise ShapeError(f"grad_z shape {grad_z.shape} != Z shape {cache.z.shape}")
    w = params.weights
    z, r = cache.z, cache.row_norm
    # d(u/|u|) = (I - z z^T) du / |u|; zero rows have zero gradient
    safe = np.where(r > 0, r, 1.0)
    du = (grad_z - z * (z * grad_z).sum(axis=1, keepdims=True)) / safe[:, None]
    du[r == 0] = 0.0

    grads = {
        "proj1": cache.s.T @ du,
        "proj1_bias": du.sum(axis=0),
    }
    dq = (du @ w["proj1"].T) * (cache.q > 0)
    grads["proj0"] = cache.h.T @ dq
    grads["proj0_bias"] = dq.sum(axis=0)
    dh = dq @ w["proj0"].T

    da2 = _bn_backward(dh, cache, 1) if params.bn_enabled else dh
    grads["gcn1"] = cache.pr1.T @ da2
    dr1 = cache.prop.T @ (da2 @ w["gcn1"].T)
    db1 = dr1 * (cache.b1 > 0)
    da1 = _bn_backward(db1, cache, 0) if params.bn_enabled else db1
    grads["gcn0"] = cache.px.T @ da1
    return {k: grads[k] for k in w}


def update_running_stats(params: EncoderParams, cache: ForwardCache, momentum: float = BN_MOMENTUM):
    """Fold a train-mode batch into the BN running averages (unbiased variance)."""
    if not params.bn_enabled:
        return params
    n = cache.z.shape[0]
    corr = n / (n - 1) if n > 1 else 1.0
    means = tuple((1 - momentum) * m + momentum * bm for m, bm in zip(params.bn_mean, cache.bn_batch_mean))
    var = tuple((1 - momentum) * v + momentum * bv * corr for v, bv in zip(params.bn_var, cache.bn_batch_var))
    return replace(params, bn_mean=means, bn_var=var)


def relu(a):
    return np.maximum(a, 0.0)


def forward_theory(w, g: Graph | sp.spmatrix, x, activation=relu) -> np.ndarray:
    """One aggregation layer ``activation(D'^-1 (A+I) X W)``, no normalization of the output.

    ``x`` may carry a leading batch axis (M, N, F) to evaluate many feature
    draws on one graph.
    """
    prop = normalized_adjacency(g, "row", sparse=True) if isinstance(g, Graph) else sp.csr_matrix(g)
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != w.shape[0] or x.shape[-2] != prop.shape[0]:
        raise ShapeError(f"shape mismatch: X {x.shape}, W {w.shape}, N={prop.shape[0]}")
    xw = x @ w
    if xw.ndim == 2:
        return activation(prop @ xw)
    m, n, k = xw.shape
    agg = prop @ xw.transpose(1, 0, 2).reshape(n, m * k)
    return activation(agg.reshape(n, m, k).transpose(1, 0, 2))


def weight_norm_sum(params: EncoderParams | dict) -> dict:
    """Sum over columns of ||w_k||^2 (the squared Frobenius norm) for each weight matrix."""
    weights = params.weights if isinstance(params, EncoderParams) else params
    return {k: float(np.sum(np.asarray(v) ** 2)) for k, v in weights.items() if np.ndim(v) == 2}
