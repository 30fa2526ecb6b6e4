"""Numerical checks of the concentration, factorization and linear-probe guarantees.

Conventions: ReLU activation (tau = c = 1); ``D_ii`` counts the self-loop;
R is the largest feature norm actually sampled.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from spgcl.contrastive import TransformedGraph, exact_loss
from spgcl.encoder import Embeddings, forward_theory
from spgcl.errors import NumericalError, ShapeError, SpgclError
from spgcl.graph import Graph, check_labels, normalized_adjacency
from spgcl.rng import spawn
from spgcl.synth import CsbmParams, generate_csbm, sample_features


# ------------------------------------------------------ factorization side

def mf_loss(f, a_sym) -> float:
    """||A_sym - F F^T||_F^2."""
    f = np.asarray(f, dtype=np.float64)
    a_sym = np.asarray(a_sym, dtype=np.float64)
    if f.ndim != 2 or a_sym.shape != (len(f), len(f)):
        raise ShapeError(f"F {f.shape} does not conform to A_sym {a_sym.shape}")
    return float(np.sum((a_sym - f @ f.T) ** 2))


def mf_optimum(tg: TransformedGraph, k: int) -> np.ndarray:
    """Rank-k minimizer of ``mf_loss``: eigenvectors of the k smallest Laplacian
    eigenvalues scaled by sqrt(1 - lambda), negative scales clamped to zero."""
    if not 1 <= k <= tg.num_nodes:
        raise SpgclError(f"rank must lie in [1, {tg.num_nodes}], got {k}")
    eig = tg.spectrum
    scale = np.sqrt(np.clip(1.0 - eig.eigenvalues[:k], 0.0, None))
    return eig.eigenvectors[:, :k] * scale


def loss_identity_check(z, tg: TransformedGraph) -> dict:
    """Compare the factorization loss of Z/sqrt(N) with the contrastive loss of Z.

    On a K_pos-regular transformed graph the two differ by ||A_sym||_F^2,
    which equals N / K_pos. Returns the residual of that identity and the
    constant computed both ways.
    """
    z = z.z if isinstance(z, Embeddings) else np.asarray(z, dtype=np.float64)
    if not tg.is_regular():
        raise SpgclError("regularity required: every node needs the same in- and out-degree")
    n = tg.num_nodes
    k_pos = int(np.bincount(tg.directed[:, 0], minlength=n)[0])
    const = n / k_pos
    mf = mf_loss(z / math.sqrt(n), tg.a_sym)
    cl = exact_loss(z, tg)
    return {
        "residual": abs(mf - cl - const),
        "mf_loss": mf,
        "contrastive_loss": cl,
        "constant": const,
        "a_sym_fro2": float(np.sum(tg.a_sym ** 2)),
    }


def homophily_gap(z, tg: TransformedGraph, y) -> dict:
    """Same-class minus different-class inner-product mass, normalized by N.

    gap = (1/N) [sum_{y_i = y_j} Z_i.Z_j - sum_{y_i != y_j} Z_i.Z_j] over
    ordered pairs. ``phi_bar`` is 1 minus the transformed graph's edge
    homophily (self-pairs excluded, as for any stored graph). ``phi_quadratic`` = y^T L y / N for
    +-1 labels (binary case only), the quantity the gap equals exactly at an
    exact factorization.
    """
    z = z.z if isinstance(z, Embeddings) else np.asarray(z, dtype=np.float64)
    y = check_labels(y, len(z))
    if len(np.unique(y)) < 2:
        raise SpgclError("homophily gap needs at least two classes")
    gram = z @ z.T
    same = y[:, None] == y[None, :]
    n = len(z)
    gap = float((gram[same].sum() - gram[~same].sum()) / n)
    phi = 1.0 - tg.edge_homophily(y)
    out = {"gap": gap, "phi_bar": phi, "one_minus_phi": 1.0 - phi, "phi_quadratic": None}
    if len(np.unique(y)) == 2:
        s = np.where(y == y.max(), 1.0, -1.0)
        out["phi_quadratic"] = float(s @ tg.l_sym @ s / n)
    return out


@dataclass
class BoundReport:
    phi_bar: float
    lambda_k1: float
    c_degree: float
    weight_norm_sum: float
    delta_prime: float
    feature_norm_bound: float
    first_term: float
    second_term: float
    bound: float
    measured_error: float

    @property
    def vacuous(self) -> bool:
        return self.bound >= 1.0

    def to_dict(self) -> dict:
        return {**asdict(self), "vacuous": self.vacuous}


def probe_squared_error(f, y) -> float:
    """Mean ||onehot(y_i) - B^T f_i||^2 for the least-squares B (no intercept)."""
    y = check_labels(y, len(f))
    onehot = np.eye(int(y.max()) + 1)[y]
    b, *_ = np.linalg.lstsq(f, onehot, rcond=None)
    return float(np.mean(np.sum((onehot - f @ b) ** 2, axis=1)))


def probe_error_bound(tg: TransformedGraph, w, delta_prime: float, k: int, g: Graph, x, y) -> BoundReport:
    """Bound phi/lam + R^2 C_deg sqrt(2 ln(2/delta')/lam^2) sum_k ||w_k||^2 with lam = lambda_{K+1}.

    ``w`` is the aggregation-layer weight matrix; ``g`` and ``x`` the input
    graph and features (for C_degree and R). The measured error is the
    least-squares one-hot regression error of the rank-``k`` optimum.
    """
    if not 0.0 < delta_prime < 1.0:
        raise SpgclError("delta' must lie in (0, 1)")
    if k + 1 > tg.num_nodes:
        raise SpgclError("need K + 1 <= N")
    lam = float(tg.spectrum.eigenvalues[k])
    if lam <= 1e-12:
        raise NumericalError(f"vacuous bound: lambda_(K+1) = {lam:.3g}")
    phi = 1.0 - tg.edge_homophily(y)
    c_deg = float(np.mean(1.0 / (g.degrees() + 1.0)))
    wsum = float(np.sum(np.asarray(w) ** 2))
    r = float(np.max(np.linalg.norm(x, axis=1)))
    first = phi / lam
    second = r ** 2 * c_deg * math.sqrt(2.0 * math.log(2.0 / delta_prime) / lam ** 2) * wsum
    err = probe_squared_error(mf_optimum(tg, k), y)
    return BoundReport(phi, lam, c_deg, wsum, delta_prime, r, first, second, first + second, err)


# ---------------------------------------------------------- concentration

@dataclass
class ConcentrationReport:
    deltas: list
    delta_prime: float
    node_trials: int
    pair_trials: int
    inner_samples: int
    feature_norm_bound: float
    node_deviation: np.ndarray  # (trials,)
    node_bound: dict  # delta -> (trials,)
    pair_deviation: np.ndarray
    pair_bound: np.ndarray

    def violation_rate(self, delta) -> float:
        return float(np.mean(self.node_deviation > self.node_bound[delta]))

    @property
    def pair_violation_rate(self) -> float:
        return float(np.mean(self.pair_deviation > self.pair_bound))

    def to_dict(self) -> dict:
        return {
            "deltas": list(self.deltas),
            "delta_prime": self.delta_prime,
            "node_trials": self.node_trials,
            "pair_trials": self.pair_trials,
            "inner_samples": self.inner_samples,
            "feature_norm_bound": self.feature_norm_bound,
            "node_violation_rate": {str(d): self.violation_rate(d) for d in self.deltas},
            "pair_violation_rate": self.pair_violation_rate,
            "max_node_deviation": float(self.node_deviation.max()),
            "min_node_bound": {str(d): float(self.node_bound[d].min()) for d in self.deltas},
            "max_pair_deviation": float(self.pair_deviation.max()),
            "min_pair_bound": float(self.pair_bound.min()),
        }


def _feature_batches(y, mu, total, chunk, rng):
    done = 0
    while done < total:
        m = min(chunk, total - done)
        yield np.stack([sample_features(y, mu, rng) for _ in range(m)])
        done += m


def concentration_experiment(params: CsbmParams, w, deltas=(0.05, 0.1), delta_prime: float = 0.1,
                             trials: int = 500, inner: int = 2000, seed: int = 0,
                             chunk: int = 250) -> ConcentrationReport:
    """Monte Carlo check of the two concentration inequalities on one CSBM graph.

    The graph and labels are fixed; features are redrawn. E[Z_i] and
    E[Z_i.Z_j] are estimated from ``inner`` draws. Each of ``trials`` fresh
    draws is scored at one random node and one random pair.
    """
    w = np.asarray(w, dtype=np.float64)
    g, _, y = generate_csbm(params)
    prop = normalized_adjacency(g, "row", sparse=True)
    deg = g.degrees() + 1.0
    pick_rng, inner_rng, trial_rng = spawn(seed, 3)
    n = g.num_nodes
    nodes = pick_rng.integers(0, n, size=trials)
    pairs = np.array([pick_rng.choice(n, size=2, replace=False) for _ in range(trials)])

    r_max = 0.0
    z_sum = np.zeros((n, w.shape[1]))
    ip_sum = np.zeros(trials)
    for xb in _feature_batches(y, params.mu, inner, chunk, inner_rng):
        r_max = max(r_max, float(np.linalg.norm(xb, axis=2).max()))
        zb = forward_theory(w, prop, xb)
        z_sum += zb.sum(axis=0)
        ip_sum += np.einsum("mtk,mtk->t", zb[:, pairs[:, 0]], zb[:, pairs[:, 1]])
    z_mean, ip_mean = z_sum / inner, ip_sum / inner

    node_dev = np.empty(trials)
    pair_dev = np.empty(trials)
    for t, xb in enumerate(_feature_batches(y, params.mu, trials, 1, trial_rng)):
        r_max = max(r_max, float(np.linalg.norm(xb[0], axis=1).max()))
        zt = forward_theory(w, prop, xb[0])
        i, (a, b) = nodes[t], pairs[t]
        node_dev[t] = np.abs(z_mean[i] - zt[i]).max()
        pair_dev[t] = abs(ip_mean[t] - zt[a] @ zt[b])

    k = w.shape[1]
    wmax = float(np.linalg.norm(w, axis=0).max())
    wsum = float(np.sum(w ** 2))
    node_bound = {d: r_max * wmax * np.sqrt(2.0 * math.log(2.0 * k / d) / deg[nodes]) for d in deltas}
    pair_bound = r_max ** 2 * wsum * np.sqrt(2.0 * math.log(2.0 / delta_prime) / (deg[pairs[:, 0]] * deg[pairs[:, 1]]))
    return ConcentrationReport(list(deltas), delta_prime, trials, trials, inner, r_max,
                               node_dev, node_bound, pair_dev, pair_bound)


def neighborhood_signature_pairs(g: Graph, y) -> np.ndarray:
    """Disjoint node pairs sharing label, degree and same-label neighbor count.

    With the graph fixed, such nodes aggregate identically distributed
    features, so their expected embeddings coincide exactly.
    """
    y = check_labels(y, g.num_nodes)
    deg = g.degrees()
    row = np.repeat(np.arange(g.num_nodes), deg)
    same = np.bincount(row, weights=(y[row] == y[g.indices]).astype(float), minlength=g.num_nodes)
    groups: dict = {}
    for v in range(g.num_nodes):
        groups.setdefault((int(y[v]), int(deg[v]), int(same[v])), []).append(v)
    pairs = []
    for members in groups.values():
        pairs += [(members[i], members[i + 1]) for i in range(0, len(members) - 1, 2)]
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def same_label_gap(params: CsbmParams, w, inner: int, seed: int = 0, replicates: int = 1,
                   chunk: int = 250) -> float:
    """Mean over signature pairs of ||E^[Z_i] - E^[Z_i']||_inf with ``inner`` Monte Carlo draws,
    averaged over ``replicates`` independent estimates."""
    g, _, y = generate_csbm(params)
    prop = normalized_adjacency(g, "row", sparse=True)
    pairs = neighborhood_signature_pairs(g, y)
    if len(pairs) == 0:
        raise SpgclError("no node pairs share a neighborhood signature")
    gaps = []
    for rng in spawn(seed, replicates):
        z_sum = np.zeros((g.num_nodes, np.shape(w)[1]))
        for xb in _feature_batches(y, params.mu, inner, chunk, rng):
            z_sum += forward_theory(w, prop, xb).sum(axis=0)
        z_mean = z_sum / inner
        gaps.append(np.mean(np.abs(z_mean[pairs[:, 0]] - z_mean[pairs[:, 1]]).max(axis=1)))
    return float(np.mean(gaps))
