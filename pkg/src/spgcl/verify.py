"""Seeded verification suites over the theory checks, each returning a JSON-ready dict."""
from __future__ import annotations

import numpy as np

from spgcl.contrastive import TrainConfig, TransformedGraph, mine_transformed_graph, train
from spgcl.errors import ConfigError
from spgcl.rng import make_rng, spawn
from spgcl.synth import csbm_by_degree, generate_csbm
from spgcl.theory import (concentration_experiment, loss_identity_check, mf_loss, mf_optimum,
                          same_label_gap, homophily_gap, probe_error_bound)

SUITES = ("lemma1", "thm1", "thm2", "thm3")


def cycle_graph(n: int) -> TransformedGraph:
    """Each node's positives are its two cycle neighbors."""
    i = np.arange(n)
    return TransformedGraph(n, np.concatenate([np.stack([i, (i + 1) % n], 1), np.stack([i, (i - 1) % n], 1)]))


def complete_graph(n: int) -> TransformedGraph:
    return TransformedGraph(n, [(i, j) for i in range(n) for j in range(n) if i != j])


def block_graph(sizes) -> TransformedGraph:
    """Disjoint cliques with self-pairs, so A_sym is block diagonal J/m and exactly low rank."""
    blk = np.repeat(np.arange(len(sizes)), sizes)
    n = len(blk)
    return TransformedGraph(n, [(i, j) for i in range(n) for j in range(n) if blk[i] == blk[j]])


def lemma1_suite(seed: int = 0, samples: int = 20, dim: int = 8) -> dict:
    rng = make_rng(seed)
    cases = []
    for name, tg in (("cycle12", cycle_graph(12)), ("cycle20", cycle_graph(20)), ("complete6", complete_graph(6))):
        res = [loss_identity_check(rng.standard_normal((tg.num_nodes, dim)), tg) for _ in range(samples)]
        cases.append({"graph": name, "num_nodes": tg.num_nodes, "constant": res[0]["constant"],
                      "a_sym_fro2": res[0]["a_sym_fro2"],
                      "max_residual": max(r["residual"] for r in res)})
    worst = max(c["max_residual"] for c in cases)
    return {"cases": cases, "max_residual": worst, "passed": worst <= 1e-8}


def thm1_suite(seed: int = 0, n: int = 200, mean_degree: float = 20.0, feature_dim: int = 8,
               width: int = 8, trials: int = 500, inner: int = 2000, budget: int = 500,
               replicates: int = 8) -> dict:
    w_rng, _ = spawn(seed, 2)
    params = csbm_by_degree(n, mean_degree, 0.8, 2.0, feature_dim, seed)
    w = w_rng.standard_normal((feature_dim, width)) / np.sqrt(feature_dim)
    rep = concentration_experiment(params, w, (0.05, 0.1), 0.1, trials, inner, seed)
    small = same_label_gap(params, w, budget, seed + 1, replicates)
    large = same_label_gap(params, w, 4 * budget, seed + 2, replicates)
    out = rep.to_dict()
    out["same_label_gap"] = {"budget": budget, "gap_small": small, "gap_large": large,
                             "shrink_factor": small / large}
    out["passed"] = (all(rep.violation_rate(d) <= d + 0.05 for d in rep.deltas)
                     and rep.pair_violation_rate <= rep.delta_prime + 0.05 and small / large >= 1.8)
    return out


def random_block_instance(rng):
    """Random clique union with binary labels covering both classes."""
    sizes = rng.integers(2, 6, size=int(rng.integers(2, 5)))
    tg = block_graph(sizes)
    y = rng.integers(0, 2, size=tg.num_nodes)
    y[rng.choice(tg.num_nodes, size=2, replace=False)] = [0, 1]
    return tg, y, len(sizes)


def thm2_suite(seed: int = 0, instances: int = 10) -> dict:
    rng = make_rng(seed)
    cases = []
    for _ in range(instances):
        tg, y, k = random_block_instance(rng)
        f = mf_optimum(tg, k)
        res = homophily_gap(f, tg, y)
        res.update({"num_nodes": tg.num_nodes, "rank": k, "mf_loss": mf_loss(f, tg.a_sym),
                    "holds": res["gap"] >= res["one_minus_phi"] - 1e-6,
                    "identity_residual": abs(res["gap"] - (1.0 - res["phi_quadratic"]))})
        cases.append(res)
    return {"cases": cases, "passed": all(c["holds"] for c in cases)}


def thm3_suite(seed: int = 0, n: int = 300, mean_degree: float = 20.0, feature_dim: int = 16,
               ranks=(2, 4, 8), delta_prime: float = 0.1, epochs: int = 20) -> dict:
    runs = []
    for homophily in (0.8, 0.2):
        g, x, y = generate_csbm(csbm_by_degree(n, mean_degree, homophily, 2.0, feature_dim, seed))
        cfg = TrainConfig(embed=32, batch=128, epochs=epochs, seed=seed)
        params, _ = train(g, x, cfg)
        tg = mine_transformed_graph(params, g, x, cfg.k_pos, cfg.hops)
        for k in ranks:
            rep = probe_error_bound(tg, params.weights["gcn0"], delta_prime, k, g, x, y).to_dict()
            rep.update({"homophily": homophily, "rank": k})
            runs.append(rep)
    finite = all(np.isfinite(r[key]) and r[key] >= 0 for r in runs
                 for key in ("first_term", "second_term", "bound", "measured_error"))
    held = all(r["measured_error"] <= r["bound"] for r in runs if r["bound"] < 1.0)
    return {"runs": runs, "non_vacuous": sum(r["bound"] < 1.0 for r in runs),
            "passed": bool(finite and held)}


def run_suite(name: str, seed: int = 0) -> dict:
    if name == "all":
        return {s: run_suite(s, seed) for s in SUITES}
    fn = {"lemma1": lemma1_suite, "thm1": thm1_suite, "thm2": thm2_suite, "thm3": thm3_suite}.get(name)
    if fn is None:
        raise ConfigError(f"unknown suite {name!r}; expected one of {SUITES + ('all',)}")
    return fn(seed)
