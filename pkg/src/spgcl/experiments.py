"""Composite workflows shared by the CLI and the scripts: train then probe,
hyperparameter sweeps, and the augmentation spectral study."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from spgcl.augment import AugmentSpec, apply
from spgcl.contrastive import TrainConfig, embed, train
from spgcl.errors import ConfigError
from spgcl.graph import Graph, sym_laplacian
from spgcl.probe import linear_probe
from spgcl.spectral import DEFAULT_BANDS, band_decompose, band_distances, masking_band_distances

ABLATABLE = {"k_pos": "k_pos", "hops": "hops", "T": "hops"}


def representation(params, g: Graph, x, which: str = "h") -> np.ndarray:
    if which not in ("h", "z"):
        raise ConfigError(f"representation must be 'h' or 'z', got {which!r}")
    emb = embed(params, g, x)
    return emb.h if which == "h" else emb.z


def train_and_probe(g: Graph, x, y, config: TrainConfig, probe_repeats: int = 1,
                    which: str = "h", probe_epochs: int = 1000):
    """Train on (g, x), then probe the frozen representation with splits seeded from ``config.seed``."""
    params, metrics = train(g, x, config, labels=y)
    result = linear_probe(representation(params, g, x, which), y, repeats=probe_repeats,
                          seed=config.seed, epochs=probe_epochs)
    return params, metrics, result


def ablate(g: Graph, x, y, base: TrainConfig, param: str, values, repeats: int = 3,
           which: str = "h", probe_epochs: int = 1000) -> dict:
    """Sweep one hyperparameter; each setting is trained ``repeats`` times with
    seeds base.seed, base.seed + 1, ... and probed once per training run."""
    if param not in ABLATABLE:
        raise ConfigError(f"cannot sweep {param!r}; choose from {sorted(ABLATABLE)}")
    values = list(values)
    if not values:
        raise ConfigError("sweep values must be nonempty")
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    field = ABLATABLE[param]
    entries = []
    for v in values:
        accs = []
        for r in range(repeats):
            cfg = replace(base, **{field: int(v), "seed": base.seed + r})
            _, _, res = train_and_probe(g, x, y, cfg, 1, which, probe_epochs)
            accs.append(res.accuracy)
        entries.append({"value": int(v), "accuracy_mean": float(np.mean(accs)),
                        "accuracy_std": float(np.std(accs)), "accuracies": accs})
    means = [e["accuracy_mean"] for e in entries]
    return {"param": param, "entries": entries, "spread": float(max(means) - min(means))}


def spectral_study(g: Graph, kind: str, ratio: float = 0.2, alpha: float = 0.15,
                   num_bands: int = DEFAULT_BANDS, seeds: int = 10, x=None, keep_fraction: float = 0.8,
                   base_seed: int = 0) -> dict:
    """Augment with seeds base_seed .. base_seed + seeds - 1 and summarize how far each frequency band moves.

    Graph augmentations report per-band Laplacian distances; attribute masking
    reports low/high feature-band distances.
    """
    if seeds < 1:
        raise ConfigError("seeds must be >= 1")
    if kind == "attr_mask":
        if x is None:
            raise ConfigError("attribute masking study needs features")
        d = np.array([masking_band_distances(x, apply(AugmentSpec(kind, ratio, alpha, s), g, x), keep_fraction)
                      for s in range(base_seed, base_seed + seeds)])
        return {"kind": kind, "ratio": ratio, "seeds": seeds, "keep_fraction": keep_fraction,
                "low": {"mean": float(d[:, 0].mean()), "std": float(d[:, 0].std())},
                "high": {"mean": float(d[:, 1].mean()), "std": float(d[:, 1].std())}}
    lap = sym_laplacian(g, "sym_selfloop")
    recon = float(np.abs(band_decompose(lap, num_bands).bands.sum(axis=0) - lap).max())
    d = np.array([band_distances(g, apply(AugmentSpec(kind, ratio, alpha, s), g), num_bands)
                  for s in range(base_seed, base_seed + seeds)])
    bands = [{"band": m, "mean": float(d[:, m].mean()), "std": float(d[:, m].std())}
             for m in range(num_bands)]
    return {"kind": kind, "ratio": ratio, "alpha": alpha, "seeds": seeds, "num_bands": num_bands,
            "reconstruction_error": recon, "bands": bands,
            "per_seed": d.tolist()}
