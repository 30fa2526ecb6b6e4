"""Frequency-band view of augmentations.

Structure: the symmetric normalized Laplacian is split into B band
matrices, each the sum of ``lambda_i u_i u_i^T`` over a contiguous block of
the ascending spectrum, and bands of the original and augmented graph are
compared in Frobenius norm.

Features: every row goes through a unitary DFT, frequency columns are
ordered by |frequency| (conjugate pairs adjacent), and the lowest columns
form the low band. Both bands are mapped back to real matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from spgcl.errors import ShapeError, SpgclError
from spgcl.graph import Graph, check_features, laplacian_from_weights, sym_laplacian
from spgcl.numerics import dft_rows, idft_rows, symmetric_eig

DEFAULT_BANDS = 10


@dataclass(frozen=True)
class BandDecomposition:
    bands: np.ndarray  # (B, N, N)
    eigenvalues: np.ndarray
    blocks: tuple  # index arrays into the ascending spectrum

    @property
    def num_bands(self) -> int:
        return len(self.bands)


@dataclass(frozen=True)
class FeatureBands:
    low: np.ndarray
    high: np.ndarray
    threshold: int  # number of frequency columns in the low band


def band_blocks(n: int, num_bands: int) -> list[np.ndarray]:
    """Contiguous near-equal index blocks; the first ``n % B`` blocks get one extra."""
    if num_bands < 1:
        raise SpgclError("need at least one band")
    if n < num_bands:
        raise SpgclError(f"cannot split {n} eigenvalues into {num_bands} bands")
    base, extra = divmod(n, num_bands)
    sizes = [base + (1 if m < extra else 0) for m in range(num_bands)]
    edges = np.concatenate([[0], np.cumsum(sizes)])
    return [np.arange(edges[m], edges[m + 1]) for m in range(num_bands)]


def band_decompose(l_sym, num_bands: int) -> BandDecomposition:
    l_sym = np.asarray(l_sym, dtype=np.float64)
    eig = symmetric_eig(l_sym)
    blocks = band_blocks(len(l_sym), num_bands)
    bands = np.stack([eig.reconstruct(b) for b in blocks])
    return BandDecomposition(bands, eig.eigenvalues, tuple(blocks))


def _laplacian(obj) -> np.ndarray:
    if isinstance(obj, Graph):
        return sym_laplacian(obj, "sym_selfloop")
    return laplacian_from_weights(obj)


def band_distances(g, g_aug, num_bands: int = DEFAULT_BANDS) -> np.ndarray:
    """Per-band ||L^m - L~^m||_F.

    ``g`` and ``g_aug`` may each be a Graph (self-loop GCN normalization) or
    a dense non-negative weight matrix such as a diffusion operator.
    """
    la, lb = _laplacian(g), _laplacian(g_aug)
    if la.shape != lb.shape:
        raise ShapeError(f"node count mismatch: {la.shape[0]} vs {lb.shape[0]}")
    da, db = band_decompose(la, num_bands), band_decompose(lb, num_bands)
    return np.sqrt(((da.bands - db.bands) ** 2).sum(axis=(1, 2)))


def frequency_order(f: int) -> np.ndarray:
    """DFT column indices sorted by |frequency|: 0, 1, F-1, 2, F-2, ..."""
    order = [0]
    for k in range(1, f // 2 + 1):
        order.append(k)
        if f - k != k:
            order.append(f - k)
    return np.array(order[:f], dtype=np.int64)


def low_band_columns(f: int, keep_fraction: float) -> np.ndarray:
    """DFT columns in the low band: the first floor(keep*F) of the frequency
    order, extended so no conjugate pair is split."""
    if not 0.0 <= keep_fraction <= 1.0:
        raise SpgclError("keep_fraction must lie in [0, 1]")
    r = int(math.floor(keep_fraction * f + 1e-9))
    order = frequency_order(f)
    cols = set(order[:r].tolist())
    cols |= {(f - k) % f for k in cols}
    return np.array(sorted(cols), dtype=np.int64)


def feature_band_split(x, keep_fraction: float) -> FeatureBands:
    x = check_features(x)
    f = x.shape[1]
    h = dft_rows(x)
    cols = low_band_columns(f, keep_fraction)
    mask = np.zeros(f, dtype=bool)
    mask[cols] = True
    low = idft_rows(np.where(mask, h, 0.0))
    high = idft_rows(np.where(mask, 0.0, h))
    return FeatureBands(low, high, int(mask.sum()))


def masking_band_distances(x, x_masked, keep_fraction: float = 0.8) -> tuple[float, float]:
    """(||X^l - X~^l||_F, ||X^h - X~^h||_F)."""
    x, x_masked = check_features(x), check_features(x_masked)
    if x.shape != x_masked.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {x_masked.shape}")
    a, b = feature_band_split(x, keep_fraction), feature_band_split(x_masked, keep_fraction)
    return float(np.linalg.norm(a.low - b.low)), float(np.linalg.norm(a.high - b.high))
