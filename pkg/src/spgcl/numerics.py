"""Dense linear-algebra kernels used by the spectral and theory code.

LAPACK (through numpy) does the heavy lifting; these wrappers pin down the
contracts the rest of the package relies on: ascending spectra, explicit
symmetrization, conditioning checks and a unitary row-wise DFT.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from spgcl.errors import NumericalError, ShapeError

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # orthonormal columns

    def reconstruct(self, idx=None) -> np.ndarray:
        """Sum of lambda_i u_i u_i^T over ``idx`` (all eigenpairs by default)."""
        lam, u = self.eigenvalues, self.eigenvectors
        if idx is not None:
            lam, u = lam[idx], u[:, idx]
        return (u * lam) @ u.T


def _square(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    return m


def symmetric_eig(m) -> EigenDecomposition:
    m = _square(m)
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    return EigenDecomposition(w, v)


def linear_solve(m, b) -> np.ndarray:
    m = _square(m)
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != m.shape[0]:
        raise ShapeError(f"rhs has {b.shape[0]} rows, matrix has {m.shape[0]}")
    if m.size == 0:
        return b.copy()
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond >= MAX_CONDITION:
        raise NumericalError(f"matrix is singular or ill-conditioned (cond={cond:.3g})")
    return np.linalg.solve(m, b)


def dft_rows(x) -> np.ndarray:
    """Unitary DFT of every row (1/sqrt(F) scaling)."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ShapeError("dft_rows needs an N x F matrix with F >= 1")
    return np.fft.fft(x, axis=1, norm="ortho")


def idft_rows(h, imag_tol: float = 1e-10) -> np.ndarray:
    """Inverse of :func:`dft_rows`, returned as a real matrix.

    ``h`` must be conjugate-symmetric along each row up to ``imag_tol``
    (relative to its largest entry); the imaginary residue is dropped.
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[1] < 1:
        raise ShapeError("idft_rows needs an N x F matrix with F >= 1")
    out = np.fft.ifft(h, axis=1, norm="ortho")
    scale = max(1.0, float(np.abs(h).max())) if h.size else 1.0
    if out.size and np.abs(out.imag).max() > imag_tol * scale:
        raise NumericalError("inverse DFT is not real: spectrum lacks conjugate symmetry")
    return out.real.copy()
