"""Kernel principal components: eigendecomposition of the centered Gram
matrix and extraction of the signal matrix with its eigenvalue weights.

Eigenvector signs are normalized (largest-magnitude coordinate made
positive, ties broken toward the lowest index) so that every run, thread
count, and downstream consumer sees the same orientation.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import BoundsError, DegenerateInput
from .kernels import KernelMatrix

# Eigenvalues at or below 1e-10 * max(mu_1, 1) are treated as zero.
EIG_RTOL = 1e-10


@dataclass(frozen=True)
class SignalBundle:
    """Signals extracted from a centered kernel matrix.

    signals : n x m_eff matrix, columns scaled to unit population variance.
    lambdas : m_eff eigenvalue weights, mu_j / sum of all positive
        eigenvalues (the proportion of spectrum each signal explains).
    eigenvalues : the raw retained eigenvalues mu_1 >= ... >= mu_m_eff.
    """

    signals: np.ndarray
    lambdas: np.ndarray
    eigenvalues: np.ndarray
    m_requested: int
    m_eff: int


def _normalize_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip eigenvector signs so the largest-|entry| coordinate is positive.

    np.argmax returns the first maximizer, which breaks magnitude ties
    toward the lowest index.
    """
    out = vecs.copy()
    for j in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, j])))
        if out[i, j] < 0:
            out[:, j] = -out[:, j]
    return out


def _eigh_descending(k: np.ndarray):
    vals, vecs = scipy.linalg.eigh(k)
    order = np.argsort(vals)[::-1]
    return vals[order], _normalize_signs(vecs[:, order])


def eigendecompose(k: KernelMatrix, m: int):
    """Top-m eigenpairs of a symmetric kernel matrix, descending.

    Returns (eigenvalues, eigenvectors) with eigenvalues sorted in
    descending order and orthonormal, sign-normalized eigenvector columns.
    """
    n = k.n
    if not 1 <= m <= n:
        raise BoundsError(f"m must lie in [1, {n}], got {m}")
    vals, vecs = _eigh_descending(k.values)
    return vals[:m], vecs[:, :m]


def s4gen(k: KernelMatrix, m: int) -> SignalBundle:
    """Extract up to m signal columns from a centered kernel matrix.

    Eigenvalues below the relative tolerance are discarded (this is also
    where an indefinite kernel's negative spectrum is dropped), m_eff is
    the number that survive, and each signal column Kc v_j is rescaled to
    unit population variance. Weights are computed against the full
    positive spectrum, so sum(lambdas) <= 1 with equality only when
    m_eff covers it entirely.
    """
    if not k.centered:
        raise ValueError("s4gen requires a centered kernel matrix")
    n = k.n
    if not 1 <= m <= n:
        raise BoundsError(f"m must lie in [1, {n}], got {m}")

    vals, vecs = _eigh_descending(k.values)
    positive_total = float(vals[vals > 0].sum())
    if positive_total <= 0.0:
        raise DegenerateInput("kernel matrix has no positive eigenvalues")

    eps = EIG_RTOL * max(float(vals[0]), 1.0)
    n_keep = int((vals > eps).sum())
    if n_keep == 0:
        raise DegenerateInput("no eigenvalues above tolerance")
    m_eff = min(m, n_keep)

    mu = vals[:m_eff]
    v = vecs[:, :m_eff]
    lambdas = mu / positive_total

    signals = k.values @ v
    stds = signals.std(axis=0)
    signals = signals / stds

    return SignalBundle(
        signals=signals,
        lambdas=lambdas,
        eigenvalues=mu.copy(),
        m_requested=m,
        m_eff=m_eff,
    )
