"""Kernel evaluation: pairwise values, full Gram matrices, centering, and
the random-Fourier-feature approximation of the RBF kernel.

Gram matrices are symmetrized explicitly after the BLAS products so the
symmetry post-condition holds exactly, not just to rounding error. The RFF
path is an explicit feature map whose Gram matrix feeds the same centering
and eigendecomposition code as the exact kernels.
"""

from dataclasses import dataclass, replace

import numpy as np

from .dataio import Dataset
from .errors import DegenerateInput
from .rng import substream

VALID_KINDS = ("cosine", "rbf", "sigmoid", "rff")


@dataclass(frozen=True)
class KernelSpec:
    """Which kernel to use and its parameters.

    gamma may be the string "auto", meaning 1/p once the data width is
    known. rff_dim and rff_seed only matter for kind="rff"; the seed is
    mixed into the dedicated (seed, "rff") stream.
    """

    kind: str
    gamma: float | str = "auto"
    coef0: float = 1.0
    rff_dim: int = 2000
    rff_seed: int = 0

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise ValueError(f"kernel kind must be one of {VALID_KINDS}")
        if self.gamma != "auto" and not float(self.gamma) > 0:
            raise ValueError("gamma must be positive or 'auto'")
        if self.rff_dim < 1:
            raise ValueError("rff_dim must be >= 1")

    def resolved_gamma(self, p: int) -> float:
        if self.gamma == "auto":
            return 1.0 / p
        return float(self.gamma)

    def resolve(self, p: int) -> "KernelSpec":
        """A copy with gamma made concrete for data of width p."""
        return replace(self, gamma=self.resolved_gamma(p))


@dataclass(frozen=True)
class KernelMatrix:
    """A Gram matrix plus a flag recording whether it has been centered."""

    values: np.ndarray
    centered: bool = False

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError("kernel matrix must be square")

    @property
    def n(self) -> int:
        return self.values.shape[0]


# ======================================================================
# Pairwise values
# ======================================================================

def kernel_value(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> float:
    """Evaluate k(x, y) for the exact kernels (cosine, rbf, sigmoid).

    The rff kind has no closed-form pairwise value; build its feature map
    with rff_features and take inner products there.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError("x and y must have the same length")
    p = x.shape[0]
    if spec.kind == "cosine":
        nx = np.linalg.norm(x)
        ny = np.linalg.norm(y)
        if nx == 0.0 or ny == 0.0:
            raise DegenerateInput("cosine kernel undefined for zero vectors")
        return float(x @ y / (nx * ny))
    gamma = spec.resolved_gamma(p)
    if spec.kind == "rbf":
        diff = x - y
        return float(np.exp(-gamma * (diff @ diff)))
    if spec.kind == "sigmoid":
        return float(np.tanh(gamma * (x @ y) + spec.coef0))
    raise ValueError("kernel_value is undefined for kind='rff'")


# ======================================================================
# Gram matrices
# ======================================================================

def _symmetrize(k: np.ndarray) -> np.ndarray:
    return (k + k.T) / 2.0


def kernel_matrix(spec: KernelSpec, d: Dataset) -> KernelMatrix:
    """Full Gram matrix of the dataset rows, exactly symmetric.

    For kind="rff" this is the Gram matrix of the random feature map, so
    the approximate path shares every downstream step with the exact one.
    """
    x = d.values
    n, p = x.shape
    if n < 1:
        raise DegenerateInput("empty dataset")
    gamma = spec.resolved_gamma(p) if spec.kind != "cosine" else None

    if spec.kind == "rff":
        f = rff_features(spec, d)
        return KernelMatrix(values=_symmetrize(f @ f.T), centered=False)

    gram = _symmetrize(x @ x.T)

    if spec.kind == "cosine":
        norms = np.sqrt(np.diag(gram))
        if np.any(norms == 0.0):
            raise DegenerateInput("cosine kernel undefined for zero rows")
        k = gram / np.outer(norms, norms)
        np.fill_diagonal(k, 1.0)
        return KernelMatrix(values=_symmetrize(k), centered=False)

    if spec.kind == "rbf":
        sq = np.diag(gram)
        d2 = sq[:, None] + sq[None, :] - 2.0 * gram
        np.maximum(d2, 0.0, out=d2)
        np.fill_diagonal(d2, 0.0)
        k = np.exp(-gamma * d2)
        return KernelMatrix(values=_symmetrize(k), centered=False)

    # sigmoid: indefinite kernel; negative eigenvalues are filtered later.
    k = np.tanh(gamma * gram + spec.coef0)
    return KernelMatrix(values=_symmetrize(k), centered=False)


def center(k: KernelMatrix) -> KernelMatrix:
    """Double-center: K - 1n K - K 1n + 1n K 1n with 1n = (1/n) * ones.

    Idempotent up to rounding: centering a centered matrix changes nothing
    beyond ~1e-10. Row and column sums of the result are zero.
    """
    v = k.values
    row_means = v.mean(axis=1)
    col_means = v.mean(axis=0)
    grand = v.mean()
    centered = v - row_means[:, None] - col_means[None, :] + grand
    return KernelMatrix(values=_symmetrize(centered), centered=True)


# ======================================================================
# Random Fourier features
# ======================================================================

def rff_features(spec: KernelSpec, d: Dataset) -> np.ndarray:
    """n x D cosine feature map approximating the RBF kernel.

    Rows are sqrt(2/D) * cos(x Omega + b) with Omega entries drawn
    N(0, 2*gamma) and b uniform on [0, 2*pi). E[z(x) z(y)'] equals
    exp(-gamma ||x-y||^2); the approximation error decays like 1/sqrt(D).
    Draws come from the (rff_seed, "rff") stream.
    """
    x = d.values
    n, p = x.shape
    gamma = spec.resolved_gamma(p)
    dim = spec.rff_dim
    rng = substream(spec.rff_seed, "rff")
    omega = rng.normal(0.0, np.sqrt(2.0 * gamma), size=(p, dim))
    b = rng.uniform(0.0, 2.0 * np.pi, size=dim)
    return np.sqrt(2.0 / dim) * np.cos(x @ omega + b)
