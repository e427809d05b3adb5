"""Degree-2 polynomial feature basis in a fixed canonical order.

The order is load-bearing: constant, then linear terms by variable index,
then squares by variable index, then cross products (i, j) with i < j in
lexicographic order. Feature indices, knockoff statistics, p-values, and
report rows all refer to positions in this order, so it must never change.
"""

from dataclasses import dataclass

import numpy as np

from .dataio import Dataset
from .errors import BoundsError

MAX_VARIABLES = 64


@dataclass(frozen=True)
class PolyTerm:
    """One basis function: kind plus the variable indices it touches."""

    kind: str  # constant | linear | square | cross
    i: int = -1
    j: int = -1

    def exponents(self, p: int) -> tuple:
        """Exponent multi-index over p variables (mostly for debugging)."""
        e = [0] * p
        if self.kind == "linear":
            e[self.i] = 1
        elif self.kind == "square":
            e[self.i] = 2
        elif self.kind == "cross":
            e[self.i] = 1
            e[self.j] = 1
        return tuple(e)


@dataclass(frozen=True)
class PolyBasis:
    terms: tuple
    p: int

    @property
    def d_max(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class FeatureMatrix:
    """Expanded, standardized polynomial features.

    psi : n x d_max matrix. Non-constant columns have zero mean and unit
        population variance; the constant column is kept as all-ones;
        zero-variance columns are centered but not scaled (all zeros).
    means/stds : raw pre-standardization moments per column (the constant
        column records mean 0, std 1 since it is exempt).
    inert : columns excluded from knockoff generation and selection
        (the constant column and any zero-variance column).
    """

    psi: np.ndarray
    basis: PolyBasis
    means: np.ndarray
    stds: np.ndarray
    inert: np.ndarray

    @property
    def d_max(self) -> int:
        return self.psi.shape[1]


def expected_d_max(p: int) -> int:
    """1 + 2p + p(p-1)/2: constant, linears, squares, crosses."""
    return 1 + 2 * p + p * (p - 1) // 2


def build_basis(p: int) -> PolyBasis:
    """All degree <= 2 monomials over p variables in canonical order."""
    if not 1 <= p <= MAX_VARIABLES:
        raise BoundsError(f"p must lie in [1, {MAX_VARIABLES}], got {p}")
    terms = [PolyTerm(kind="constant")]
    terms.extend(PolyTerm(kind="linear", i=i) for i in range(p))
    terms.extend(PolyTerm(kind="square", i=i) for i in range(p))
    terms.extend(
        PolyTerm(kind="cross", i=i, j=j)
        for i in range(p)
        for j in range(i + 1, p)
    )
    return PolyBasis(terms=tuple(terms), p=p)


def expand(basis: PolyBasis, d: Dataset) -> FeatureMatrix:
    """Evaluate every basis term on the dataset rows and standardize.

    Standardization is per column with population moments, applied after
    expansion (a square of a standardized variable is itself neither
    centered nor unit-variance, so this second pass is not redundant).
    """
    if d.p != basis.p:
        raise BoundsError(
            f"dataset has {d.p} columns but basis expects {basis.p}"
        )
    x = d.values
    n = x.shape[0]
    dmax = basis.d_max

    psi = np.empty((n, dmax), dtype=np.float64)
    for k, term in enumerate(basis.terms):
        if term.kind == "constant":
            psi[:, k] = 1.0
        elif term.kind == "linear":
            psi[:, k] = x[:, term.i]
        elif term.kind == "square":
            psi[:, k] = x[:, term.i] ** 2
        else:
            psi[:, k] = x[:, term.i] * x[:, term.j]

    means = psi.mean(axis=0)
    stds = psi.std(axis=0)
    inert = stds <= 1e-12 * np.maximum(1.0, np.abs(means))
    inert[0] = True
    means[0] = 0.0
    stds[0] = 1.0

    out = psi.copy()
    scale = np.where(inert, 1.0, np.where(stds > 0, stds, 1.0))
    nonconst = np.ones(dmax, dtype=bool)
    nonconst[0] = False
    out[:, nonconst] = (psi[:, nonconst] - means[nonconst]) / scale[nonconst]

    return FeatureMatrix(psi=out, basis=basis, means=means, stds=stds, inert=inert)


def term_name(basis: PolyBasis, idx: int, names: tuple) -> str:
    """Human-readable name of basis term idx using the variable names."""
    if not 0 <= idx < basis.d_max:
        raise BoundsError(f"term index {idx} outside [0, {basis.d_max})")
    if len(names) != basis.p:
        raise BoundsError(f"need {basis.p} variable names, got {len(names)}")
    term = basis.terms[idx]
    if term.kind == "constant":
        return "1"
    if term.kind == "linear":
        return str(names[term.i])
    if term.kind == "square":
        return f"{names[term.i]}^2"
    return f"{names[term.i]}*{names[term.j]}"
