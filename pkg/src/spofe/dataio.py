"""Input handling: CSV loading, standardization, row subsampling, config.

All downstream stages assume standardized columns, so `standardize` is the
single place where means/scales are decided: population (ddof=0) moments,
zero-variance columns dropped and recorded.
"""

import csv
import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import BoundsError, DegenerateInput, EmptyInput, ParseError
from .rng import substream

VALID_KERNELS = ("cosine", "rbf", "sigmoid", "rff")
VALID_PVALUE_METHODS = ("percentile", "lognormal")

# Candidate support sizes tried by the varying-length selection strategy,
# clipped to the basis size at run time.
DEFAULT_AUTO_CANDIDATES = (10, 20, 50, 100, 150)


# ======================================================================
# Types
# ======================================================================

@dataclass(frozen=True)
class Dataset:
    """A numeric table: float64 matrix plus column names."""

    values: np.ndarray
    column_names: tuple

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("values must be 2-dimensional")
        if self.values.shape[1] != len(self.column_names):
            raise ValueError("column_names length must match column count")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class StandardizationParams:
    """Moments used by `standardize`, aligned with the returned columns.

    `dropped_names`/`dropped_indices` record zero-variance columns of the
    input (indices refer to the input column order).
    """

    means: np.ndarray
    stds: np.ndarray
    dropped_names: tuple = ()
    dropped_indices: tuple = ()


@dataclass
class PipelineConfig:
    """Every knob of a pipeline run. Echoed verbatim into the report.

    `selection` and `lasso_lambda` are small tag strings so the config
    stays a flat key/value table: selection is one of "bh:<alpha>",
    "threshold:<alpha>", "fixed:<r>", "auto" (optionally
    "auto:r1,r2,..."); lasso_lambda is "universal", "cv", or
    "fixed:<value>".
    """

    kernel: str = "rbf"
    gamma: float | str = "auto"
    coef0: float = 1.0
    rff_dim: int = 2000
    num_components: int = 50
    fdr_q: float = 0.2
    selection: str = "bh:0.05"
    pvalue_method: str = "percentile"
    seed: int = 0
    lasso_lambda: str = "universal"
    lasso_tol: float = 1e-6
    lasso_max_iter: int = 1000
    knockoff_delta: float = 0.05
    max_rows: int = 15000
    cv_folds: int = 5
    ridge_alpha: float = 1e-6

    def __post_init__(self):
        if self.kernel not in VALID_KERNELS:
            raise ValueError(f"kernel must be one of {VALID_KERNELS}, got {self.kernel!r}")
        if self.gamma != "auto":
            g = float(self.gamma)
            if not g > 0:
                raise ValueError("gamma must be positive or 'auto'")
            self.gamma = g
        if not 0.0 < self.fdr_q <= 1.0:
            raise ValueError("fdr_q must lie in (0, 1]")
        if self.pvalue_method not in VALID_PVALUE_METHODS:
            raise ValueError(f"pvalue_method must be one of {VALID_PVALUE_METHODS}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.seed = int(self.seed)
        if self.num_components < 1:
            raise ValueError("num_components must be >= 1")
        if self.rff_dim < 1:
            raise ValueError("rff_dim must be >= 1")
        if self.max_rows < 1:
            raise ValueError("max_rows must be >= 1")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        if not 0.0 <= self.knockoff_delta < 1.0:
            raise ValueError("knockoff_delta must lie in [0, 1)")
        parse_selection(self.selection)
        _validate_lambda_tag(self.lasso_lambda)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def parse_selection(tag: str) -> dict:
    """Parse a selection tag into {"kind": ..., <params>}.

    Raises ValueError on malformed tags (caught at config build time so the
    CLI reports usage errors before any computation starts).
    """
    if tag == "auto":
        return {"kind": "auto", "candidates": DEFAULT_AUTO_CANDIDATES}
    kind, sep, arg = tag.partition(":")
    if kind in ("bh", "threshold"):
        if not sep:
            raise ValueError(f"selection {kind!r} needs ':<alpha>'")
        alpha = float(arg)
        if not 0.0 < alpha <= 1.0:
            raise ValueError("selection alpha must lie in (0, 1]")
        return {"kind": kind, "alpha": alpha}
    if kind == "fixed":
        if not sep:
            raise ValueError("selection 'fixed' needs ':<r>'")
        r = int(arg)
        if r < 0:
            raise ValueError("selection size r must be >= 0")
        return {"kind": "fixed", "r": r}
    if kind == "auto":
        candidates = tuple(int(t) for t in arg.split(",") if t)
        if not candidates or any(c < 1 for c in candidates):
            raise ValueError("auto candidates must be positive integers")
        return {"kind": "auto", "candidates": candidates}
    raise ValueError(f"unknown selection tag {tag!r}")


def _validate_lambda_tag(tag: str) -> None:
    if tag in ("universal", "cv"):
        return
    kind, sep, arg = tag.partition(":")
    if kind == "fixed" and sep:
        if float(arg) < 0:
            raise ValueError("fixed lasso lambda must be >= 0")
        return
    raise ValueError(f"unknown lasso_lambda tag {tag!r}")


# ======================================================================
# Operations
# ======================================================================

def load_csv(path: str, has_header: bool = True) -> Dataset:
    """Read a numeric CSV into a Dataset.

    Row order is preserved. Every cell must parse as a finite float;
    offending cells are reported with 1-based (data row, column)
    coordinates. Fully empty lines are skipped.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [r for r in reader if r]

    if not rows:
        raise EmptyInput(f"{path}: no rows")

    if has_header:
        names = tuple(c.strip() for c in rows[0])
        for j, name in enumerate(names):
            if not name:
                raise ParseError(f"{path}: empty column name", row=0, col=j + 1)
        data_rows = rows[1:]
    else:
        width = len(rows[0])
        names = tuple(f"x{j + 1}" for j in range(width))
        data_rows = rows

    if not data_rows:
        raise EmptyInput(f"{path}: no data rows")

    p = len(names)
    values = np.empty((len(data_rows), p), dtype=np.float64)
    for i, row in enumerate(data_rows):
        if len(row) != p:
            raise ParseError(
                f"{path}: expected {p} columns, found {len(row)}", row=i + 1
            )
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: not a number: {cell!r}", row=i + 1, col=j + 1
                ) from None
            if not math.isfinite(v):
                raise ParseError(
                    f"{path}: non-finite value {cell!r}", row=i + 1, col=j + 1
                )
            values[i, j] = v

    return Dataset(values=values, column_names=names)


def standardize(d: Dataset) -> tuple:
    """Center and scale each column to zero mean, unit population variance.

    Zero-variance columns are dropped (they carry no geometry for any
    kernel) and recorded in the returned StandardizationParams. The
    returned means/stds are aligned with the surviving columns.
    """
    if d.n < 1:
        raise EmptyInput("cannot standardize an empty dataset")
    means = d.values.mean(axis=0)
    stds = d.values.std(axis=0)
    # Constant columns give stds at rounding-error scale, not exact zeros.
    zero = stds <= 1e-12 * np.maximum(1.0, np.abs(means))
    if zero.all():
        raise DegenerateInput("all columns have zero variance")
    keep = ~zero
    dropped_idx = tuple(int(i) for i in np.flatnonzero(zero))
    dropped_names = tuple(d.column_names[i] for i in dropped_idx)
    values = (d.values[:, keep] - means[keep]) / stds[keep]
    kept_names = tuple(name for name, k in zip(d.column_names, keep) if k)
    params = StandardizationParams(
        means=means[keep],
        stds=stds[keep],
        dropped_names=dropped_names,
        dropped_indices=dropped_idx,
    )
    return Dataset(values=values, column_names=kept_names), params


def subsample(d: Dataset, max_rows: int, seed: int) -> Dataset:
    """Keep at most max_rows rows, sampled uniformly without replacement.

    Surviving rows keep their original relative order and are bitwise
    equal to the input rows. Draws come from the (seed, "subsample")
    stream. A dataset already within the cap is returned unchanged.
    """
    if max_rows < 1:
        raise BoundsError(f"max_rows must be >= 1, got {max_rows}")
    if d.n <= max_rows:
        return d
    rng = substream(seed, "subsample")
    idx = np.sort(rng.choice(d.n, size=max_rows, replace=False))
    return Dataset(values=d.values[idx], column_names=d.column_names)
