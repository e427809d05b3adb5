"""From aggregated scores to p-values, selections, and component fits.

Two p-value calibrations (empirical percentile and a log-normal fit to the
positive scores), three selection strategies (p-value thresholding with or
without the BH step-up, fixed-size, and CV-chosen size), and ridge fits of
individual signals on a chosen support.

All ranked output uses one canonical order: ascending p-value, ties broken
by descending score, then ascending feature index. This makes every
selection deterministic and makes fixed-size selections nested in r.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import (
    BoundsError,
    DegenerateDistribution,
    InsufficientData,
    NumericalError,
)
from .rng import substream

# Guard for the log-normal fit: a log-score variance at rounding-error
# scale would send every z-score to +-inf and collapse p to {0, 1}.
MIN_LOG_VARIANCE = 1e-24


@dataclass(frozen=True)
class PValueVector:
    p: np.ndarray
    method: str


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of one selection strategy.

    selected : chosen feature indices in canonical order.
    ranking : all feature indices in canonical order (selected is a
        prefix of it only for the fixed/auto strategies).
    threshold_used / r_used : whichever parameter the strategy resolved.
    details : strategy-specific extras (e.g. the CV objective per
        candidate size for "auto").
    """

    selected: tuple
    strategy: str
    ranking: np.ndarray
    threshold_used: float | None = None
    r_used: int | None = None
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ComponentFit:
    component: int
    support: tuple
    coef: np.ndarray
    rmse: float


# ======================================================================
# P-values
# ======================================================================

def _scores_and_inert(scores):
    if hasattr(scores, "s"):
        return np.asarray(scores.s, dtype=np.float64), np.asarray(scores.inert)
    arr = np.asarray(scores, dtype=np.float64)
    return arr, np.zeros(arr.shape[0], dtype=bool)


def pvalues_percentile(scores) -> PValueVector:
    """Empirical top-rank p-values: p_d = #{d' : s_d' >= s_d} / d_max.

    Tied scores share the largest rank of their tie group, so p is
    monotone in the score and lies in [1/d_max, 1]. Inert columns are
    forced to p = 1.
    """
    s, inert = _scores_and_inert(scores)
    d = s.shape[0]
    if d == 0:
        raise BoundsError("empty score vector")
    ordered = np.sort(s)
    count_ge = d - np.searchsorted(ordered, s, side="left")
    p = count_ge / d
    p[inert] = 1.0
    return PValueVector(p=p, method="percentile")


def pvalues_lognormal(scores) -> PValueVector:
    """Upper-tail p-values under a log-normal fit to the positive scores.

    mu and sigma^2 are the sample mean and (ddof=1) variance of
    log(s_d) over s_d > 0; p_d = 1 - Phi((log s_d - mu)/sigma) there and
    exactly 1 everywhere else (non-positive scores carry no evidence).
    """
    s, inert = _scores_and_inert(scores)
    pos = s > 0.0
    n_pos = int(pos.sum())
    if n_pos < 3:
        raise InsufficientData(
            f"log-normal fit needs >= 3 positive scores, got {n_pos}"
        )
    logs = np.log(s[pos])
    mu = float(logs.mean())
    var = float(((logs - mu) ** 2).sum() / (n_pos - 1))
    if var <= MIN_LOG_VARIANCE:
        raise DegenerateDistribution("positive scores have zero log-variance")
    sigma = np.sqrt(var)

    p = np.ones(s.shape[0])
    tail = norm.sf((logs - mu) / sigma)
    # sf underflows to 0 for extreme z; clip into (0, 1].
    p[pos] = np.maximum(tail, np.finfo(np.float64).tiny)
    p[inert] = 1.0
    return PValueVector(p=p, method="lognormal")


# ======================================================================
# Selection
# ======================================================================

def canonical_ranking(p: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Indices sorted by ascending p, descending score, ascending index."""
    d = p.shape[0]
    return np.lexsort((np.arange(d), -s, p))


def _result(pv, scores, mask, strategy, threshold_used=None, r_used=None,
            details=None):
    s, _ = _scores_and_inert(scores)
    rank = canonical_ranking(pv.p, s)
    selected = tuple(int(i) for i in rank if mask[i])
    return SelectionResult(
        selected=selected,
        strategy=strategy,
        ranking=rank,
        threshold_used=threshold_used,
        r_used=r_used,
        details=details or {},
    )


def select_threshold(pv: PValueVector, scores, alpha: float) -> SelectionResult:
    """Raw rule: select every feature with p <= alpha."""
    if not 0.0 < alpha <= 1.0:
        raise BoundsError("alpha must lie in (0, 1]")
    mask = pv.p <= alpha
    return _result(pv, scores, mask, f"threshold:{alpha}", threshold_used=alpha)


def select_bh(pv: PValueVector, scores, alpha: float) -> SelectionResult:
    """Benjamini-Hochberg step-up at level alpha.

    Finds the largest k with p_(k) <= k alpha / d and selects every
    feature with p <= p_(k); selects nothing when no k qualifies. The
    selected set grows monotonically with alpha.
    """
    if not 0.0 < alpha <= 1.0:
        raise BoundsError("alpha must lie in (0, 1]")
    p = pv.p
    d = p.shape[0]
    ordered = np.sort(p)
    passed = ordered <= alpha * np.arange(1, d + 1) / d
    if not passed.any():
        mask = np.zeros(d, dtype=bool)
        return _result(pv, scores, mask, f"bh:{alpha}", threshold_used=0.0)
    k_star = int(np.flatnonzero(passed)[-1]) + 1
    crit = float(ordered[k_star - 1])
    mask = p <= crit
    return _result(pv, scores, mask, f"bh:{alpha}", threshold_used=crit)


def select_fixed(pv: PValueVector, scores, r: int) -> SelectionResult:
    """The r best features in canonical order. Nested: growing r only
    appends."""
    d = pv.p.shape[0]
    if not 0 <= r <= d:
        raise BoundsError(f"r must lie in [0, {d}], got {r}")
    s, _ = _scores_and_inert(scores)
    rank = canonical_ranking(pv.p, s)
    mask = np.zeros(d, dtype=bool)
    mask[rank[:r]] = True
    return _result(pv, scores, mask, f"fixed:{r}", r_used=r)


def select_varying(pv: PValueVector, scores, fm, bundle,
                   candidates=(10, 20, 50, 100, 150), folds: int = 5,
                   ridge_alpha: float = 1e-6, seed: int = 0) -> SelectionResult:
    """Choose the support size by k-fold cross-validation.

    For each candidate r, ridge-fit every signal column on the top-r
    features and score the eigenvalue-weighted mean validation MSE; the
    smallest r attaining the minimum wins. Folds come from the
    (seed, "cv") stream.
    """
    psi = fm.psi
    n, d = psi.shape
    if folds < 2 or folds > n:
        raise BoundsError(f"folds must lie in [2, {n}], got {folds}")
    cand = sorted({min(int(c), d) for c in candidates})
    if not cand or cand[0] < 1:
        raise BoundsError("candidates must be positive")

    s, _ = _scores_and_inert(scores)
    rank = canonical_ranking(pv.p, s)
    m = bundle.signals
    weights = bundle.lambdas / bundle.lambdas.sum()

    perm = substream(seed, "cv").permutation(n)
    chunks = np.array_split(perm, folds)

    objective = {}
    best_r, best_obj = None, np.inf
    for r in cand:
        cols = rank[:r]
        a = psi[:, cols]
        sse = np.zeros(m.shape[1])
        for chunk in chunks:
            val = np.zeros(n, dtype=bool)
            val[chunk] = True
            a_tr = a[~val]
            g = a_tr.T @ a_tr + a_tr.shape[0] * ridge_alpha * np.eye(r)
            b = np.linalg.solve(g, a_tr.T @ m[~val])
            resid = m[val] - a[val] @ b
            sse += (resid * resid).sum(axis=0)
        mse = sse / n
        obj = float(weights @ mse)
        objective[r] = obj
        if obj < best_obj:
            best_r, best_obj = r, obj

    mask = np.zeros(d, dtype=bool)
    mask[rank[:best_r]] = True
    return _result(pv, scores, mask, "auto", r_used=best_r,
                   details={"cv_objective": {str(k): v for k, v in objective.items()}})


# ======================================================================
# Component fits
# ======================================================================

def ridge_fit(a: np.ndarray, y: np.ndarray, alpha_reg: float) -> np.ndarray:
    """Solve (a'a + n alpha_reg I) b = a'y.

    With alpha_reg = 0 this is plain least squares and the Gram matrix
    must be nonsingular.
    """
    if alpha_reg < 0:
        raise BoundsError("alpha_reg must be >= 0")
    n, k = a.shape
    g = a.T @ a + n * alpha_reg * np.eye(k)
    try:
        return np.linalg.solve(g, a.T @ y)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"ridge system is singular: {e}") from None


def fit_component(fm, z: np.ndarray, support, component: int = -1,
                  alpha_reg: float = 1e-8) -> ComponentFit:
    """Regress one signal on the chosen support columns and report RMSE.

    A hair of ridge (1e-8) keeps collinear supports solvable without
    visibly moving the fit.
    """
    psi = fm.psi if hasattr(fm, "psi") else np.asarray(fm, dtype=np.float64)
    support = tuple(int(i) for i in support)
    if len(support) == 0:
        raise BoundsError("support must be non-empty")
    d = psi.shape[1]
    if any(not 0 <= i < d for i in support):
        raise BoundsError(f"support indices must lie in [0, {d})")
    a = psi[:, support]
    coef = ridge_fit(a, z, alpha_reg)
    resid = z - a @ coef
    rmse = float(np.sqrt(np.mean(resid * resid)))
    return ComponentFit(component=component, support=support, coef=coef,
                        rmse=rmse)
