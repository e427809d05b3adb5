"""Second-order Gaussian model-X knockoffs, the lasso coefficient-difference
statistic, the knockoff+ threshold, and the eigenvalue-weighted aggregation
of per-signal statistics into one score per feature.

The knockoff construction treats feature rows as draws from N(mu, Sigma)
with Sigma estimated on the correlation scale and shrunk toward the
identity. Knockoff rows are sampled from the exact conditional Gaussian

    psi_tilde | psi ~ N(mu + (psi - mu) A,  2 diag(s) - diag(s) Sigma^-1 diag(s)),

with A = I - Sigma^-1 diag(s) and s the equicorrelated vector
s_j = min(1, 2 lambda_min(Sigma)). That choice makes [psi, psi_tilde]
jointly second-order exchangeable: swapping any feature with its knockoff
leaves the joint covariance unchanged.

One knockoff draw is shared by all signal columns; the per-signal lasso
fits differ only in their response.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, NonConvergence, NumericalError
from .polybasis import FeatureMatrix
from .rng import substream

DELTA_FLOOR = 1e-6


def _resolve_features(psi):
    """Accept a FeatureMatrix or a plain array (then all columns active)."""
    if isinstance(psi, FeatureMatrix):
        return psi.psi, psi.inert
    arr = np.asarray(psi, dtype=np.float64)
    return arr, np.zeros(arr.shape[1], dtype=bool)


# ======================================================================
# Model fit and sampling
# ======================================================================

@dataclass
class KnockoffModel:
    """Gaussian model for the active feature columns.

    active maps model coordinates back to full-basis columns; inert
    columns take no part in sampling and are copied verbatim.
    """

    mu: np.ndarray
    sigma: np.ndarray
    s: np.ndarray
    cond_mean_map: np.ndarray
    cond_cov_factor: np.ndarray
    active: np.ndarray
    delta: float


def _stable_cholesky(c: np.ndarray) -> np.ndarray:
    """Cholesky with escalating diagonal jitter.

    The equicorrelated rule makes the conditional covariance exactly
    singular whenever 2 lambda_min < 1, so a bare factorization can fail
    on valid input; jitter at 1e-12 scale is far below every downstream
    tolerance.
    """
    scale = max(float(np.max(np.diag(c))), 1e-30)
    jitter = 0.0
    for _ in range(8):
        try:
            return np.linalg.cholesky(c + jitter * np.eye(c.shape[0]))
        except np.linalg.LinAlgError:
            jitter = scale * 1e-12 if jitter == 0.0 else jitter * 100.0
    raise NumericalError(
        "conditional covariance factorization failed; increase delta"
    )


def fit_knockoff_model(psi, delta: float = 0.05) -> KnockoffModel:
    """Fit the shrunk second-order model on the active columns.

    Sigma is the empirical correlation matrix shrunk as
    (1 - delta) Sigma_hat + delta I; its smallest eigenvalue must clear
    DELTA_FLOOR or the fit refuses with advice to raise delta.
    """
    full, inert = _resolve_features(psi)
    n = full.shape[0]
    if n <= 2:
        raise DegenerateInput("need more than 2 rows to fit knockoffs")
    active = ~inert
    d_act = int(active.sum())
    if d_act < 2:
        raise DegenerateInput("need at least 2 active columns")

    p = full[:, active]
    mu = p.mean(axis=0)
    centered = p - mu
    cov = centered.T @ centered / n
    dd = np.sqrt(np.diag(cov))
    if np.any(dd == 0.0):
        raise DegenerateInput("active column with zero variance")
    corr = cov / np.outer(dd, dd)

    sigma = (1.0 - delta) * corr + delta * np.eye(d_act)
    sigma = (sigma + sigma.T) / 2.0
    np.fill_diagonal(sigma, 1.0)

    lam_min = float(np.linalg.eigvalsh(sigma)[0])
    if lam_min < DELTA_FLOOR:
        raise NumericalError(
            f"shrunk correlation matrix has lambda_min={lam_min:.3e} < "
            f"{DELTA_FLOOR}; increase delta"
        )

    s_val = min(1.0, 2.0 * lam_min)
    s = np.full(d_act, s_val)

    sigma_inv_s = np.linalg.solve(sigma, np.diag(s))
    cond_mean_map = np.eye(d_act) - sigma_inv_s
    cond_cov = 2.0 * np.diag(s) - s[:, None] * sigma_inv_s
    cond_cov = (cond_cov + cond_cov.T) / 2.0
    factor = _stable_cholesky(cond_cov)

    return KnockoffModel(
        mu=mu,
        sigma=sigma,
        s=s,
        cond_mean_map=cond_mean_map,
        cond_cov_factor=factor,
        active=active,
        delta=delta,
    )


def sample_knockoffs(psi, model: KnockoffModel, seed: int) -> np.ndarray:
    """Draw one knockoff copy of the feature matrix.

    Gaussian noise comes from the (seed, "knockoff") stream. Inert columns
    are copied verbatim; the result has the same shape as the input.
    """
    full, _ = _resolve_features(psi)
    n = full.shape[0]
    d_act = int(model.active.sum())
    rng = substream(seed, "knockoff")
    eta = rng.standard_normal((n, d_act))
    p = full[:, model.active]
    tilde = model.mu + (p - model.mu) @ model.cond_mean_map
    tilde += eta @ model.cond_cov_factor.T
    out = full.copy()
    out[:, model.active] = tilde
    return out


# ======================================================================
# Lasso coordinate descent
# ======================================================================

def _soft_threshold(z: float, lam: float) -> float:
    if z > lam:
        return z - lam
    if z < -lam:
        return z + lam
    return 0.0


def lasso_cd(a: np.ndarray, y: np.ndarray, lam: float,
             tol: float = 1e-6, max_iter: int = 1000) -> np.ndarray:
    """Minimize (1/2n)||y - a b||^2 + lam ||b||_1 by coordinate descent.

    Stops when the KKT conditions hold within tol, checked against a
    freshly computed residual:
        |a_j'(y - a b)/n - lam sign(b_j)| <= tol   for b_j != 0,
        |a_j'(y - a b)/n| <= lam + tol             for b_j == 0.
    Raises NonConvergence (carrying the best iterate) after max_iter
    sweeps.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    n, k = a.shape
    col_sq = (a * a).sum(axis=0) / n
    beta = np.zeros(k)
    r = y.astype(np.float64).copy()

    for _ in range(max_iter):
        for j in range(k):
            if col_sq[j] == 0.0:
                continue
            rho = (a[:, j] @ r) / n + col_sq[j] * beta[j]
            new = _soft_threshold(rho, lam) / col_sq[j]
            if new != beta[j]:
                r -= a[:, j] * (new - beta[j])
                beta[j] = new
        # Fresh residual: the incrementally maintained one drifts, and the
        # KKT certificate must hold for the returned iterate exactly as an
        # outside check would recompute it.
        r = y - a @ beta
        g = a.T @ r / n
        nonzero = beta != 0.0
        viol_active = np.abs(g[nonzero] - lam * np.sign(beta[nonzero]))
        viol_zero = np.abs(g[~nonzero]) - lam
        worst = 0.0
        if viol_active.size:
            worst = float(viol_active.max())
        if viol_zero.size:
            worst = max(worst, float(viol_zero.max()))
        if worst <= tol:
            return beta

    raise NonConvergence(
        f"lasso did not satisfy KKT within {max_iter} sweeps", coef=beta
    )


def universal_lambda(sigma_z: float, n_cols: int, n: int) -> float:
    """Default penalty: 0.5 * sigma_z * sqrt(2 ln(width) / n), where width
    is the column count of the lasso design (2d for a knockoff fit)."""
    return 0.5 * sigma_z * np.sqrt(2.0 * np.log(n_cols) / n)


def _cv_lambda(design: np.ndarray, z: np.ndarray, seed: int,
               tol: float, max_iter: int, folds: int = 5) -> float:
    """Pick lambda by k-fold CV over a geometric grid below lambda_max."""
    n = design.shape[0]
    lam_max = float(np.abs(design.T @ z).max()) / n
    if lam_max <= 0.0:
        return 0.0
    grid = lam_max * np.geomspace(1.0, 1.0 / 200.0, 15)
    perm = substream(seed, "cv").permutation(n)
    chunks = np.array_split(perm, folds)
    mse = np.zeros(len(grid))
    for chunk in chunks:
        val = np.zeros(n, dtype=bool)
        val[chunk] = True
        a_tr, z_tr = design[~val], z[~val]
        a_va, z_va = design[val], z[val]
        for gi, lam in enumerate(grid):
            try:
                b = lasso_cd(a_tr, z_tr, lam, tol, max_iter)
            except NonConvergence as e:
                b = e.coef
            resid = z_va - a_va @ b
            mse[gi] += float(resid @ resid) / len(chunk)
    # Ties go to the larger lambda (sparser fit); the grid is descending.
    return float(grid[int(np.argmin(mse))])


# ======================================================================
# Statistics, threshold, aggregation
# ======================================================================

@dataclass
class KnockoffStats:
    """Per-feature statistics W for one signal column."""

    w: np.ndarray
    lambda_used: float
    signal_index: int = -1


@dataclass
class WekoScores:
    """Eigenvalue-weighted knockoff scores.

    s : d-vector of aggregated scores, sum_j lambda_j W^(j).
    per_signal : d x m_eff matrix of raw statistics.
    inert : mask of columns that were excluded (scores fixed at 0).
    """

    s: np.ndarray
    per_signal: np.ndarray
    inert: np.ndarray
    lambda_used: np.ndarray


def knockoff_stats_lcd(psi, psi_tilde: np.ndarray, z: np.ndarray,
                       lambda_rule: str = "universal",
                       tol: float = 1e-6, max_iter: int = 1000,
                       seed: int = 0, signal_index: int = -1) -> KnockoffStats:
    """Lasso coefficient-difference statistic for one signal column.

    Fits the lasso of z on [psi, psi_tilde] (active columns only) and
    returns W_d = |beta_d| - |beta_d+d|. Swapping a feature with its
    knockoff in the input flips the sign of its W. Inert columns get 0.
    """
    full, inert = _resolve_features(psi)
    active = ~inert
    d_full = full.shape[1]
    n = full.shape[0]
    p = full[:, active]
    pt = psi_tilde[:, active]
    d_act = p.shape[1]
    design = np.hstack([p, pt])

    sigma_z = float(np.std(z))
    if lambda_rule == "universal":
        lam = universal_lambda(sigma_z, design.shape[1], n)
    elif lambda_rule == "cv":
        lam = _cv_lambda(design, z, seed, tol, max_iter)
    elif lambda_rule.startswith("fixed:"):
        lam = float(lambda_rule.split(":", 1)[1])
    else:
        raise ValueError(f"unknown lambda_rule {lambda_rule!r}")

    beta = lasso_cd(design, z, lam, tol=tol, max_iter=max_iter)
    w_act = np.abs(beta[:d_act]) - np.abs(beta[d_act:])
    w = np.zeros(d_full)
    w[active] = w_act
    return KnockoffStats(w=w, lambda_used=lam, signal_index=signal_index)


def knockoff_threshold(w: np.ndarray, q: float) -> float:
    """Knockoff+ threshold at target FDR q.

    tau = min { t in {|W_d| : W_d != 0} :
                (1 + #{W_d <= -t}) / max(1, #{W_d >= t}) <= q },
    or +inf when no such t exists (then nothing is selected).
    """
    if not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0, 1]")
    w = np.asarray(w, dtype=np.float64)
    candidates = np.unique(np.abs(w[w != 0.0]))
    for t in candidates:
        neg = int((w <= -t).sum())
        pos = int((w >= t).sum())
        if (1 + neg) / max(1, pos) <= q:
            return float(t)
    return float("inf")


def weko(psi, bundle, lambda_rule: str = "universal", seed: int = 0,
         delta: float = 0.05, tol: float = 1e-6, max_iter: int = 1000,
         threads: int | None = None) -> WekoScores:
    """Weighted-knockoff scores over all signal columns.

    Fits one knockoff model, draws one shared knockoff matrix, computes
    the lasso coefficient-difference statistic per signal, and aggregates
    with the eigenvalue weights in ascending signal order:
    s_d = sum_j lambda_j W_d^(j). The per-signal fits are independent;
    SPOFE_THREADS (or the threads argument) caps how many run at once,
    with no effect on the result.
    """
    full, inert = _resolve_features(psi)
    m_eff = bundle.m_eff
    model = fit_knockoff_model(psi, delta=delta)
    psi_tilde = sample_knockoffs(psi, model, seed)

    if threads is None:
        threads = int(os.environ.get("SPOFE_THREADS", "1"))

    def one(j: int) -> KnockoffStats:
        return knockoff_stats_lcd(
            psi, psi_tilde, bundle.signals[:, j], lambda_rule,
            tol=tol, max_iter=max_iter, seed=seed, signal_index=j,
        )

    if threads > 1 and m_eff > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            stats = list(pool.map(one, range(m_eff)))
    else:
        stats = [one(j) for j in range(m_eff)]

    per_signal = np.column_stack([st.w for st in stats])
    lambda_used = np.array([st.lambda_used for st in stats])

    # Fixed ascending-j accumulation: the summation order is part of the
    # determinism contract, not a performance detail.
    s = np.zeros(full.shape[1])
    for j in range(m_eff):
        s += bundle.lambdas[j] * per_signal[:, j]
    s[inert] = 0.0

    return WekoScores(s=s, per_signal=per_signal, inert=inert,
                      lambda_used=lambda_used)
