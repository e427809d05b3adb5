"""Monte-Carlo harness: empirical FDR, power, and fit quality of the
knockoff selection on synthetic Gaussian data with a known sparse truth.

Each repeat draws fresh data from its own (seed, "sim", rep) stream, plants
k_star true degree-2 terms with random signs, runs the knockoff filter at
the target FDR, and records the false discovery proportion, the power, and
the gap between the selected-support fit and the oracle-support fit.
"""

from dataclasses import dataclass, fields

import numpy as np

from .dataio import Dataset, standardize
from .errors import BoundsError, DegenerateInput
from .inference import fit_component
from .knockoff import (
    fit_knockoff_model,
    knockoff_stats_lcd,
    knockoff_threshold,
    sample_knockoffs,
)
from .polybasis import build_basis, expand
from .rng import substream


@dataclass
class SimulationSpec:
    """Parameters of one simulation study."""

    n: int = 500
    p: int = 10
    k_star: int = 5
    coef_magnitude: float = 1.0
    noise_std: float = 1.0
    fdr_q: float = 0.2
    repeats: int = 50
    seed: int = 0
    delta: float = 0.05
    lambda_rule: str = "universal"
    lasso_tol: float = 1e-6
    lasso_max_iter: int = 1000

    def __post_init__(self):
        if self.n < 10:
            raise BoundsError("n must be >= 10")
        if self.p < 1:
            raise BoundsError("p must be >= 1")
        if self.k_star < 0:
            raise BoundsError("k_star must be >= 0")
        if self.repeats < 1:
            raise BoundsError("repeats must be >= 1")
        if not 0.0 < self.fdr_q <= 1.0:
            raise BoundsError("fdr_q must lie in (0, 1]")
        if self.noise_std < 0 or self.coef_magnitude < 0:
            raise BoundsError("noise_std and coef_magnitude must be >= 0")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _mean_se(x: np.ndarray) -> tuple:
    mean = float(np.mean(x))
    if x.size < 2:
        return mean, 0.0
    return mean, float(np.std(x, ddof=1) / np.sqrt(x.size))


def simulate_fdr(spec: SimulationSpec) -> dict:
    """Run the study and summarize it as a JSON-ready dict.

    Per repeat: X ~ N(0, I) of shape (n, p); the true support S is
    k_star basis terms drawn without replacement from the non-inert,
    non-constant columns; the response is psi[:, S] beta + noise with
    |beta| = coef_magnitude and random signs, standardized before
    scoring. FDP counts selections outside S over max(1, #selected);
    power counts recovered members of S (0.0 when k_star = 0). The rmse
    gap compares the selected-support fit against the oracle-support fit
    (empty supports fall back to the constant column).
    """
    basis = build_basis(spec.p)
    d_max = basis.d_max

    fdp = np.zeros(spec.repeats)
    power = np.zeros(spec.repeats)
    gap = np.zeros(spec.repeats)
    n_selected = np.zeros(spec.repeats)
    sel_freq = np.zeros(d_max)

    for rep in range(spec.repeats):
        rng = substream(spec.seed, "sim", rep)
        x = rng.standard_normal((spec.n, spec.p))
        names = tuple(f"x{j + 1}" for j in range(spec.p))
        data, _ = standardize(Dataset(values=x, column_names=names))
        fm = expand(basis, data)

        candidates = np.flatnonzero(~fm.inert)
        if spec.k_star > candidates.size:
            raise BoundsError(
                f"k_star={spec.k_star} exceeds {candidates.size} usable terms"
            )
        s_true = np.sort(rng.choice(candidates, size=spec.k_star,
                                    replace=False))
        signs = rng.choice([-1.0, 1.0], size=spec.k_star)

        z = fm.psi[:, s_true] @ (spec.coef_magnitude * signs)
        z = z + spec.noise_std * rng.standard_normal(spec.n)
        z_std = float(np.std(z))
        if z_std == 0.0:
            raise DegenerateInput(
                "signal has zero variance; raise noise_std or coef_magnitude"
            )
        z = (z - z.mean()) / z_std

        ko_seed = int(rng.integers(0, 2**63))
        model = fit_knockoff_model(fm, delta=spec.delta)
        psi_tilde = sample_knockoffs(fm, model, ko_seed)
        stats = knockoff_stats_lcd(
            fm, psi_tilde, z, spec.lambda_rule,
            tol=spec.lasso_tol, max_iter=spec.lasso_max_iter, seed=ko_seed,
        )
        tau = knockoff_threshold(stats.w, spec.fdr_q)
        selected = np.flatnonzero(stats.w >= tau)

        true_set = set(int(i) for i in s_true)
        false_count = sum(1 for i in selected if int(i) not in true_set)
        fdp[rep] = false_count / max(1, selected.size)
        if spec.k_star > 0:
            power[rep] = (spec.k_star - len(true_set - set(map(int, selected)))) / spec.k_star
        n_selected[rep] = selected.size
        sel_freq[selected] += 1.0

        support_sel = tuple(map(int, selected)) or (0,)
        support_true = tuple(map(int, s_true)) or (0,)
        rmse_sel = fit_component(fm, z, support_sel).rmse
        rmse_true = fit_component(fm, z, support_true).rmse
        gap[rep] = rmse_sel - rmse_true

    mean_fdp, se_fdp = _mean_se(fdp)
    mean_power, se_power = _mean_se(power)
    mean_gap, se_gap = _mean_se(gap)

    return {
        "spec": spec.to_dict(),
        "d_max": int(d_max),
        "mean_fdp": mean_fdp,
        "se_fdp": se_fdp,
        "mean_power": mean_power,
        "se_power": se_power,
        "mean_rmse_gap": mean_gap,
        "se_rmse_gap": se_gap,
        "mean_num_selected": float(np.mean(n_selected)),
        "selection_frequency": [float(v) for v in sel_freq / spec.repeats],
    }
