from types import SimpleNamespace

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from spofe.errors import (
    BoundsError,
    DegenerateDistribution,
    InsufficientData,
    NumericalError,
)
from spofe.inference import (
    canonical_ranking,
    fit_component,
    pvalues_lognormal,
    pvalues_percentile,
    ridge_fit,
    select_bh,
    select_fixed,
    select_threshold,
    select_varying,
)


def scores_obj(s, inert=None):
    s = np.asarray(s, dtype=np.float64)
    if inert is None:
        inert = np.zeros(s.shape[0], dtype=bool)
    return SimpleNamespace(s=s, inert=np.asarray(inert))


# ======================================================================
# P-values
# ======================================================================

class TestPercentile:
    def test_distinct_scores(self):
        pv = pvalues_percentile(np.array([5.0, 3.0, 1.0]))
        assert_allclose(pv.p, [1 / 3, 2 / 3, 1.0])
        assert pv.method == "percentile"

    def test_ties_share_largest_rank(self):
        pv = pvalues_percentile(np.array([5.0, 5.0, 1.0]))
        assert_allclose(pv.p, [2 / 3, 2 / 3, 1.0])

    def test_distinct_multiset_is_uniform_grid(self):
        rng = np.random.default_rng(0)
        s = rng.permutation(np.linspace(0.1, 9.7, 20))
        pv = pvalues_percentile(s)
        assert_allclose(np.sort(pv.p), np.arange(1, 21) / 20)

    def test_monotone_in_score(self):
        rng = np.random.default_rng(1)
        s = rng.standard_normal(50)
        p = pvalues_percentile(s).p
        order = np.argsort(s)
        assert (np.diff(p[order]) <= 0).all()

    def test_inert_forced_to_one(self):
        pv = pvalues_percentile(scores_obj([5.0, 3.0, 0.0],
                                           inert=[False, False, True]))
        assert pv.p[2] == 1.0
        assert_allclose(pv.p[:2], [1 / 3, 2 / 3])

    def test_empty_rejected(self):
        with pytest.raises(BoundsError):
            pvalues_percentile(np.array([]))


class TestLognormal:
    def test_frozen_normal_tails(self):
        # log scores {1, 2, 3}: mu = 2, sd = 1, z = (-1, 0, 1).
        s = np.exp([1.0, 2.0, 3.0])
        pv = pvalues_lognormal(s)
        assert pv.method == "lognormal"
        assert_allclose(
            pv.p,
            [0.8413447460685429, 0.5, 0.15865525393145707],
            rtol=1e-12,
        )

    def test_nonpositive_scores_get_one(self):
        s = np.array([np.e, np.e**2, np.e**3, 0.0, -1.0])
        pv = pvalues_lognormal(s)
        assert pv.p[3] == 1.0
        assert pv.p[4] == 1.0

    def test_inert_forced_to_one(self):
        pv = pvalues_lognormal(scores_obj([1.0, 2.0, 4.0, 8.0],
                                          inert=[False, False, False, True]))
        assert pv.p[3] == 1.0

    def test_too_few_positive(self):
        with pytest.raises(InsufficientData):
            pvalues_lognormal(np.array([1.0, 0.0, -2.0, 0.0]))

    def test_constant_positive_scores(self):
        with pytest.raises(DegenerateDistribution):
            pvalues_lognormal(np.array([2.0, 2.0, 2.0, 0.0]))

    def test_probabilities_in_unit_interval(self):
        rng = np.random.default_rng(2)
        s = np.abs(rng.standard_normal(30)) + 0.01
        p = pvalues_lognormal(s).p
        assert (p > 0).all() and (p <= 1).all()


# ======================================================================
# Selection
# ======================================================================

class TestCanonicalRanking:
    def test_tie_breaking(self):
        p = np.array([0.5, 0.2, 0.5, 0.2])
        s = np.array([1.0, 2.0, 3.0, 2.0])
        # p ascending; equal p falls back to score descending, then index.
        assert_array_equal(canonical_ranking(p, s), [1, 3, 2, 0])


class TestSelectThreshold:
    def test_basic(self):
        pv = pvalues_percentile(np.array([9.0, 7.0, 5.0, 3.0]))
        res = select_threshold(pv, np.array([9.0, 7.0, 5.0, 3.0]), alpha=0.5)
        assert res.selected == (0, 1)
        assert res.threshold_used == 0.5
        assert res.strategy == "threshold:0.5"

    def test_alpha_bounds(self):
        pv = pvalues_percentile(np.array([1.0, 2.0]))
        for bad in (0.0, -0.1, 1.5):
            with pytest.raises(BoundsError):
                select_threshold(pv, np.array([1.0, 2.0]), alpha=bad)


class TestSelectBh:
    def test_step_up_oracle(self):
        # criteria k alpha / d = (1/60, 2/60, 3/60): k* = 2, crit = 0.02.
        p = np.array([0.01, 0.02, 0.2])
        s = np.array([3.0, 2.0, 1.0])
        pv = SimpleNamespace(p=p, method="percentile")
        res = select_bh(pv, s, alpha=0.05)
        assert res.selected == (0, 1)
        assert res.threshold_used == 0.02

    def test_nothing_passes(self):
        p = np.array([0.9, 0.8, 0.95])
        pv = SimpleNamespace(p=p, method="percentile")
        res = select_bh(pv, np.array([1.0, 2.0, 0.5]), alpha=0.05)
        assert res.selected == ()
        assert res.threshold_used == 0.0

    def test_monotone_in_alpha(self):
        rng = np.random.default_rng(3)
        s = np.abs(rng.standard_normal(40))
        pv = pvalues_percentile(s)
        previous = set()
        for alpha in (0.01, 0.05, 0.1, 0.3, 0.6, 1.0):
            sel = set(select_bh(pv, s, alpha=alpha).selected)
            assert previous <= sel
            previous = sel

    def test_alpha_one_selects_everything(self):
        s = np.array([4.0, 3.0, 2.0, 1.0])
        pv = pvalues_percentile(s)
        assert len(select_bh(pv, s, alpha=1.0).selected) == 4


class TestSelectFixed:
    def test_prefix_of_ranking_and_nested(self):
        rng = np.random.default_rng(4)
        s = rng.standard_normal(15)
        pv = pvalues_percentile(s)
        res5 = select_fixed(pv, s, r=5)
        res9 = select_fixed(pv, s, r=9)
        assert res5.r_used == 5
        assert res5.selected == tuple(int(i) for i in res5.ranking[:5])
        assert res9.selected[:5] == res5.selected

    def test_zero_and_full(self):
        s = np.array([1.0, 2.0, 3.0])
        pv = pvalues_percentile(s)
        assert select_fixed(pv, s, r=0).selected == ()
        assert len(select_fixed(pv, s, r=3).selected) == 3

    def test_r_bounds(self):
        s = np.array([1.0, 2.0, 3.0])
        pv = pvalues_percentile(s)
        for bad in (-1, 4):
            with pytest.raises(BoundsError):
                select_fixed(pv, s, r=bad)


class TestSelectVarying:
    def planted_problem(self, n=300, d=12, seed=5):
        rng = np.random.default_rng(seed)
        psi = rng.standard_normal((n, d))
        psi = (psi - psi.mean(axis=0)) / psi.std(axis=0)
        coefs = np.array([1.0, -0.8, 0.6])
        signals = np.column_stack([
            psi[:, :3] @ coefs + 0.05 * rng.standard_normal(n),
            psi[:, :3] @ coefs[::-1] + 0.05 * rng.standard_normal(n),
        ])
        fm = SimpleNamespace(psi=psi)
        bundle = SimpleNamespace(signals=signals,
                                 lambdas=np.array([0.7, 0.3]))
        s = np.zeros(d)
        s[:3] = [10.0, 9.0, 8.0]
        s[3:] = np.linspace(0.5, 0.1, d - 3)
        return fm, bundle, s

    def test_recovers_planted_size(self):
        fm, bundle, s = self.planted_problem()
        pv = pvalues_percentile(s)
        res = select_varying(pv, s, fm, bundle, candidates=(1, 2, 3, 5, 8),
                             folds=5, seed=0)
        assert res.r_used == 3
        assert set(res.selected) == {0, 1, 2}
        assert res.strategy == "auto"
        assert set(res.details["cv_objective"]) == {"1", "2", "3", "5", "8"}

    def test_objective_decreases_to_truth(self):
        fm, bundle, s = self.planted_problem(seed=6)
        pv = pvalues_percentile(s)
        res = select_varying(pv, s, fm, bundle, candidates=(1, 2, 3),
                             folds=5, seed=0)
        obj = res.details["cv_objective"]
        assert obj["3"] < obj["2"] < obj["1"]

    def test_candidates_clipped_to_width(self):
        fm, bundle, s = self.planted_problem()
        pv = pvalues_percentile(s)
        res = select_varying(pv, s, fm, bundle, candidates=(3, 500),
                             folds=4, seed=0)
        assert set(res.details["cv_objective"]) == {"3", "12"}

    def test_deterministic_in_seed(self):
        fm, bundle, s = self.planted_problem(seed=7)
        pv = pvalues_percentile(s)
        a = select_varying(pv, s, fm, bundle, candidates=(2, 3, 5), seed=1)
        b = select_varying(pv, s, fm, bundle, candidates=(2, 3, 5), seed=1)
        assert a.r_used == b.r_used
        assert a.details == b.details

    def test_fold_bounds(self):
        fm, bundle, s = self.planted_problem()
        pv = pvalues_percentile(s)
        with pytest.raises(BoundsError):
            select_varying(pv, s, fm, bundle, folds=1)
        with pytest.raises(BoundsError):
            select_varying(pv, s, fm, bundle, folds=10**6)


# ======================================================================
# Component fits
# ======================================================================

class TestRidgeFit:
    def test_shrinkage_oracle(self):
        # One column of ones, y = ones: (n + n alpha) b = n -> b = 1/(1+alpha).
        n = 8
        a = np.ones((n, 1))
        y = np.ones(n)
        assert_allclose(ridge_fit(a, y, alpha_reg=1.0), [0.5], rtol=1e-12)
        assert_allclose(ridge_fit(a, y, alpha_reg=0.0), [1.0], rtol=1e-12)

    def test_singular_unregularized(self):
        a = np.ones((6, 2))
        with pytest.raises(NumericalError):
            ridge_fit(a, np.ones(6), alpha_reg=0.0)

    def test_negative_alpha(self):
        with pytest.raises(BoundsError):
            ridge_fit(np.eye(3), np.ones(3), alpha_reg=-1.0)


class TestFitComponent:
    def test_constant_support_leaves_unit_rmse(self):
        rng = np.random.default_rng(8)
        n = 200
        psi = np.column_stack([np.ones(n), rng.standard_normal(n)])
        z = rng.standard_normal(n)
        z = (z - z.mean()) / z.std()
        fit = fit_component(psi, z, support=(0,), component=2)
        assert fit.component == 2
        assert fit.support == (0,)
        assert_allclose(fit.rmse, 1.0, atol=1e-8)

    def test_rmse_monotone_in_support(self):
        rng = np.random.default_rng(9)
        psi = rng.standard_normal((150, 6))
        z = psi[:, 0] - psi[:, 3] + 0.1 * rng.standard_normal(150)
        small = fit_component(psi, z, support=(0,))
        big = fit_component(psi, z, support=(0, 3))
        assert big.rmse <= small.rmse + 1e-9
        assert big.rmse < 0.2

    def test_exact_fit(self):
        rng = np.random.default_rng(10)
        psi = rng.standard_normal((50, 3))
        z = psi @ np.array([2.0, -1.0, 0.5])
        fit = fit_component(psi, z, support=(0, 1, 2))
        assert_allclose(fit.coef, [2.0, -1.0, 0.5], atol=1e-5)
        assert fit.rmse < 1e-5

    def test_bad_support(self):
        psi = np.ones((10, 2))
        with pytest.raises(BoundsError):
            fit_component(psi, np.ones(10), support=())
        with pytest.raises(BoundsError):
            fit_component(psi, np.ones(10), support=(5,))
