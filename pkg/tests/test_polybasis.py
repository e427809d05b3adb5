import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from spofe.dataio import Dataset
from spofe.errors import BoundsError
from spofe.polybasis import (
    build_basis,
    expand,
    expected_d_max,
    term_name,
)


def dataset(values, names=None):
    values = np.asarray(values, dtype=float)
    if names is None:
        names = tuple(f"x{j+1}" for j in range(values.shape[1]))
    return Dataset(values=values, column_names=names)


class TestBuildBasis:
    def test_counts_exhaustive(self):
        # 1 constant + p linear + p squares + p(p-1)/2 crosses.
        for p in range(1, 65):
            basis = build_basis(p)
            assert basis.d_max == 1 + 2 * p + p * (p - 1) // 2
            assert basis.d_max == expected_d_max(p)

    def test_reference_sizes(self):
        assert build_basis(24).d_max == 325
        assert build_basis(25).d_max == 351
        assert build_basis(20).d_max == 231

    def test_canonical_order_p3(self):
        terms = build_basis(3).terms
        got = [(t.kind, t.i, t.j) for t in terms]
        assert got == [
            ("constant", -1, -1),
            ("linear", 0, -1), ("linear", 1, -1), ("linear", 2, -1),
            ("square", 0, -1), ("square", 1, -1), ("square", 2, -1),
            ("cross", 0, 1), ("cross", 0, 2), ("cross", 1, 2),
        ]

    def test_exponent_multi_index(self):
        basis = build_basis(3)
        assert basis.terms[0].exponents(3) == (0, 0, 0)
        assert basis.terms[1].exponents(3) == (1, 0, 0)
        assert basis.terms[4].exponents(3) == (2, 0, 0)
        assert basis.terms[8].exponents(3) == (1, 0, 1)

    def test_bounds(self):
        with pytest.raises(BoundsError):
            build_basis(0)
        with pytest.raises(BoundsError):
            build_basis(65)


class TestExpand:
    def test_raw_values_recoverable(self):
        # Raw columns for x = (2, 3): [1, 2, 3, 4, 9, 6]; expand returns
        # them standardized, so undo with the recorded moments.
        x = np.array([[2.0, 3.0], [0.0, 1.0], [-1.0, 2.0]])
        basis = build_basis(2)
        fm = expand(basis, dataset(x))
        expected_raw = np.array([
            [1.0, 2.0, 3.0, 4.0, 9.0, 6.0],
            [1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
            [1.0, -1.0, 2.0, 1.0, 4.0, -2.0],
        ])
        raw = fm.psi * np.where(fm.inert, 1.0, fm.stds) + fm.means
        assert_allclose(raw, expected_raw, atol=1e-12)

    def test_standardized_moments(self):
        rng = np.random.default_rng(0)
        fm = expand(build_basis(4), dataset(rng.normal(size=(300, 4))))
        live = ~fm.inert
        assert_allclose(fm.psi[:, live].mean(axis=0), 0, atol=1e-12)
        assert_allclose(fm.psi[:, live].var(axis=0), 1, rtol=1e-10)

    def test_constant_column_all_ones_and_inert(self):
        rng = np.random.default_rng(1)
        fm = expand(build_basis(3), dataset(rng.normal(size=(50, 3))))
        assert_array_equal(fm.psi[:, 0], np.ones(50))
        assert fm.inert[0]

    def test_zero_variance_square_flagged_inert(self):
        # x1 in {-1, +1}: its square is constant, so that column is inert.
        x = np.array([[1.0, 0.5], [-1.0, 1.5], [1.0, 2.5], [-1.0, 0.25]])
        fm = expand(build_basis(2), dataset(x))
        square_idx = 1 + 2  # constant, x1, x2, then x1^2
        assert fm.inert[square_idx]
        assert not fm.inert[1]

    def test_shape(self):
        rng = np.random.default_rng(2)
        fm = expand(build_basis(5), dataset(rng.normal(size=(40, 5))))
        assert fm.psi.shape == (40, expected_d_max(5))
        assert fm.d_max == 21

    def test_width_mismatch(self):
        rng = np.random.default_rng(3)
        with pytest.raises(BoundsError):
            expand(build_basis(3), dataset(rng.normal(size=(10, 4))))


class TestTermName:
    def test_names(self):
        basis = build_basis(2)
        names = ("a", "b")
        # order: 1, a, b, a^2, b^2, a*b
        assert term_name(basis, 0, names) == "1"
        assert term_name(basis, 1, names) == "a"
        assert term_name(basis, 2, names) == "b"
        assert term_name(basis, 3, names) == "a^2"
        assert term_name(basis, 4, names) == "b^2"
        assert term_name(basis, 5, names) == "a*b"

    def test_all_names_unique(self):
        basis = build_basis(6)
        names = tuple(f"v{j}" for j in range(6))
        all_names = [term_name(basis, i, names) for i in range(basis.d_max)]
        assert len(set(all_names)) == basis.d_max

    def test_bounds(self):
        basis = build_basis(2)
        with pytest.raises(BoundsError):
            term_name(basis, 6, ("a", "b"))
        with pytest.raises(BoundsError):
            term_name(basis, 0, ("a",))
