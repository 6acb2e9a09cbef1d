import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treecast import (
    ResidualPanel,
    build_structure_matrix,
    sample_covariance,
    shrinkage_covariance,
    structural_weights,
    subset,
    variance_weights,
)
from treecast.errors import TooFewObservationsError, ValidationError


def panel(values, labels=None):
    values = np.asarray(values, dtype=float)
    labels = labels or tuple(f"s{j}" for j in range(values.shape[1]))
    return ResidualPanel(values, labels)


def double_loop_cov(rows: np.ndarray) -> np.ndarray:
    """Oracle: textbook centered cross products divided by n, element by element."""
    n, m = rows.shape
    means = [sum(rows[:, j]) / n for j in range(m)]
    out = np.empty((m, m))
    for i in range(m):
        for j in range(m):
            acc = 0.0
            for t in range(n):
                acc += (rows[t, i] - means[i]) * (rows[t, j] - means[j])
            out[i, j] = acc / n
    return out


class TestPanel:
    def test_missing_only_at_head(self):
        values = np.array([[np.nan, 1.0], [2.0, np.nan], [3.0, 4.0]])
        with pytest.raises(ValidationError):
            panel(values)

    def test_start_offsets(self):
        values = np.array([[np.nan, 1.0], [np.nan, 2.0], [3.0, 4.0]])
        p = panel(values)
        np.testing.assert_array_equal(p.start_offsets, [2, 0])

    def test_complete_rows_per_subset(self):
        values = np.full((10, 3), np.nan)
        values[2:, 0] = 1.0
        values[5:, 1] = 2.0
        values[:, 2] = 3.0
        p = panel(values)
        assert p.complete_rows().shape[0] == 5
        assert p.complete_rows([0, 2]).shape[0] == 8
        assert p.complete_rows([2]).shape[0] == 10


class TestSampleCovariance:
    def test_two_point_sample(self):
        est = sample_covariance(panel([[1, -1], [-1, 1]]))
        np.testing.assert_allclose(est.matrix, [[1, -1], [-1, 1]])
        assert est.shrinkage == 0.0
        assert est.n_obs_used == 2

    def test_degenerate_constant_series_gives_zero_matrix(self):
        est = sample_covariance(panel([[0.0], [0.0], [0.0]]))
        np.testing.assert_array_equal(est.matrix, [[0.0]])
        # downstream positivity check rejects it
        with pytest.raises(ValidationError):
            shrinkage_covariance(panel([[0.0], [0.0], [0.0]]))

    def test_fixed_panel_matches_double_loop_oracle(self):
        rng = np.random.default_rng(5)
        rows = rng.standard_normal((5, 3))
        est = sample_covariance(panel(rows))
        np.testing.assert_allclose(est.matrix, double_loop_cov(rows), rtol=1e-12)

    def test_too_few_complete_rows(self):
        values = np.array([[np.nan, 1.0], [np.nan, 2.0], [3.0, 4.0]])
        with pytest.raises(TooFewObservationsError):
            sample_covariance(panel(values))

    def test_complete_case_selection_uses_subset_rows(self):
        # Subset estimation must use all rows complete for that subset.
        values = np.full((40, 3), np.nan)
        rng = np.random.default_rng(6)
        values[30:, 0] = rng.standard_normal(10)
        values[:, 1] = rng.standard_normal(40)
        values[:, 2] = rng.standard_normal(40)
        p = panel(values)
        assert sample_covariance(p).n_obs_used == 10
        assert sample_covariance(p, idx=[1, 2]).n_obs_used == 40


class TestShrinkage:
    def test_perfect_correlation_keeps_off_diagonal(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal(200)
        est = shrinkage_covariance(panel(np.column_stack([x, x])))
        assert est.shrinkage < 0.05
        assert abs(est.matrix[0, 1]) > 0.5

    def test_independent_noise_shrinks_hard(self):
        rng = np.random.default_rng(8)
        rows = rng.standard_normal((10, 8))
        raw = sample_covariance(panel(rows))
        est = shrinkage_covariance(panel(rows))
        assert est.shrinkage >= 0.5
        off = ~np.eye(8, dtype=bool)
        assert np.all(
            np.abs(est.matrix[off]) <= np.abs(raw.matrix[off]) + 1e-15
        )

    def test_single_series_lambda_zero(self):
        rows = np.array([[1.0], [2.0], [4.0], [0.5]])
        est = shrinkage_covariance(panel(rows))
        assert est.shrinkage == 0.0
        np.testing.assert_allclose(est.matrix, sample_covariance(panel(rows)).matrix)

    def test_diagonal_preserved_exactly(self):
        rng = np.random.default_rng(9)
        rows = rng.standard_normal((15, 6))
        est = shrinkage_covariance(panel(rows))
        raw = sample_covariance(panel(rows))
        np.testing.assert_array_equal(np.diag(est.matrix), np.diag(raw.matrix))

    def test_lambda_oracle_on_fixed_panel(self):
        # Independent recomputation of the intensity from its definition.
        rng = np.random.default_rng(10)
        rows = rng.standard_normal((12, 4))
        est = shrinkage_covariance(panel(rows))
        centered = rows - rows.mean(axis=0)
        n = 12
        w = centered.T @ centered / n
        xs = centered / np.sqrt(np.diag(w))
        corr = xs.T @ xs / n
        num = den = 0.0
        for i in range(4):
            for j in range(4):
                if i == j:
                    continue
                prods = xs[:, i] * xs[:, j]
                var_ij = (
                    (prods**2).sum() - prods.sum() ** 2 / n
                ) / (n * (n - 1))
                num += var_ij
                den += corr[i, j] ** 2
        assert est.shrinkage == pytest.approx(min(1.0, max(0.0, num / den)), rel=1e-12)

    def test_scale_invariance_of_lambda(self):
        rng = np.random.default_rng(11)
        rows = rng.standard_normal((20, 5))
        a = shrinkage_covariance(panel(rows))
        b = shrinkage_covariance(panel(3.5 * rows))
        assert b.shrinkage == pytest.approx(a.shrinkage, rel=1e-12)
        np.testing.assert_allclose(b.matrix, 3.5**2 * a.matrix, rtol=1e-12)


class TestDiagonalWeights:
    def test_structural_weights_fig_tree(self, fig_tree):
        smat = build_structure_matrix(fig_tree)
        est = structural_weights(smat)
        np.testing.assert_array_equal(
            np.diag(est.matrix), [5, 2, 3, 1, 1, 1, 1, 1]
        )
        assert est.matrix.sum() == np.diag(est.matrix).sum()

    def test_structural_weights_single_node(self):
        from treecast import Hierarchy

        smat = build_structure_matrix(Hierarchy.from_nodes([("x", None)]))
        np.testing.assert_array_equal(structural_weights(smat).matrix, [[1.0]])

    def test_structural_weights_degenerate_leaf(self):
        from treecast.scenarios import degenerate_tree

        h = degenerate_tree()
        smat = build_structure_matrix(h)
        est = structural_weights(smat)
        assert est.matrix[h.index_of("BB"), h.index_of("BB")] == 1.0
        # row-sum oracle
        np.testing.assert_array_equal(np.diag(est.matrix), smat.entries.sum(axis=1))

    def test_variance_weights_match_sample_diag(self):
        rng = np.random.default_rng(12)
        rows = rng.standard_normal((6, 4))
        vw = variance_weights(panel(rows))
        sc = sample_covariance(panel(rows))
        off = ~np.eye(4, dtype=bool)
        assert np.all(vw.matrix[off] == 0.0)
        np.testing.assert_array_equal(np.diag(vw.matrix), np.diag(sc.matrix))
        # per-series oracle
        for j in range(4):
            col = rows[:, j]
            assert vw.matrix[j, j] == pytest.approx(
                np.mean((col - col.mean()) ** 2), rel=1e-12
            )


class TestSubset:
    def test_identity_and_full(self):
        rng = np.random.default_rng(13)
        rows = rng.standard_normal((20, 5))
        est = shrinkage_covariance(panel(rows))
        full = subset(est, list(range(5)))
        np.testing.assert_array_equal(full.matrix, est.matrix)
        assert full.shrinkage == est.shrinkage

    def test_element_pick_oracle(self):
        rng = np.random.default_rng(14)
        rows = rng.standard_normal((25, 5))
        est = sample_covariance(panel(rows))
        sub = subset(est, [0, 3])
        for a, i in enumerate([0, 3]):
            for b, j in enumerate([0, 3]):
                assert sub.matrix[a, b] == est.matrix[i, j]
        assert sub.labels == (est.labels[0], est.labels[3])

    def test_bad_indices(self):
        rng = np.random.default_rng(15)
        est = sample_covariance(panel(rng.standard_normal((10, 3))))
        with pytest.raises(ValidationError):
            subset(est, [0, 0])
        with pytest.raises(ValidationError):
            subset(est, [0, 5])


@given(st.integers(min_value=1, max_value=2**32), st.floats(0.1, 10.0))
@settings(max_examples=25, deadline=None)
def test_property_shrinkage_contract(seed, scale):
    rng = np.random.default_rng(seed)
    rows = scale * rng.standard_normal((int(rng.integers(4, 30)), int(rng.integers(2, 8))))
    est = shrinkage_covariance(panel(rows))
    raw = sample_covariance(panel(rows))
    assert 0.0 <= est.shrinkage <= 1.0
    np.testing.assert_array_equal(np.diag(est.matrix), np.diag(raw.matrix))
    off = ~np.eye(rows.shape[1], dtype=bool)
    assert np.all(np.abs(est.matrix[off]) <= np.abs(raw.matrix[off]) + 1e-12)
