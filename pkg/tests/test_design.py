import math

import numpy as np
import pytest

from syncperm.design import (
    Dataset, Effect, EffectSpec, contrast_vector, projection_matrix, summarize,
)
from syncperm.errors import InvalidInputError


def test_dataset_counts_and_nested_form():
    d = Dataset([[[1, 2], [3, 4, 5]], [[6], [7, 8, 9, 10]]])
    assert d.n.tolist() == [2, 3, 1, 4]
    assert d.N == 10
    assert d.cell(2, 2).tolist() == [7, 8, 9, 10]


@pytest.mark.parametrize("cells", [[[1.0], [], [1.0], [1.0]], [[1.0]] * 3, [[1.0], [np.nan], [1.0], [1.0]]])
def test_dataset_rejects_bad_cells(cells):
    with pytest.raises(InvalidInputError):
        Dataset(cells)


class TestSummarize:
    def test_constant_cell(self):
        s = summarize(Dataset([[1, 1, 1, 1], [1, 2], [3, 4], [5, 6]]))
        assert s.means[0] == 1.0 and s.variances[0] == 0.0

    def test_two_point_cell(self):
        s = summarize(Dataset([[0, 2], [0, 2], [0, 2], [0, 2]]))
        assert np.all(s.means == 1.0) and np.all(s.variances == 2.0)

    def test_single_observation_variance_missing(self):
        s = summarize(Dataset([[3.0], [0, 2], [0, 2], [0, 2]]))
        assert math.isnan(s.variances[0])

    def test_against_compensated_two_pass_oracle(self, rng):
        for _ in range(50):
            cells = [rng.normal(rng.uniform(-100, 100), rng.uniform(0.1, 10), 50) for _ in range(4)]
            s = summarize(Dataset(cells))
            for k, c in enumerate(cells):
                m = math.fsum(c) / len(c)
                v = math.fsum((x - m) ** 2 for x in c) / (len(c) - 1)
                assert s.means[k] == pytest.approx(m, rel=1e-12, abs=1e-12)
                assert s.variances[k] == pytest.approx(v, rel=1e-12)
                assert s.variances[k] >= 0


class TestContrasts:
    def test_values(self):
        assert contrast_vector("A") == (1, 1, -1, -1)
        assert contrast_vector("B") == (1, -1, 1, -1)
        assert contrast_vector("AxB") == (1, -1, -1, 1)

    @pytest.mark.parametrize("e", list(Effect))
    def test_sum_zero(self, e):
        assert sum(contrast_vector(e)) == 0

    def test_mutually_orthogonal(self):
        cs = [np.array(contrast_vector(e)) for e in Effect]
        for i in range(3):
            for j in range(i + 1, 3):
                assert cs[i] @ cs[j] == 0

    def test_cell_means_derivation(self):
        # mu_ij = alpha_i + beta_j + ab_ij with sum-to-zero side conditions:
        # c_A' mu = 2 (alpha_1 - alpha_2) = 4 alpha_1
        a1, b1, g = 0.7, -0.3, 0.25
        alpha, beta = (a1, -a1), (b1, -b1)
        ab = ((g, -g), (-g, g))
        mu = np.array([alpha[i] + beta[j] + ab[i][j] for i in (0, 1) for j in (0, 1)])
        assert np.array(contrast_vector("A")) @ mu == pytest.approx(4 * a1)
        assert np.array(contrast_vector("B")) @ mu == pytest.approx(4 * b1)
        assert np.array(contrast_vector("AxB")) @ mu == pytest.approx(4 * g)

    def test_effect_spec_blocking(self):
        assert EffectSpec.of("A").blocking == "B"
        assert EffectSpec.of("AxB").blocking == "B"
        assert EffectSpec.of("B").blocking == "A"
        assert EffectSpec.of("a×b").effect is Effect.AxB

    def test_unknown_effect(self):
        with pytest.raises(InvalidInputError):
            EffectSpec.of("C")


class TestProjection:
    @pytest.mark.parametrize("e", list(Effect))
    def test_closed_form(self, e):
        c = np.array(contrast_vector(e), dtype=float)
        T = projection_matrix(e).array
        assert np.allclose(T, np.outer(c, c) / 4, atol=1e-15)
        assert np.allclose(np.abs(T), 0.25, atol=1e-15)

    @pytest.mark.parametrize("e", list(Effect))
    def test_idempotent_trace_one(self, e):
        T = projection_matrix(e).array
        assert np.abs(T @ T - T).max() <= 1e-12
        assert np.trace(T) == pytest.approx(1.0, abs=1e-12)

    def test_scale_invariant(self):
        from syncperm.design import projection_from_contrast

        c = np.array(contrast_vector("AxB"), dtype=float)
        assert np.allclose(projection_from_contrast(5 * c).array, projection_from_contrast(c).array, atol=1e-15)
