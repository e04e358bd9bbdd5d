import math

import numpy as np
import pytest
from scipy import stats

from syncperm.distributions import (
    CONCRETE_LAWS,
    LAWS,
    MIXED_LAWS,
    DistributionSpec,
    raw_moments,
    sample_error,
    sample_errors,
    standardized,
)
from syncperm.errors import InvalidInputError

# (mean, sd) of the base laws, taken from scipy's frozen distributions
SCIPY_BASE = {
    "normal": stats.norm(),
    "laplace": stats.laplace(),
    "logistic": stats.logistic(),
    "uniform": stats.uniform(),
    "exponential": stats.expon(),
    "lognormal": stats.lognorm(1.0),
    "chi2_3": stats.chi2(3),
    "chi2_10": stats.chi2(10),
}


@pytest.mark.parametrize("law", CONCRETE_LAWS)
def test_raw_moments_match_scipy(law):
    mean, sd = raw_moments(law)
    ref = SCIPY_BASE[law]
    assert mean == pytest.approx(ref.mean(), abs=1e-12)
    assert sd == pytest.approx(ref.std(), rel=1e-12)


def test_closed_forms():
    assert raw_moments("uniform") == pytest.approx((0.5, 0.28867513459481287))
    assert raw_moments("laplace") == pytest.approx((0.0, 1.4142135623730951))
    assert raw_moments("exponential") == (1.0, 1.0)
    assert raw_moments("chi2_3") == pytest.approx((3.0, math.sqrt(6.0)))
    assert raw_moments("lognormal") == pytest.approx((math.exp(0.5), math.sqrt((math.e - 1) * math.e)))


def test_mixed_laws_need_a_cell():
    with pytest.raises(InvalidInputError):
        raw_moments("mixed_skewed")
    with pytest.raises(InvalidInputError):
        DistributionSpec("cauchy")


def test_mixed_assignment():
    spec = DistributionSpec("mixed_symmetric")
    assert [spec.cell_law(k) for k in range(4)] == ["normal", "laplace", "logistic", "uniform"]
    spec = DistributionSpec("mixed_skewed")
    assert [spec.cell_law(k) for k in range(4)] == list(MIXED_LAWS["mixed_skewed"])
    assert DistributionSpec("normal").cell_law(3) == "normal"


@pytest.mark.parametrize("law", ["chi2_3", "lognormal"])
def test_raw_moments_against_ten_million_draws(law):
    rng = np.random.default_rng(99)
    mean, sd = raw_moments(law)
    x = standardized(law, 10_000_000, rng) * sd + mean
    assert x.mean() == pytest.approx(mean, rel=5e-3)
    assert x.std() == pytest.approx(sd, rel=1e-2)


@pytest.mark.parametrize("law", CONCRETE_LAWS)
def test_standardized_moments(law):
    x = standardized(law, 1_000_000, np.random.default_rng(2024))
    assert abs(x.mean()) <= 0.01
    assert abs(x.std() - 1) <= 0.01


@pytest.mark.parametrize("law", CONCRETE_LAWS)
def test_skewness_sign(law):
    x = standardized(law, 1_000_000, np.random.default_rng(31))
    g = stats.skew(x)
    if law in ("lognormal", "chi2_3", "chi2_10", "exponential"):
        assert g > 0
    else:
        assert abs(g) < 0.02


def test_sigma_scaling_and_distribution_shape():
    x = sample_errors(DistributionSpec("uniform"), 0, 3.0, 200_000, np.random.default_rng(4))
    half = 3.0 * math.sqrt(3.0)
    assert x.min() >= -half and x.max() <= half
    assert stats.kstest(x, stats.uniform(-half, 2 * half).cdf).pvalue > 0.001


def test_normal_output_is_gaussian():
    x = sample_errors(DistributionSpec("normal"), 2, 2.0, 50_000, np.random.default_rng(8))
    assert stats.kstest(x, stats.norm(0, 2).cdf).pvalue > 0.001


def test_determinism_and_cell_addressing():
    spec = DistributionSpec("mixed_skewed")
    a = sample_errors(spec, 1, 1.5, 100, np.random.default_rng(5))
    b = sample_errors(spec, 1, 1.5, 100, np.random.default_rng(5))
    np.testing.assert_array_equal(a, b)
    assert sample_error(spec, (1, 2), 1.5, np.random.default_rng(5)) == a[0]


def test_sigma_must_be_positive():
    with pytest.raises(InvalidInputError):
        sample_errors(DistributionSpec("normal"), 0, 0.0, 3, np.random.default_rng())


def test_all_laws_listed():
    assert len(LAWS) == 10
