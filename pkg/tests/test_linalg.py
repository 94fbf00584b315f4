import numpy as np
import pytest
from scipy.stats import chi2

from schemas.errors import DomainError, NotSymmetric
from tools.linalg import chi2_cdf_df3, chi2_quantile_df3, numerical_rank, pseudo_inverse


def multinomial_sigma(p, n=100):
    p = np.asarray(p, dtype=float)
    return n * (np.diag(p) - np.outer(p, p))


def test_pseudo_inverse_penrose_conditions():
    S = multinomial_sigma([0.1, 0.2, 0.3, 0.4])
    P = pseudo_inverse(S)
    assert np.allclose(S @ P @ S, S, atol=1e-9)
    assert np.allclose(P @ S @ P, P, atol=1e-9)
    assert np.allclose(P, P.T)


def test_pseudo_inverse_matches_numpy():
    S = multinomial_sigma([0.25, 0.25, 0.3, 0.2], n=1000)
    assert np.allclose(pseudo_inverse(S), np.linalg.pinv(S, hermitian=True), atol=1e-10)


def test_pseudo_inverse_of_zero_matrix():
    assert np.array_equal(pseudo_inverse(np.zeros((4, 4))), np.zeros((4, 4)))


def test_pseudo_inverse_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        pseudo_inverse(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(NotSymmetric):
        pseudo_inverse(np.ones((2, 3)))


def test_multinomial_covariance_has_rank_three():
    assert numerical_rank(multinomial_sigma([0.1, 0.2, 0.3, 0.4])) == 3
    assert numerical_rank(np.zeros((4, 4))) == 0


@pytest.mark.parametrize("x", [0.1, 1.0, 3.0, 7.8147, 20.0])
def test_chi2_cdf_df3_matches_scipy(x):
    assert chi2_cdf_df3(x) == pytest.approx(chi2.cdf(x, 3), abs=1e-12)


def test_chi2_cdf_df3_nonpositive():
    assert chi2_cdf_df3(0.0) == 0.0
    assert chi2_cdf_df3(-1.0) == 0.0


@pytest.mark.parametrize("prob", [0.01, 0.5, 0.9, 0.95, 0.99, 0.999999])
def test_chi2_quantile_df3_matches_scipy(prob):
    assert chi2_quantile_df3(prob) == pytest.approx(chi2.ppf(prob, 3), abs=1e-8)


def test_chi2_quantile_df3_95():
    assert chi2_quantile_df3(0.95) == pytest.approx(7.814727903, abs=1e-8)


@pytest.mark.parametrize("prob", [0.0, 1.0, -0.5])
def test_chi2_quantile_df3_domain(prob):
    with pytest.raises(DomainError):
        chi2_quantile_df3(prob)
