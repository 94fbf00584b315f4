import numpy as np
import pytest

from schemas.errors import DegenerateMean, DomainError
from schemas.population import LatentPopulation
from schemas.tables import Counts2x2
from tools.linalg import chi2_quantile_df3
from tools.oracle import (
    cell_moments,
    covariance_pair,
    coverage_rate,
    diagonal_population,
    eta_incremental,
    eta_of,
    expected_cells,
    is_diagonally_dominant,
    loewner_gap,
    multinomial_coverage_rate,
    random_null_population,
    simulate_twin_cohort,
    verify_threshold_bound,
)
from tools.randomness import cohort_statistics, r_squared_direct
from tools.tables import from_counts


def rng(seed=0):
    return np.random.Generator(np.random.Philox(seed))


# ----------------------------
# Population moments
# ----------------------------
def test_homogeneous_population_is_fully_random():
    pop = LatentPopulation.null([0.3] * 5, [0.6] * 5)
    eta = eta_of(pop)
    assert eta.R_pi == pytest.approx(0.0, abs=1e-7)
    assert eta.eta == pytest.approx(1.0, abs=1e-7)


def test_eta_incremental_matches_direct():
    pop = random_null_population(rng(3), 400)
    assert eta_incremental(pop).eta == pytest.approx(eta_of(pop).eta, abs=1e-10)


def test_eta_requires_interior_mean():
    with pytest.raises(DomainError):
        LatentPopulation.null([0.0, 0.5], [0.5, 0.5])


def test_degenerate_mean_is_reported():
    pop = LatentPopulation.null([1e-300, 1e-300], [0.5, 0.5])
    with pytest.raises(DegenerateMean):
        eta_of(pop.model_copy(update={"pi": np.zeros(2)}))


def test_cell_moments_rows_are_distributions():
    pop = random_null_population(rng(5), 50)
    q = cell_moments(pop)
    assert q.shape == (50, 4)
    assert np.allclose(q.sum(axis=1), 1.0)


def test_expected_cells_of_independent_population():
    pop = LatentPopulation.null([0.4, 0.4], [0.2, 0.2])
    p = expected_cells(pop)
    assert p.cells() == pytest.approx((0.6 * 0.2, 0.4 * 0.2, 0.6 * 0.8, 0.4 * 0.8))


def test_expected_cells_single_individual():
    pop = LatentPopulation.null([0.5], [0.5])
    assert expected_cells(pop).cells() == pytest.approx((0.25, 0.25, 0.25, 0.25))


@pytest.mark.parametrize("seed", range(6))
def test_expected_cells_marginals_of_null_population(seed):
    pop = random_null_population(rng(seed), 10 + 97 * seed)
    p = expected_cells(pop)
    assert p.p_e == pytest.approx(pop.pi.mean(), abs=1e-12)
    assert p.p_d == pytest.approx(pop.r0.mean(), abs=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_expected_cells_marginals_with_effect(seed):
    g = rng(100 + seed)
    pop = LatentPopulation.from_points(g.uniform(0.05, 0.95, size=(50, 3)))
    p = expected_cells(pop)
    assert p.p_e == pytest.approx(pop.pi.mean(), abs=1e-12)
    assert p.p_d == pytest.approx(pop.r.mean(), abs=1e-12)


def test_expected_cells_match_sampled_individuals():
    pop = random_null_population(rng(11), 300)
    n = 10**6
    g = rng(2024)
    who = g.integers(0, pop.size, size=n)
    e = g.random(n) < pop.pi[who]
    d = g.random(n) < pop.r0[who]
    observed = np.array([np.mean(~e & d), np.mean(e & d), np.mean(~e & ~d), np.mean(e & ~d)])
    expected = np.array(expected_cells(pop).cells())
    se = np.sqrt(expected * (1.0 - expected) / n)
    # Every cell within 4 standard errors
    assert np.all(np.abs(observed - expected) <= 4.0 * se)


# ----------------------------
# Threshold bound
# ----------------------------
@pytest.mark.parametrize("seed", range(10))
def test_random_null_populations_respect_threshold(seed):
    g = rng(seed)
    check = verify_threshold_bound(random_null_population(g, int(g.integers(2, 2000))))
    assert check.ok
    assert check.eta <= check.T + 1e-9


def test_diagonal_population_is_tight():
    check = verify_threshold_bound(diagonal_population(0.1))
    assert check.eta == pytest.approx(check.T, abs=1e-9)


def test_threshold_bound_needs_null_population():
    pop = LatentPopulation(pi=np.array([0.5, 0.5]), r0=np.array([0.2, 0.3]), r1=np.array([0.4, 0.3]))
    with pytest.raises(DomainError):
        verify_threshold_bound(pop)


# ----------------------------
# Twin cohorts
# ----------------------------
def test_twin_cohort_is_reproducible():
    psi = [0.2, 0.5, 0.8]
    assert simulate_twin_cohort(psi, 50, seed=9) == simulate_twin_cohort(psi, 50, seed=9)


def test_twin_cohort_size():
    cohort = simulate_twin_cohort([0.3, 0.6], 40, seed=1)
    assert cohort.n == 80


def test_concordance_bound_covers_true_variance():
    psi = rng(21).uniform(0.2, 0.8, size=1000).tolist()
    stats = cohort_statistics(simulate_twin_cohort(psi, 100, seed=21))
    # R^2 <= 1 - (1 - BC) / (1 - psi_bar) with equality for reared-apart twins
    bound = 1.0 - (1.0 - stats.BC) / (1.0 - stats.psi_bar)
    assert bound >= float(r_squared_direct(psi)) - 0.01


@pytest.mark.parametrize("psi, pairs", [([], 10), ([0.0, 0.5], 10), ([0.5], 0)])
def test_twin_cohort_rejects_bad_input(psi, pairs):
    with pytest.raises(DomainError):
        simulate_twin_cohort(psi, pairs, seed=0)


# ----------------------------
# Covariance comparison
# ----------------------------
@pytest.mark.parametrize("seed", range(5))
def test_multinomial_dominates_heterogeneous_draws(seed):
    pop = random_null_population(rng(seed), 300)
    assert loewner_gap(pop) >= -1e-9


def test_homogeneous_population_has_equal_covariances():
    pop = LatentPopulation.null([0.3] * 10, [0.6] * 10)
    sigma_gpb, sigma_mult = covariance_pair(pop)
    assert np.allclose(sigma_gpb, sigma_mult)


def test_is_diagonally_dominant():
    assert is_diagonally_dominant(np.array([[2.0, -1.0], [-1.0, 2.0]]))
    assert not is_diagonally_dominant(np.array([[1.0, 2.0], [2.0, 1.0]]))


# ----------------------------
# Coverage of the chi-square region
# ----------------------------
def test_multinomial_coverage_near_nominal():
    p = from_counts(Counts2x2.of((200, 300, 350, 150)))
    rate = multinomial_coverage_rate(p, 1000, 2000, chi2_quantile_df3(0.95), rng(1))
    assert 0.93 <= rate <= 0.97


def test_population_coverage_is_conservative():
    g = rng(2)
    pi = g.uniform(0.2, 0.8, size=500)
    pop = LatentPopulation.null(pi, 0.5 * g.uniform(0.2, 0.8, size=500) + 0.5 * pi)
    assert coverage_rate(pop, 1000, chi2_quantile_df3(0.95), g) >= 0.92
