import numpy as np
import pytest

from lpad.core.exceptions import EnumerationLimitError, ShapeError
from lpad.rbm.oracle import (
    MAX_ENUMERATED_UNITS,
    empirical_distribution,
    exact_oracle,
    state_index,
    total_variation,
)
from lpad.rbm.prior import RbmChains, RbmPrior
from lpad.rbm.sampling import gibbs_step


def test_two_unit_zero_rbm():
    result = exact_oracle(RbmPrior.from_arrays(np.zeros((1, 1)), np.zeros(1), np.zeros(1)))
    assert result.log_z == pytest.approx(np.log(4.0))
    np.testing.assert_allclose(result.distribution, np.full(4, 0.25))


def test_distribution_sums_to_one(rng):
    prior = RbmPrior.from_arrays(rng.normal(size=(3, 2)), rng.normal(size=3), rng.normal(size=2))
    assert exact_oracle(prior).distribution.sum() == pytest.approx(1.0)


def test_refuses_large_models():
    assert MAX_ENUMERATED_UNITS == 20
    with pytest.raises(EnumerationLimitError):
        exact_oracle(RbmPrior(11, 10))


def test_state_index_orders_visible_before_hidden():
    assert state_index(np.array([[1, 0, 1]]), np.array([[0, 1, 1]]))[0] == 0b101011


def test_state_index_agrees_with_oracle_ordering():
    prior = RbmPrior.from_arrays(np.zeros((1, 1)), np.array([2.0]), np.zeros(1))
    distribution = exact_oracle(prior).distribution
    visible_on = state_index(np.array([[1], [1]]), np.array([[0], [1]]))
    assert distribution[visible_on].sum() == pytest.approx(np.exp(2.0) / (1.0 + np.exp(2.0)))


def test_total_variation():
    assert total_variation(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1.0
    with pytest.raises(ShapeError):
        total_variation(np.ones(2), np.ones(3))


@pytest.mark.parametrize("seed", range(10))
def test_gibbs_sampler_matches_exact_distribution(seed):
    rng = np.random.default_rng([seed, 12])
    prior = RbmPrior.from_arrays(
        rng.uniform(-1.0, 1.0, size=(3, 3)), rng.uniform(-1.0, 1.0, size=3), rng.uniform(-1.0, 1.0, size=3)
    )
    chains = RbmChains.zeros(1000, 3, 3)
    for _ in range(50):
        chains = gibbs_step(chains, prior, rng)
    indices = []
    for _ in range(100):
        chains = gibbs_step(chains, prior, rng)
        indices.append(state_index(chains.v_states, chains.h_states))
    empirical = empirical_distribution(np.concatenate(indices), 6)
    assert total_variation(empirical, exact_oracle(prior).distribution) <= 0.05
