import numpy as np
import pytest

from lpad.core.exceptions import DomainError, NonFiniteError
from lpad.diffcore.tensor import Tensor
from lpad.priors.gaussian import (
    kl_gaussian_closed_form,
    reparameterize_from_logvar,
    reparameterize_gaussian,
)
from tests.conftest import max_grad_violation


class TestReparameterize:
    @pytest.mark.parametrize(
        "mu,sigma,eps,expected",
        [(0.0, 1.0, 0.5, 0.5), (1.0, 2.0, -1.0, -1.0), (2.0, 1e-300, 3.0, 2.0)],
    )
    def test_examples(self, mu, sigma, eps, expected):
        sample = reparameterize_gaussian(np.array([mu]), np.array([sigma]), np.array([eps]))
        assert sample.z.data[0] == pytest.approx(expected)
        assert sample.eps[0] == eps

    @pytest.mark.parametrize("sigma", [0.0, -1.0])
    def test_nonpositive_sigma(self, sigma):
        with pytest.raises(DomainError):
            reparameterize_gaussian(np.zeros(2), np.array([1.0, sigma]), np.zeros(2))

    def test_gradient_reaches_mu_and_sigma_only(self):
        mu = Tensor(np.array([0.3, -1.0]), requires_grad=True)
        sigma = Tensor(np.array([0.5, 2.0]), requires_grad=True)
        eps = np.array([1.5, -0.25])
        reparameterize_gaussian(mu, sigma, eps).z.sum().backward()
        np.testing.assert_array_equal(mu.grad, [1.0, 1.0])
        np.testing.assert_array_equal(sigma.grad, eps)

    def test_from_logvar_matches_sigma_form(self, rng):
        mu, logvar, eps = rng.normal(size=(3, 5))
        via_logvar = reparameterize_from_logvar(Tensor(mu), Tensor(logvar), eps).z.data
        via_sigma = reparameterize_gaussian(mu, np.exp(logvar / 2), eps).z.data
        np.testing.assert_allclose(via_logvar, via_sigma, rtol=1e-12)

    def test_underflowing_variance_gives_mean(self):
        sample = reparameterize_from_logvar(Tensor([2.0]), Tensor([-2000.0]), np.array([5.0]))
        assert sample.z.item() == 2.0


class TestClosedFormKL:
    @pytest.mark.parametrize(
        "mu,logvar,expected",
        [
            ([0.0, 0.0, 0.0], [0.0, 0.0, 0.0], 0.0),
            ([1.0], [0.0], 0.5),
            ([0.0], [1.0], (np.e - 2.0) / 2.0),
        ],
    )
    def test_examples(self, mu, logvar, expected):
        assert kl_gaussian_closed_form(np.array(mu), np.array(logvar)).item() == pytest.approx(
            expected, abs=1e-12
        )

    def test_batched_input_gives_one_value_per_instance(self):
        kl = kl_gaussian_closed_form(np.array([[0.0], [1.0]]), np.zeros((2, 1)))
        np.testing.assert_allclose(kl.data, [0.0, 0.5])

    def test_overflow_names_coordinate(self):
        with pytest.raises(NonFiniteError) as exc_info:
            kl_gaussian_closed_form(np.zeros(3), np.array([0.0, 1000.0, 0.0]))
        assert exc_info.value.index == 1
        assert exc_info.value.term == "kl_gaussian"

    def test_nonnegative(self, rng):
        kl = kl_gaussian_closed_form(rng.normal(size=(50, 6)), rng.normal(size=(50, 6)))
        assert np.all(kl.data >= 0.0)

    def test_permutation_invariance(self, rng):
        mu, logvar = rng.normal(size=(2, 8))
        order = rng.permutation(8)
        assert kl_gaussian_closed_form(mu, logvar).item() == pytest.approx(
            kl_gaussian_closed_form(mu[order], logvar[order]).item(), rel=1e-14
        )

    def test_gradients(self, rng):
        mu, logvar = rng.normal(size=(2, 2, 4))
        assert max_grad_violation(lambda m, lv: kl_gaussian_closed_form(m, lv).sum(), [mu, logvar]) <= 1.0

    def test_matches_monte_carlo_estimate(self):
        rng = np.random.default_rng(21)
        mu = rng.normal(size=6)
        logvar = rng.normal(scale=0.5, size=6)
        sigma = np.exp(logvar / 2)
        eps = rng.standard_normal(size=(100_000, 6))
        z = mu + sigma * eps
        log_q = -0.5 * (eps**2 + logvar + np.log(2 * np.pi)).sum(axis=1)
        log_p = -0.5 * (z**2 + np.log(2 * np.pi)).sum(axis=1)
        draws = log_q - log_p
        standard_error = draws.std(ddof=1) / np.sqrt(len(draws))
        exact = kl_gaussian_closed_form(mu, logvar).item()
        assert abs(draws.mean() - exact) <= 3 * standard_error
