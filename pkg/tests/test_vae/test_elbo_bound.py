import numpy as np
import pytest
from scipy.stats import multivariate_normal

from lpad.diffcore.ops.linear import linear
from lpad.priors.gaussian import kl_gaussian_closed_form, reparameterize_gaussian

DATA_DIM, LATENT_DIM, NOISE_STD, SAMPLES = 5, 2, 0.5, 4000


def log_likelihood(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> float:
    """Exact log p(x) of z ~ N(0, I), x | z ~ N(weight @ z + bias, NOISE_STD**2 I)."""
    covariance = weight @ weight.T + NOISE_STD**2 * np.eye(DATA_DIM)
    return float(multivariate_normal(mean=bias, cov=covariance).logpdf(x))


def elbo_estimate(x, weight, bias, mu, sigma, rng) -> tuple[float, float]:
    """Monte Carlo ELBO with the closed-form KL; returns the mean and its standard error."""
    eps = rng.standard_normal((SAMPLES, LATENT_DIM))
    sample = reparameterize_gaussian(np.broadcast_to(mu, eps.shape), np.broadcast_to(sigma, eps.shape), eps)
    residual = x - linear(sample.z, weight, bias).data
    log_px_z = -0.5 * (DATA_DIM * np.log(2.0 * np.pi * NOISE_STD**2) + (residual**2).sum(axis=1) / NOISE_STD**2)
    kl = float(kl_gaussian_closed_form(mu, 2.0 * np.log(sigma)).data)
    terms = log_px_z - kl
    return float(terms.mean()), float(terms.std(ddof=1) / np.sqrt(SAMPLES))


def toy(seed: int):
    rng = np.random.default_rng([seed, 7])
    weight = rng.normal(size=(DATA_DIM, LATENT_DIM))
    bias = rng.normal(size=DATA_DIM)
    x = weight @ rng.normal(size=LATENT_DIM) + bias + NOISE_STD * rng.normal(size=DATA_DIM)
    return rng, x, weight, bias


class TestLinearGaussianBound:
    @pytest.mark.parametrize("seed", range(20))
    def test_elbo_does_not_exceed_the_log_likelihood(self, seed):
        rng, x, weight, bias = toy(seed)
        mu = rng.normal(size=LATENT_DIM)
        sigma = rng.uniform(0.3, 1.5, size=LATENT_DIM)
        elbo, stderr = elbo_estimate(x, weight, bias, mu, sigma, rng)
        assert elbo <= log_likelihood(x, weight, bias) + 3.0 * stderr

    @pytest.mark.parametrize("seed", range(5))
    def test_exact_posterior_closes_the_gap(self, seed):
        rng = np.random.default_rng([seed, 8])
        # orthogonal columns keep the true posterior factorized
        basis, _ = np.linalg.qr(rng.normal(size=(DATA_DIM, LATENT_DIM)))
        scales = rng.uniform(0.5, 2.0, size=LATENT_DIM)
        weight = basis * scales
        bias = rng.normal(size=DATA_DIM)
        x = rng.normal(size=DATA_DIM)

        variance = 1.0 / (1.0 + scales**2 / NOISE_STD**2)
        mu = variance * (weight.T @ (x - bias)) / NOISE_STD**2
        elbo, stderr = elbo_estimate(x, weight, bias, mu, np.sqrt(variance), rng)
        assert elbo == pytest.approx(log_likelihood(x, weight, bias), abs=3.0 * stderr + 1e-9)
