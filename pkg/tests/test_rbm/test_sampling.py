import numpy as np
import pytest

from lpad.core.exceptions import ConfigurationError, DomainError, ShapeError
from lpad.diffcore.tensor import Tensor
from lpad.rbm.prior import RbmChains, RbmPrior, Topology, layer_sizes
from lpad.rbm.sampling import Direction, cond_probs, energy, energy_np, gibbs_step, pcd_update


class StubUniforms:
    """Returns the same value for every requested uniform."""

    def __init__(self, value: float):
        self.value = value

    def random(self, size):
        return np.full(size, self.value)


def example_prior() -> RbmPrior:
    return RbmPrior.from_arrays(W=[[0.5], [0.2]], a=[0.1, 0.3], b=[-0.2])


def zero_prior(visible: int, hidden: int) -> RbmPrior:
    return RbmPrior.from_arrays(np.zeros((visible, hidden)), np.zeros(visible), np.zeros(hidden))


class TestPrior:
    @pytest.mark.parametrize(
        "latent,topology,expected",
        [
            (64, Topology.BIPARTITE_LATENT_SPACE, (32, 32)),
            (64, Topology.AUGMENTED_POSITIVE_PHASE, (64, 64)),
            (5, Topology.AUGMENTED_POSITIVE_PHASE, (5, 5)),
        ],
    )
    def test_layer_sizes(self, latent, topology, expected):
        assert layer_sizes(latent, topology) == expected

    def test_odd_bipartite_latent(self):
        with pytest.raises(ConfigurationError):
            layer_sizes(7, Topology.BIPARTITE_LATENT_SPACE)

    def test_initial_weights_are_small_and_biases_zero(self):
        prior = RbmPrior(6, 4, rng=np.random.default_rng(0))
        assert np.abs(prior.W.data).max() <= 0.01
        np.testing.assert_array_equal(prior.a.data, np.zeros(6))
        np.testing.assert_array_equal(prior.b.data, np.zeros(4))

    def test_parameters_are_named(self):
        names = [name for name, _ in RbmPrior(2, 3).named_parameters()]
        assert names == ["W", "a", "b"]

    def test_chain_state_round_trip(self):
        chains = RbmChains(np.eye(3), np.ones((3, 2)), sweep_count=9)
        restored = RbmChains.from_state_dict(chains.state_dict())
        np.testing.assert_array_equal(restored.v_states, np.eye(3))
        assert restored.sweep_count == 9
        assert restored.count == 3

    def test_mismatched_chain_counts(self):
        with pytest.raises(ShapeError):
            RbmChains(np.zeros((3, 2)), np.zeros((4, 2)))


class TestEnergy:
    def test_all_zero_states(self):
        assert energy(np.zeros(2), np.zeros(1), example_prior()).item() == 0.0

    def test_hand_example(self):
        assert energy(np.array([1.0, 0.0]), np.array([1.0]), example_prior()).item() == pytest.approx(-0.4)

    def test_batched_matches_constant_energies(self, rng):
        prior = RbmPrior.from_arrays(rng.normal(size=(3, 2)), rng.normal(size=3), rng.normal(size=2))
        v = (rng.uniform(size=(5, 3)) < 0.5).astype(float)
        h = (rng.uniform(size=(5, 2)) < 0.5).astype(float)
        np.testing.assert_allclose(energy(v, h, prior).data, energy_np(v, h, prior), rtol=1e-12)

    def test_gradient_wrt_parameters(self):
        prior = example_prior()
        zv, zh = np.array([1.0, 0.0]), np.array([1.0])
        energy(zv, zh, prior).backward()
        np.testing.assert_allclose(prior.W.grad, -np.outer(zv, zh))
        np.testing.assert_allclose(prior.a.grad, -zv)
        np.testing.assert_allclose(prior.b.grad, -zh)

    def test_wrong_layer_size(self):
        with pytest.raises(ShapeError) as exc_info:
            energy(np.zeros(3), np.zeros(1), example_prior())
        assert exc_info.value.op == "energy"


class TestConditionals:
    @pytest.mark.parametrize("direction", sorted(Direction.get_all_values()))
    def test_zero_params(self, direction):
        given = np.ones(3)
        np.testing.assert_array_equal(cond_probs(given, zero_prior(3, 3), direction), np.full(3, 0.5))

    def test_hidden_given_visible_example(self):
        probs = cond_probs(np.array([1.0, 0.0]), example_prior(), Direction.HIDDEN_GIVEN_VISIBLE)
        assert probs[0] == pytest.approx(0.57444, abs=1e-5)

    def test_visible_given_hidden_example(self):
        probs = cond_probs(np.array([1.0]), example_prior(), Direction.VISIBLE_GIVEN_HIDDEN)
        np.testing.assert_allclose(probs, 1.0 / (1.0 + np.exp(-np.array([0.6, 0.5]))))

    def test_accepts_tensors(self):
        probs = cond_probs(Tensor([1.0, 0.0]), example_prior(), Direction.HIDDEN_GIVEN_VISIBLE)
        assert probs.shape == (1,)

    def test_wrong_conditioning_layer(self):
        with pytest.raises(ShapeError):
            cond_probs(np.zeros(1), example_prior(), Direction.HIDDEN_GIVEN_VISIBLE)


class TestGibbs:
    def test_tie_gives_zeros(self):
        chains = RbmChains(np.ones((4, 3)), np.ones((4, 2)))
        stepped = gibbs_step(chains, zero_prior(3, 2), StubUniforms(0.5))
        np.testing.assert_array_equal(stepped.v_states, np.zeros((4, 3)))
        np.testing.assert_array_equal(stepped.h_states, np.zeros((4, 2)))
        assert stepped.sweep_count == 1

    def test_zero_uniforms_give_ones(self):
        chains = RbmChains.zeros(4, 3, 2)
        stepped = gibbs_step(chains, example_prior_sized(3, 2), StubUniforms(0.0))
        np.testing.assert_array_equal(stepped.v_states, np.ones((4, 3)))
        np.testing.assert_array_equal(stepped.h_states, np.ones((4, 2)))

    def test_zero_sweeps_leave_chains_unchanged(self, rng):
        chains = RbmChains((rng.uniform(size=(5, 3)) < 0.5).astype(float), np.zeros((5, 2)), 7)
        updated = pcd_update(chains, zero_prior(3, 2), 0, rng)
        np.testing.assert_array_equal(updated.v_states, chains.v_states)
        np.testing.assert_array_equal(updated.h_states, chains.h_states)
        assert updated.sweep_count == 7

    def test_sweeps_compose(self):
        prior = RbmPrior(4, 3, rng=np.random.default_rng(5))
        prior.W.data *= 100.0
        chains = RbmChains.zeros(6, 4, 3)
        swept = pcd_update(chains, prior, 5, np.random.default_rng(9))
        stepwise = chains
        rng = np.random.default_rng(9)
        for _ in range(5):
            stepwise = gibbs_step(stepwise, prior, rng)
        np.testing.assert_array_equal(swept.v_states, stepwise.v_states)
        np.testing.assert_array_equal(swept.h_states, stepwise.h_states)
        assert swept.sweep_count == stepwise.sweep_count == 5

    def test_chains_persist_across_updates(self):
        prior = RbmPrior(4, 3, rng=np.random.default_rng(5))
        chains = RbmChains.zeros(6, 4, 3)
        once = pcd_update(chains, prior, 2, np.random.default_rng(1))
        twice = pcd_update(once, prior, 2, np.random.default_rng(2))
        assert twice.sweep_count == 4

    def test_negative_sweeps(self, rng):
        with pytest.raises(DomainError):
            pcd_update(RbmChains.zeros(2, 2, 2), zero_prior(2, 2), -1, rng)

    def test_replay_rerandomizes_a_share_of_visible_states(self):
        chains = RbmChains.zeros(10, 50, 2)
        replayed = pcd_update(chains, zero_prior(50, 2), 0, np.random.default_rng(0), replay_fraction=0.3)
        touched = np.any(replayed.v_states != 0.0, axis=1)
        assert touched.sum() == 3
        np.testing.assert_array_equal(replayed.h_states, chains.h_states)


def example_prior_sized(visible: int, hidden: int) -> RbmPrior:
    """Positive weights and biases, so every conditional probability is above 0."""
    return RbmPrior.from_arrays(np.full((visible, hidden), 0.1), np.full(visible, 0.1), np.full(hidden, 0.1))
