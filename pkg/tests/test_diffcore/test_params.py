import numpy as np
import pytest

from lpad.core.exceptions import ConfigurationError
from lpad.diffcore.params import Adam, ParamStore
from lpad.diffcore.tensor import Parameter


def test_duplicate_names_are_rejected():
    store = ParamStore([("w", Parameter(np.zeros(2)))])
    with pytest.raises(ConfigurationError):
        store.add("w", Parameter(np.zeros(2)))


def test_state_dict_round_trip():
    store = ParamStore([("w", Parameter(np.arange(3.0))), ("b", Parameter(np.ones(1)))])
    state = store.state_dict()
    store["w"].data[...] = 0.0
    store.load_state_dict(state)
    np.testing.assert_array_equal(store["w"].data, np.arange(3.0))
    assert store.num_values() == 4


def test_load_rejects_wrong_shape():
    store = ParamStore([("w", Parameter(np.zeros(3)))])
    with pytest.raises(ConfigurationError):
        store.load_state_dict({"w": np.zeros(4)})


def test_load_rejects_missing_name():
    store = ParamStore([("w", Parameter(np.zeros(3)))])
    with pytest.raises(ConfigurationError):
        store.load_state_dict({})


class TestAdam:
    def test_moments_mirror_parameter_shapes(self):
        store = ParamStore([("w", Parameter(np.zeros((2, 3)))), ("b", Parameter(np.zeros(3)))])
        adam = Adam(store)
        assert adam.m["w"].shape == (2, 3)
        assert adam.v["b"].shape == (3,)

    def test_first_step_moves_by_lr(self):
        # With bias correction the first update is lr * sign(grad).
        param = Parameter(np.array([1.0, -1.0]))
        adam = Adam(ParamStore([("p", param)]), lr=0.1)
        param.grad = np.array([2.0, -0.5])
        adam.step()
        np.testing.assert_allclose(param.data, [0.9, -0.9], atol=1e-7)
        assert adam.step_count == 1

    def test_minimizes_a_quadratic(self):
        param = Parameter(np.array([3.0, -2.0]))
        adam = Adam(ParamStore([("p", param)]), lr=0.05)
        for _ in range(2000):
            adam.zero_grad()
            (param * param).sum().backward()
            adam.step()
        np.testing.assert_allclose(param.data, 0.0, atol=5e-2)

    def test_parameters_without_gradient_are_untouched(self):
        moving, frozen = Parameter(np.ones(2)), Parameter(np.ones(2))
        adam = Adam(ParamStore([("moving", moving), ("frozen", frozen)]), lr=0.1)
        moving.grad = np.ones(2)
        adam.step()
        np.testing.assert_array_equal(frozen.data, np.ones(2))
        np.testing.assert_array_equal(adam.m["frozen"], np.zeros(2))

    def test_state_dict_round_trip_and_reset(self):
        param = Parameter(np.ones(2))
        adam = Adam(ParamStore([("p", param)]))
        param.grad = np.ones(2)
        adam.step()
        state = adam.state_dict()
        fresh = Adam(ParamStore([("p", Parameter(np.ones(2)))]))
        fresh.load_state_dict(state)
        assert fresh.step_count == 1
        np.testing.assert_array_equal(fresh.m["p"], adam.m["p"])
        fresh.reset()
        assert fresh.step_count == 0
        np.testing.assert_array_equal(fresh.v["p"], np.zeros(2))

    @pytest.mark.parametrize("kwargs", [{"lr": 0.0}, {"betas": (0.9, 1.0)}])
    def test_invalid_settings(self, kwargs):
        with pytest.raises(ConfigurationError):
            Adam(ParamStore(), **kwargs)
