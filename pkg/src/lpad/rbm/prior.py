"""
RBM prior parameters, topologies, and persistent fantasy chains.

The prior is an RBM over the latent vector. Two wirings are supported:

* ``bipartite_latent_space``: the latent vector is split into two halves that
  act as the visible and hidden layers (``K = L = latent_dim / 2``).
* ``augmented_positive_phase``: the whole latent vector is the visible layer and
  an equally sized hidden layer is sampled from it (``K = L = latent_dim``).
"""

from enum import Enum
from typing import Optional

import numpy as np

from lpad.core.base import Module
from lpad.core.exceptions import ConfigurationError, ShapeError
from lpad.diffcore.tensor import Parameter


class Topology(str, Enum):
    """How the RBM is wired over the latent vector."""

    BIPARTITE_LATENT_SPACE = "bipartite_latent_space"
    AUGMENTED_POSITIVE_PHASE = "augmented_positive_phase"

    @classmethod
    def get_all_values(cls) -> set[str]:
        return {kind.value for kind in cls}


class PositivePhaseKind(str, Enum):
    """Variable types used in the augmented positive phase.

    * CONTINUOUS_VISIBLE_DISCRETE_HIDDEN: Relaxed visible units, hidden units
      drawn by one hard Gibbs half-step.

    * CONTINUOUS_VISIBLE_CONTINUOUS_HIDDEN: Hidden units set to their
      conditional probabilities.

    * DISCRETE_VISIBLE_DISCRETE_HIDDEN: Visible units hardened by a Bernoulli
      draw before sampling the hidden units.
    """

    CONTINUOUS_VISIBLE_DISCRETE_HIDDEN = "continuous_visible_discrete_hidden"
    CONTINUOUS_VISIBLE_CONTINUOUS_HIDDEN = "continuous_visible_continuous_hidden"
    DISCRETE_VISIBLE_DISCRETE_HIDDEN = "discrete_visible_discrete_hidden"

    @classmethod
    def get_all_values(cls) -> set[str]:
        return {kind.value for kind in cls}


def layer_sizes(latent_dim: int, topology: Topology) -> tuple[int, int]:
    """Returns ``(K, L)`` for a latent size and topology.

    Raises:
        ConfigurationError: If the bipartite topology gets an odd latent size.
    """
    topology = Topology(topology)
    if topology == Topology.BIPARTITE_LATENT_SPACE:
        if latent_dim % 2:
            raise ConfigurationError(
                f"latent_dim must be even for the bipartite topology, got {latent_dim}"
            )
        return latent_dim // 2, latent_dim // 2
    return latent_dim, latent_dim


class RbmPrior(Module):
    """RBM parameters: weights ``W`` ``(K, L)``, visible bias ``a`` ``(K,)``, hidden bias ``b`` ``(L,)``.

    Args:
        visible (int): ``K``.
        hidden (int): ``L``.
        topology (Topology): Wiring over the latent vector.
        rng (Optional[np.random.Generator]): Source of the initial weights,
            drawn from ``U(-0.01, 0.01)``. Biases start at zero.
    """

    def __init__(
        self,
        visible: int,
        hidden: int,
        topology: Topology = Topology.AUGMENTED_POSITIVE_PHASE,
        rng: Optional[np.random.Generator] = None,
    ):
        super().__init__()
        if visible <= 0 or hidden <= 0:
            raise ConfigurationError(
                f"RBM layer sizes must be positive, got visible={visible}, hidden={hidden}"
            )
        rng = rng if rng is not None else np.random.default_rng(2)
        self.topology = Topology(topology)
        self.W = Parameter(rng.uniform(-0.01, 0.01, size=(visible, hidden)))
        self.a = Parameter(np.zeros(visible))
        self.b = Parameter(np.zeros(hidden))

    @classmethod
    def from_arrays(cls, W, a, b, topology: Topology = Topology.AUGMENTED_POSITIVE_PHASE) -> "RbmPrior":
        """Builds a prior with the given parameter values."""
        W = np.asarray(W, dtype=float)
        if W.ndim != 2:
            raise ShapeError("rbm", "W must be a matrix", W.shape)
        prior = cls(W.shape[0], W.shape[1], topology)
        prior.W.data[...] = W
        prior.a.data[...] = np.asarray(a, dtype=float).reshape(W.shape[0])
        prior.b.data[...] = np.asarray(b, dtype=float).reshape(W.shape[1])
        return prior

    @property
    def visible(self) -> int:
        return self.W.shape[0]

    @property
    def hidden(self) -> int:
        return self.W.shape[1]

    def forward(self, zv, zh):
        from lpad.rbm.sampling import energy

        return energy(zv, zh, self)


class RbmChains:
    """Persistent fantasy states of the negative phase.

    Attributes:
        v_states (np.ndarray): Binary visible states ``(C, K)``.
        h_states (np.ndarray): Binary hidden states ``(C, L)``.
        sweep_count (int): Total block-Gibbs sweeps performed so far.
    """

    def __init__(self, v_states: np.ndarray, h_states: np.ndarray, sweep_count: int = 0):
        v_states = np.asarray(v_states, dtype=float)
        h_states = np.asarray(h_states, dtype=float)
        if v_states.ndim != 2 or h_states.ndim != 2 or len(v_states) != len(h_states):
            raise ShapeError(
                "rbm_chains",
                "states must be (C, K) and (C, L) with the same C",
                (v_states.shape, h_states.shape),
            )
        self.v_states = v_states
        self.h_states = h_states
        self.sweep_count = int(sweep_count)

    @classmethod
    def zeros(cls, count: int, visible: int, hidden: int) -> "RbmChains":
        """Chains initialized to the all-zero state."""
        return cls(np.zeros((count, visible)), np.zeros((count, hidden)))

    @property
    def count(self) -> int:
        return len(self.v_states)

    def copy(self) -> "RbmChains":
        return RbmChains(self.v_states.copy(), self.h_states.copy(), self.sweep_count)

    def state_dict(self) -> dict[str, np.ndarray]:
        return {
            "v_states": self.v_states.copy(),
            "h_states": self.h_states.copy(),
            "sweep_count": np.asarray(self.sweep_count, dtype=np.int64),
        }

    @classmethod
    def from_state_dict(cls, state: dict[str, np.ndarray]) -> "RbmChains":
        return cls(state["v_states"], state["h_states"], int(state["sweep_count"]))

    def __repr__(self) -> str:
        return (
            f"RbmChains(count={self.count}, visible={self.v_states.shape[1]}, "
            f"hidden={self.h_states.shape[1]}, sweep_count={self.sweep_count})"
        )
