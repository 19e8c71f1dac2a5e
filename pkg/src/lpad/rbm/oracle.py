"""
Exact partition function and state distribution of small RBMs by enumeration.

States are indexed by the integer whose binary digits are the visible units
followed by the hidden units, most significant first.
"""

from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from lpad.core.exceptions import EnumerationLimitError, ShapeError
from lpad.rbm.prior import RbmPrior
from lpad.rbm.sampling import energy_np

MAX_ENUMERATED_UNITS = 20


class OracleResult(NamedTuple):
    """``log_z`` plus the probability of every joint state, in :func:`state_index` order."""

    log_z: float
    distribution: np.ndarray


def _binary_states(units: int) -> np.ndarray:
    codes = np.arange(2**units)[:, None]
    shifts = np.arange(units - 1, -1, -1)[None, :]
    return ((codes >> shifts) & 1).astype(float)


def exact_oracle(params: RbmPrior) -> OracleResult:
    """Enumerates all ``2 ** (K + L)`` joint states.

    Raises:
        EnumerationLimitError: If ``K + L`` exceeds 20.
    """
    visible, hidden = params.visible, params.hidden
    if visible + hidden > MAX_ENUMERATED_UNITS:
        raise EnumerationLimitError(
            f"exact enumeration needs K + L <= {MAX_ENUMERATED_UNITS}, got {visible + hidden}"
        )
    states = _binary_states(visible + hidden)
    neg_energy = -energy_np(states[:, :visible], states[:, visible:], params)
    log_z = float(logsumexp(neg_energy))
    return OracleResult(log_z=log_z, distribution=np.exp(neg_energy - log_z))


def state_index(v: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Joint-state indices of binary rows ``v`` ``(C, K)`` and ``h`` ``(C, L)``."""
    bits = np.concatenate([np.atleast_2d(v), np.atleast_2d(h)], axis=1).astype(np.int64)
    weights = 1 << np.arange(bits.shape[1] - 1, -1, -1, dtype=np.int64)
    return bits @ weights


def empirical_distribution(indices: np.ndarray, units: int) -> np.ndarray:
    """Relative frequency of each joint state among ``indices``."""
    counts = np.bincount(np.asarray(indices, dtype=np.int64), minlength=2**units)
    return counts / counts.sum()


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """Total-variation distance ``0.5 * sum |p - q|``."""
    if p.shape != q.shape:
        raise ShapeError("total_variation", "distributions differ in size", (p.shape, q.shape))
    return float(0.5 * np.abs(p - q).sum())
