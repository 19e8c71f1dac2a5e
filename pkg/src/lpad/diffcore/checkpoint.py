"""
Versioned checkpoint files.

A checkpoint is an uncompressed ``.npz`` archive. The entry ``header`` holds the
version string ``LPAD-CKPT-1``; the remaining entries are grouped by prefix:

* ``param/<name>``: parameter values, stored at 64-bit.
* ``buffer/<name>``: batch-norm running statistics.
* ``optim/<key>``: optimizer moments and step counter.
* ``chains/<key>``: persistent RBM fantasy states and sweep counter.
* ``metadata``: a JSON document (config snapshot, seed, epoch).
"""

import json
import logging
from pathlib import Path
from typing import Any, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from lpad.core.exceptions import CheckpointError

logger = logging.getLogger(__name__)

CHECKPOINT_HEADER = "LPAD-CKPT-1"
_GROUPS = ("param", "buffer", "optim", "chains")


class Checkpoint(BaseModel):
    """In-memory contents of a checkpoint file."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    params: dict[str, np.ndarray] = Field(default_factory=dict)
    buffers: dict[str, np.ndarray] = Field(default_factory=dict)
    optim: dict[str, np.ndarray] = Field(default_factory=dict)
    chains: dict[str, np.ndarray] = Field(default_factory=dict)
    metadata: dict[str, Any] = Field(default_factory=dict)


def save_checkpoint(path: Union[str, Path], checkpoint: Checkpoint) -> Path:
    """Writes ``checkpoint`` to ``path`` and returns the path written.

    Float arrays are widened to 64-bit so that a 32-bit run can be resumed or
    evaluated at full precision.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    entries: dict[str, np.ndarray] = {"header": np.array(CHECKPOINT_HEADER)}
    sections = {
        "param": checkpoint.params,
        "buffer": checkpoint.buffers,
        "optim": checkpoint.optim,
        "chains": checkpoint.chains,
    }
    for group, section in sections.items():
        for name, value in section.items():
            array = np.asarray(value)
            if array.dtype.kind == "f":
                array = array.astype(np.float64)
            entries[f"{group}/{name}"] = array
    entries["metadata"] = np.array(json.dumps(checkpoint.metadata, sort_keys=True, default=str))
    with path.open("wb") as handle:
        np.savez(handle, **entries)
    logger.info("Checkpoint written to %s", path)
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """Reads a checkpoint written by :func:`save_checkpoint`.

    Raises:
        CheckpointError: If the file is unreadable, has no header, or carries
            a version other than ``LPAD-CKPT-1``.
    """
    path = Path(path)
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"Cannot read checkpoint '{path}': {exc}") from exc
    with archive:
        if "header" not in archive.files:
            raise CheckpointError(f"Checkpoint '{path}' has no header entry.")
        header = str(archive["header"])
        if header != CHECKPOINT_HEADER:
            raise CheckpointError(
                f"Checkpoint '{path}' has version '{header}', expected '{CHECKPOINT_HEADER}'."
            )
        groups: dict[str, dict[str, np.ndarray]] = {group: {} for group in _GROUPS}
        for key in archive.files:
            group, _, name = key.partition("/")
            if group in groups and name:
                groups[group][name] = archive[key]
        metadata = json.loads(str(archive["metadata"])) if "metadata" in archive.files else {}
    return Checkpoint(
        params=groups["param"],
        buffers=groups["buffer"],
        optim=groups["optim"],
        chains=groups["chains"],
        metadata=metadata,
    )
