"""
CSV ingestion and export.

Schema: one header row, then one row per (instance, time step) with columns
``instance_id,time,<channel names...>,label``. Lines starting with ``#`` are
comments; exported files use them to carry the configuration snapshot.
"""

import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from lpad.core.exceptions import ParseError
from lpad.datapipe.dataset import ChannelKind, Dataset

logger = logging.getLogger(__name__)


class CsvSchema(BaseModel):
    """Column roles of a dataset CSV.

    ``channels=None`` takes every column that is not the id, time or label
    column, in file order.
    """

    model_config = ConfigDict(frozen=True)

    id_column: str = "instance_id"
    time_column: str = "time"
    label_column: str = "label"
    channels: Optional[tuple[str, ...]] = None
    binary_channels: tuple[str, ...] = ()


def _numeric(frame: pd.DataFrame, column: str) -> pd.Series:
    values = pd.to_numeric(frame[column], errors="coerce")
    bad = values.isna().to_numpy()
    if bad.any():
        row = int(np.flatnonzero(bad)[0]) + 1
        raise ParseError(
            f"non-numeric value {frame[column].iloc[row - 1]!r} in column '{column}'", row=row
        )
    return values


def load_csv(path: Union[str, Path], schema: Optional[CsvSchema] = None) -> Dataset:
    """Reads a long-format CSV into a :class:`Dataset`.

    Rows are grouped by instance id (instances ordered by id) and sorted by
    time within each instance.

    Raises:
        ParseError: For a missing column, a non-numeric cell, a missing or
            inconsistent label, or instances of different lengths. Row numbers
            count data rows from 1.
    """
    schema = schema or CsvSchema()
    try:
        frame = pd.read_csv(path, comment="#", dtype=str, keep_default_na=False, skip_blank_lines=True)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ParseError(f"cannot read '{path}': {exc}") from exc
    frame.columns = [c.strip() for c in frame.columns]

    if schema.label_column not in frame.columns:
        raise ParseError("label column absent")
    for column in (schema.id_column, schema.time_column):
        if column not in frame.columns:
            raise ParseError(f"{column} column absent")
    reserved = {schema.id_column, schema.time_column, schema.label_column}
    channels = list(schema.channels or [c for c in frame.columns if c not in reserved])
    missing = [c for c in channels if c not in frame.columns]
    if missing:
        raise ParseError(f"channel columns absent: {', '.join(missing)}")
    if not channels:
        raise ParseError("no channel columns")
    if frame.empty:
        raise ParseError("no data rows")

    empty_labels = (frame[schema.label_column].str.strip() == "").to_numpy()
    if empty_labels.any():
        raise ParseError("missing label", row=int(np.flatnonzero(empty_labels)[0]) + 1)

    ids = frame[schema.id_column].str.strip()
    numeric_ids = pd.to_numeric(ids, errors="coerce")
    if not numeric_ids.isna().any() and (numeric_ids % 1 == 0).all():
        ids = numeric_ids.astype(np.int64)
    times = _numeric(frame, schema.time_column)
    labels = _numeric(frame, schema.label_column)
    values = np.column_stack([_numeric(frame, c).to_numpy(dtype=float) for c in channels])

    table = pd.DataFrame({"id": ids, "time": times, "label": labels, "row": np.arange(1, len(frame) + 1)})
    table = table.sort_values(["id", "time"], kind="stable")
    lengths = table.groupby("id", sort=True).size()
    if lengths.nunique() > 1:
        expected = int(lengths.iloc[0])
        offender = lengths[lengths != expected].index[0]
        row = int(table.loc[table["id"] == offender, "row"].min())
        raise ParseError(
            f"instance {offender!r} has {int(lengths[offender])} time steps, expected {expected}",
            row=row,
        )
    instance_labels = table.groupby("id", sort=True)["label"].agg(["min", "max"])
    inconsistent = instance_labels[instance_labels["min"] != instance_labels["max"]]
    if len(inconsistent):
        offender = inconsistent.index[0]
        row = int(table.loc[table["id"] == offender, "row"].min())
        raise ParseError(f"instance {offender!r} has inconsistent labels", row=row)
    if not instance_labels["min"].isin([0, 1]).all():
        raise ParseError("labels must be 0 or 1")

    n, steps = len(lengths), int(lengths.iloc[0])
    ordered = values[table["row"].to_numpy() - 1]
    instances = ordered.reshape(n, steps, len(channels)).transpose(0, 2, 1)
    kinds = [
        ChannelKind.BINARY if c in schema.binary_channels else ChannelKind.CONTINUOUS
        for c in channels
    ]
    ds = Dataset(
        instances=instances,
        labels=instance_labels["min"].to_numpy(dtype=np.int64),
        instance_ids=lengths.index.to_numpy(),
        channel_names=channels,
        channel_kinds=kinds,
    )
    logger.info("Loaded %s from %s", ds, path)
    return ds


def export_csv(
    ds: Dataset, path: Union[str, Path], header_lines: Sequence[str] = ()
) -> Path:
    """Writes ``ds`` in the ingestion schema, preceded by ``# `` comment lines."""
    n, channels, steps = ds.instances.shape
    frame = pd.DataFrame(
        ds.instances.transpose(0, 2, 1).reshape(n * steps, channels), columns=ds.channel_names
    )
    frame.insert(0, "time", np.tile(np.arange(steps), n))
    frame.insert(0, "instance_id", np.repeat(ds.instance_ids, steps))
    frame["label"] = np.repeat(ds.labels, steps)
    write_table(frame, path, header_lines)
    logger.info("Wrote %d instances to %s", n, path)
    return Path(path)


def snapshot_lines(config: dict) -> list[str]:
    """``key = value`` lines of a flat configuration snapshot, sorted by key."""
    return [f"{key} = {value}" for key, value in sorted(config.items())]


def write_table(
    frame: pd.DataFrame,
    path: Union[str, Path],
    header_lines: Sequence[str] = (),
    float_format: Optional[str] = None,
) -> Path:
    """Writes ``frame`` as CSV after ``# `` comment lines. Every CSV artifact goes through here."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        for line in header_lines:
            handle.write(f"# {line}\n")
        frame.to_csv(handle, index=False, lineterminator="\n", float_format=float_format)
    return path
