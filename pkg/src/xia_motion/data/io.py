"""
Sequence CSV files and dataset directories.

One row per (frame, person, joint):
    seq_id,aerial,couple,rep,frame,person,joint,x,y,z
A dataset directory holds one such file per sequence plus `index.csv`
(seq_id,aerial,couple,rep,fps,file).
"""

import logging
import re
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
import pandas as pd

from ..core.config import settings
from ..motion import MotionSequence
from ..utils.common import DataError, ParseError, atomic_write
from .sequences import PERSONS, CoupleSequence

logger = logging.getLogger(__name__)

SEQUENCE_COLUMNS = ["seq_id", "aerial", "couple", "rep", "frame", "person", "joint", "x", "y", "z"]
INDEX_COLUMNS = ["seq_id", "aerial", "couple", "rep", "fps", "file"]
INDEX_NAME = "index.csv"

_INT_COLUMNS = ["aerial", "couple", "rep", "frame", "joint"]
_FLOAT_COLUMNS = ["x", "y", "z"]
_PANDAS_LINE = re.compile(r"line (\d+)")


def _line_of(frame: pd.DataFrame, row: int) -> int:
    # +1 for the header, +1 for one-based numbering
    return int(frame.index[row]) + 2


def _read_table(path: Path, columns: List[str]) -> pd.DataFrame:
    if path.stat().st_size == 0:
        return pd.DataFrame(columns=columns)
    try:
        table = pd.read_csv(path, dtype={"seq_id": str, "person": str, "file": str},
                            index_col=False, float_precision="round_trip", keep_default_na=False, na_values=[""])
    except pd.errors.ParserError as e:
        match = _PANDAS_LINE.search(str(e))
        raise ParseError(f"{path}: {e}", line=int(match.group(1)) if match else None) from None
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=columns)

    if list(table.columns) != columns:
        raise ParseError(f"{path}: expected header {','.join(columns)}, got {','.join(map(str, table.columns))}",
                         line=1)
    incomplete = table.isna().any(axis=1).to_numpy()
    if incomplete.any():
        row = int(np.argmax(incomplete))
        raise ParseError(f"{path}: expected {len(columns)} fields", line=_line_of(table, row))
    return table


def _coerce(table: pd.DataFrame, path: Path, columns: List[str], kind: str) -> None:
    for column in columns:
        if column not in table.columns:
            continue
        values = table[column]
        if kind == "int":
            numeric = pd.to_numeric(values, errors="coerce")
            bad = numeric.isna().to_numpy() | (numeric.to_numpy(dtype=float) % 1 != 0)
        else:
            if values.dtype.kind in "fi":
                table[column] = values.astype(np.float64)
                continue
            numeric = pd.to_numeric(values, errors="coerce")
            bad = numeric.isna().to_numpy()
        if bad.any():
            row = int(np.argmax(bad))
            raise ParseError(f"{path}: column {column} has non-numeric value {values.iloc[row]!r}",
                             line=_line_of(table, row))
        table[column] = numeric.astype(np.int64 if kind == "int" else np.float64)


def _sequence_from_rows(rows: pd.DataFrame, path: Path, fps: float) -> CoupleSequence:
    seq_id = rows["seq_id"].iloc[0]
    for column in ("aerial", "couple", "rep"):
        if rows[column].nunique() != 1:
            row = int(np.argmax((rows[column] != rows[column].iloc[0]).to_numpy()))
            raise ParseError(f"{path}: sequence {seq_id} has inconsistent {column}", line=_line_of(rows, row))

    unknown = ~rows["person"].isin(PERSONS).to_numpy()
    if unknown.any():
        row = int(np.argmax(unknown))
        raise ParseError(f"{path}: person must be leader or follower, got {rows['person'].iloc[row]!r}",
                         line=_line_of(rows, row))
    negative = ((rows["frame"] < 0) | (rows["joint"] < 0)).to_numpy()
    if negative.any():
        raise ParseError(f"{path}: negative frame or joint index", line=_line_of(rows, int(np.argmax(negative))))

    num_frames = int(rows["frame"].max()) + 1
    num_joints = int(rows["joint"].max()) + 1
    per_pose = rows.groupby(["frame", "person"], sort=False)["joint"].transform("size").to_numpy()
    short = per_pose != num_joints
    if short.any():
        raise ParseError(f"{path}: sequence {seq_id} has {per_pose[np.argmax(short)]} joints in a pose, "
                         f"expected {num_joints}", line=_line_of(rows, int(np.argmax(short))))
    duplicated = rows.duplicated(["frame", "person", "joint"]).to_numpy()
    if duplicated.any():
        raise ParseError(f"{path}: duplicate joint row", line=_line_of(rows, int(np.argmax(duplicated))))
    if len(rows) != num_frames * len(PERSONS) * num_joints:
        raise ParseError(f"{path}: sequence {seq_id} is missing frames", line=_line_of(rows, 0))

    coords = np.empty((len(PERSONS), num_frames, num_joints, 3))
    person = rows["person"].map({p: i for i, p in enumerate(PERSONS)}).to_numpy()
    coords[person, rows["frame"].to_numpy(), rows["joint"].to_numpy()] = rows[_FLOAT_COLUMNS].to_numpy()
    first = rows.iloc[0]
    return CoupleSequence(
        seq_id=str(seq_id),
        leader=MotionSequence(coords[0], fps),
        follower=MotionSequence(coords[1], fps),
        aerial=int(first["aerial"]),
        couple=int(first["couple"]),
        rep=int(first["rep"]),
    )


def load_sequences(path: Union[str, Path], fps: float = None) -> List[CoupleSequence]:
    """Parse a sequence CSV; an empty file yields no sequences."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"sequence file {path} does not exist")
    fps = float(fps or settings.TARGET_FPS)
    table = _read_table(path, SEQUENCE_COLUMNS)
    if table.empty:
        return []
    _coerce(table, path, _INT_COLUMNS, "int")
    _coerce(table, path, _FLOAT_COLUMNS, "float")

    sequences = [_sequence_from_rows(rows, path, fps)
                 for _, rows in table.groupby("seq_id", sort=False)]
    joint_counts = {s.num_joints for s in sequences}
    if len(joint_counts) > 1:
        raise ParseError(f"{path}: sequences disagree on the joint count {sorted(joint_counts)}")
    logger.debug(f"Loaded {len(sequences)} sequences from {path}")
    return sequences


def sequences_frame(sequences: Sequence[CoupleSequence]) -> pd.DataFrame:
    """Rows ordered by sequence, frame, person (leader first) and joint."""
    parts = []
    for seq in sequences:
        num_frames, num_joints = seq.num_frames, seq.num_joints
        coords = np.stack([seq.leader.frames, seq.follower.frames], axis=1).reshape(-1, 3)
        parts.append(pd.DataFrame({
            "seq_id": seq.seq_id,
            "aerial": seq.aerial,
            "couple": seq.couple,
            "rep": seq.rep,
            "frame": np.repeat(np.arange(num_frames), len(PERSONS) * num_joints),
            "person": np.tile(np.repeat(PERSONS, num_joints), num_frames),
            "joint": np.tile(np.arange(num_joints), len(PERSONS) * num_frames),
            "x": coords[:, 0],
            "y": coords[:, 1],
            "z": coords[:, 2],
        }))
    if not parts:
        return pd.DataFrame(columns=SEQUENCE_COLUMNS)
    return pd.concat(parts, ignore_index=True)[SEQUENCE_COLUMNS]


def save_sequences(path: Union[str, Path], sequences: Sequence[CoupleSequence]) -> None:
    table = sequences_frame(sequences)
    with atomic_write(path) as handle:
        table.to_csv(handle, index=False, lineterminator="\n")


def sequence_file_name(seq: CoupleSequence) -> str:
    return f"{seq.seq_id}.csv"


def save_dataset(data_dir: Union[str, Path], sequences: Sequence[CoupleSequence]) -> Path:
    """One CSV per sequence plus the index; returns the index path."""
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for seq in sequences:
        name = sequence_file_name(seq)
        save_sequences(data_dir / name, [seq])
        rows.append((seq.seq_id, seq.aerial, seq.couple, seq.rep, seq.fps, name))
    index_path = data_dir / INDEX_NAME
    with atomic_write(index_path) as handle:
        pd.DataFrame(rows, columns=INDEX_COLUMNS).to_csv(handle, index=False, lineterminator="\n")
    logger.info(f"Wrote {len(rows)} sequences to {data_dir}")
    return index_path


def load_dataset(data_dir: Union[str, Path]) -> List[CoupleSequence]:
    data_dir = Path(data_dir)
    index_path = data_dir / INDEX_NAME
    if not data_dir.is_dir():
        raise DataError(f"data directory {data_dir} does not exist")
    if not index_path.is_file():
        raise DataError(f"data directory {data_dir} has no {INDEX_NAME}")

    index = _read_table(index_path, INDEX_COLUMNS)
    _coerce(index, index_path, ["aerial", "couple", "rep"], "int")
    _coerce(index, index_path, ["fps"], "float")
    sequences = []
    for row in index.itertuples(index=False):
        file_path = data_dir / row.file
        loaded = load_sequences(file_path, fps=row.fps)
        matches = [s for s in loaded if s.seq_id == str(row.seq_id)]
        if not matches:
            raise DataError(f"{file_path} does not contain sequence {row.seq_id}")
        seq = matches[0]
        if (seq.aerial, seq.couple, seq.rep) != (row.aerial, row.couple, row.rep):
            raise DataError(f"{file_path}: labels of {row.seq_id} disagree with {INDEX_NAME}")
        sequences.append(seq)
    logger.info(f"Loaded {len(sequences)} sequences from {data_dir}")
    return sequences
