"""
Checkpoint files: a plain-text manifest followed by little-endian float64 blobs.

    XIA-CHECKPOINT 1
    meta <key> <value>
    param <name> <d0,d1,...> <byte offset into the blob section>
    end
    <raw bytes>
"""

import logging
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Mapping, Tuple, Union

import numpy as np

from ..utils.common import ContractError, ParseError, atomic_write

logger = logging.getLogger(__name__)

MAGIC = "XIA-CHECKPOINT 1"
_DTYPE = np.dtype("<f8")


def save_checkpoint(path: Union[str, Path], state: Mapping[str, np.ndarray],
                    metadata: Mapping[str, str] = None) -> None:
    lines = [MAGIC]
    for key, value in (metadata or {}).items():
        if any(ch.isspace() for ch in key) or "\n" in str(value):
            raise ContractError(f"metadata key/value not representable: {key!r}")
        lines.append(f"meta {key} {value}")

    offset = 0
    blobs = []
    for name, value in state.items():
        array = np.ascontiguousarray(value, dtype=_DTYPE)
        shape = ",".join(str(extent) for extent in array.shape)
        lines.append(f"param {name} {shape} {offset}")
        blob = array.tobytes()
        blobs.append(blob)
        offset += len(blob)
    lines.append("end")

    with atomic_write(path, "wb") as handle:
        handle.write(("\n".join(lines) + "\n").encode("ascii"))
        for blob in blobs:
            handle.write(blob)
    logger.info(f"Checkpoint written to {path} ({len(blobs)} tensors, {offset} bytes)")


def load_checkpoint(path: Union[str, Path]) -> Tuple["OrderedDict[str, np.ndarray]", Dict[str, str]]:
    raw = Path(path).read_bytes()
    metadata: Dict[str, str] = {}
    entries = []

    position = 0
    line_no = 0
    while True:
        end = raw.find(b"\n", position)
        if end < 0:
            raise ParseError("manifest is not terminated by 'end'", line_no + 1)
        line = raw[position:end].decode("ascii", errors="replace")
        position = end + 1
        line_no += 1

        if line_no == 1:
            if line != MAGIC:
                raise ParseError(f"not a checkpoint file (header {line!r})", 1)
            continue
        if line == "end":
            break

        kind, _, rest = line.partition(" ")
        if kind == "meta":
            key, _, value = rest.partition(" ")
            metadata[key] = value
        elif kind == "param":
            fields = rest.split(" ")
            if len(fields) != 3:
                raise ParseError(f"malformed param entry {line!r}", line_no)
            name, shape_text, offset_text = fields
            try:
                shape = tuple(int(x) for x in shape_text.split(",")) if shape_text else ()
                offset = int(offset_text)
            except ValueError:
                raise ParseError(f"malformed param entry {line!r}", line_no) from None
            entries.append((name, shape, offset))
        else:
            raise ParseError(f"unknown manifest entry {kind!r}", line_no)

    blob = raw[position:]
    state: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for name, shape, offset in entries:
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * _DTYPE.itemsize
        if offset + nbytes > len(blob):
            raise ParseError(f"parameter {name} runs past the end of the file")
        state[name] = np.frombuffer(blob, dtype=_DTYPE, count=count, offset=offset).reshape(shape).astype(np.float64)
    return state, metadata
