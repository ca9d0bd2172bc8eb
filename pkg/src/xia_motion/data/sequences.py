"""
Couple sequences, the three evaluation splits and test sub-sequence sampling.

Aerial composition of the recordings:
    A1..A7   performed by both couples (common aerials)
    A8..A13  couple 1 only
    A14..A16 couple 2 only
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..motion import MotionSequence
from ..utils.common import ContractError, InsufficientHistoryError

logger = logging.getLogger(__name__)

COMMON_AERIALS = tuple(range(1, 8))
COUPLE_AERIALS = {
    1: COMMON_AERIALS + tuple(range(8, 14)),
    2: COMMON_AERIALS + tuple(range(14, 17)),
}
PERSONS = ("leader", "follower")


def aerial_label(aerial: int) -> str:
    return f"A{aerial}"


@dataclass(frozen=True)
class CoupleSequence:
    seq_id: str
    leader: MotionSequence
    follower: MotionSequence
    aerial: int
    couple: int
    rep: int

    def __post_init__(self):
        if self.leader.frames.shape != self.follower.frames.shape:
            raise ContractError(
                f"sequence {self.seq_id}: leader {self.leader.frames.shape} and "
                f"follower {self.follower.frames.shape} differ in shape")
        if self.leader.fps != self.follower.fps:
            raise ContractError(f"sequence {self.seq_id}: leader and follower fps differ")
        if self.couple not in COUPLE_AERIALS:
            raise ContractError(f"sequence {self.seq_id}: couple must be 1 or 2, got {self.couple}")

    @property
    def fps(self) -> float:
        return self.leader.fps

    @property
    def num_frames(self) -> int:
        return self.leader.num_frames

    @property
    def num_joints(self) -> int:
        return self.leader.num_joints

    @property
    def label(self) -> str:
        return aerial_label(self.aerial)


class SplitKind(str, Enum):
    SA = "SA"   # single aerial
    CA = "CA"   # common aerials
    EA = "EA"   # extra aerials


class SplitSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: SplitKind
    aerial: Optional[int] = None

    def describe(self) -> str:
        return f"{self.kind.value}({aerial_label(self.aerial)})" if self.kind == SplitKind.SA else self.kind.value


def make_split(dataset: Sequence[CoupleSequence], spec: SplitSpec
               ) -> Tuple[List[CoupleSequence], List[CoupleSequence]]:
    if spec.kind == SplitKind.SA:
        if spec.aerial not in COMMON_AERIALS:
            raise ContractError(
                f"single-aerial split needs a common aerial {aerial_label(1)}..{aerial_label(7)}, "
                f"got {spec.aerial}")
        train = [s for s in dataset if s.couple == 2 and s.aerial == spec.aerial]
        test = [s for s in dataset if s.couple == 1 and s.aerial == spec.aerial]
    elif spec.kind == SplitKind.CA:
        train = [s for s in dataset if s.couple == 2 and s.aerial in COMMON_AERIALS]
        test = [s for s in dataset if s.couple == 1 and s.aerial in COMMON_AERIALS]
    else:
        train = [s for s in dataset if s.aerial in COMMON_AERIALS]
        test = [s for s in dataset if s.aerial not in COMMON_AERIALS]

    shared = {s.seq_id for s in train} & {s.seq_id for s in test}
    if shared:
        raise ContractError(f"split {spec.describe()} shares sequences {sorted(shared)}")
    logger.info(f"Split {spec.describe()}: {len(train)} train / {len(test)} test sequences")
    return train, test


@dataclass(frozen=True)
class EvalWindow:
    """One test sub-sequence: in_len observed plus out_len future frames per person."""

    seq_id: str
    aerial: int
    start: int
    leader: np.ndarray     # (in_len + out_len, J, 3)
    follower: np.ndarray

    @property
    def label(self) -> str:
        return aerial_label(self.aerial)


def subsequence_starts(num_frames: int, count: int, length: int, seed: int = 0) -> np.ndarray:
    """
    Evenly spaced window starts with one seeded offset shared by all of them.
    Every start is used when there are no more than `count` of them.
    """
    if count < 1:
        raise ContractError(f"count must be positive, got {count}")
    available = num_frames - length + 1
    if available < 1:
        raise InsufficientHistoryError(f"{num_frames} frames cannot supply a window of {length}")
    if available <= count:
        return np.arange(available)
    stride = available / count
    offset = np.random.default_rng(seed).uniform(0.0, stride)
    return np.floor(offset + stride * np.arange(count)).astype(int)


def sample_test_subsequences(seq: CoupleSequence, count: int, in_len: int, out_len: int,
                             seed: int = 0) -> List[EvalWindow]:
    length = in_len + out_len
    starts = subsequence_starts(seq.num_frames, count, length, seed)
    return [
        EvalWindow(
            seq_id=seq.seq_id,
            aerial=seq.aerial,
            start=int(s),
            leader=seq.leader.frames[s:s + length],
            follower=seq.follower.frames[s:s + length],
        )
        for s in starts
    ]


def downsample(seq: Union[CoupleSequence, MotionSequence], factor: int
               ) -> Union[CoupleSequence, MotionSequence]:
    if factor < 1:
        raise ContractError(f"downsampling factor must be >= 1, got {factor}")
    if isinstance(seq, MotionSequence):
        return MotionSequence(seq.frames[::factor], seq.fps / factor)
    return CoupleSequence(
        seq_id=seq.seq_id,
        leader=downsample(seq.leader, factor),
        follower=downsample(seq.follower, factor),
        aerial=seq.aerial,
        couple=seq.couple,
        rep=seq.rep,
    )
