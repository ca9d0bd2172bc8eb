from dataclasses import dataclass

import numpy as np

from ..utils.common import ContractError, InsufficientHistoryError


@dataclass(frozen=True)
class MotionSequence:
    """(F, J, 3) millimetre coordinates sampled at `fps`."""

    frames: np.ndarray
    fps: float

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[2] != 3:
            raise ContractError(f"frames must be (F, J, 3), got {frames.shape}")
        if frames.shape[0] < 1:
            raise ContractError("a motion sequence needs at least one frame")
        if self.fps <= 0:
            raise ContractError(f"fps must be positive, got {self.fps}")
        object.__setattr__(self, "frames", frames)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def num_joints(self) -> int:
        return self.frames.shape[1]

    def __len__(self) -> int:
        return self.num_frames


@dataclass(frozen=True)
class SubSequenceBank:
    """
    Query window (last M frames), N key windows of M frames and N value
    windows of M+T frames; key i is the first M frames of value i.
    """

    query: np.ndarray    # (M, J, 3)
    keys: np.ndarray     # (N, M, J, 3)
    values: np.ndarray   # (N, M+T, J, 3)
    starts: np.ndarray   # (N,)

    @property
    def size(self) -> int:
        return self.keys.shape[0]


def window_count(num_frames: int, M: int, T: int) -> int:
    return num_frames - M - T + 1


def extract_windows(frames: np.ndarray, M: int, T: int) -> SubSequenceBank:
    frames = frames.frames if isinstance(frames, MotionSequence) else np.asarray(frames, dtype=np.float64)
    if M < 1 or T < 1:
        raise ContractError(f"window lengths must be positive (M={M}, T={T})")
    num_frames = frames.shape[0]
    count = window_count(num_frames, M, T)
    if count < 1:
        raise InsufficientHistoryError(
            f"{num_frames} observed frames cannot supply a window of M + T = {M + T}"
        )

    starts = np.arange(count)
    values = np.stack([frames[s:s + M + T] for s in starts])
    return SubSequenceBank(
        query=frames[num_frames - M:],
        keys=values[:, :M],
        values=values,
        starts=starts,
    )
