from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..utils.common import ContractError

# Normalization anchors every skeleton must carry.
ANCHOR_JOINTS = ("lhip", "rhip", "neck")


@dataclass(frozen=True)
class Skeleton:
    """Joint naming, bone topology and left/right pairing of a pose format."""

    joint_names: Tuple[str, ...]
    bones: Tuple[Tuple[int, int], ...] = ()
    _index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {name: i for i, name in enumerate(self.joint_names)}
        if len(index) != len(self.joint_names):
            raise ContractError("joint names must be unique")
        missing = [name for name in ANCHOR_JOINTS if name not in index]
        if missing:
            raise ContractError(f"skeleton lacks normalization anchors {missing}")
        if len(self.joint_names) < 4:
            raise ContractError("a skeleton needs at least 4 joints")
        object.__setattr__(self, "_index", index)

    @property
    def num_joints(self) -> int:
        return len(self.joint_names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ContractError(f"unknown joint {name!r}") from None

    def mirror_permutation(self) -> List[int]:
        """Joint order after swapping every l*/r* pair (unpaired joints stay)."""
        perm = []
        for name in self.joint_names:
            if name.startswith("l") and "r" + name[1:] in self._index:
                perm.append(self._index["r" + name[1:]])
            elif name.startswith("r") and "l" + name[1:] in self._index:
                perm.append(self._index["l" + name[1:]])
            else:
                perm.append(self._index[name])
        return perm

    def bone_lengths(self, poses: np.ndarray) -> np.ndarray:
        """Bone lengths of (..., J, 3) poses, shape (..., n_bones)."""
        parents = [p for p, _ in self.bones]
        children = [c for _, c in self.bones]
        return np.linalg.norm(poses[..., children, :] - poses[..., parents, :], axis=-1)


# 18 joints: three on the head, the neck, then shoulders, elbows, wrists,
# hips, knees, heels and toes on both sides.
EXPI_JOINTS = (
    "fhead", "lhead", "rhead", "neck",
    "lshoulder", "rshoulder", "lelbow", "relbow", "lwrist", "rwrist",
    "lhip", "rhip", "lknee", "rknee", "lheel", "rheel", "ltoes", "rtoes",
)

_EXPI_BONES = (
    ("neck", "fhead"), ("neck", "lhead"), ("neck", "rhead"),
    ("neck", "lshoulder"), ("neck", "rshoulder"),
    ("lshoulder", "lelbow"), ("rshoulder", "relbow"),
    ("lelbow", "lwrist"), ("relbow", "rwrist"),
    ("lhip", "rhip"), ("lhip", "neck"), ("rhip", "neck"),
    ("lhip", "lknee"), ("rhip", "rknee"),
    ("lknee", "lheel"), ("rknee", "rheel"),
    ("lheel", "ltoes"), ("rheel", "rtoes"),
)


def make_skeleton(joint_names: Sequence[str], bones: Sequence[Tuple[str, str]] = ()) -> Skeleton:
    index = {name: i for i, name in enumerate(joint_names)}
    return Skeleton(tuple(joint_names), tuple((index[a], index[b]) for a, b in bones))


EXPI_SKELETON = make_skeleton(EXPI_JOINTS, _EXPI_BONES)


def skeleton_for(num_joints: int) -> Skeleton:
    """The ExPI skeleton for 18 joints, otherwise anchors plus generic joints."""
    if num_joints == EXPI_SKELETON.num_joints:
        return EXPI_SKELETON
    if num_joints < 4:
        raise ContractError(f"need at least 4 joints, got {num_joints}")
    names = list(ANCHOR_JOINTS) + [f"j{i}" for i in range(num_joints - len(ANCHOR_JOINTS))]
    return make_skeleton(names)


def reflect_pose(pose: np.ndarray, skeleton: Skeleton = EXPI_SKELETON) -> np.ndarray:
    """Mirror (..., J, 3) poses through the x = 0 plane and swap left/right labels."""
    pose = np.asarray(pose, dtype=np.float64)
    mirrored = pose[..., skeleton.mirror_permutation(), :].copy()
    mirrored[..., 0] = -mirrored[..., 0]
    return mirrored
