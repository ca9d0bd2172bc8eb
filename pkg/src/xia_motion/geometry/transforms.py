"""
Rigid transforms, couple normalization and Procrustes alignment.

Poses are (J, 3) arrays in millimetres; sequences are (F, J, 3).
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..utils.common import ContractError, DegeneracyError
from .skeleton import EXPI_SKELETON, Skeleton

logger = logging.getLogger(__name__)

ORTHONORMAL_TOL = 1e-9
# Anchors are collinear below this triangle area (mm^2).
COLLINEAR_AREA_MM2 = 1e-6


@dataclass(frozen=True)
class RigidTransform:
    """x -> R x + t with R a proper rotation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=np.float64)
        translation = np.array(self.translation, dtype=np.float64).reshape(3)
        if rotation.shape != (3, 3):
            raise ContractError(f"rotation must be 3x3, got {rotation.shape}")
        if not np.allclose(rotation.T @ rotation, np.eye(3), atol=ORTHONORMAL_TOL, rtol=0):
            raise ContractError("rotation is not orthonormal")
        if abs(np.linalg.det(rotation) - 1.0) > ORTHONORMAL_TOL:
            raise ContractError("rotation has determinant != +1")
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def inverse(self) -> "RigidTransform":
        return RigidTransform(self.rotation.T, -self.rotation.T @ self.translation)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self after other."""
        return RigidTransform(self.rotation @ other.rotation,
                              self.rotation @ other.translation + self.translation)

    def as_matrix(self) -> np.ndarray:
        matrix = np.eye(4)
        matrix[:3, :3] = self.rotation
        matrix[:3, 3] = self.translation
        return matrix


def normalization_transform(pose: np.ndarray, skeleton: Skeleton = EXPI_SKELETON) -> RigidTransform:
    """
    Transform taking the hip-center to the origin, the hip-center -> left-hip
    direction to +x, and the neck into the XOZ half-plane with z > 0.
    """
    pose = np.asarray(pose, dtype=np.float64)
    lhip = pose[skeleton.index("lhip")]
    rhip = pose[skeleton.index("rhip")]
    neck = pose[skeleton.index("neck")]

    center = 0.5 * (lhip + rhip)
    to_left = lhip - center
    half_width = np.linalg.norm(to_left)
    if half_width == 0.0:
        raise DegeneracyError("hips coincide; normalization frame undefined")
    to_neck = neck - center
    area = 0.5 * np.linalg.norm(np.cross(to_left, to_neck))
    if area < COLLINEAR_AREA_MM2:
        raise DegeneracyError(f"hip-center, left hip and neck are collinear (area {area:.3g} mm^2)")

    x_axis = to_left / half_width
    z_axis = to_neck - np.dot(to_neck, x_axis) * x_axis
    z_axis /= np.linalg.norm(z_axis)
    y_axis = np.cross(z_axis, x_axis)

    rotation = np.stack([x_axis, y_axis, z_axis])
    return RigidTransform(rotation, -rotation @ center)


def apply_transform(transform: RigidTransform, pose: np.ndarray) -> np.ndarray:
    return transform.apply(pose)


def normalize_pose(pose: np.ndarray, skeleton: Skeleton = EXPI_SKELETON) -> np.ndarray:
    return normalization_transform(pose, skeleton).apply(pose)


def normalize_sequence(frames: np.ndarray, skeleton: Skeleton = EXPI_SKELETON) -> np.ndarray:
    """Normalize every frame of an (F, J, 3) sequence by its own transform."""
    return np.stack([normalize_pose(frame, skeleton) for frame in frames])


def normalize_couple(leader: np.ndarray, follower: np.ndarray,
                     skeleton: Skeleton = EXPI_SKELETON) -> Tuple[np.ndarray, np.ndarray]:
    """Per frame, apply the leader's normalization transform to both persons."""
    leader = np.asarray(leader, dtype=np.float64)
    follower = np.asarray(follower, dtype=np.float64)
    if leader.shape != follower.shape:
        raise ContractError(f"leader {leader.shape} and follower {follower.shape} differ in shape")
    out_leader = np.empty_like(leader)
    out_follower = np.empty_like(follower)
    for t in range(leader.shape[0]):
        transform = normalization_transform(leader[t], skeleton)
        out_leader[t] = transform.apply(leader[t])
        out_follower[t] = transform.apply(follower[t])
    return out_leader, out_follower


def procrustes_transform(pred: np.ndarray, gt: np.ndarray) -> RigidTransform:
    """Rotation + translation (no scale) minimizing sum ||R pred_j + t - gt_j||^2."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 2 or pred.shape[1] != 3:
        raise ContractError(f"procrustes needs matching (J, 3) poses, got {pred.shape} and {gt.shape}")

    mu_pred = pred.mean(axis=0)
    mu_gt = gt.mean(axis=0)
    gt_centered = gt - mu_gt
    if np.max(np.linalg.norm(gt_centered, axis=1)) == 0.0:
        raise DegeneracyError("ground-truth joints all coincide")

    cross_cov = (pred - mu_pred).T @ gt_centered
    U, _, Vt = np.linalg.svd(cross_cov)
    sign = np.sign(np.linalg.det(Vt.T @ U.T))
    correction = np.diag([1.0, 1.0, sign if sign != 0 else 1.0])
    rotation = Vt.T @ correction @ U.T
    return RigidTransform(rotation, mu_gt - rotation @ mu_pred)


def procrustes_align(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    return procrustes_transform(pred, gt).apply(pred)
