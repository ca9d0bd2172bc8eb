"""
Pinhole cameras without distortion, back-projection and two-ray triangulation.

Camera files are plain text: per camera 9 intrinsic values, 9 rotation values
and 3 translation values (world -> camera), whitespace separated.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np

from ..utils.common import ContractError, NoUniqueSolutionError, ParseError
from .transforms import RigidTransform

logger = logging.getLogger(__name__)

PARALLEL_TOL = 1e-9
VALUES_PER_CAMERA = 21


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        origin = np.array(self.origin, dtype=np.float64).reshape(3)
        direction = np.array(self.direction, dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(direction) - 1.0) > 1e-12:
            raise ContractError("ray direction must be a unit vector")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "direction", direction)

    def point_at(self, s: float) -> np.ndarray:
        return self.origin + s * self.direction

    def distance_to(self, point: np.ndarray) -> float:
        offset = np.asarray(point, dtype=np.float64) - self.origin
        return float(np.linalg.norm(offset - np.dot(offset, self.direction) * self.direction))


@dataclass(frozen=True)
class Camera:
    intrinsic: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        intrinsic = np.array(self.intrinsic, dtype=np.float64).reshape(3, 3)
        if np.any(np.tril(intrinsic, k=-1) != 0):
            raise ContractError("intrinsic matrix must be upper-triangular")
        if intrinsic[0, 0] <= 0 or intrinsic[1, 1] <= 0:
            raise ContractError("focal lengths must be positive")
        extrinsic = RigidTransform(self.rotation, self.translation)
        object.__setattr__(self, "intrinsic", intrinsic)
        object.__setattr__(self, "rotation", extrinsic.rotation)
        object.__setattr__(self, "translation", extrinsic.translation)

    @property
    def center(self) -> np.ndarray:
        return -self.rotation.T @ self.translation


def project(camera: Camera, point: np.ndarray) -> np.ndarray:
    """World point -> pixel (u, v)."""
    cam_point = camera.rotation @ np.asarray(point, dtype=np.float64) + camera.translation
    if cam_point[2] == 0.0:
        raise ContractError("point lies in the camera's focal plane")
    homogeneous = camera.intrinsic @ cam_point
    return homogeneous[:2] / homogeneous[2]


def backproject(camera: Camera, pixel: np.ndarray) -> Ray:
    u, v = np.asarray(pixel, dtype=np.float64).reshape(2)
    cam_direction = np.linalg.solve(camera.intrinsic, np.array([u, v, 1.0]))
    direction = camera.rotation.T @ cam_direction
    return Ray(camera.center, direction / np.linalg.norm(direction))


def triangulate_two_rays(r1: Ray, r2: Ray) -> np.ndarray:
    """Midpoint of the common perpendicular: least-squares nearest point to two lines."""
    b = float(np.dot(r1.direction, r2.direction))
    if abs(b) >= 1.0 - PARALLEL_TOL:
        raise NoUniqueSolutionError("rays are parallel; nearest point is not unique")

    w = r1.origin - r2.origin
    d = float(np.dot(r1.direction, w))
    e = float(np.dot(r2.direction, w))
    denom = 1.0 - b * b
    s = (b * e - d) / denom
    t = (e - b * d) / denom
    return 0.5 * (r1.point_at(s) + r2.point_at(t))


def load_cameras(path: Union[str, Path]) -> List[Camera]:
    text = Path(path).read_text()
    try:
        values = np.array([float(token) for token in text.split()], dtype=np.float64)
    except ValueError as e:
        raise ParseError(f"camera file {path}: {e}") from None
    if values.size % VALUES_PER_CAMERA:
        raise ParseError(
            f"camera file {path}: {values.size} values is not a multiple of {VALUES_PER_CAMERA}"
        )
    cameras = []
    for block in values.reshape(-1, VALUES_PER_CAMERA):
        cameras.append(Camera(block[:9].reshape(3, 3), block[9:18].reshape(3, 3), block[18:]))
    logger.info(f"Loaded {len(cameras)} cameras from {path}")
    return cameras


def format_cameras(cameras: List[Camera]) -> str:
    blocks = []
    for camera in cameras:
        rows = [camera.intrinsic.reshape(-1), camera.rotation.reshape(-1), camera.translation]
        blocks.append("\n".join(" ".join(repr(float(x)) for x in row) for row in rows))
    return "\n\n".join(blocks) + ("\n" if blocks else "")
