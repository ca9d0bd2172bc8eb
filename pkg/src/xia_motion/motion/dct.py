"""
Orthonormal DCT-II trajectory representation.

A window of L frames of J joints is a set of J*3 trajectories of length L;
each trajectory is represented by its first C DCT coefficients.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.fft import dct as _scipy_dct

from ..utils.common import ContractError


@lru_cache(maxsize=64)
def dct_matrix(length: int) -> np.ndarray:
    """(L, L) orthonormal DCT-II basis; row k is the k-th basis vector."""
    if length < 1:
        raise ContractError(f"DCT length must be >= 1, got {length}")
    basis = _scipy_dct(np.eye(length), type=2, norm="ortho", axis=0)
    basis.setflags(write=False)
    return basis


def dct(trajectory: np.ndarray, num_coeffs: Optional[int] = None) -> np.ndarray:
    trajectory = np.asarray(trajectory, dtype=np.float64)
    length = trajectory.shape[0]
    num_coeffs = length if num_coeffs is None else num_coeffs
    if length < 1:
        raise ContractError("trajectory must have at least one sample")
    if not 1 <= num_coeffs <= length:
        raise ContractError(f"coefficient count {num_coeffs} must be in [1, {length}]")
    return _scipy_dct(trajectory, type=2, norm="ortho", axis=0)[:num_coeffs]


def idct(coeffs: np.ndarray, length: int) -> np.ndarray:
    """Inverse of dct; with C < L this is the least-squares reconstruction."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    num_coeffs = coeffs.shape[0]
    if num_coeffs > length:
        raise ContractError(f"{num_coeffs} coefficients cannot describe {length} samples")
    basis = dct_matrix(length)[:num_coeffs]
    return np.tensordot(basis.T, coeffs, axes=(1, 0))


@dataclass(frozen=True)
class DctCoeffs:
    """(C, J, 3) coefficients of a window of `window_length` frames."""

    coeffs: np.ndarray
    window_length: int

    @property
    def num_coeffs(self) -> int:
        return self.coeffs.shape[0]

    def node_features(self) -> np.ndarray:
        """(J*3, C): one row per joint-coordinate trajectory."""
        return self.coeffs.reshape(self.num_coeffs, -1).T

    def flatten(self) -> np.ndarray:
        return self.node_features().reshape(-1)

    def decode(self) -> np.ndarray:
        return idct(self.coeffs, self.window_length)


def pad_last_window(window: np.ndarray, extra: int) -> np.ndarray:
    """Append `extra` copies of the final frame."""
    window = np.asarray(window, dtype=np.float64)
    if extra <= 0:
        return window
    return np.concatenate([window, np.repeat(window[-1:], extra, axis=0)], axis=0)


def pad_and_encode_value(window: np.ndarray, M: int, T: int,
                         num_coeffs: Optional[int] = None) -> DctCoeffs:
    """DCT of an (M+T, J, 3) value window, per joint-coordinate."""
    window = np.asarray(window, dtype=np.float64)
    length = M + T
    if window.shape[0] != length:
        raise ContractError(f"value window must have {length} frames, got {window.shape[0]}")
    return DctCoeffs(dct(window, num_coeffs), length)


def features_to_window(features: np.ndarray, window_length: int, num_joints: int) -> np.ndarray:
    """Inverse of DctCoeffs.node_features followed by decoding: (J*3, C) -> (L, J, 3)."""
    coeffs = np.asarray(features).T.reshape(-1, num_joints, 3)
    return idct(coeffs, window_length)
