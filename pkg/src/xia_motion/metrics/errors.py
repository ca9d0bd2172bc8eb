"""
MPJPE and its two-person extensions, in millimetres.

    JME: average of the two per-person MPJPEs in the shared couple frame.
    SME: JME after normalizing every pose (prediction and ground truth) by
         its own normalization transform, per frame and per person.
    AME: JME after the best rigid (rotation + translation) alignment of each
         predicted pose onto its ground truth, per frame and per person.
"""

from typing import Callable, Dict, Tuple

import numpy as np

from ..geometry import EXPI_SKELETON, Skeleton, normalize_sequence, procrustes_align
from ..utils.common import ContractError

METRICS = ("JME", "SME", "AME")
ROLES = ("leader", "follower")


def _check_shapes(*arrays: np.ndarray) -> None:
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) != 1:
        raise ContractError(f"metric inputs must share one shape, got {sorted(shapes)}")
    shape = shapes.pop()
    if len(shape) != 3 or shape[2] != 3:
        raise ContractError(f"metric inputs must be (T, J, 3), got {shape}")


def joint_errors(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """(T, J) Euclidean distance per frame and joint."""
    _check_shapes(pred, gt)
    return np.linalg.norm(np.asarray(pred, dtype=np.float64) - np.asarray(gt, dtype=np.float64), axis=-1)


def mpjpe(pred: np.ndarray, gt: np.ndarray) -> float:
    return float(joint_errors(pred, gt).mean())


def jme(pred_leader, pred_follower, gt_leader, gt_follower) -> float:
    _check_shapes(pred_leader, pred_follower, gt_leader, gt_follower)
    return 0.5 * (mpjpe(pred_leader, gt_leader) + mpjpe(pred_follower, gt_follower))


def _align_frames(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    return np.stack([procrustes_align(p, g) for p, g in zip(pred, gt)])


def sme(pred_leader, pred_follower, gt_leader, gt_follower,
        skeleton: Skeleton = EXPI_SKELETON) -> float:
    errors = role_errors("SME", pred_leader, pred_follower, gt_leader, gt_follower, skeleton)
    return 0.5 * (errors["leader"].mean() + errors["follower"].mean())


def ame(pred_leader, pred_follower, gt_leader, gt_follower,
        skeleton: Skeleton = EXPI_SKELETON) -> float:
    errors = role_errors("AME", pred_leader, pred_follower, gt_leader, gt_follower, skeleton)
    return 0.5 * (errors["leader"].mean() + errors["follower"].mean())


def _jme_pair(pred, gt, skeleton):
    return pred, gt


def _sme_pair(pred, gt, skeleton):
    return normalize_sequence(pred, skeleton), normalize_sequence(gt, skeleton)


def _ame_pair(pred, gt, skeleton):
    return _align_frames(pred, gt), gt


_PAIRINGS: Dict[str, Callable] = {"JME": _jme_pair, "SME": _sme_pair, "AME": _ame_pair}


def role_errors(metric: str, pred_leader, pred_follower, gt_leader, gt_follower,
                skeleton: Skeleton = EXPI_SKELETON) -> Dict[str, np.ndarray]:
    """Per-role (T, J) error maps of one metric; their grand mean is the metric."""
    try:
        pairing = _PAIRINGS[metric]
    except KeyError:
        raise ContractError(f"unknown metric {metric!r}; expected one of {METRICS}") from None
    _check_shapes(pred_leader, pred_follower, gt_leader, gt_follower)
    errors = {}
    for role, pred, gt in (("leader", pred_leader, gt_leader), ("follower", pred_follower, gt_follower)):
        pred_t, gt_t = pairing(np.asarray(pred, dtype=np.float64), np.asarray(gt, dtype=np.float64), skeleton)
        errors[role] = joint_errors(pred_t, gt_t)
    return errors


def all_role_errors(pred_leader, pred_follower, gt_leader, gt_follower,
                    skeleton: Skeleton = EXPI_SKELETON) -> Dict[str, Dict[str, np.ndarray]]:
    return {metric: role_errors(metric, pred_leader, pred_follower, gt_leader, gt_follower, skeleton)
            for metric in METRICS}


def horizon_frames(horizon_ms: int, fps: float) -> int:
    """Number of predicted frames covering `horizon_ms` (80 ms at 25 fps -> 2)."""
    return int(round(horizon_ms * fps / 1000.0))


def horizon_table(horizons_ms: Tuple[int, ...], fps: float) -> Dict[int, int]:
    return {ms: horizon_frames(ms, fps) for ms in horizons_ms}
