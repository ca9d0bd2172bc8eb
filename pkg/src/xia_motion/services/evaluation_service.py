"""
Iterative long-horizon rollout and the evaluation protocol: sample test
sub-sequences, normalize each couple in the leader's frame, roll the model
out to the longest horizon and aggregate JME/SME/AME per aerial.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..core.config import settings
from ..data import CoupleSequence, EvalWindow, sample_test_subsequences
from ..geometry import normalize_couple, skeleton_for
from ..metrics import EvaluationRecord, MetricsReport, all_role_errors, breakdown, horizon_frames
from ..models import CollaborativePredictor, ModelConfig, VariantKind
from ..utils.common import CompatibilityError, ContractError, DataError

logger = logging.getLogger(__name__)


class EvalConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    in_len: int = Field(50, ge=1)
    horizons_ms: Tuple[int, ...] = Field(default_factory=lambda: tuple(settings.HORIZONS_MS))
    subsequences: int = Field(default_factory=lambda: settings.TEST_SUBSEQUENCES, ge=1)
    seed: int = 0
    workers: int = Field(default_factory=lambda: settings.EVAL_WORKERS, ge=1)


class CountingModel:
    """Wraps a predictor and counts forward calls."""

    def __init__(self, model: CollaborativePredictor):
        self.model = model
        self.calls = 0

    @property
    def config(self) -> ModelConfig:
        return self.model.config

    @property
    def kind(self) -> VariantKind:
        return self.model.kind

    def __call__(self, leader_history, follower_history):
        self.calls += 1
        return self.model(leader_history, follower_history)


def rollout(model, leader_history: np.ndarray, follower_history: np.ndarray,
            horizon: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Predict `horizon` frames by repeatedly predicting T frames and appending
    them to the observed history.
    """
    if horizon < 1:
        raise ContractError(f"horizon must be >= 1, got {horizon}")
    leader = np.asarray(leader_history, dtype=np.float64)
    follower = np.asarray(follower_history, dtype=np.float64)
    observed = leader.shape[0]
    while leader.shape[0] - observed < horizon:
        pred_leader, pred_follower = model(leader, follower)
        leader = np.concatenate([leader, pred_leader.numpy()])
        follower = np.concatenate([follower, pred_follower.numpy()])
    return leader[observed:observed + horizon], follower[observed:observed + horizon]


class Forecaster:
    """Produces both persons' futures for one normalized test window."""

    name = "model"
    num_joints: Optional[int] = None

    def forecast(self, leader_history: np.ndarray, follower_history: np.ndarray, horizon: int,
                 leader_future: np.ndarray, follower_future: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


class ModelForecaster(Forecaster):
    def __init__(self, model):
        self.model = model
        self.name = model.kind.value
        self.num_joints = model.config.J

    def forecast(self, leader_history, follower_history, horizon, leader_future, follower_future):
        return rollout(self.model, leader_history, follower_history, horizon)


class GroundTruthForecaster(Forecaster):
    """Returns the true future; every metric of it is zero."""

    name = "ground-truth"

    def forecast(self, leader_history, follower_history, horizon, leader_future, follower_future):
        return leader_future[:horizon], follower_future[:horizon]


def as_forecaster(model: Union[Forecaster, CollaborativePredictor, CountingModel]) -> Forecaster:
    return model if isinstance(model, Forecaster) else ModelForecaster(model)


class EvaluationService:

    def windows(self, test_set: Sequence[CoupleSequence], cfg: EvalConfig, out_len: int) -> List[EvalWindow]:
        windows = []
        for seq in test_set:
            windows.extend(sample_test_subsequences(seq, cfg.subsequences, cfg.in_len, out_len, cfg.seed))
        return windows

    def score_window(self, forecaster: Forecaster, window: EvalWindow, in_len: int, out_len: int
                     ) -> EvaluationRecord:
        skeleton = skeleton_for(window.leader.shape[1])
        leader, follower = normalize_couple(window.leader, window.follower, skeleton)
        pred_leader, pred_follower = forecaster.forecast(
            leader[:in_len], follower[:in_len], out_len, leader[in_len:], follower[in_len:])
        errors = all_role_errors(pred_leader, pred_follower, leader[in_len:], follower[in_len:], skeleton)
        return EvaluationRecord(aerial=window.label, errors=errors)

    def evaluate(self, model, test_set: Sequence[CoupleSequence], cfg: Optional[EvalConfig] = None
                 ) -> MetricsReport:
        cfg = cfg or EvalConfig()
        if not test_set:
            raise DataError("test set is empty")
        forecaster = as_forecaster(model)
        rates = {seq.fps for seq in test_set}
        if len(rates) != 1:
            raise DataError(f"test sequences mix frame rates {sorted(rates)}")
        fps = rates.pop()
        joints = {seq.num_joints for seq in test_set}
        if len(joints) != 1 or (forecaster.num_joints is not None and joints != {forecaster.num_joints}):
            raise CompatibilityError(
                f"test data has {sorted(joints)} joints, model expects {forecaster.num_joints}")

        out_len = max(horizon_frames(ms, fps) for ms in cfg.horizons_ms)
        windows = self.windows(test_set, cfg, out_len)
        logger.info(f"Evaluating {forecaster.name} on {len(windows)} sub-sequences from "
                    f"{len(test_set)} sequences ({out_len} frames ahead)")

        def score(window: EvalWindow) -> EvaluationRecord:
            return self.score_window(forecaster, window, cfg.in_len, out_len)

        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
                # map keeps input order, so the reduction below is deterministic
                records = list(executor.map(score, windows))
        else:
            records = [score(window) for window in windows]

        joint_names = skeleton_for(joints.pop()).joint_names
        return breakdown(records, cfg.horizons_ms, fps, joint_names, variant=forecaster.name)


def evaluate(model, test_set: Sequence[CoupleSequence], cfg: Optional[EvalConfig] = None) -> MetricsReport:
    return evaluation_service.evaluate(model, test_set, cfg)


evaluation_service = EvaluationService()
