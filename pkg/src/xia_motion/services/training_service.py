"""
Training of collaborative predictors: differentiable JME loss, training
windows cut from couple-normalized sequences, seeded mini-batch Adam and
checkpoint/loss-curve artifacts.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from ..autodiff import Adam, GradTape, Tensor, norm, reduce_mean, save_checkpoint, load_checkpoint, scale, sub
from ..core.config import settings
from ..data import CoupleSequence
from ..geometry import normalize_couple, skeleton_for
from ..models import CollaborativePredictor, ModelConfig, VariantFactory, parse_variant
from ..utils.common import (
    CompatibilityError, ContractError, DataError, NumericError, TrainingError, atomic_write,
)

logger = logging.getLogger(__name__)

LOSS_COLUMNS = ["epoch", "step", "loss"]


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    epochs: int = Field(10, ge=0)
    batch_size: int = Field(16, ge=1)
    lr: float = Field(1e-3, gt=0)
    seed: int = 0
    variant: str = "xia"
    in_len: int = Field(50, ge=1, description="observed frames per training window")
    step_len: int = Field(10, ge=1, description="predicted frames the loss covers")
    stride: int = Field(5, ge=1, description="frames between consecutive training windows")
    max_steps: Optional[int] = Field(None, ge=0)


def jme_loss(pred_leader: Tensor, pred_follower: Tensor,
             gt_leader: np.ndarray, gt_follower: np.ndarray) -> Tensor:
    """Mean per-joint Euclidean error averaged over the two persons (differentiable JME)."""
    if pred_leader.shape != np.shape(gt_leader) or pred_follower.shape != np.shape(gt_follower):
        raise ContractError(
            f"prediction shapes {pred_leader.shape}/{pred_follower.shape} do not match "
            f"ground truth {np.shape(gt_leader)}/{np.shape(gt_follower)}")
    leader = reduce_mean(norm(sub(pred_leader, gt_leader), axis=-1))
    follower = reduce_mean(norm(sub(pred_follower, gt_follower), axis=-1))
    return scale(leader + follower, 0.5)


def extract_training_windows(sequences: Sequence[CoupleSequence], in_len: int, out_len: int,
                             stride: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """
    Couple-normalized (W, in_len + out_len, J, 3) windows of leader and
    follower, `stride` frames apart within each sequence.
    """
    length = in_len + out_len
    leaders, followers = [], []
    for seq in sequences:
        if seq.num_frames < length:
            logger.warning(f"Sequence {seq.seq_id} has {seq.num_frames} frames, shorter than a "
                           f"{length}-frame training window; skipped")
            continue
        leader, follower = normalize_couple(seq.leader.frames, seq.follower.frames, skeleton_for(seq.num_joints))
        for start in range(0, seq.num_frames - length + 1, stride):
            leaders.append(leader[start:start + length])
            followers.append(follower[start:start + length])
    if not leaders:
        raise DataError(f"no sequence is long enough for a {length}-frame training window")
    return np.stack(leaders), np.stack(followers)


@dataclass
class TrainResult:
    model: CollaborativePredictor
    loss_curve: pd.DataFrame
    steps: int


class TrainingService:
    """Mini-batch Adam on the JME loss, deterministic under the config seed."""

    def batch_loss(self, model: CollaborativePredictor, leaders: np.ndarray, followers: np.ndarray,
                   in_len: int) -> Tensor:
        total = None
        for leader, follower in zip(leaders, followers):
            pred_leader, pred_follower = model(leader[:in_len], follower[:in_len])
            steps = pred_leader.shape[0]
            loss = jme_loss(pred_leader, pred_follower,
                            leader[in_len:in_len + steps], follower[in_len:in_len + steps])
            total = loss if total is None else total + loss
        return scale(total, 1.0 / len(leaders))

    def train(self, model: CollaborativePredictor, dataset: Sequence[CoupleSequence], cfg: TrainConfig,
              out_dir: Optional[Path] = None) -> TrainResult:
        if not dataset:
            raise DataError("training set is empty")
        if cfg.step_len != model.config.T:
            raise ContractError(f"step_len {cfg.step_len} differs from the model's T = {model.config.T}")
        joints = {seq.num_joints for seq in dataset}
        if joints != {model.config.J}:
            raise CompatibilityError(f"dataset joints {sorted(joints)} do not match the model's J = {model.config.J}")

        leaders, followers = extract_training_windows(dataset, cfg.in_len, cfg.step_len, cfg.stride)
        logger.info(f"Training {model.kind.value} on {len(leaders)} windows "
                    f"({model.parameter_count()} parameters, {cfg.epochs} epochs)")

        optimizer = Adam(model, lr=cfg.lr)
        rng = np.random.default_rng(cfg.seed)
        rows: List[Tuple[int, int, float]] = []
        step = 0
        for epoch in range(1, cfg.epochs + 1):
            if cfg.max_steps is not None and step >= cfg.max_steps:
                break
            order = rng.permutation(len(leaders))
            epoch_losses = []
            for begin in range(0, len(order), cfg.batch_size):
                if cfg.max_steps is not None and step >= cfg.max_steps:
                    break
                batch = order[begin:begin + cfg.batch_size]
                step += 1
                try:
                    with GradTape() as tape:
                        tape.watch(*model.parameters())
                        loss = self.batch_loss(model, leaders[batch], followers[batch], cfg.in_len)
                    grads = tape.backward(loss)
                    for _, grad in grads.items():
                        if not np.all(np.isfinite(grad)):
                            raise NumericError("non-finite gradient")
                    optimizer.step(grads)
                except NumericError as e:
                    raise TrainingError(f"training diverged: {e}", step=step) from e
                value = loss.item()
                if not np.isfinite(value):
                    raise TrainingError("loss is not finite", step=step)
                rows.append((epoch, step, value))
                epoch_losses.append(value)
                logger.debug(f"step {step}: loss {value:.4f}")
            if epoch_losses:
                logger.info(f"Epoch {epoch}: mean loss {np.mean(epoch_losses):.3f} mm")

        curve = pd.DataFrame(rows, columns=LOSS_COLUMNS)
        if out_dir is not None:
            self.save_artifacts(model, curve, cfg, Path(out_dir))
        return TrainResult(model=model, loss_curve=curve, steps=step)

    def save_artifacts(self, model: CollaborativePredictor, curve: pd.DataFrame, cfg: TrainConfig,
                       out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        with atomic_write(out_dir / settings.LOSS_CURVE_NAME) as handle:
            curve.to_csv(handle, index=False, lineterminator="\n")
        save_checkpoint(out_dir / settings.CHECKPOINT_NAME, model.state_dict(), checkpoint_metadata(model, cfg))


def checkpoint_metadata(model: CollaborativePredictor, cfg: Optional[TrainConfig] = None) -> dict:
    metadata = {
        "variant": model.kind.value,
        "model_config": json.dumps(model.config.model_dump(), sort_keys=True),
        "parameters": str(model.parameter_count()),
    }
    if cfg is not None:
        metadata["seed"] = str(cfg.seed)
        metadata["in_len"] = str(cfg.in_len)
    return metadata


def load_model(path: Path, expected: Optional[ModelConfig] = None) -> CollaborativePredictor:
    """Rebuild the variant recorded in a checkpoint and load its parameters."""
    state, metadata = load_checkpoint(path)
    try:
        kind = parse_variant(metadata["variant"])
        config = ModelConfig(**json.loads(metadata["model_config"]))
    except KeyError as e:
        raise CompatibilityError(f"checkpoint {path} lacks metadata {e}") from None
    if expected is not None and config != expected:
        raise CompatibilityError(f"checkpoint {path} was trained with {config}, expected {expected}")
    model = VariantFactory.create(kind, config)
    model.load_state_dict(state)
    return model


def train(model: CollaborativePredictor, dataset: Sequence[CoupleSequence], cfg: TrainConfig,
          out_dir: Optional[Path] = None) -> TrainResult:
    return training_service.train(model, dataset, cfg, out_dir)


training_service = TrainingService()
