"""
Experiment configuration: a key=value file (parsed with python-dotenv)
merged with command-line overrides and validated with pydantic.

    data_dir=runs/synth
    split=CA
    variant=xia
    epochs=20
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..data import SplitSpec
from ..models import ModelConfig
from ..services import EvalConfig, TrainConfig
from ..utils.common import UsageError

logger = logging.getLogger(__name__)

_MODEL_KEYS = ("J", "M", "T", "C", "d_model", "gcn_layers", "gcn_hidden", "heads_key", "heads_value")


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    data_dir: Optional[Path] = None
    out_dir: Path = Path("runs/experiment")
    split: str = "CA"
    aerial: Optional[int] = None
    variant: str = "xia"
    seed: int = 0

    # model hyperparameters, unset keys keep the model defaults
    J: Optional[int] = None
    M: Optional[int] = None
    T: Optional[int] = None
    C: Optional[int] = None
    d_model: Optional[int] = None
    gcn_layers: Optional[int] = None
    gcn_hidden: Optional[int] = None
    heads_key: Optional[int] = None
    heads_value: Optional[int] = None

    # training
    epochs: int = Field(10, ge=0)
    batch_size: int = Field(16, ge=1)
    lr: float = Field(1e-3, gt=0)
    in_len: int = Field(50, ge=1)
    stride: int = Field(5, ge=1)
    max_steps: Optional[int] = Field(None, ge=0)

    # evaluation
    subsequences: Optional[int] = Field(None, ge=1)
    workers: Optional[int] = Field(None, ge=1)

    def has_model_keys(self) -> bool:
        return any(getattr(self, key) is not None for key in _MODEL_KEYS)

    def to_model_config(self) -> ModelConfig:
        values = {key: getattr(self, key) for key in _MODEL_KEYS if getattr(self, key) is not None}
        try:
            return ModelConfig(**values)
        except ValidationError as e:
            raise UsageError(f"invalid model configuration: {_first_error(e)}") from None

    def to_train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            seed=self.seed,
            variant=self.variant,
            in_len=self.in_len,
            step_len=self.to_model_config().T,
            stride=self.stride,
            max_steps=self.max_steps,
        )

    def to_eval_config(self) -> EvalConfig:
        overrides = {key: getattr(self, key) for key in ("subsequences", "workers") if getattr(self, key)}
        return EvalConfig(in_len=self.in_len, seed=self.seed, **overrides)

    def to_split(self) -> SplitSpec:
        try:
            return SplitSpec(kind=self.split.upper(), aerial=self.aerial)
        except ValidationError as e:
            raise UsageError(f"invalid split: {_first_error(e)}") from None


def _first_error(error: ValidationError) -> str:
    detail = error.errors()[0]
    location = ".".join(str(part) for part in detail["loc"])
    return f"{location}: {detail['msg']}" if location else detail["msg"]


def load_experiment(path: Optional[Path] = None, **overrides: Any) -> ExperimentConfig:
    """File values first, then every override that is not None."""
    values: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise UsageError(f"config file {path} does not exist")
        raw = dotenv_values(path)
        unknown = [key for key in raw if key not in ExperimentConfig.model_fields]
        if unknown:
            raise UsageError(f"unknown config key {unknown[0]!r} in {path}")
        values.update({key: value for key, value in raw.items() if value is not None})
    values.update({key: value for key, value in overrides.items() if value is not None})

    try:
        config = ExperimentConfig(**values)
    except ValidationError as e:
        raise UsageError(f"invalid configuration {_first_error(e)}") from None
    logger.debug(f"Experiment configuration: {config.model_dump()}")
    return config
