"""
Two-person predictors and the variant factory.

Every variant maps (leader history, follower history) in the couple-normalized
frame to (leader T frames, follower T frames).
"""

import logging
from enum import Enum
from typing import Dict, Tuple, Type, Union

import numpy as np

from ..autodiff import Module, Tensor, take
from ..utils.common import ContractError, UsageError
from .base import BasePredictor
from .config import ModelConfig
from .xia import CrossInteractionAttention, refine_bank

logger = logging.getLogger(__name__)


class VariantKind(str, Enum):
    BASE = "base-independent"
    CONCAT = "concat-2p"
    XIA = "xia"
    XIA_NO_RESIDUAL = "xia-no-residual"
    XIA_SELF = "xia-self-attention"

    @property
    def cli_name(self) -> str:
        return _CLI_NAMES[self]


_CLI_NAMES = {
    VariantKind.BASE: "base",
    VariantKind.CONCAT: "2pcat",
    VariantKind.XIA: "xia",
    VariantKind.XIA_NO_RESIDUAL: "xia-nores",
    VariantKind.XIA_SELF: "xia-self",
}
_ALIASES = {name: kind for kind, name in _CLI_NAMES.items()}


def parse_variant(name: Union[str, VariantKind]) -> VariantKind:
    if isinstance(name, VariantKind):
        return name
    if name in _ALIASES:
        return _ALIASES[name]
    try:
        return VariantKind(name)
    except ValueError:
        choices = sorted(set(_ALIASES) | {kind.value for kind in VariantKind})
        raise UsageError(f"unknown variant {name!r}; expected one of {choices}") from None


class CollaborativePredictor(Module):
    kind: VariantKind

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config

    def __call__(self, leader_history: np.ndarray, follower_history: np.ndarray) -> Tuple[Tensor, Tensor]:
        leader_history = np.asarray(leader_history, dtype=np.float64)
        follower_history = np.asarray(follower_history, dtype=np.float64)
        if leader_history.shape != follower_history.shape:
            raise ContractError(
                f"leader history {leader_history.shape} and follower history "
                f"{follower_history.shape} must have equal shapes"
            )
        return self.forward(leader_history, follower_history)

    def forward(self, leader_history: np.ndarray, follower_history: np.ndarray) -> Tuple[Tensor, Tensor]:
        """Predict the next T frames of both persons."""
        raise NotImplementedError

    def zero_predictor(self) -> None:
        """Zero every GCN weight so the model repeats the last observed frame."""
        raise NotImplementedError


class IndependentPredictor(CollaborativePredictor):
    """Two disjoint single-person models, one per role."""

    kind = VariantKind.BASE

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__(config)
        self.leader = BasePredictor(config, rng)
        self.follower = BasePredictor(config, rng)

    def forward(self, leader_history, follower_history):
        return self.leader(leader_history), self.follower(follower_history)

    def zero_predictor(self) -> None:
        self.leader.zero_predictor()
        self.follower.zero_predictor()


class ConcatPredictor(CollaborativePredictor):
    """One single-person model over the 2J joints of both persons."""

    kind = VariantKind.CONCAT

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__(config)
        self.couple = BasePredictor(config.with_joints(2 * config.J), rng)

    def forward(self, leader_history, follower_history):
        joints = self.config.J
        both = self.couple(np.concatenate([leader_history, follower_history], axis=1))
        return (take(both, (slice(None), slice(0, joints))),
                take(both, (slice(None), slice(joints, 2 * joints))))

    def zero_predictor(self) -> None:
        self.couple.zero_predictor()


class XiaBranch(Module):
    """One person's base model plus its key and value refiners."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator, *,
                 residual: bool, self_attention: bool):
        super().__init__()
        self.base = BasePredictor(config, rng)
        self.key_refiner = CrossInteractionAttention(
            config.d_model, config.heads_key, rng,
            residual=residual, self_attention=self_attention)
        self.value_refiner = CrossInteractionAttention(
            config.value_dim, config.heads_value, rng,
            residual=residual, self_attention=self_attention, input_scale=config.input_scale)

    @property
    def refiners(self) -> Tuple[CrossInteractionAttention, CrossInteractionAttention]:
        return self.key_refiner, self.value_refiner

    def make_pass_through(self) -> None:
        self.key_refiner.make_pass_through()
        self.value_refiner.make_pass_through()


class XiaPredictor(CollaborativePredictor):
    """Leader and follower branches whose keys and values are cross-refined."""

    kind = VariantKind.XIA
    residual = True
    self_attention = False

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__(config)
        self.leader = XiaBranch(config, rng, residual=self.residual, self_attention=self.self_attention)
        self.follower = XiaBranch(config, rng, residual=self.residual, self_attention=self.self_attention)

    def forward(self, leader_history, follower_history):
        leader_state, leader_last = self.leader.base.encode(leader_history)
        follower_state, follower_last = self.follower.base.encode(follower_history)
        leader_state, follower_state = refine_bank(
            leader_state, follower_state, self.leader.refiners, self.follower.refiners)
        return (self.leader.base.predict_from_state(leader_state, leader_last),
                self.follower.base.predict_from_state(follower_state, follower_last))

    def zero_predictor(self) -> None:
        self.leader.base.zero_predictor()
        self.follower.base.zero_predictor()

    def make_pass_through(self) -> None:
        self.leader.make_pass_through()
        self.follower.make_pass_through()


class XiaNoResidualPredictor(XiaPredictor):
    kind = VariantKind.XIA_NO_RESIDUAL
    residual = False


class XiaSelfAttentionPredictor(XiaPredictor):
    kind = VariantKind.XIA_SELF
    self_attention = True


class VariantFactory:

    _variants: Dict[VariantKind, Type[CollaborativePredictor]] = {
        VariantKind.BASE: IndependentPredictor,
        VariantKind.CONCAT: ConcatPredictor,
        VariantKind.XIA: XiaPredictor,
        VariantKind.XIA_NO_RESIDUAL: XiaNoResidualPredictor,
        VariantKind.XIA_SELF: XiaSelfAttentionPredictor,
    }

    @classmethod
    def create(cls, kind: Union[str, VariantKind], config: ModelConfig, seed: int = 0) -> CollaborativePredictor:
        kind = parse_variant(kind)
        model = cls._variants[kind](config, np.random.default_rng(seed))
        logger.info(f"Built {kind.value} model with {model.parameter_count()} parameters")
        return model

    @classmethod
    def available(cls) -> list:
        return [kind.value for kind in cls._variants]


def make_variant(kind: Union[str, VariantKind], config: ModelConfig = None, seed: int = 0) -> CollaborativePredictor:
    return VariantFactory.create(kind, config or ModelConfig(), seed)


def forward_collab(leader_history: np.ndarray, follower_history: np.ndarray,
                   model: CollaborativePredictor) -> Tuple[Tensor, Tensor]:
    return model(leader_history, follower_history)
