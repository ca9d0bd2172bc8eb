"""
Cross-interaction attention (XIA).

    xia(v, w) = FC(MHA(w, v, v) + v)

v and w are (N, D) banks of the two persons (N rows = past sub-sequences).
MHA attends over the rows of v with queries taken from the rows of w, so row
i of the refined bank depends on the partner only through the partner's row
i. FC is two layers of width D with tanh in between and a skip around the
block; zeroing its second layer makes it the identity.
"""

import logging
from typing import Tuple

import numpy as np

from ..autodiff import Linear, Module, Tensor, concat, matmul, scale, softmax, take, tanh, transpose
from ..utils.common import ContractError
from .base import AttentionState

logger = logging.getLogger(__name__)


class MultiHeadAttention(Module):
    def __init__(self, dim: int, heads: int, rng: np.random.Generator):
        super().__init__()
        if dim % heads:
            raise ContractError(f"{heads} heads do not divide width {dim}")
        self.dim = dim
        self.heads = heads
        self.query = Linear(dim, dim, rng)
        self.key = Linear(dim, dim, rng)
        self.value = Linear(dim, dim, rng)
        self.output = Linear(dim, dim, rng)

    def __call__(self, query: Tensor, key: Tensor, value: Tensor) -> Tensor:
        q, k, v = self.query(query), self.key(key), self.value(value)
        head_dim = self.dim // self.heads
        heads = []
        for h in range(self.heads):
            cols = (slice(None), slice(h * head_dim, (h + 1) * head_dim))
            scores = scale(matmul(take(q, cols), transpose(take(k, cols))), 1.0 / np.sqrt(head_dim))
            heads.append(matmul(softmax(scores, axis=1), take(v, cols)))
        return self.output(heads[0] if len(heads) == 1 else concat(heads, axis=1))


class CrossInteractionAttention(Module):
    """
    Refines v with the partner bank w.

    residual=False drops the "+ v" around MHA; self_attention=True queries
    MHA with v itself so w is ignored. `input_scale` maps millimetre-valued
    banks into the learned layers' working range and back.
    """

    def __init__(self, dim: int, heads: int, rng: np.random.Generator, *,
                 residual: bool = True, self_attention: bool = False, input_scale: float = 1.0):
        super().__init__()
        self.dim = dim
        self.residual = residual
        self.self_attention = self_attention
        self.input_scale = input_scale
        self.mha = MultiHeadAttention(dim, heads, rng)
        self.fc1 = Linear(dim, dim, rng)
        # Near-zero second layer: the block starts close to the identity.
        self.fc2 = Linear(dim, dim, rng, gain=0.01)

    def __call__(self, v: Tensor, w: Tensor) -> Tensor:
        if v.ndim != 2 or v.shape[1] != self.dim or w.shape != v.shape:
            raise ContractError(f"xia expects two (N, {self.dim}) banks, got {v.shape} and {w.shape}")
        v_in = scale(v, self.input_scale)
        query = v_in if self.self_attention else scale(w, self.input_scale)
        u = self.mha(query, v_in, v_in)
        if self.residual:
            u = u + v_in
        refined = u + self.fc2(tanh(self.fc1(u)))
        return scale(refined, 1.0 / self.input_scale)

    def make_pass_through(self) -> None:
        """Zero the MHA value/output projections and the second FC layer."""
        self.mha.value.zero_()
        self.mha.output.zero_()
        self.fc2.zero_()


def xia(v: Tensor, w: Tensor, module: CrossInteractionAttention) -> Tensor:
    return module(v, w)


def refine_bank(leader: AttentionState, follower: AttentionState,
                leader_refiners: Tuple[CrossInteractionAttention, CrossInteractionAttention],
                follower_refiners: Tuple[CrossInteractionAttention, CrossInteractionAttention]
                ) -> Tuple[AttentionState, AttentionState]:
    """
    Refine both persons' keys and values with the partner's matching rows.
    Each refiner pair is (key refiner, value refiner). Queries pass unchanged.
    """
    if leader.size != follower.size:
        raise ContractError(f"leader bank has {leader.size} rows, follower bank {follower.size}")
    leader_keys, leader_values = leader_refiners
    follower_keys, follower_values = follower_refiners
    refined_leader = AttentionState(
        Q=leader.Q,
        K=leader_keys(leader.K, follower.K),
        V=leader_values(leader.V, follower.V),
    )
    refined_follower = AttentionState(
        Q=follower.Q,
        K=follower_keys(follower.K, leader.K),
        V=follower_values(follower.V, leader.V),
    )
    return refined_leader, refined_follower
