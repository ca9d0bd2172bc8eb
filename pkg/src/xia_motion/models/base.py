"""
Single-person predictor: MLP-encoded query and keys, soft attention over past
sub-sequences whose values are DCT coefficients, and a GCN over joint
coordinates with a learnable adjacency that refines the DCT of the padded
last window.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..autodiff import (
    MLP, Module, Tensor, concat, matmul, reshape, scale, softmax, take, tanh, transpose,
)
from ..autodiff.nn import uniform_init
from ..motion import SubSequenceBank, dct, dct_matrix, extract_windows, pad_last_window
from ..utils.common import ContractError
from .config import ModelConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AttentionState:
    Q: Tensor  # (1, d_model)
    K: Tensor  # (N, d_model)
    V: Tensor  # (N, C*J*3)

    def __post_init__(self):
        if self.K.shape[0] != self.V.shape[0]:
            raise ContractError(f"{self.K.shape[0]} keys but {self.V.shape[0]} values")
        if self.Q.shape[1] != self.K.shape[1]:
            raise ContractError(f"query width {self.Q.shape[1]} != key width {self.K.shape[1]}")

    @property
    def size(self) -> int:
        return self.K.shape[0]


def _flatten_windows(windows: np.ndarray, input_scale: float) -> Tensor:
    return Tensor(windows.reshape(windows.shape[0], -1) * input_scale)


def encode_query(window: np.ndarray, encoder: MLP, input_scale: float = 1.0) -> Tensor:
    """(M, J, 3) window -> (1, d_model)."""
    return encoder(_flatten_windows(np.asarray(window)[None], input_scale))


def encode_keys(bank: SubSequenceBank, encoder: MLP, input_scale: float = 1.0) -> Tensor:
    """N key windows -> (N, d_model)."""
    return encoder(_flatten_windows(bank.keys, input_scale))


def attend(state: AttentionState) -> Tensor:
    """Softmax over scaled dot products Q.K_i, then the weighted sum of values."""
    weights = attention_weights(state)
    return matmul(transpose(weights), state.V)


def attention_weights(state: AttentionState) -> Tensor:
    """(N, 1) weights, nonnegative, summing to one."""
    scores = scale(matmul(state.K, transpose(state.Q)), 1.0 / np.sqrt(state.Q.shape[1]))
    return softmax(scores, axis=0)


def value_features(bank: SubSequenceBank, num_coeffs: int) -> np.ndarray:
    """(N, C*J*3) DCT of every value window, node-major."""
    coeffs = dct(np.moveaxis(bank.values, 0, 1), num_coeffs)  # (C, N, J, 3)
    n_windows = bank.size
    return np.ascontiguousarray(
        coeffs.reshape(num_coeffs, n_windows, -1).transpose(1, 2, 0).reshape(n_windows, -1)
    )


class GraphConvolution(Module):
    """H' = A H W + b over J*3 trajectory nodes with a dense learnable A."""

    def __init__(self, nodes: int, in_features: int, out_features: int, rng: np.random.Generator):
        super().__init__()
        self.adjacency = Tensor(np.eye(nodes) + rng.uniform(-0.01, 0.01, size=(nodes, nodes)))
        self.weight = Tensor(uniform_init(rng, (in_features, out_features), in_features))
        self.bias = Tensor(uniform_init(rng, (1, out_features), in_features))

    def __call__(self, h: Tensor) -> Tensor:
        ones = Tensor(np.ones((h.shape[0], 1)))
        return matmul(matmul(self.adjacency, h), self.weight) + matmul(ones, self.bias)

    def zero_weights(self) -> None:
        self.weight = Tensor(np.zeros(self.weight.shape))
        self.bias = Tensor(np.zeros(self.bias.shape))


class GcnPredictor(Module):
    """
    Graph-convolution stack in DCT space with a residual from input to output.

    Input node features are [DCT of padded last window | attention output],
    2C per node; the first C output features are the predicted coefficients.
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__()
        self.num_layers = config.gcn_layers
        self.input_scale = config.input_scale
        width = 2 * config.C
        dims = [width] + [config.gcn_hidden] * (config.gcn_layers - 1) + [width]
        for i in range(config.gcn_layers):
            setattr(self, f"gc{i}", GraphConvolution(config.nodes, dims[i], dims[i + 1], rng))

    def layers(self):
        return [getattr(self, f"gc{i}") for i in range(self.num_layers)]

    def __call__(self, aggregated: Tensor, last_window_dct: Tensor) -> Tensor:
        num_coeffs = last_window_dct.shape[1]
        features = concat([last_window_dct, reshape(aggregated, last_window_dct.shape)], axis=1)
        h = scale(features, self.input_scale)
        layers = self.layers()
        for layer in layers[:-1]:
            h = tanh(layer(h))
        h = layers[-1](h)
        out = features + scale(h, 1.0 / self.input_scale)
        return take(out, (slice(None), slice(0, num_coeffs)))

    def zero_weights(self) -> None:
        for layer in self.layers():
            layer.zero_weights()


def gcn_predict(aggregated: Tensor, last_window_dct: Tensor, predictor: GcnPredictor) -> Tensor:
    return predictor(aggregated, last_window_dct)


class BasePredictor(Module):
    """One person's predictor: T future frames from an observed history."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__()
        self.config = config
        self.query_encoder = MLP(config.query_dim, config.d_model, config.d_model, rng)
        self.key_encoder = MLP(config.query_dim, config.d_model, config.d_model, rng)
        self.gcn = GcnPredictor(config, rng)

    def encode(self, history: np.ndarray) -> Tuple[AttentionState, Tensor]:
        """Attention state of the history plus the DCT of its padded last window."""
        cfg = self.config
        history = np.asarray(history, dtype=np.float64)
        if history.ndim != 3 or history.shape[1] != cfg.J:
            raise ContractError(f"history must be (F, {cfg.J}, 3), got {history.shape}")
        bank = extract_windows(history, cfg.M, cfg.T)
        state = AttentionState(
            Q=encode_query(bank.query, self.query_encoder, cfg.input_scale),
            K=encode_keys(bank, self.key_encoder, cfg.input_scale),
            V=Tensor(value_features(bank, cfg.C)),
        )
        last_window = pad_last_window(bank.query, cfg.T)
        last_dct = dct(last_window, cfg.C).reshape(cfg.C, -1).T
        return state, Tensor(last_dct)

    def predict_from_state(self, state: AttentionState, last_window_dct: Tensor) -> Tensor:
        """Attend, run the GCN and decode the last T frames: (T, J, 3)."""
        cfg = self.config
        coeffs = gcn_predict(attend(state), last_window_dct, self.gcn)  # (J*3, C)
        basis = dct_matrix(cfg.window_length)[:cfg.C]                    # (C, L)
        future_basis = Tensor(basis[:, cfg.M:].T)                          # (T, C)
        frames = matmul(future_basis, transpose(coeffs))                   # (T, J*3)
        return reshape(frames, (cfg.T, cfg.J, 3))

    def __call__(self, history: np.ndarray) -> Tensor:
        state, last_dct = self.encode(history)
        return self.predict_from_state(state, last_dct)

    def zero_predictor(self) -> None:
        """Zero every GCN weight; the model then repeats the last observed frame."""
        self.gcn.zero_weights()


def forward_single(history: np.ndarray, predictor: BasePredictor) -> Tensor:
    return predictor(history)
