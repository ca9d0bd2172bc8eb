from .config import ModelConfig
from .base import (
    AttentionState, BasePredictor, GcnPredictor, GraphConvolution,
    attend, attention_weights, encode_keys, encode_query, forward_single, gcn_predict, value_features,
)
from .xia import CrossInteractionAttention, MultiHeadAttention, refine_bank, xia
from .collab import (
    CollaborativePredictor, ConcatPredictor, IndependentPredictor, VariantFactory, VariantKind,
    XiaNoResidualPredictor, XiaPredictor, XiaSelfAttentionPredictor,
    forward_collab, make_variant, parse_variant,
)
