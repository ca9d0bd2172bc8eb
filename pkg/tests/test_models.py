import numpy as np
import pytest
from pydantic import ValidationError

from xia_motion.autodiff import MLP, Tensor
from xia_motion.models import (
    AttentionState, BasePredictor, CrossInteractionAttention, GcnPredictor, ModelConfig, VariantFactory,
    VariantKind, attend, attention_weights, encode_keys, encode_query, forward_collab, forward_single,
    gcn_predict, make_variant, parse_variant, refine_bank, xia,
)
from xia_motion.motion import extract_windows
from xia_motion.utils.common import ContractError, UsageError


def histories(rng, config, frames=9):
    shape = (frames, config.J, 3)
    return rng.normal(scale=200.0, size=shape), rng.normal(scale=200.0, size=shape)


def test_model_config_defaults():
    config = ModelConfig()
    assert (config.J, config.M, config.T, config.C) == (18, 10, 10, 20)
    assert (config.d_model, config.gcn_hidden, config.heads_key, config.heads_value) == (64, 64, 8, 1)
    assert ModelConfig(d_model=256).d_model == 256
    assert config.value_dim == 20 * 18 * 3
    assert ModelConfig(M=4, T=2).C == 6


@pytest.mark.parametrize("overrides", [{"M": 4, "T": 2, "C": 7}, {"d_model": 10, "heads_key": 4}])
def test_model_config_rejects_inconsistent_extents(overrides):
    with pytest.raises(ValidationError):
        ModelConfig(**overrides)


def test_zero_window_encodes_to_zero(tiny_config, rng):
    encoder = MLP(tiny_config.query_dim, tiny_config.d_model, tiny_config.d_model, rng)
    encoder.fc1.bias = Tensor(np.zeros(encoder.fc1.bias.shape))
    encoder.fc2.bias = Tensor(np.zeros(encoder.fc2.bias.shape))
    query = encode_query(np.zeros((tiny_config.M, tiny_config.J, 3)), encoder)
    assert np.array_equal(query.data, np.zeros((1, tiny_config.d_model)))


def test_keys_are_encoded_like_queries(tiny_config, rng):
    encoder = MLP(tiny_config.query_dim, tiny_config.d_model, tiny_config.d_model, rng)
    bank = extract_windows(rng.normal(scale=100.0, size=(10, tiny_config.J, 3)), tiny_config.M, tiny_config.T)
    keys = encode_keys(bank, encoder, 0.01).data
    assert keys.shape == (bank.size, tiny_config.d_model)
    for i in range(bank.size):
        np.testing.assert_allclose(keys[i], encode_query(bank.keys[i], encoder, 0.01).data[0], atol=1e-12)


def test_query_and_key_encoders_are_independent(tiny_config, rng):
    predictor = BasePredictor(tiny_config, rng)
    state = predictor.state_dict()
    assert predictor.query_encoder is not predictor.key_encoder
    assert not np.array_equal(state["query_encoder.fc1.weight"], state["key_encoder.fc1.weight"])

    history = rng.normal(scale=200.0, size=(9, tiny_config.J, 3))
    before, _ = predictor.encode(history)
    predictor.key_encoder.fc1.zero_()
    after, _ = predictor.encode(history)
    assert np.array_equal(before.Q.data, after.Q.data)
    assert not np.array_equal(before.K.data, after.K.data)


def test_zero_gcn_returns_the_last_window_coefficients(tiny_config, rng):
    predictor = GcnPredictor(tiny_config, rng)
    predictor.zero_weights()
    last_window_dct = Tensor(rng.normal(size=(tiny_config.nodes, tiny_config.C)))
    aggregated = Tensor(rng.normal(size=(1, tiny_config.value_dim)))
    out = gcn_predict(aggregated, last_window_dct, predictor).data
    np.testing.assert_allclose(out, last_window_dct.data, atol=1e-12)


def test_gcn_output_depends_on_the_attention_output(tiny_config, rng):
    predictor = GcnPredictor(tiny_config, rng)
    last_window_dct = Tensor(rng.normal(size=(tiny_config.nodes, tiny_config.C)))
    a = gcn_predict(Tensor(np.zeros((1, tiny_config.value_dim))), last_window_dct, predictor).data
    b = gcn_predict(Tensor(rng.normal(size=(1, tiny_config.value_dim))), last_window_dct, predictor).data
    assert a.shape == (tiny_config.nodes, tiny_config.C)
    assert not np.allclose(a, b)


def test_identical_keys_give_uniform_weights(rng):
    keys = np.repeat(rng.normal(size=(1, 8)), 5, axis=0)
    values = rng.normal(size=(5, 12))
    state = AttentionState(Q=Tensor(rng.normal(size=(1, 8))), K=Tensor(keys), V=Tensor(values))
    np.testing.assert_allclose(attention_weights(state).data, np.full((5, 1), 0.2), atol=1e-15)
    np.testing.assert_allclose(attend(state).data, values.mean(axis=0, keepdims=True), atol=1e-12)


def test_attention_saturates_on_aligned_key(rng):
    query = np.zeros((1, 4))
    query[0, 0] = 1.0
    keys = np.zeros((3, 4))
    keys[0, 1] = 1.0
    keys[1] = 1000.0 * query[0]
    keys[2, 2] = 1.0
    values = rng.normal(size=(3, 6))
    state = AttentionState(Q=Tensor(query), K=Tensor(keys), V=Tensor(values))
    np.testing.assert_allclose(attend(state).data[0], values[1], atol=1e-12)


def test_single_key_returns_its_value(rng):
    values = rng.normal(size=(1, 6))
    state = AttentionState(Q=Tensor(rng.normal(size=(1, 4))), K=Tensor(rng.normal(size=(1, 4))),
                           V=Tensor(values))
    np.testing.assert_allclose(attend(state).data, values, atol=1e-15)


def test_attention_is_permutation_invariant(rng):
    keys, values = rng.normal(size=(6, 4)), rng.normal(size=(6, 5))
    query = Tensor(rng.normal(size=(1, 4)))
    order = rng.permutation(6)
    a = attend(AttentionState(Q=query, K=Tensor(keys), V=Tensor(values))).data
    b = attend(AttentionState(Q=query, K=Tensor(keys[order]), V=Tensor(values[order]))).data
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_attention_state_checks_row_counts(rng):
    with pytest.raises(ContractError):
        AttentionState(Q=Tensor(np.ones((1, 4))), K=Tensor(np.ones((3, 4))), V=Tensor(np.ones((2, 5))))


def test_zero_predictor_repeats_last_frame(skeleton_config, rng):
    predictor = BasePredictor(skeleton_config, rng)
    predictor.zero_predictor()
    history = rng.normal(scale=300.0, size=(12, 18, 3))
    prediction = forward_single(history, predictor).data
    assert prediction.shape == (skeleton_config.T, 18, 3)
    np.testing.assert_allclose(prediction, np.repeat(history[-1:], skeleton_config.T, axis=0), atol=1e-9)


def test_forward_is_deterministic(tiny_config, rng):
    model = make_variant("xia", tiny_config, seed=2)
    leader, follower = histories(rng, tiny_config)
    first = [t.data for t in model(leader, follower)]
    second = [t.data for t in forward_collab(leader, follower, model)]
    for a, b in zip(first, second):
        assert np.array_equal(a, b)


def test_base_predictor_rejects_wrong_joint_count(tiny_config, rng):
    predictor = BasePredictor(tiny_config, rng)
    with pytest.raises(ContractError):
        predictor(np.zeros((9, 5, 3)))


@pytest.mark.parametrize("kind", list(VariantKind))
def test_zero_predictor_gives_frozen_pose_for_every_variant(kind, tiny_config, rng):
    model = VariantFactory.create(kind, tiny_config, seed=1)
    model.zero_predictor()
    if hasattr(model, "make_pass_through"):
        model.make_pass_through()
    leader, follower = histories(rng, tiny_config)
    pred_leader, pred_follower = model(leader, follower)
    np.testing.assert_allclose(pred_leader.data, np.repeat(leader[-1:], tiny_config.T, axis=0), atol=1e-9)
    np.testing.assert_allclose(pred_follower.data, np.repeat(follower[-1:], tiny_config.T, axis=0), atol=1e-9)


def test_pass_through_xia_is_identity(rng):
    module = CrossInteractionAttention(12, 3, rng, input_scale=1e-3)
    module.make_pass_through()
    v = Tensor(rng.normal(scale=500.0, size=(5, 12)))
    w = Tensor(rng.normal(scale=500.0, size=(5, 12)))
    out = xia(v, w, module)
    assert out.shape == v.shape
    np.testing.assert_allclose(out.data, v.data, atol=1e-9)


def test_pass_through_xia_model_matches_base_branches(tiny_config, rng):
    model = VariantFactory.create("xia", tiny_config, seed=4)
    model.make_pass_through()
    leader, follower = histories(rng, tiny_config)
    pred_leader, pred_follower = model(leader, follower)
    np.testing.assert_allclose(pred_leader.data, model.leader.base(leader).data, atol=1e-9)
    np.testing.assert_allclose(pred_follower.data, model.follower.base(follower).data, atol=1e-9)


def test_pass_through_refine_bank_keeps_banks(rng):
    def refiners():
        pair = (CrossInteractionAttention(4, 2, rng), CrossInteractionAttention(6, 1, rng))
        for module in pair:
            module.make_pass_through()
        return pair

    leader = AttentionState(Q=Tensor(rng.normal(size=(1, 4))), K=Tensor(rng.normal(size=(3, 4))),
                            V=Tensor(rng.normal(size=(3, 6))))
    follower = AttentionState(Q=Tensor(rng.normal(size=(1, 4))), K=Tensor(rng.normal(size=(3, 4))),
                              V=Tensor(rng.normal(size=(3, 6))))
    refined_leader, refined_follower = refine_bank(leader, follower, refiners(), refiners())
    for before, after in ((leader, refined_leader), (follower, refined_follower)):
        assert after.Q is before.Q
        np.testing.assert_allclose(after.K.data, before.K.data, atol=1e-12)
        np.testing.assert_allclose(after.V.data, before.V.data, atol=1e-12)


def test_refine_bank_rejects_mismatched_sizes(rng):
    pair = (CrossInteractionAttention(4, 2, rng), CrossInteractionAttention(6, 1, rng))
    leader = AttentionState(Q=Tensor(np.ones((1, 4))), K=Tensor(np.ones((3, 4))), V=Tensor(np.ones((3, 6))))
    follower = AttentionState(Q=Tensor(np.ones((1, 4))), K=Tensor(np.ones((2, 4))), V=Tensor(np.ones((2, 6))))
    with pytest.raises(ContractError):
        refine_bank(leader, follower, pair, pair)


def test_partner_row_only_touches_matching_refined_row(rng):
    module = CrossInteractionAttention(8, 2, rng)
    v = Tensor(rng.normal(size=(6, 8)))
    w = rng.normal(size=(6, 8))
    perturbed = w.copy()
    perturbed[3] += 1.0
    before = module(v, Tensor(w)).data
    after = module(v, Tensor(perturbed)).data
    changed = np.abs(after - before).max(axis=1) > 1e-12
    assert changed.tolist() == [False, False, False, True, False, False]


def test_xia_rejects_dimension_mismatch(rng):
    module = CrossInteractionAttention(8, 2, rng)
    with pytest.raises(ContractError):
        module(Tensor(np.ones((3, 8))), Tensor(np.ones((2, 8))))
    with pytest.raises(ContractError):
        module(Tensor(np.ones((3, 6))), Tensor(np.ones((3, 6))))


def test_self_attention_ignores_partner(rng):
    module = CrossInteractionAttention(8, 2, rng, self_attention=True)
    v = Tensor(rng.normal(size=(5, 8)))
    first = module(v, Tensor(rng.normal(size=(5, 8)))).data
    second = module(v, Tensor(rng.normal(size=(5, 8)))).data
    np.testing.assert_allclose(first, second, atol=1e-12)


def test_self_attention_equals_cross_attention_on_itself():
    v = Tensor(np.random.default_rng(0).normal(size=(5, 8)))
    self_module = CrossInteractionAttention(8, 2, np.random.default_rng(9), self_attention=True)
    cross_module = CrossInteractionAttention(8, 2, np.random.default_rng(9))
    partner = Tensor(np.ones((5, 8)))
    np.testing.assert_allclose(self_module(v, partner).data, cross_module(v, v).data, atol=1e-12)


def test_self_attention_model_ignores_partner_history(tiny_config, rng):
    model = VariantFactory.create("xia-self", tiny_config, seed=6)
    leader, follower = histories(rng, tiny_config)
    _, other_follower = histories(rng, tiny_config)
    a = model(leader, follower)[0].data
    b = model(leader, other_follower)[0].data
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_xia_leader_prediction_depends_on_follower_history(tiny_config, rng):
    model = VariantFactory.create("xia", tiny_config, seed=6)
    leader, follower = histories(rng, tiny_config)
    nudged = follower.copy()
    nudged[2, 1, 0] += 10.0
    a = model(leader, follower)[0].data
    b = model(leader, nudged)[0].data
    assert np.abs(a - b).max() > 1e-8


def test_independent_leader_ignores_follower(tiny_config, rng):
    model = VariantFactory.create("base", tiny_config, seed=6)
    leader, follower = histories(rng, tiny_config)
    _, other_follower = histories(rng, tiny_config)
    assert np.array_equal(model(leader, follower)[0].data, model(leader, other_follower)[0].data)


def test_collab_rejects_length_mismatch(tiny_config, rng):
    model = VariantFactory.create("xia", tiny_config)
    leader, follower = histories(rng, tiny_config)
    with pytest.raises(ContractError):
        model(leader, follower[1:])


def test_parameter_count_relation(tiny_config):
    counts = {kind: VariantFactory.create(kind, tiny_config).parameter_count() for kind in VariantKind}
    assert counts[VariantKind.BASE] < counts[VariantKind.XIA]
    assert counts[VariantKind.XIA] == counts[VariantKind.XIA_NO_RESIDUAL] == counts[VariantKind.XIA_SELF]


def test_concat_variant_covers_both_persons():
    model = VariantFactory.create("2pcat", ModelConfig(M=4, T=2, d_model=8, gcn_hidden=8, heads_key=2))
    assert model.couple.config.J == 36
    leader = np.random.default_rng(0).normal(scale=300.0, size=(8, 18, 3))
    pred_leader, pred_follower = model(leader, leader + 1000.0)
    assert pred_leader.shape == pred_follower.shape == (2, 18, 3)


def test_parse_variant_aliases():
    assert parse_variant("base") is VariantKind.BASE
    assert parse_variant("2pcat") is VariantKind.CONCAT
    assert parse_variant("xia-nores") is VariantKind.XIA_NO_RESIDUAL
    assert parse_variant("xia-self-attention") is VariantKind.XIA_SELF
    assert VariantKind.XIA_SELF.cli_name == "xia-self"
    with pytest.raises(UsageError):
        parse_variant("transformer")


def test_factory_seed_controls_initialization(tiny_config):
    a = VariantFactory.create("xia", tiny_config, seed=1).state_dict()
    b = VariantFactory.create("xia", tiny_config, seed=1).state_dict()
    c = VariantFactory.create("xia", tiny_config, seed=2).state_dict()
    assert all(np.array_equal(a[name], b[name]) for name in a)
    assert not all(np.array_equal(a[name], c[name]) for name in a)
