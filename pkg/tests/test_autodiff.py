import numpy as np
import pytest

from xia_motion.autodiff import (
    Adam, GradTape, Linear, Module, Tensor, concat, elementwise, grad_check, load_checkpoint, matmul, mul,
    norm, reduce_mean, reduce_sum, relu, reshape, save_checkpoint, scale, softmax, stack, sub, take, tanh,
    transpose,
)
from xia_motion.models import CrossInteractionAttention, VariantFactory, xia
from xia_motion.services import jme_loss
from xia_motion.utils.common import CompatibilityError, ContractError, DimensionError, NumericError, ParseError


def test_matmul_examples():
    a = Tensor([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(matmul(Tensor(np.eye(2)), a).data, a.data)
    assert np.array_equal(matmul(a, Tensor([[0.0], [1.0]])).data, [[2.0], [4.0]])
    assert np.array_equal(matmul(a, Tensor(np.zeros((2, 3)))).data, np.zeros((2, 3)))


def test_matmul_rejects_mismatched_shapes():
    with pytest.raises(DimensionError):
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_elementwise_examples():
    assert np.array_equal(elementwise("relu", Tensor([-1.0, 0.0, 2.0])).data, [0.0, 0.0, 2.0])
    assert elementwise("tanh", Tensor(0.0)).item() == 0.0
    assert np.array_equal(elementwise("add", Tensor([1.0, 2.0]), Tensor([3.0, 4.0])).data, [4.0, 6.0])
    assert np.array_equal(elementwise("scale", Tensor([1.0, -2.0]), 3.0).data, [3.0, -6.0])


def test_elementwise_broadcasts_only_scalars():
    assert np.array_equal((Tensor([1.0, 2.0]) * Tensor(2.0)).data, [2.0, 4.0])
    with pytest.raises(DimensionError):
        elementwise("add", Tensor([1.0, 2.0]), Tensor([1.0, 2.0, 3.0]))
    with pytest.raises(ContractError):
        elementwise("pow", Tensor([1.0]))


def test_softmax_examples():
    np.testing.assert_allclose(softmax(Tensor([0.0, 0.0, 0.0])).data, [1 / 3] * 3, atol=1e-15)
    np.testing.assert_allclose(softmax(Tensor([0.0, np.log(3.0)])).data, [0.25, 0.75], atol=1e-15)
    shifted = softmax(Tensor([1.0, 2.0, 3.0]) + Tensor(100.0)).data
    np.testing.assert_allclose(shifted, softmax(Tensor([1.0, 2.0, 3.0])).data, atol=1e-15)


def test_softmax_rows_sum_to_one(rng):
    y = softmax(Tensor(rng.normal(size=(5, 4)) * 10), axis=0).data
    assert np.all(y >= 0)
    np.testing.assert_allclose(y.sum(axis=0), np.ones(4), atol=1e-12)


def test_backward_examples():
    w = Tensor([1.0, 2.0])
    unused = Tensor([[5.0, 6.0]])
    with GradTape() as tape:
        tape.watch(w, unused)
        loss = reduce_sum(w * w)
    grads = tape.backward(loss)
    np.testing.assert_array_equal(grads[w], [2.0, 4.0])
    np.testing.assert_array_equal(grads[unused], np.zeros((1, 2)))

    with GradTape() as tape:
        tape.watch(w)
        total = reduce_sum(w)
    np.testing.assert_array_equal(tape.backward(total)[w], [1.0, 1.0])


def test_backward_accumulates_over_every_use():
    w = Tensor([1.0, -3.0])
    with GradTape() as tape:
        tape.watch(w)
        loss = reduce_sum(w * w + w)
    np.testing.assert_array_equal(tape.backward(loss)[w], [3.0, -5.0])


def test_backward_rejects_non_scalar_loss():
    w = Tensor([1.0, 2.0])
    with GradTape() as tape:
        tape.watch(w)
        y = w * w
    with pytest.raises(ContractError):
        tape.backward(y)


def test_ops_outside_a_tape_are_not_recorded():
    w = Tensor([1.0, 2.0])
    y = reduce_sum(w * w)
    with GradTape() as tape:
        tape.watch(w)
    assert len(tape) == 0
    assert y.item() == 5.0


def test_non_finite_result_is_a_numeric_error():
    with pytest.raises(NumericError):
        scale(Tensor([1e308]), 10.0)


def _weighted(rng, shape):
    weights = Tensor(rng.uniform(-1.0, 1.0, size=shape))
    return lambda y: reduce_sum(mul(y, weights))


OPS = {
    "tanh": (lambda x: tanh(x), (3, 4)),
    "relu": (lambda x: relu(x), (3, 4)),
    "sub": (lambda x: sub(x, x * x), (3, 4)),
    "softmax": (lambda x: softmax(x, axis=0), (3, 4)),
    "softmax_rows": (lambda x: softmax(x, axis=1), (3, 4)),
    "matmul": (lambda x: matmul(x, transpose(x)), (3, 4)),
    "norm": (lambda x: norm(x, axis=-1), (3, 4)),
    "mean": (lambda x: reduce_mean(x, axis=0), (3, 4)),
    "reshape": (lambda x: reshape(x, (4, 3)), (3, 4)),
    "transpose": (lambda x: transpose(x), (3, 4)),
    "take": (lambda x: take(x, (slice(None), slice(1, 3))), (3, 4)),
    "concat": (lambda x: concat([x, tanh(x)], axis=1), (3, 4)),
    "stack": (lambda x: stack([x, scale(x, 2.0)], axis=0), (3, 4)),
}


@pytest.mark.parametrize("name", sorted(OPS))
def test_grad_check_every_op(name, rng):
    op, shape = OPS[name]
    x = Tensor(rng.uniform(-1.0, 1.0, size=shape))
    out_shape = op(x).shape
    readout = _weighted(rng, out_shape)
    assert grad_check(lambda t: readout(op(t)), x) < 1e-5


def test_grad_check_square_and_linear(rng):
    x = Tensor(rng.uniform(-2.0, 2.0, size=(5,)))
    assert grad_check(lambda t: reduce_sum(t * t), x) < 1e-6
    w = Tensor(rng.uniform(-1.0, 1.0, size=(5,)))
    assert grad_check(lambda t: reduce_sum(mul(t, w)), x) < 1e-9


def test_grad_check_rejects_bad_eps():
    with pytest.raises(ContractError):
        grad_check(lambda t: reduce_sum(t), Tensor([1.0]), eps=0.0)


def _collab_loss_check(model, parameter, rng, frames=9):
    leader = rng.normal(scale=200.0, size=(frames, model.config.J, 3))
    follower = rng.normal(scale=200.0, size=(frames, model.config.J, 3))
    target_l = rng.normal(scale=200.0, size=(model.config.T, model.config.J, 3))
    target_f = rng.normal(scale=200.0, size=(model.config.T, model.config.J, 3))
    initial = dict(model.named_parameters())[parameter]

    def loss(value):
        model.set_parameter(parameter, value)
        pred_l, pred_f = model(leader, follower)
        return jme_loss(pred_l, pred_f, target_l, target_f)

    return grad_check(loss, Tensor(initial.numpy()))


def test_base_model_loss_gradient(tiny_config, rng):
    model = VariantFactory.create("base", tiny_config, seed=3)
    assert _collab_loss_check(model, "leader.gcn.gc0.adjacency", rng) < 1e-5
    assert _collab_loss_check(model, "follower.key_encoder.fc1.weight", rng) < 1e-5


def test_xia_model_loss_gradient(tiny_config, rng):
    model = VariantFactory.create("xia", tiny_config, seed=3)
    assert _collab_loss_check(model, "leader.key_refiner.mha.query.weight", rng) < 1e-5
    assert _collab_loss_check(model, "follower.key_refiner.fc1.weight", rng) < 1e-5


def test_xia_gradient_for_every_parameter(rng):
    module = CrossInteractionAttention(6, 2, rng)
    v, w = Tensor(rng.normal(size=(3, 6))), Tensor(rng.normal(size=(3, 6)))
    parameters = dict(module.named_parameters())
    # query, key, value and output projections, then the two FC layers
    assert sorted(parameters) == sorted(f"{layer}.{field}" for layer in (
        "mha.query", "mha.key", "mha.value", "mha.output", "fc1", "fc2") for field in ("weight", "bias"))

    for name, initial in parameters.items():
        def loss(value):
            module.set_parameter(name, value)
            refined = xia(v, w, module)
            return reduce_sum(mul(refined, refined))

        error = grad_check(loss, Tensor(initial.numpy()))
        module.set_parameter(name, initial)
        assert error < 1e-5, name


def test_linear_layer_shapes(rng):
    layer = Linear(3, 2, rng)
    assert layer(Tensor(np.ones((4, 3)))).shape == (4, 2)
    layer.zero_()
    assert np.array_equal(layer(Tensor(np.ones((4, 3)))).data, np.zeros((4, 2)))


def test_adam_step_reduces_quadratic(rng):
    class Quadratic(Module):
        def __init__(self):
            super().__init__()
            self.w = Tensor(rng.normal(size=(3,)))

    module = Quadratic()
    optimizer = Adam(module, lr=0.1)
    losses = []
    for _ in range(20):
        with GradTape() as tape:
            tape.watch(module.w)
            loss = reduce_sum(module.w * module.w)
        optimizer.step(tape.backward(loss))
        losses.append(loss.item())
    assert losses[-1] < losses[0]


def test_checkpoint_round_trip(tmp_path, tiny_config):
    model = VariantFactory.create("xia", tiny_config, seed=5)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, model.state_dict(), {"variant": "xia"})

    state, metadata = load_checkpoint(path)
    assert metadata == {"variant": "xia"}
    assert list(state) == list(model.state_dict())
    for name, value in model.state_dict().items():
        assert np.array_equal(state[name], value)


def test_checkpoint_rejects_foreign_file(tmp_path):
    path = tmp_path / "other.ckpt"
    path.write_bytes(b"hello\nend\n")
    with pytest.raises(ParseError) as excinfo:
        load_checkpoint(path)
    assert excinfo.value.line == 1


def test_load_state_dict_rejects_other_shapes(tiny_config):
    model = VariantFactory.create("base", tiny_config)
    other = VariantFactory.create("base", tiny_config.model_copy(update={"d_model": 16}))
    with pytest.raises(CompatibilityError):
        model.load_state_dict(other.state_dict())


@pytest.mark.parametrize("metadata", [{"model name": "xia"}, {"note": "two\nlines"}])
def test_checkpoint_rejects_unrepresentable_metadata(tmp_path, tiny_config, metadata):
    model = VariantFactory.create("base", tiny_config)
    with pytest.raises(ContractError) as excinfo:
        save_checkpoint(tmp_path / "model.ckpt", model.state_dict(), metadata)
    assert excinfo.value.exit_code == 4
    assert list(tmp_path.iterdir()) == []
