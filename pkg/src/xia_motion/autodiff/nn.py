from collections import OrderedDict
from typing import Iterator, Mapping, Tuple

import numpy as np

from ..utils.common import CompatibilityError
from .tensor import Tensor, matmul, tanh


class Module:
    """
    Container of named parameter tensors and child modules.

    Assigning a `Tensor` attribute registers a parameter, assigning a `Module`
    registers a child. Parameter names are dotted paths ("encoder.fc1.weight").
    """

    def __init__(self):
        object.__setattr__(self, "_params", OrderedDict())
        object.__setattr__(self, "_children", OrderedDict())

    def __setattr__(self, name, value):
        if isinstance(value, Tensor):
            self._params[name] = None
        elif isinstance(value, Module):
            self._children[name] = None
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name in self._params:
            yield prefix + name, getattr(self, name)
        for name in self._children:
            yield from getattr(self, name).named_parameters(prefix + name + ".")

    def parameters(self) -> list:
        return [tensor for _, tensor in self.named_parameters()]

    def parameter_count(self) -> int:
        return int(sum(tensor.size for tensor in self.parameters()))

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((name, tensor.numpy()) for name, tensor in self.named_parameters())

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        """Replace every parameter. Names and shapes must match exactly."""
        expected = OrderedDict((name, tensor.shape) for name, tensor in self.named_parameters())
        missing = [name for name in expected if name not in state]
        unexpected = [name for name in state if name not in expected]
        if missing or unexpected:
            raise CompatibilityError(
                f"parameter names differ: missing {missing[:5]}, unexpected {unexpected[:5]}"
            )
        for name, shape in expected.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != shape:
                raise CompatibilityError(f"parameter {name}: expected shape {shape}, got {value.shape}")
            self.set_parameter(name, Tensor(value, name=name))

    def set_parameter(self, dotted: str, tensor: Tensor) -> None:
        """Bind `tensor` as the parameter at dotted path (no shape check)."""
        owner: Module = self
        *path, leaf = dotted.split(".")
        for part in path:
            owner = getattr(owner, part)
        object.__setattr__(owner, leaf, tensor)


def uniform_init(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int,
                 gain: float = 1.0) -> np.ndarray:
    """Uniform in +-gain/sqrt(fan_in)."""
    bound = gain / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Linear(Module):
    """
    Affine map y = x W + b applied to the rows of x.

    The bias is added as ones(m, 1) @ b so that only equal-shape
    broadcasting is ever needed.
    """

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator,
                 gain: float = 1.0):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Tensor(uniform_init(rng, (in_features, out_features), in_features, gain))
        self.bias = Tensor(uniform_init(rng, (1, out_features), in_features, gain))

    def __call__(self, x: Tensor) -> Tensor:
        ones = Tensor(np.ones((x.shape[0], 1)))
        return matmul(x, self.weight) + matmul(ones, self.bias)

    def zero_(self) -> None:
        self.weight = Tensor(np.zeros(self.weight.shape))
        self.bias = Tensor(np.zeros(self.bias.shape))


class MLP(Module):
    """Two-layer perceptron: fc2(tanh(fc1(x)))."""

    def __init__(self, in_features: int, hidden: int, out_features: int,
                 rng: np.random.Generator):
        super().__init__()
        self.fc1 = Linear(in_features, hidden, rng)
        self.fc2 = Linear(hidden, out_features, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(tanh(self.fc1(x)))
