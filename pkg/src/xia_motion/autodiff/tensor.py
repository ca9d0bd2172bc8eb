"""
Dense float64 tensors with define-by-run reverse-mode differentiation.

Tensors are immutable. Differentiable ops executed while a `GradTape` is
active (and at least one input is watched or derived from a watched tensor)
are recorded on that tape; `GradTape.backward` replays them in reverse.
Broadcasting is limited to scalar-with-tensor and equal shapes.
"""

import logging
import threading
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..utils.common import ContractError, DimensionError, NumericError

logger = logging.getLogger(__name__)

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]
Vjp = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]

_local = threading.local()


class Tensor:
    """Immutable n-dimensional float64 array."""

    __slots__ = ("_data", "name")
    __array_priority__ = 100

    def __init__(self, data: ArrayLike, name: Optional[str] = None):
        if isinstance(data, Tensor):
            data = data._data
        array = np.array(data, dtype=np.float64)
        if any(extent <= 0 for extent in array.shape):
            raise DimensionError(f"tensor extents must be positive, got {array.shape}")
        array.setflags(write=False)
        self._data = array
        self.name = name

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def shape(self) -> Tuple[int, ...]:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    def numpy(self) -> np.ndarray:
        return self._data.copy()

    def item(self) -> float:
        if self._data.size != 1:
            raise DimensionError(f"item() needs a single value, tensor has shape {self.shape}")
        return float(self._data.reshape(()))

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label})"

    # Arithmetic sugar
    def __add__(self, other): return add(self, other)
    def __radd__(self, other): return add(other, self)
    def __sub__(self, other): return sub(self, other)
    def __rsub__(self, other): return sub(other, self)
    def __mul__(self, other): return mul(self, other)
    def __rmul__(self, other): return mul(other, self)
    def __neg__(self): return scale(self, -1.0)
    def __matmul__(self, other): return matmul(self, other)
    def __getitem__(self, index): return take(self, index)

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def sum(self, axis: Optional[int] = None) -> "Tensor":
        return reduce_sum(self, axis)

    def mean(self, axis: Optional[int] = None) -> "Tensor":
        return reduce_mean(self, axis)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)


class _Record:
    __slots__ = ("op", "output", "inputs", "vjp")

    def __init__(self, op: str, output: Tensor, inputs: Tuple[Tensor, ...], vjp: Vjp):
        self.op = op
        self.output = output
        self.inputs = inputs
        self.vjp = vjp


class Gradients:
    """Gradients of one backward pass, indexed by leaf tensor."""

    def __init__(self, leaves: List[Tensor], grads: Dict[int, np.ndarray]):
        self._leaves = leaves
        self._grads = grads

    def __getitem__(self, leaf: Tensor) -> np.ndarray:
        try:
            return self._grads[id(leaf)]
        except KeyError:
            raise ContractError(f"{leaf!r} is not a watched leaf of this tape") from None

    def __len__(self) -> int:
        return len(self._leaves)

    def items(self) -> Iterable[Tuple[Tensor, np.ndarray]]:
        for leaf in self._leaves:
            yield leaf, self._grads[id(leaf)]


class GradTape:
    """
    Ordered record of executed differentiable ops plus a registry of leaves.

    Usage:
        with GradTape() as tape:
            tape.watch(w)
            loss = (w * w).sum()
        grads = tape.backward(loss)
    """

    def __init__(self):
        self._records: List[_Record] = []
        self._leaves: List[Tensor] = []
        self._tracked: Dict[int, Tensor] = {}

    def __enter__(self) -> "GradTape":
        _stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _stack()
        if stack and stack[-1] is self:
            stack.pop()

    def watch(self, *tensors: Tensor) -> None:
        for tensor in tensors:
            if id(tensor) not in self._tracked:
                self._tracked[id(tensor)] = tensor
                self._leaves.append(tensor)

    @property
    def leaves(self) -> List[Tensor]:
        return list(self._leaves)

    def __len__(self) -> int:
        return len(self._records)

    def is_tracked(self, tensor: Tensor) -> bool:
        return id(tensor) in self._tracked

    def record(self, op: str, output: Tensor, inputs: Tuple[Tensor, ...], vjp: Vjp) -> None:
        self._records.append(_Record(op, output, inputs, vjp))
        self._tracked[id(output)] = output

    def backward(self, loss: Tensor) -> Gradients:
        """Accumulate d(loss)/d(leaf) for every watched leaf."""
        if loss.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")

        grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for record in reversed(self._records):
            upstream = grads.get(id(record.output))
            if upstream is None:
                continue
            for tensor, grad in zip(record.inputs, record.vjp(upstream)):
                if grad is None or not self.is_tracked(tensor):
                    continue
                key = id(tensor)
                grads[key] = grads[key] + grad if key in grads else grad

        result = {}
        for leaf in self._leaves:
            grad = grads.get(id(leaf))
            result[id(leaf)] = np.zeros_like(leaf.data) if grad is None else np.asarray(grad).reshape(leaf.shape)
        logger.debug(f"Backward pass over {len(self._records)} ops, {len(self._leaves)} leaves")
        return Gradients(list(self._leaves), result)


def _stack() -> List[GradTape]:
    if not hasattr(_local, "tapes"):
        _local.tapes = []
    return _local.tapes


def active_tape() -> Optional[GradTape]:
    stack = _stack()
    return stack[-1] if stack else None


def as_tensor(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _emit(op: str, data: np.ndarray, inputs: Tuple[Tensor, ...], vjp: Vjp) -> Tensor:
    if not np.all(np.isfinite(data)):
        raise NumericError(f"{op} produced non-finite values")
    out = Tensor(data)
    tape = active_tape()
    if tape is not None and any(tape.is_tracked(t) for t in inputs):
        tape.record(op, out, inputs, vjp)
    return out


def _is_scalar(tensor: Tensor) -> bool:
    return tensor.ndim == 0


def _binary_shapes(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape and not (_is_scalar(a) or _is_scalar(b)):
        raise DimensionError(f"{op}: incompatible shapes {a.shape} and {b.shape}")


def _unbroadcast(grad: np.ndarray, like: Tensor) -> np.ndarray:
    return np.asarray(grad.sum()) if _is_scalar(like) and grad.ndim else grad


# Elementwise ops

def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _binary_shapes("add", a, b)
    return _emit("add", a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a), _unbroadcast(g, b)))


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _binary_shapes("sub", a, b)
    return _emit("sub", a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a), _unbroadcast(-g, b)))


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _binary_shapes("mul", a, b)
    return _emit("mul", a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a), _unbroadcast(g * a.data, b)))


def scale(x: ArrayLike, factor: float) -> Tensor:
    x = as_tensor(x)
    factor = float(factor)
    return _emit("scale", x.data * factor, (x,), lambda g: (g * factor,))


def tanh(x: ArrayLike) -> Tensor:
    x = as_tensor(x)
    y = np.tanh(x.data)
    return _emit("tanh", y, (x,), lambda g: (g * (1.0 - y * y),))


def relu(x: ArrayLike) -> Tensor:
    x = as_tensor(x)
    mask = (x.data > 0).astype(np.float64)
    return _emit("relu", x.data * mask, (x,), lambda g: (g * mask,))


_ELEMENTWISE = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "tanh": tanh,
    "relu": relu,
    "scale": scale,
}


def elementwise(op: str, *args) -> Tensor:
    """Dispatch one of add, sub, mul, tanh, relu, scale by name."""
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ContractError(f"unknown elementwise op {op!r}; expected one of {sorted(_ELEMENTWISE)}") from None
    return fn(*args)


# Linear algebra and reductions

def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return _emit("matmul", a.data @ b.data, (a, b),
                 lambda g: (g @ b.data.T, a.data.T @ g))


def softmax(x: ArrayLike, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    if x.ndim == 0 or not -x.ndim <= axis < x.ndim:
        raise DimensionError(f"softmax: axis {axis} invalid for shape {x.shape}")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    y = exp / exp.sum(axis=axis, keepdims=True)

    def vjp(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return _emit("softmax", y, (x,), vjp)


def reduce_sum(x: ArrayLike, axis: Optional[int] = None) -> Tensor:
    x = as_tensor(x)
    if axis is None:
        return _emit("sum", np.asarray(x.data.sum()), (x,),
                     lambda g: (np.broadcast_to(g, x.shape).copy(),))
    axis = _check_axis("sum", x, axis)
    return _emit("sum", x.data.sum(axis=axis), (x,),
                 lambda g: (np.broadcast_to(np.expand_dims(g, axis), x.shape).copy(),))


def reduce_mean(x: ArrayLike, axis: Optional[int] = None) -> Tensor:
    x = as_tensor(x)
    count = x.size if axis is None else x.shape[_check_axis("mean", x, axis)]
    return scale(reduce_sum(x, axis), 1.0 / count)


def norm(x: ArrayLike, axis: int = -1) -> Tensor:
    """Euclidean norm along `axis`; the gradient at a zero vector is zero."""
    x = as_tensor(x)
    axis = _check_axis("norm", x, axis)
    n = np.sqrt((x.data * x.data).sum(axis=axis))

    def vjp(g):
        n_kept = np.expand_dims(n, axis)
        safe = np.where(n_kept > 0, n_kept, 1.0)
        return (np.where(n_kept > 0, np.expand_dims(g, axis) * x.data / safe, 0.0),)

    return _emit("norm", n, (x,), vjp)


def _check_axis(op: str, x: Tensor, axis: int) -> int:
    if not -x.ndim <= axis < x.ndim:
        raise DimensionError(f"{op}: axis {axis} invalid for shape {x.shape}")
    return axis % x.ndim


# Shape ops

def reshape(x: ArrayLike, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    try:
        data = x.data.reshape(tuple(shape))
    except ValueError as e:
        raise DimensionError(f"reshape: {e}") from None
    return _emit("reshape", data, (x,), lambda g: (g.reshape(x.shape),))


def transpose(x: ArrayLike, axes: Optional[Sequence[int]] = None) -> Tensor:
    x = as_tensor(x)
    axes = tuple(reversed(range(x.ndim))) if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _emit("transpose", x.data.transpose(axes), (x,), lambda g: (g.transpose(inverse),))


def take(x: ArrayLike, index) -> Tensor:
    """Basic or integer-array indexing, e.g. `x[:, 0:8]` or `x[3]`."""
    x = as_tensor(x)
    try:
        data = np.array(x.data[index])
    except IndexError as e:
        raise DimensionError(f"index: {e}") from None

    def vjp(g):
        grad = np.zeros(x.shape)
        np.add.at(grad, index, g)
        return (grad,)

    return _emit("index", data, (x,), vjp)


def concat(tensors: Sequence[ArrayLike], axis: int = 0) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    if not tensors:
        raise ContractError("concat needs at least one tensor")
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise DimensionError(f"concat: {e}") from None
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return _emit("concat", data, tensors, lambda g: tuple(np.split(g, bounds, axis=axis)))


def stack(tensors: Sequence[ArrayLike], axis: int = 0) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    if not tensors:
        raise ContractError("stack needs at least one tensor")
    try:
        data = np.stack([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise DimensionError(f"stack: {e}") from None
    return _emit("stack", data, tensors,
                 lambda g: tuple(np.take(g, i, axis=axis) for i in range(len(tensors))))
