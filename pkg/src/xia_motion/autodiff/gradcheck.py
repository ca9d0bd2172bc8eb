from typing import Callable

import numpy as np

from ..utils.common import ContractError
from .tensor import GradTape, Tensor


def grad_check(f: Callable[[Tensor], Tensor], x: Tensor, eps: float = 1e-5) -> float:
    """
    Compare the tape gradient of scalar f at x with central differences.

    Returns max over coordinates of |analytic - numeric| / max(1, |analytic|).
    """
    if eps <= 0:
        raise ContractError(f"eps must be positive, got {eps}")

    with GradTape() as tape:
        tape.watch(x)
        value = f(x)
    analytic = tape.backward(value)[x]

    base = x.numpy()
    numeric = np.zeros_like(base)
    flat = base.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + eps
        upper = f(Tensor(base)).item()
        flat[i] = original - eps
        lower = f(Tensor(base)).item()
        flat[i] = original
        numeric.reshape(-1)[i] = (upper - lower) / (2.0 * eps)

    return float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))))
