import logging
from typing import Dict

import numpy as np

from .nn import Module
from .tensor import Gradients

logger = logging.getLogger(__name__)


class Adam:
    """
    Adam optimizer over a module's parameters.

    Parameters are immutable tensors, so each step builds a new state dict and
    loads it back into the module.
    """

    def __init__(self, module: Module, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.module = module
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.steps = 0
        self._m: Dict[str, np.ndarray] = {}
        self._v: Dict[str, np.ndarray] = {}

    def step(self, grads: Gradients) -> None:
        self.steps += 1
        correction1 = 1.0 - self.beta1 ** self.steps
        correction2 = 1.0 - self.beta2 ** self.steps

        updated = {}
        for name, param in self.module.named_parameters():
            grad = grads[param]
            m = self._m.get(name, np.zeros_like(grad))
            v = self._v.get(name, np.zeros_like(grad))
            m = self.beta1 * m + (1.0 - self.beta1) * grad
            v = self.beta2 * v + (1.0 - self.beta2) * grad * grad
            self._m[name], self._v[name] = m, v

            m_hat = m / correction1
            v_hat = v / correction2
            updated[name] = param.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

        self.module.load_state_dict(updated)
