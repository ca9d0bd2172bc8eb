from .tensor import (
    Tensor, GradTape, Gradients, active_tape, as_tensor,
    add, sub, mul, scale, tanh, relu, elementwise,
    matmul, softmax, reduce_sum, reduce_mean, norm,
    reshape, transpose, take, concat, stack,
)
from .nn import Module, Linear, MLP, uniform_init
from .optim import Adam
from .gradcheck import grad_check
from .checkpoint import save_checkpoint, load_checkpoint
