"""Minimal differentiable-model substrate: parameter stores, layer ops with
hand-written backward passes, optimizers, gradient checking, and versioned
binary checkpoints."""

from .params import ParamStore, init_conv, init_dense, init_embedding, init_gates
from .optim import OptimizerState, adam, optimizer_step, sgd_momentum
from .gradcheck import grad_check
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "ParamStore",
    "init_conv",
    "init_dense",
    "init_embedding",
    "init_gates",
    "OptimizerState",
    "adam",
    "sgd_momentum",
    "optimizer_step",
    "grad_check",
    "save_checkpoint",
    "load_checkpoint",
]
