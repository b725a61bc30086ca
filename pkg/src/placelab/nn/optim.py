"""Stochastic-gradient optimizers over a ParamStore."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError
from .params import ParamStore


@dataclass
class OptimizerState:
    kind: str  # sgd-momentum | adam
    lr: float
    step: int = 0
    hyper: dict = field(default_factory=dict)
    slots: dict = field(default_factory=dict)  # name -> {slot: array}


def sgd_momentum(lr: float, momentum: float = 0.9) -> OptimizerState:
    return OptimizerState(kind="sgd-momentum", lr=lr, hyper={"momentum": momentum})


def adam(lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> OptimizerState:
    return OptimizerState(kind="adam", lr=lr, hyper={"beta1": beta1, "beta2": beta2, "eps": eps})


def optimizer_step(
    state: OptimizerState,
    params: ParamStore,
    grads: dict[str, np.ndarray],
    names: list[str] | None = None,
) -> tuple[OptimizerState, ParamStore]:
    """One update over `names` (default: every gradient key). In-place.

    Moment arrays are allocated lazily per parameter and shape-checked
    against it on every step.
    """
    state.step += 1
    update = names if names is not None else list(grads)
    for name in update:
        g = grads[name]
        p = params[name]
        if g.shape != p.shape:
            raise ContractError(f"gradient shape {g.shape} != param shape {p.shape} for {name!r}")
        slot = state.slots.setdefault(name, {})
        if state.kind == "sgd-momentum":
            mom = state.hyper["momentum"]
            v = slot.setdefault("v", np.zeros_like(p))
            if v.shape != p.shape:
                raise ContractError(f"moment shape mismatch for {name!r}")
            v *= mom
            v += g
            params[name] = p - state.lr * v
        elif state.kind == "adam":
            b1, b2, eps = state.hyper["beta1"], state.hyper["beta2"], state.hyper["eps"]
            m = slot.setdefault("m", np.zeros_like(p))
            v = slot.setdefault("v", np.zeros_like(p))
            if m.shape != p.shape or v.shape != p.shape:
                raise ContractError(f"moment shape mismatch for {name!r}")
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            mhat = m / (1 - b1 ** state.step)
            vhat = v / (1 - b2 ** state.step)
            params[name] = p - state.lr * mhat / (np.sqrt(vhat) + eps)
        else:
            raise ContractError(f"unknown optimizer kind {state.kind!r}")
    return state, params


def optimizer_state_arrays(state: OptimizerState) -> dict[str, np.ndarray]:
    """Flatten moment arrays for checkpointing, keyed 'opt/<param>/<slot>'."""
    out = {}
    for name, slots in state.slots.items():
        for slot_name, arr in slots.items():
            out[f"opt/{name}/{slot_name}"] = arr
    return out


def restore_optimizer_arrays(state: OptimizerState, arrays: dict[str, np.ndarray]) -> None:
    for key, arr in arrays.items():
        if not key.startswith("opt/"):
            continue
        name, slot_name = key[4:].rsplit("/", 1)
        state.slots.setdefault(name, {})[slot_name] = arr.copy()
