"""Central-finite-difference gradient verification."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ContractError, NumericError
from .params import ParamStore


def grad_check(fn, params: ParamStore, eps: float = 1e-3) -> float:
    """Max relative error between fn's analytic gradients and finite differences.

    fn(params) must return (scalar loss, grads dict) deterministically.
    Every parameter entry is perturbed by +/- eps; the relative error is
    |a - n| / max(|a|, |n|, 1e-8). Requires float64 parameters.
    """
    if params.dtype != np.float64:
        raise ContractError("grad_check requires a float64 ParamStore")

    loss, grads = fn(params)
    if not math.isfinite(float(loss)):
        raise NumericError(f"non-finite loss {loss!r}")

    worst = 0.0
    for name in params.names():
        arr = params[name]
        analytic = np.asarray(grads[name], dtype=np.float64)
        if analytic.shape != arr.shape:
            raise ContractError(f"gradient shape mismatch for {name!r}")
        flat = arr.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi, _ = fn(params)
            flat[i] = orig - eps
            lo, _ = fn(params)
            flat[i] = orig
            if not (math.isfinite(float(hi)) and math.isfinite(float(lo))):
                raise NumericError(f"non-finite loss while perturbing {name!r}")
            numeric = (float(hi) - float(lo)) / (2.0 * eps)
            a = float(analytic.reshape(-1)[i])
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, rel)
    return worst
