"""Named parameter arrays with fixed shapes."""

from __future__ import annotations

from typing import Iterator, Optional

import numpy as np

from ..errors import ContractError


class ParamStore:
    """Ordered name -> array map. Names are unique, shapes immutable.

    Training uses float32; gradient checks run on a float64 copy().
    """

    def __init__(self, dtype=np.float32):
        self.dtype = np.dtype(dtype)
        self._arrays: dict[str, np.ndarray] = {}

    def add(self, name: str, array: np.ndarray) -> None:
        if name in self._arrays:
            raise ContractError(f"duplicate parameter name {name!r}")
        self._arrays[name] = np.ascontiguousarray(array, dtype=self.dtype)

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __setitem__(self, name: str, array: np.ndarray) -> None:
        old = self._arrays[name]
        array = np.asarray(array, dtype=self.dtype)
        if array.shape != old.shape:
            raise ContractError(
                f"shape change for {name!r}: {old.shape} -> {array.shape}"
            )
        self._arrays[name] = array

    def __contains__(self, name: str) -> bool:
        return name in self._arrays

    def __iter__(self) -> Iterator[str]:
        return iter(self._arrays)

    def __len__(self) -> int:
        return len(self._arrays)

    def names(self) -> list[str]:
        return list(self._arrays)

    def items(self):
        return self._arrays.items()

    def copy(self, dtype=None) -> "ParamStore":
        out = ParamStore(dtype=dtype or self.dtype)
        for name, arr in self._arrays.items():
            out.add(name, arr)
        return out

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {name: np.zeros_like(arr) for name, arr in self._arrays.items()}

    def n_parameters(self) -> int:
        return sum(a.size for a in self._arrays.values())


# Initialization: fan-in-scaled uniform for dense/conv weights, 0.02-scaled
# normal for embedding tables, ones-plus-noise for position gates.

def init_dense(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    s = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-s, s, size=(fan_in, fan_out))


def init_conv(rng: np.random.Generator, kh: int, kw: int, cin: int, cout: int) -> np.ndarray:
    s = 1.0 / np.sqrt(kh * kw * cin)
    return rng.uniform(-s, s, size=(kh, kw, cin, cout))


def init_embedding(rng: np.random.Generator, vocab: int, dim: int) -> np.ndarray:
    return 0.02 * rng.standard_normal(size=(vocab, dim))


def init_gates(rng: np.random.Generator, length: int, dim: int) -> np.ndarray:
    return 1.0 + 0.02 * rng.standard_normal(size=(length, dim))


def make_rng(seed_sequence: Optional[np.random.SeedSequence] = None, seed: int = 0):
    ss = seed_sequence if seed_sequence is not None else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.PCG64(ss))
