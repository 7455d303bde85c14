"""Counter-based random streams.

Two flavours are used throughout the package:

* per-particle draws, computed as a pure function of a 64-bit lineage key and
  a small counter (``splitmix64`` finalizer applied to ``key + gamma * counter``).
  These are vectorized over numpy arrays of keys, so the value a particle gets
  never depends on how many other particles exist, how they are ordered or
  which of them were pruned.
* per-task generators (:func:`task_generator`), numpy ``Philox`` bit generators
  whose key is derived from ``(seed, *ids)``.  Used for work that is naturally
  sequential inside one task (atom draws, rejection trials, resampling).
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_CHILD_SALT = np.uint64(0xD1B54A32D192ED03)
_ROOT_SALT = np.uint64(0x8CB92BA72F3D8DD7)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

MASK64 = (1 << 64) - 1


def mix64(z):
    """splitmix64 output function, elementwise on uint64 arrays."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def root_keys(seed: int, replicas) -> np.ndarray:
    """Lineage keys of the root particle of each replica index."""
    base = mix64(np.array([seed & MASK64], dtype=np.uint64) ^ _ROOT_SALT)
    idx = np.asarray(replicas, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(mix64(base + idx * GAMMA) ^ _ROOT_SALT)


def child_keys(parent_keys: np.ndarray, child_index: np.ndarray) -> np.ndarray:
    """Key of the ``child_index``-th child of each parent key."""
    idx = np.asarray(child_index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(mix64(parent_keys ^ _CHILD_SALT) + idx + np.uint64(1))


def bits(keys: np.ndarray, counter) -> np.ndarray:
    """Raw 64-bit draw number ``counter`` of each key."""
    c = np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(keys + (c + np.uint64(1)) * GAMMA)


def uniform(keys: np.ndarray, counter) -> np.ndarray:
    """Uniform draws on the open interval (0, 1)."""
    h = bits(keys, counter) >> _S11
    return (h.astype(np.float64) + 0.5) * _INV53


def normal(keys: np.ndarray, counter) -> np.ndarray:
    return ndtri(uniform(keys, counter))


def exponential(keys: np.ndarray, counter) -> np.ndarray:
    return -np.log(uniform(keys, counter))


def derive_key(seed: int, *ids: int) -> int:
    """Fold integer ids into a 64-bit key (used to key Philox task streams)."""
    h = mix64(np.array([seed & MASK64], dtype=np.uint64))
    for i in ids:
        with np.errstate(over="ignore"):
            h = mix64(h + np.uint64(i & MASK64) * GAMMA + np.uint64(1))
    return int(h[0])


def task_generator(seed: int, *ids: int) -> np.random.Generator:
    """Independent counter-based generator for the task identified by ``ids``."""
    k1 = derive_key(seed, *ids)
    k2 = derive_key(seed ^ 0x5851F42D4C957F2D, *ids)
    return np.random.Generator(np.random.Philox(key=[k1, k2]))
