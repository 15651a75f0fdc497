"""Counter-based coin streams built on the splitmix64 output function.

Every path owns a 64-bit seed. The coin for step ``k`` (the move producing
``X_{(k+1)h}``) is bit ``k % 64`` of the splitmix64 output number
``k // 64 + 1`` of that seed, i.e. ``mix64(seed + (k // 64 + 1) * GOLDEN)``.
Random access by ``(seed, k)`` makes the stream identical across the pure
Python simulator, the numpy engine and the compiled kernels.
"""

import numba as nb
import numpy as np

RNG_NAME = "splitmix64-counter"

GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def derive_seed(base_seed: int, index: int) -> int:
    """Seed of path ``index``: the ``index + 1``-th splitmix64 output of ``base_seed``."""
    return mix64((base_seed & _MASK) + (index + 1) * GOLDEN)


def derive_seeds(base_seed: int, n: int) -> np.ndarray:
    i = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64_array(np.uint64(base_seed & _MASK) + i * np.uint64(GOLDEN))


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def coin_word(seed: int, block: int) -> int:
    return mix64((seed & _MASK) + (block + 1) * GOLDEN)


def coin(seed: int, k: int) -> int:
    """Return +1 or -1 for step ``k`` of the stream ``seed``."""
    return 1 if (coin_word(seed, k >> 6) >> (k & 63)) & 1 else -1


def coin_words(seeds: np.ndarray, block: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        return mix64_array(seeds + np.uint64(block + 1) * np.uint64(GOLDEN))


@nb.njit(inline="always")
def nb_mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


@nb.njit(inline="always")
def nb_coin_word(seed, block):
    return nb_mix64(seed + (np.uint64(block) + np.uint64(1)) * np.uint64(GOLDEN))
