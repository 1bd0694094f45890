import hashlib
from typing import Union

import numpy as np

SeedKey = Union[int, str]


def derive_seed(master: int, *keys: SeedKey) -> int:
    """
    Derive a 63-bit child seed from a master seed and a sequence of keys.

    The derivation hashes the textual form of the keys, so it is stable
    across runs, platforms and Python hash randomization.

    Parameters
    ----------
    master : int
        The master seed.
    *keys : int or str
        Identifiers of the child stream (instance id, method name, ...).

    Returns
    -------
    int
        A seed in [0, 2**63), so it fits a signed 64-bit column.
    """
    text = "|".join(str(part) for part in (master, *keys))
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


def make_rng(seed: int, *keys: SeedKey) -> np.random.Generator:
    """
    Build a PCG64 generator for ``seed``, optionally on a derived stream.

    Parameters
    ----------
    seed : int
        Non-negative seed.
    *keys : int or str
        Optional keys passed to :func:`derive_seed`.

    Returns
    -------
    np.random.Generator
    """
    if keys:
        seed = derive_seed(seed, *keys)
    if seed < 0:
        raise ValueError(f"Seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def sigmoid(z: float) -> float:
    """Numerically stable logistic function."""
    if z >= 0:
        return float(1.0 / (1.0 + np.exp(-z)))
    ez = np.exp(z)
    return float(ez / (1.0 + ez))
