"""Deterministic substream derivation.

Every random draw in an experiment comes from a generator seeded by
``derive_seed(master, *labels)``, so the draws of one trial never depend on
how many other trials ran before it or on which worker ran it.
"""
import hashlib

import numpy as np


def derive_seed(master: int, *labels) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(repr((int(master),) + tuple(labels)).encode())
    return int.from_bytes(h.digest(), "little")


def stream(seed: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.default_rng(seed)
