"""Named random substreams derived from one master seed."""
from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Independent generator for ``(seed, name, *extra)``; stable across runs and platforms."""
    key = [int(seed), zlib.crc32(name.encode("utf-8")), *map(int, extra)]
    return np.random.default_rng(np.random.SeedSequence(key))


def subseed(seed: int, name: str, *extra: int) -> int:
    """Integer seed for APIs that want one (e.g. scikit-learn's ``random_state``)."""
    return int(substream(seed, name, *extra).integers(0, 2**31 - 1))
