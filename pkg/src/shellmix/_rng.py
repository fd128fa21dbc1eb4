"""Named random streams derived from one 64-bit seed.

``stream(seed, "pass", 3)`` always yields the same generator, independent of
which other streams were drawn before it.
"""
import zlib

import numpy as np


def _word(name):
    if isinstance(name, (int, np.integer)):
        return int(name) & 0xFFFFFFFF
    return zlib.crc32(str(name).encode("utf-8"))


def stream(seed, *names):
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    entropy = [seed & 0xFFFFFFFF, seed >> 32]
    for name in names:
        # tag strings and ints differently so stream(1, "2") != stream(1, 2)
        entropy.extend((1 if isinstance(name, (int, np.integer)) else 2, _word(name)))
    return np.random.default_rng(np.random.SeedSequence(entropy))
