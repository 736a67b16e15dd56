"""Platform-stable 64-bit hashing.

``hash_ints`` is FNV-1a applied to 64-bit words instead of bytes: start from
the offset basis 0xcbf29ce484222325 and, for each integer ``v`` (masked to its
64-bit two's complement), do ``h = ((h ^ v) * 0x100000001b3) mod 2**64``.
A final avalanche (``h ^= h >> 33; h *= 0xff51afd7ed558ccd; h ^= h >> 33``)
mixes the low bits used when folding into a bit vector.

``fnv1a64`` is the textbook byte-wise FNV-1a, used for text digests.
"""

from __future__ import annotations

from typing import Iterable

MASK64 = (1 << 64) - 1
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_AVALANCHE = 0xFF51AFD7ED558CCD


def fnv1a64(data: bytes, h: int = FNV_OFFSET) -> int:
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & MASK64
    return h


def hash_ints(values: Iterable[int]) -> int:
    h = FNV_OFFSET
    for v in values:
        h = ((h ^ (v & MASK64)) * FNV_PRIME) & MASK64
    h ^= h >> 33
    h = (h * _AVALANCHE) & MASK64
    h ^= h >> 33
    return h
