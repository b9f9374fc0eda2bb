"""Deterministic seed derivation.

Every random decision in the pipeline draws from a generator seeded through
``derive_seed``, so reruns and re-ordered parallel execution reproduce the
same artifacts bit for bit.  Python's built-in ``hash`` is salted per process
and must not be used here.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK = (1 << 63) - 1


def derive_seed(*parts: object) -> int:
    """Map an ordered tuple of identifiers to a stable 63-bit seed."""
    text = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & _MASK


def spawn_rng(*parts: object) -> np.random.Generator:
    """Fresh generator for the stream identified by ``parts``."""
    return np.random.default_rng(derive_seed(*parts))
