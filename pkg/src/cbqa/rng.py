"""Counter-based random streams.

Every stochastic choice in the pipeline draws from a Philox generator whose
key is derived from (seed, salt, stream). Streams are independent and can be
re-opened at any point, which is what makes per-record masking, per-step
dropout, and checkpoint resume all exactly reproducible without threading a
single mutable generator through the code.
"""

from __future__ import annotations

import hashlib

import numpy as np


def philox(seed: int, salt: str, stream: int = 0) -> np.random.Generator:
    """Open the deterministic stream identified by (seed, salt, stream)."""
    material = f"{seed}|{salt}|{stream}".encode("utf-8")
    key = np.frombuffer(hashlib.sha256(material).digest()[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
