"""Deterministic derivation of per-component RNG seeds.

Every run hangs off a single master seed; each randomness consumer
(splitting, walks, embedding init, negative sampling, ...) draws from a
named sub-stream so adding a consumer never perturbs the others.
"""

import hashlib

_MASK63 = (1 << 63) - 1


def derive_seed(master: int, name: str) -> int:
    """Map (master seed, stream name) to a stable 63-bit seed.

    Uses SHA-256 so the mapping is identical across platforms and Python
    processes (unlike the builtin salted ``hash``).
    """
    digest = hashlib.sha256(f"{master}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & _MASK63
