"""Deterministic seed derivation for independent sub-streams."""

import hashlib


def derive_seed(master: int, *parts) -> int:
    """Derive a 64-bit child seed from a master seed and a label path.

    Stable across platforms and Python versions (SHA-256 based), so child
    streams never depend on dict ordering or hash randomization.
    """
    text = ":".join([str(int(master))] + [str(p) for p in parts])
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")
