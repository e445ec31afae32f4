"""Deterministic derivation of component sub-seeds from one master seed.

Every command takes a single seed; each randomized component (augmentation
of record i, tree t of a forest, the search loop, ...) gets its own stream
derived from ``derive_seed(master, label, index)``. The derivation is a
SHA-256 hash, so streams are independent and stable across platforms and
Python versions.
"""

from __future__ import annotations

import hashlib


def derive_seed(master: int, label: str, index: int = 0) -> int:
    """Return a 63-bit sub-seed for (master, label, index)."""
    digest = hashlib.sha256(f"{master}|{label}|{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1
