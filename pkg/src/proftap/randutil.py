"""Stable seed derivation for independent random streams."""

from __future__ import annotations

import hashlib


def derive_seed(*parts: object) -> int:
    """Derive a 64-bit seed from any hashable-to-text parts.

    Uses SHA-256 over the joined string forms, so results are stable across
    processes and Python versions (unlike the builtin ``hash``).
    """
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_token(*parts: object, length: int = 16) -> str:
    """Deterministic opaque hex token for judges and admin access."""
    text = ":".join(str(p) for p in parts)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:length]
