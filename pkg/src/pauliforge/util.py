"""Small helpers shared by the trainers and the bench runner."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os


def _plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def config_hash(obj) -> str:
    """Short sha256 of the canonical JSON form of a config."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]


def thread_cap(default: int | None = None) -> int:
    raw = os.environ.get("PAULIFORGE_THREADS")
    if raw:
        n = int(raw)
        if n < 1:
            raise ValueError("PAULIFORGE_THREADS must be >= 1")
        return n
    return default or os.cpu_count() or 1
