"""Small shared helpers: RMSE, canonical JSON, hashing, ordered parallel map."""

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np

SCHEMA_VERSION = "1.0"


def ordered_map(fn, items, workers: int = 1) -> list:
    """Map fn over items, optionally on a thread pool.

    Results always come back in input order, so output is independent of
    worker count and scheduling.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def rmse(values) -> float:
    """Root-mean-square of a vector."""
    v = np.asarray(values, dtype=float)
    return float(np.sqrt(np.mean(v * v)))


def canonical_json(obj) -> str:
    """Deterministic JSON text: sorted keys, fixed separators, trailing newline.

    Floats go through Python's repr, which round-trips exactly, so dumping the
    same in-memory object always yields byte-identical text.
    """
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def config_hash(obj) -> str:
    """Stable hex digest of a JSON-serializable configuration object."""
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def check_schema_version(found: str, *, kind: str) -> None:
    """Reject artifacts whose schema major version is unknown."""
    from .errors import SchemaError

    if not isinstance(found, str) or "." not in found:
        raise SchemaError(f"{kind}: malformed schema_version {found!r}")
    major = found.split(".", 1)[0]
    expected = SCHEMA_VERSION.split(".", 1)[0]
    if major != expected:
        raise SchemaError(
            f"{kind}: schema_version {found} not supported (expected major {expected})"
        )
