"""Input loading and validation for the renderer.

Only documented fields are consumed; unknown extras are ignored for forward
compatibility.  Unknown schema majors and missing fields are hard errors
that name the offending file and field.
"""

import json
from pathlib import Path

SUPPORTED_MAJOR = "1"


class RenderInputError(Exception):
    """Bad or incompatible input artifact."""


def load_artifact(path, expected_kinds) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise RenderInputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise RenderInputError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise RenderInputError(f"{path}: expected a JSON object")
    version = doc.get("schema_version")
    if not isinstance(version, str) or version.split(".", 1)[0] != SUPPORTED_MAJOR:
        raise RenderInputError(
            f"{path}: schema_version {version!r} unsupported (need major {SUPPORTED_MAJOR})"
        )
    kind = doc.get("kind")
    if kind not in expected_kinds:
        raise RenderInputError(
            f"{path}: kind {kind!r} not usable here (expected one of {sorted(expected_kinds)})"
        )
    return doc


def require(doc: dict, field: str, source) -> object:
    if field not in doc:
        raise RenderInputError(f"{source}: missing required field {field!r}")
    return doc[field]
