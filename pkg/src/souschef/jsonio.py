"""Canonical JSON reading/writing for on-disk artifacts.

Every artifact this package writes must be byte-identical across reruns
on identical input, so all JSON goes through one canonical encoder:
sorted keys, two-space indent, trailing newline, UTF-8.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any


def canonical_dumps(obj: Any) -> str:
    """Serialize to the canonical JSON text form used for all artifacts."""
    _reject_nonfinite(obj)
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def dump_json(obj: Any, path: str | Path) -> None:
    Path(path).write_text(canonical_dumps(obj), encoding="utf-8")


def load_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _reject_nonfinite(obj: Any) -> None:
    # json.dumps would happily emit Infinity/NaN, which is not valid JSON.
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite float {obj!r} cannot be serialized")
    elif isinstance(obj, dict):
        for v in obj.values():
            _reject_nonfinite(v)
    elif isinstance(obj, (list, tuple)):
        for v in obj:
            _reject_nonfinite(v)
