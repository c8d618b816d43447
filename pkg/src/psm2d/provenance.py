"""Run manifests: what was solved, with which inputs, and what came out."""
from __future__ import annotations

import hashlib
import json
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import scipy

from . import __version__

__all__ = ["RunManifest", "content_hash", "canonical_json", "versions"]


def _default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if hasattr(obj, "__dataclass_fields__"):
        return asdict(obj)
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    return str(obj)


def canonical_json(obj: Any) -> str:
    """Sorted-key compact JSON; floats via ``repr`` so hashes are exact."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_default, allow_nan=True)


def content_hash(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def versions() -> Dict[str, str]:
    return {"psm2d": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


@dataclass
class RunManifest:
    """Provenance of one solver invocation or scan."""

    operation: str
    inputs: Dict[str, Any]
    results: Dict[str, Any] = field(default_factory=dict)
    input_hash: str = ""
    wall_time: float = 0.0
    created: str = ""
    versions: Dict[str, str] = field(default_factory=versions)

    def __post_init__(self):
        if not self.input_hash:
            self.input_hash = content_hash({"operation": self.operation, "inputs": self.inputs})
        if not self.created:
            self.created = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())

    def to_json(self) -> dict:
        return json.loads(canonical_json(asdict(self)))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2, default=_default)

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps() + "\n")
        return path

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))

    @classmethod
    def timed(cls, operation: str, inputs: Dict[str, Any], start: float,
              results: Optional[Dict[str, Any]] = None) -> "RunManifest":
        return cls(operation, inputs, results or {}, wall_time=time.perf_counter() - start)
