"""Feature cache files: per segment a flat little-endian float32 binary plus
a JSON sidecar recording shape, dtype, feature names, and normalization
provenance.  An index file lists the cached segments.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

__all__ = ["write_feature_cache", "read_feature_cache", "read_cached_segment"]

_INDEX = "index.json"


def _seg_basename(segment_id: str) -> str:
    # Segment ids may contain path-hostile characters (e.g. ':').
    return segment_id.replace("/", "_").replace(":", "_")


def write_feature_cache(cache_dir, features: Mapping[str, np.ndarray], kind: str,
                        feature_names: Optional[list[str]] = None,
                        norm_provenance: str = "raw") -> None:
    out = Path(cache_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = {}
    for seg_id, arr in features.items():
        arr = np.asarray(arr, dtype=np.float64)
        base = _seg_basename(seg_id)
        (out / f"{base}.f32").write_bytes(arr.astype("<f4").tobytes())
        sidecar = {
            "segment_id": seg_id,
            "kind": kind,
            "shape": list(arr.shape),
            "dtype": "float32",
            "byte_order": "little",
            "feature_names": feature_names,
            "norm_stats": norm_provenance,
        }
        (out / f"{base}.json").write_text(json.dumps(sidecar, sort_keys=True, indent=2) + "\n",
                                          encoding="utf-8")
        entries[seg_id] = base
    index = {"kind": kind, "segments": entries}
    (out / _INDEX).write_text(json.dumps(index, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_cached_segment(cache_dir, base: str) -> np.ndarray:
    p = Path(cache_dir)
    sidecar = json.loads((p / f"{base}.json").read_text(encoding="utf-8"))
    raw = np.frombuffer((p / f"{base}.f32").read_bytes(), dtype="<f4")
    return raw.reshape(tuple(sidecar["shape"])).astype(np.float64)


def read_feature_cache(cache_dir) -> tuple[str, dict[str, np.ndarray]]:
    """Load a whole cache; returns (kind, segment_id -> array)."""
    p = Path(cache_dir)
    index_path = p / _INDEX
    if not index_path.exists():
        raise FileNotFoundError(f"feature cache index not found: {index_path}")
    index = json.loads(index_path.read_text(encoding="utf-8"))
    features = {seg_id: read_cached_segment(p, base) for seg_id, base in index["segments"].items()}
    return index["kind"], features
