"""Deterministic artifact writers: CSV with 17-significant-digit floats, canonical
JSON, and the run manifest with content digests."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np


def format_value(x) -> str:
    """Locale-free cell formatting; floats carry 17 significant digits."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path: str | Path, columns: list[str], rows: list[dict]) -> Path:
    path = Path(path)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_value(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonify(dataclasses.asdict(obj))
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path: str | Path, payload) -> Path:
    path = Path(path)
    path.write_text(
        json.dumps(_jsonify(payload), sort_keys=True, indent=1) + "\n",
        encoding="utf-8",
    )
    return path


def config_to_dict(cfg) -> dict:
    return _jsonify(dataclasses.asdict(cfg))


def sha256_of(path: str | Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def write_manifest(
    output_dir: str | Path, command: str, config: dict, seed: int, version: str
) -> Path:
    """Digest-list every artifact in output_dir; written last, so the manifest
    itself is the only un-digested file."""
    output_dir = Path(output_dir)
    outputs = {}
    for p in sorted(output_dir.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            outputs[str(p.relative_to(output_dir))] = sha256_of(p)
    payload = {
        "command": command,
        "config": _jsonify(config),
        "seed": seed,
        "version": version,
        "outputs": outputs,
    }
    return write_json(output_dir / "manifest.json", payload)
