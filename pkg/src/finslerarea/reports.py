"""Deterministic JSON and CSV output with a configuration hash."""
import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np


def to_plain(obj):
    """Recursively convert numpy scalars/arrays to Python; non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def config_hash(config):
    """SHA-256 of the canonical JSON form of ``config``."""
    text = json.dumps(to_plain(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def stamp(payload, config):
    """``payload`` with the configuration, its hash and seed attached."""
    return {"config": to_plain(config), "config_hash": config_hash(config),
            "seed": config.get("seed"), **to_plain(payload)}


def write_json(path, payload):
    Path(path).write_text(json.dumps(to_plain(payload), sort_keys=True, indent=2) + "\n")


def write_csv(path, rows, config, columns=None):
    """Rows of dicts as CSV; the first line is a comment with hash and seed."""
    rows = [to_plain(r) for r in rows]
    if columns is None:
        columns = list(dict.fromkeys(k for r in rows for k in r))
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_hash={config_hash(config)} seed={config.get('seed')}\n")
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else repr(r[k]) if isinstance(r.get(k), float)
                            else r.get(k)) for k in columns})


def flatten(d, prefix=""):
    """Nested dict to a single-level dict with dotted keys; lists become JSON text."""
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = json.dumps(to_plain(v))
        else:
            out[key] = v
    return out
