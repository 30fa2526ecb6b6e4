"""Readers and writers for the on-disk formats.

Graph: UTF-8 TSV, one undirected edge ``u<TAB>v`` per line, 0-based ids,
``#`` lines ignored. The writer emits a ``# num_nodes=N`` comment so that
trailing isolated nodes survive a round trip; the reader honours it.
Labels: one integer per line. Features: CSV, one row per node.
"""
from __future__ import annotations

import json
import math
import os
import re
import struct
from pathlib import Path

import numpy as np

from spgcl.errors import InputError
from spgcl.graph import Graph, check_features, check_labels

_NUM_NODES = re.compile(r"#\s*num_nodes\s*=\s*(\d+)")


def _read_text(path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except FileNotFoundError as exc:
        raise FileNotFoundError(f"no such file: {path}") from exc


def _parse_float(tok: str, where: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise InputError(f"{where}: not a number: {tok!r}") from None
    if not math.isfinite(v):
        raise InputError(f"{where}: non-finite value {tok!r}")
    return v


def _parse_int(tok: str, where: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise InputError(f"{where}: not an integer: {tok!r}") from None


def read_graph(path, num_nodes: int | None = None) -> Graph:
    pairs = []
    declared = None
    for lineno, line in enumerate(_read_text(path).splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            m = _NUM_NODES.match(s)
            if m:
                declared = int(m.group(1))
            continue
        parts = s.split("\t") if "\t" in s else s.split()
        if len(parts) != 2:
            raise InputError(f"{path}:{lineno}: expected 'u<TAB>v'")
        u, v = (_parse_int(p, f"{path}:{lineno}") for p in parts)
        if u < 0 or v < 0:
            raise InputError(f"{path}:{lineno}: negative node id")
        pairs.append((u, v))
    inferred = (max(max(p) for p in pairs) + 1) if pairs else 0
    n = num_nodes if num_nodes is not None else declared if declared is not None else inferred
    if n < inferred:
        raise InputError(f"{path}: node id {inferred - 1} exceeds node count {n}")
    return Graph.from_edges(n, np.array(pairs, dtype=np.int64).reshape(-1, 2))


def write_graph(path, g: Graph) -> None:
    lines = [f"# num_nodes={g.num_nodes}"]
    lines += [f"{u}\t{v}" for u, v in g.edges.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_labels(path) -> np.ndarray:
    vals = [_parse_int(s.strip(), f"{path}:{i}")
            for i, s in enumerate(_read_text(path).splitlines(), 1) if s.strip()]
    return check_labels(np.array(vals, dtype=np.int64))


def write_labels(path, y) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in y), encoding="utf-8")


def read_features(path) -> np.ndarray:
    rows = []
    for i, line in enumerate(_read_text(path).splitlines(), 1):
        if not line.strip():
            continue
        rows.append([_parse_float(t.strip(), f"{path}:{i}") for t in line.split(",")])
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise InputError(f"{path}: ragged feature rows")
    return check_features(np.array(rows, dtype=np.float64).reshape(len(rows), -1))


def write_features(path, x) -> None:
    # 17 significant digits round-trips float64 exactly
    lines = [",".join(f"{v:.17g}" for v in row) for row in np.asarray(x, dtype=np.float64)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def dumps_json(obj) -> str:
    """Canonical JSON (sorted keys, NaN rejected) for byte-stable outputs."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def dumps_json_line(obj) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=False, separators=(",", ":")) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj), encoding="utf-8")


def read_json(path):
    def _reject(tok):
        raise InputError(f"{path}: non-finite literal {tok}")

    try:
        return json.loads(_read_text(path), parse_constant=_reject)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None


# Checkpoint layout: 8-byte little-endian header length, UTF-8 JSON header
# {"format", "meta", "tensors": [{"name", "shape"}, ...]}, then each tensor as
# little-endian float64 in header order.
CHECKPOINT_FORMAT = "spgcl-checkpoint-v1"


def save_tensors(path, tensors: dict[str, np.ndarray], meta: dict) -> None:
    header = {
        "format": CHECKPOINT_FORMAT,
        "meta": meta,
        "tensors": [{"name": k, "shape": list(np.shape(v))} for k, v in tensors.items()],
    }
    hb = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(hb)))
        fh.write(hb)
        for v in tensors.values():
            fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


def load_tensors(path) -> tuple[dict[str, np.ndarray], dict]:
    if not os.path.exists(path):
        raise FileNotFoundError(f"no such file: {path}")
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise InputError(f"{path}: truncated checkpoint")
    (hlen,) = struct.unpack("<Q", raw[:8])
    try:
        header = json.loads(raw[8:8 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise InputError(f"{path}: corrupt checkpoint header") from None
    if header.get("format") != CHECKPOINT_FORMAT:
        raise InputError(f"{path}: not an spgcl checkpoint")
    off = 8 + hlen
    out = {}
    for t in header["tensors"]:
        count = int(np.prod(t["shape"], dtype=np.int64))
        chunk = raw[off:off + 8 * count]
        if len(chunk) != 8 * count:
            raise InputError(f"{path}: truncated tensor {t['name']}")
        out[t["name"]] = np.frombuffer(chunk, dtype="<f8").astype(np.float64).reshape(t["shape"])
        off += 8 * count
    if off != len(raw):
        raise InputError(f"{path}: trailing bytes after last tensor")
    return out, header["meta"]
