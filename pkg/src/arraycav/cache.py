"""Binary on-disk cache for kernel matrices.

File layout: 8-byte magic ``ARRCAVK1``, a newline-terminated JSON header
(kind, N, provenance parameters), then the N*N entries as little-endian
complex64 pairs in row-major order.  Files are keyed by a content hash of the
kind plus provenance, so identical physical parameters share a cache entry.
The float32 storage bounds the reload error at ~1e-7 relative; callers needing
full precision should rebuild instead of loading.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .confined import KernelMatrix

MAGIC = b"ARRCAVK1"
ENV_VAR = "ARRAYCAV_CACHE_DIR"


def cache_key(kind: str, provenance: dict) -> str:
    payload = json.dumps({"kind": kind, "provenance": provenance},
                         sort_keys=True, default=repr)
    return hashlib.sha256(payload.encode()).hexdigest()


def cache_dir() -> Path | None:
    override = os.environ.get(ENV_VAR)
    return Path(override) if override else None


def cache_path(kernel_kind: str, provenance: dict, directory=None) -> Path | None:
    base = Path(directory) if directory else cache_dir()
    if base is None:
        return None
    return base / f"{cache_key(kernel_kind, provenance)}.kmat"


def store(kernel: KernelMatrix, directory=None) -> Path | None:
    """Write a kernel to the cache; returns the path or None if no cache dir."""
    path = cache_path(kernel.kind, kernel.provenance, directory)
    if path is None:
        return None
    path.parent.mkdir(parents=True, exist_ok=True)
    header = json.dumps({"kind": kernel.kind, "n": kernel.n_sites,
                         "provenance": kernel.provenance}, default=repr)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(header.encode())
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(kernel.entries, dtype="<c8").tobytes())
    return path


def load(kernel_kind: str, provenance: dict, directory=None) -> KernelMatrix | None:
    """Load a cached kernel, or None when absent/corrupt."""
    path = cache_path(kernel_kind, provenance, directory)
    if path is None or not path.exists():
        return None
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            return None
        header = json.loads(fh.readline().decode())
        n = header["n"]
        data = np.frombuffer(fh.read(), dtype="<c8")
    if data.size != n * n:
        return None
    entries = data.astype(np.complex128).reshape(n, n)
    return KernelMatrix(entries=entries, kind=header["kind"],
                        provenance=header["provenance"])
