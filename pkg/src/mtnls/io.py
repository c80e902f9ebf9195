"""Snapshot, CSV and NDJSON emission.

Snapshot layout (little-endian)::

    b"MTNLS1" | kind: u8 (0 torus, 1 sine) | K: i32 | q: i32 | n_modes: i64 | (re, im) f64 * n_modes
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .exceptions import UsageError
from .spectral import KIND_CODES, SpectralBasis, SpectralField, make_basis

MAGIC = b"MTNLS1"
_HEADER = struct.Struct("<6sBiiq")
_KIND_NAMES = {v: k for k, v in KIND_CODES.items()}


def write_snapshot(path, u: SpectralField) -> None:
    if u.coeffs.ndim != 1:
        raise UsageError("snapshots hold a single field, not a batch")
    b = u.basis
    head = _HEADER.pack(MAGIC, KIND_CODES[b.kind], b.cutoff, b.oversample, b.n_modes)
    body = np.ascontiguousarray(u.coeffs, dtype="<c16").view("<f8").tobytes()
    Path(path).write_bytes(head + body)


def read_snapshot(path, basis: SpectralBasis | None = None) -> SpectralField:
    """Load a snapshot; if ``basis`` is given its descriptor must match the file."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise UsageError(f"{path}: truncated snapshot header")
    magic, kind, K, q, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise UsageError(f"{path}: bad magic {magic!r}")
    if kind not in _KIND_NAMES:
        raise UsageError(f"{path}: unknown basis kind code {kind}")
    if len(data) != _HEADER.size + 16 * n:
        raise UsageError(f"{path}: expected {n} modes, file size {len(data)} does not match")
    if basis is None:
        basis = make_basis(_KIND_NAMES[kind], K, q)
    elif (basis.kind, basis.cutoff) != (_KIND_NAMES[kind], K):
        raise UsageError(f"{path}: snapshot basis ({_KIND_NAMES[kind]}, K={K}) differs from ({basis.kind}, K={basis.cutoff})")
    if basis.n_modes != n:
        raise UsageError(f"{path}: mode count {n} differs from basis ({basis.n_modes})")
    c = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).view("<c16").astype(complex)
    return SpectralField(basis, c)


def write_modes_csv(path, u: SpectralField) -> None:
    """Columns ``n, k1, k2, lambda, re, im``."""
    b = u.basis
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "k1", "k2", "lambda", "re", "im"])
        for n, ((k1, k2), lam, c) in enumerate(zip(b.modes, b.eigenvalues, u.coeffs)):
            w.writerow([n, int(k1), int(k2), repr(float(lam)), repr(float(c.real)), repr(float(c.imag))])


def read_modes_csv(path, basis: SpectralBasis) -> SpectralField:
    c = np.zeros(basis.n_modes, dtype=complex)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            c[int(row["n"])] = complex(float(row["re"]), float(row["im"]))
    return SpectralField(basis, c)


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    return x


def dumps(record: dict) -> str:
    """Deterministic single-line JSON (sorted keys, ``repr`` round-trip floats)."""
    return json.dumps(_plain(record), sort_keys=True, separators=(",", ":"))


class NDJSONWriter:
    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "w")

    def write(self, record: dict) -> None:
        self._fh.write(dumps(record) + "\n")

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_ndjson(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) for x in r])
