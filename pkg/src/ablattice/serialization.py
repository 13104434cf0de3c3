"""Lossless serialization of field configurations and invariant states.

Two formats:

* JSON: human-readable. Sites are listed row-major (row y=0 first); complex
  numbers are [re, im] pairs; links are split into "horizontal" and
  "vertical" arrays matching the in-memory layout.
* Binary: compact little-endian. 16-byte header = 8-byte magic, u32
  version, u32 payload kind; then lattice fields and raw float64 arrays.
"""

from __future__ import annotations

import json
import struct
from typing import Union

import numpy as np

from .errors import FormatError
from .fields import FieldConfig, InvariantState
from .lattice import Lattice

MAGIC = b"ABLATTIC"
VERSION = 1
KIND_FIELD = 1
KIND_INVARIANT = 2

_HEADER = struct.Struct("<8sII")
_LATTICE = struct.Struct("<IId4s")


def _lattice_to_dict(lat: Lattice) -> dict:
    return {"nx": lat.nx, "ny": lat.ny, "spacing": lat.spacing, "boundary": lat.boundary}


def _lattice_from_dict(d: dict) -> Lattice:
    return Lattice(int(d["nx"]), int(d["ny"]), float(d["spacing"]), str(d["boundary"]))


def _complex_grid(a: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def _real_grid(a: np.ndarray) -> list:
    return [[float(v) for v in row] for row in a]


def config_to_json(c: FieldConfig) -> str:
    doc = {
        "format": "field-config",
        "version": VERSION,
        "lattice": _lattice_to_dict(c.lattice),
        "psi": _complex_grid(c.psi),
        "links": {"horizontal": _real_grid(c.ah), "vertical": _real_grid(c.av)},
        "mask": [[bool(v) for v in row] for row in c.mask],
    }
    return json.dumps(doc)


def config_from_json(text: str) -> FieldConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e}") from e
    if doc.get("format") != "field-config":
        raise FormatError(f"unexpected document format {doc.get('format')!r}")
    if doc.get("version") != VERSION:
        raise FormatError(f"unsupported version {doc.get('version')!r}")
    lat = _lattice_from_dict(doc["lattice"])
    psi = np.array([[complex(re, im) for re, im in row] for row in doc["psi"]])
    ah = np.array(doc["links"]["horizontal"], dtype=float)
    av = np.array(doc["links"]["vertical"], dtype=float)
    mask = np.array(doc["mask"], dtype=bool)
    return FieldConfig(lat, psi, ah, av, mask)


def invariants_to_json(inv: InvariantState) -> str:
    doc = {
        "format": "invariant-state",
        "version": VERSION,
        "lattice": _lattice_to_dict(inv.lattice),
        "rho": _real_grid(inv.rho),
        "links": {"horizontal": _real_grid(inv.dh), "vertical": _real_grid(inv.dv)},
        "mask": [[bool(v) for v in row] for row in inv.mask],
    }
    return json.dumps(doc)


def invariants_from_json(text: str) -> InvariantState:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e}") from e
    if doc.get("format") != "invariant-state":
        raise FormatError(f"unexpected document format {doc.get('format')!r}")
    if doc.get("version") != VERSION:
        raise FormatError(f"unsupported version {doc.get('version')!r}")
    lat = _lattice_from_dict(doc["lattice"])
    return InvariantState(
        lat,
        np.array(doc["rho"], dtype=float),
        np.array(doc["links"]["horizontal"], dtype=float),
        np.array(doc["links"]["vertical"], dtype=float),
        np.array(doc["mask"], dtype=bool),
    )


def _pack_lattice(lat: Lattice) -> bytes:
    tag = b"PERI" if lat.periodic else b"OPEN"
    return _LATTICE.pack(lat.nx, lat.ny, lat.spacing, tag)


def _take(buf: bytes, offset: int, n: int, what: str) -> tuple[bytes, int]:
    if offset + n > len(buf):
        raise FormatError(f"truncated file while reading {what}", offset=offset)
    return buf[offset : offset + n], offset + n


def _unpack_lattice(buf: bytes, offset: int) -> tuple[Lattice, int]:
    raw, offset = _take(buf, offset, _LATTICE.size, "lattice header")
    nx, ny, spacing, tag = _LATTICE.unpack(raw)
    if tag not in (b"OPEN", b"PERI"):
        raise FormatError(f"unknown boundary tag {tag!r}", offset=offset - 4)
    return Lattice(nx, ny, spacing, "periodic" if tag == b"PERI" else "open"), offset


def _pack_array(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype="<f8").tobytes()


def _unpack_array(buf: bytes, offset: int, shape: tuple, what: str):
    n = int(np.prod(shape)) * 8
    raw, offset = _take(buf, offset, n, what)
    return np.frombuffer(raw, dtype="<f8").reshape(shape).copy(), offset


def config_to_bytes(c: FieldConfig) -> bytes:
    parts = [
        _HEADER.pack(MAGIC, VERSION, KIND_FIELD),
        _pack_lattice(c.lattice),
        _pack_array(c.psi.real),
        _pack_array(c.psi.imag),
        _pack_array(c.ah),
        _pack_array(c.av),
        np.ascontiguousarray(c.mask, dtype=np.uint8).tobytes(),
    ]
    return b"".join(parts)


def invariants_to_bytes(inv: InvariantState) -> bytes:
    parts = [
        _HEADER.pack(MAGIC, VERSION, KIND_INVARIANT),
        _pack_lattice(inv.lattice),
        _pack_array(inv.rho),
        _pack_array(inv.dh),
        _pack_array(inv.dv),
        np.ascontiguousarray(inv.mask, dtype=np.uint8).tobytes(),
    ]
    return b"".join(parts)


def _read_header(buf: bytes) -> tuple[int, int]:
    if len(buf) < _HEADER.size:
        raise FormatError("file shorter than header", offset=len(buf))
    magic, version, kind = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=8)
    return kind, _HEADER.size


def from_bytes(buf: bytes) -> Union[FieldConfig, InvariantState]:
    """Decode either payload kind from the binary format."""
    kind, offset = _read_header(buf)
    lat, offset = _unpack_lattice(buf, offset)
    sshape = (lat.ny, lat.nx)
    hshape = (lat.ny, lat.nx if lat.periodic else lat.nx - 1)
    vshape = (lat.ny if lat.periodic else lat.ny - 1, lat.nx)
    if kind == KIND_FIELD:
        re, offset = _unpack_array(buf, offset, sshape, "psi.re")
        im, offset = _unpack_array(buf, offset, sshape, "psi.im")
        ah, offset = _unpack_array(buf, offset, hshape, "horizontal links")
        av, offset = _unpack_array(buf, offset, vshape, "vertical links")
        raw, offset = _take(buf, offset, lat.n_sites, "mask")
        mask = np.frombuffer(raw, dtype=np.uint8).reshape(sshape).astype(bool)
        return FieldConfig(lat, re + 1j * im, ah, av, mask)
    if kind == KIND_INVARIANT:
        rho, offset = _unpack_array(buf, offset, sshape, "rho")
        dh, offset = _unpack_array(buf, offset, hshape, "horizontal steps")
        dv, offset = _unpack_array(buf, offset, vshape, "vertical steps")
        raw, offset = _take(buf, offset, lat.n_sites, "mask")
        mask = np.frombuffer(raw, dtype=np.uint8).reshape(sshape).astype(bool)
        return InvariantState(lat, rho, dh, dv, mask)
    raise FormatError(f"unknown payload kind {kind}", offset=12)


def config_from_bytes(buf: bytes) -> FieldConfig:
    obj = from_bytes(buf)
    if not isinstance(obj, FieldConfig):
        raise FormatError("expected a field-config payload")
    return obj
