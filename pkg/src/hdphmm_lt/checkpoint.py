"""Binary checkpoints of a chain, bit-exact including the random stream.

Layout (all integers little-endian)::

    magic      8 bytes   b"HDPLTCK\\0"
    version    uint32
    digest     32 bytes  sha256 of everything after this field
    head_len   uint64
    header     head_len bytes of UTF-8 JSON (sorted keys)
    arrays     raw C-order buffers, in header order

Arrays inside the JSON header are replaced by ``{"__array__": i}`` pointing
into a table of (dtype, shape, offset, nbytes) entries.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import fields, is_dataclass
from pathlib import Path

import numpy as np

from .emissions import CategoricalEmission, LinearGaussianEmission
from .errors import ChecksumError, CheckpointError, MigrationError
from .model import ChainState, ModelConfig
from .rand import RandomStream
from .similarity import BinaryStateMatrix, KernelSpec, LocationMatrix
from .transitions import HdpHyper, TransitionState

MAGIC = b"HDPLTCK\0"
SCHEMA_VERSION = 1
_PREFIX = struct.Struct("<8sI32sQ")

_TYPES = {cls.__name__: cls for cls in (HdpHyper, TransitionState, KernelSpec, BinaryStateMatrix,
                                         LocationMatrix, LinearGaussianEmission, CategoricalEmission)}


def _encode(value, arrays):
    if isinstance(value, np.ndarray):
        arrays.append(np.ascontiguousarray(value))
        return {"__array__": len(arrays) - 1}
    if is_dataclass(value) and not isinstance(value, type):
        body = {f.name: _encode(getattr(value, f.name), arrays) for f in fields(value)}
        return {"__type__": type(value).__name__, "fields": body}
    if isinstance(value, (list, tuple)):
        return [_encode(v, arrays) for v in value]
    if isinstance(value, dict):
        return {k: _encode(v, arrays) for k, v in value.items()}
    if isinstance(value, np.generic):
        return value.item()
    return value


def _decode(value, arrays):
    if isinstance(value, dict):
        if "__array__" in value:
            return arrays[value["__array__"]]
        if "__type__" in value:
            cls = _TYPES.get(value["__type__"])
            if cls is None:
                raise CheckpointError(f"unknown record type {value['__type__']!r}")
            return cls(**{k: _decode(v, arrays) for k, v in value["fields"].items()})
        return {k: _decode(v, arrays) for k, v in value.items()}
    if isinstance(value, list):
        return [_decode(v, arrays) for v in value]
    return value


def _state_record(state: ChainState) -> dict:
    return {
        "hyper": state.hyper, "trans": state.trans, "kernel": state.kernel,
        "emission": state.emission, "z": state.z, "binary": state.binary,
        "locations": state.locations, "iteration": state.iteration,
        "hmc_accepted": state.hmc_accepted, "hmc_proposed": state.hmc_proposed,
        "state_sum": state.state_sum, "state_count": state.state_count,
        "rng": {"seed": state.rng.seed, "key": list(state.rng.key), "state": state.rng.state},
    }


def dumps(states, config: ModelConfig | None = None) -> bytes:
    """Serialise one chain state or a list of them (one per chain)."""
    if isinstance(states, ChainState):
        states = [states]
    arrays: list[np.ndarray] = []
    record = {"states": [_encode(_state_record(s), arrays) for s in states],
              "config": None if config is None else config.to_dict()}
    table, offset = [], 0
    for a in arrays:
        table.append({"dtype": a.dtype.str, "shape": list(a.shape), "offset": offset, "nbytes": a.nbytes})
        offset += a.nbytes
    record["arrays"] = table
    header = json.dumps(record, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = struct.pack("<Q", len(header)) + header + b"".join(a.tobytes() for a in arrays)
    digest = hashlib.sha256(body).digest()
    return MAGIC + struct.pack("<I", SCHEMA_VERSION) + digest + body


def _restore(rec: dict) -> ChainState:
    rng = RandomStream(rec["rng"]["seed"], tuple(rec["rng"]["key"]))
    rng.state = rec["rng"]["state"]
    return ChainState(rec["hyper"], rec["trans"], rec["kernel"], rec["emission"], rec["z"], rng,
                      rec["binary"], rec["locations"], rec["iteration"], rec["hmc_accepted"],
                      rec["hmc_proposed"], rec["state_sum"], rec["state_count"])


def loads(blob: bytes) -> tuple[list, ModelConfig | None]:
    """Inverse of :func:`dumps`; returns ``(states, config)`` with ``states`` a list."""
    if len(blob) < _PREFIX.size or blob[:8] != MAGIC:
        raise CheckpointError("not a checkpoint file")
    (version,) = struct.unpack_from("<I", blob, 8)
    if version != SCHEMA_VERSION:
        raise MigrationError(f"checkpoint schema version {version} is not supported "
                             f"(this build reads version {SCHEMA_VERSION})")
    digest = blob[12:44]
    body = blob[44:]
    if hashlib.sha256(body).digest() != digest:
        raise ChecksumError("checkpoint digest mismatch: file is corrupted")
    (head_len,) = struct.unpack_from("<Q", body, 0)
    try:
        record = json.loads(body[8:8 + head_len].decode("utf-8"))
    except ValueError as exc:
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from exc
    data = body[8 + head_len:]
    arrays = []
    for entry in record["arrays"]:
        buf = data[entry["offset"]:entry["offset"] + entry["nbytes"]]
        arrays.append(np.frombuffer(buf, dtype=np.dtype(entry["dtype"])).reshape(entry["shape"]).copy())
    states = [_restore(_decode(rec, arrays)) for rec in record["states"]]
    config = None if record["config"] is None else ModelConfig.from_dict(record["config"])
    return states, config


def checkpoint_save(states, path, config: ModelConfig | None = None) -> None:
    Path(path).write_bytes(dumps(states, config))


def checkpoint_load(path) -> tuple[list, ModelConfig | None]:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    return loads(blob)
