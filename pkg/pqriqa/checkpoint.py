"""
Portable checkpoint container for trained quality networks.

Layout (all integers little-endian uint32):

    magic   8 bytes  b"PQRCKPT\\n"
    version          currently 1
    hlen             length of the UTF-8 JSON header
    header           arch, head, anchor record, mapper record, beta, tensor list
    tensors          per tensor: ndim, shape[ndim], row-major float64 data

Anchors and the reverse mapper are stored as their one-line text records.
"""

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from pqriqa.anchors import AnchorSet
from pqriqa.codec import SQUARED_EUCLIDEAN, EncoderConfig, ReverseMapper
from pqriqa.errors import CorruptCheckpointError, DatasetIOError, UnsupportedFormatError
from pqriqa.fileio import atomic_write_bytes
from pqriqa.network import PQR, ArchConfig, Network

MAGIC = b"PQRCKPT\n"
VERSION = 1

_U32 = struct.Struct("<I")


@dataclass
class Checkpoint:
    """A loaded checkpoint: network plus its label codec."""
    net: Network
    anchors: Optional[AnchorSet] = None
    mapper: Optional[ReverseMapper] = None
    beta: Optional[float] = None
    distance: Optional[str] = None
    meta: dict = field(default_factory=dict)

    @property
    def head(self) -> str:
        return self.net.arch.head

    @property
    def encoder(self) -> Optional[EncoderConfig]:
        if self.head != PQR or self.anchors is None or self.beta is None:
            return None
        return EncoderConfig(beta=self.beta, anchors=self.anchors, distance=self.distance or SQUARED_EUCLIDEAN)


def _arch_dict(arch: ArchConfig) -> dict:
    d = asdict(arch)
    d["conv_specs"] = [list(s) for s in arch.conv_specs]
    return d


def save_checkpoint(net: Network, mapper: Optional[ReverseMapper], anchors: Optional[AnchorSet],
                    path, encoder: Optional[EncoderConfig] = None,
                    meta: Optional[dict] = None) -> Path:
    """Write net, anchors and reverse mapper atomically to `path`."""
    names = list(net.params)
    header = {
        "arch": _arch_dict(net.arch),
        "head": net.arch.head,
        "rng_seed": net.rng_seed,
        "anchors": anchors.to_record() if anchors is not None else None,
        "mapper": mapper.to_record() if mapper is not None else None,
        "beta": encoder.beta if encoder is not None else None,
        "distance": encoder.distance if encoder is not None else None,
        "tensors": [[k, list(net.params[k].shape)] for k in names],
        "meta": meta or {},
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [MAGIC, _U32.pack(VERSION), _U32.pack(len(hbytes)), hbytes]
    for k in names:
        arr = np.ascontiguousarray(net.params[k], dtype="<f8")
        parts.append(_U32.pack(arr.ndim))
        parts.extend(_U32.pack(s) for s in arr.shape)
        parts.append(arr.tobytes(order="C"))
    return atomic_write_bytes(path, b"".join(parts))


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptCheckpointError(f"checkpoint {self.path} is truncated")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]


def load_checkpoint(path) -> Checkpoint:
    """Read a checkpoint written by save_checkpoint (bit-exact parameters)."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise DatasetIOError(f"cannot read checkpoint {path}: {e}", path=path) from e

    r = _Reader(data, path)
    if len(data) < len(MAGIC) or r.take(len(MAGIC)) != MAGIC:
        raise UnsupportedFormatError(f"{path} is not a PQR checkpoint (bad magic)")
    version = r.u32()
    if version != VERSION:
        raise UnsupportedFormatError(f"{path} has checkpoint version {version}, expected {VERSION}")
    try:
        header = json.loads(r.take(r.u32()).decode("utf-8"))
        arch_d = dict(header["arch"])
        arch_d["conv_specs"] = tuple(tuple(s) for s in arch_d["conv_specs"])
        arch = ArchConfig(**arch_d)
        tensor_list = header["tensors"]
    except (ValueError, KeyError, TypeError) as e:
        raise CorruptCheckpointError(f"checkpoint {path} has a malformed header: {e}") from e

    params = {}
    for name, shape in tensor_list:
        ndim = r.u32()
        dims = tuple(r.u32() for _ in range(ndim))
        if list(dims) != list(shape):
            raise CorruptCheckpointError(f"tensor {name} shape {dims} disagrees with header {shape}")
        count = int(np.prod(dims)) if dims else 1
        params[name] = np.frombuffer(r.take(8 * count), dtype="<f8").reshape(dims).astype(np.float64)
    if r.pos != len(data):
        raise CorruptCheckpointError(f"checkpoint {path} has {len(data) - r.pos} trailing bytes")

    net = Network(arch=arch, params=params, rng_seed=int(header.get("rng_seed", 0)))
    anchors = AnchorSet.from_record(header["anchors"]) if header.get("anchors") else None
    mapper = ReverseMapper.from_record(header["mapper"]) if header.get("mapper") else None
    return Checkpoint(net=net, anchors=anchors, mapper=mapper, beta=header.get("beta"),
                      distance=header.get("distance"), meta=header.get("meta", {}))
