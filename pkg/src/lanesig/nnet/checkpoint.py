"""Binary model checkpoints.

Layout, little-endian throughout::

    b"LNET1"
    u16 version, u32 K, S, D, H, n_lanes, n, u8 loss_mode, u8 shared_head
    float32 arrays in ModelParams.arrays() order
    u32 CRC32 of everything above

Array shapes are implied by the header, so the file carries no shape table.
"""

from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

from lanesig.nnet.lstm import LSTMParams
from lanesig.nnet.model import LossMode, ModelParams

MAGIC = b"LNET1"
VERSION = 1
_HEADER = struct.Struct("<HIIIIIIBB")
_CRC = struct.Struct("<I")
_LOSS_CODES = {LossMode.WEIGHTED: 0, LossMode.UNIFORM: 1, LossMode.LAST_CELL: 2}


class CheckpointError(ValueError):
    pass


def _shapes(K, S, D, H, L, n, shared) -> dict[str, tuple[int, ...]]:
    out = {}
    for layer, inp in (("layer1", D), ("layer2", H)):
        out.update({f"{layer}.W_ih": (4 * H, inp), f"{layer}.W_hh": (4 * H, H),
                    f"{layer}.b_ih": (4 * H,), f"{layer}.b_hh": (4 * H,)})
    out["head.W"] = (L, H) if shared else (n, L, H)
    out["head.b"] = (L,) if shared else (n, L)
    return out


def to_bytes(model: ModelParams) -> bytes:
    head = _HEADER.pack(VERSION, model.pool_kernel, model.pool_stride, model.input_dim,
                        model.hidden_dim, model.n_lanes, model.n_cells,
                        _LOSS_CODES[LossMode.parse(model.loss_mode)], int(model.shared_head))
    body = [MAGIC, head] + [np.ascontiguousarray(a, dtype="<f4").tobytes() for a in model.arrays().values()]
    payload = b"".join(body)
    return payload + _CRC.pack(zlib.crc32(payload))


def save(model: ModelParams, path) -> int:
    """Write ``model`` as float32 and return the file size in bytes."""
    data = to_bytes(model)
    Path(path).write_bytes(data)
    return len(data)


def from_bytes(data: bytes) -> ModelParams:
    if not data.startswith(MAGIC):
        raise CheckpointError("not an LNET1 checkpoint")
    if len(data) < len(MAGIC) + _HEADER.size + _CRC.size:
        raise CheckpointError("checkpoint truncated")
    payload, (crc,) = data[:-_CRC.size], _CRC.unpack(data[-_CRC.size:])
    if zlib.crc32(payload) != crc:
        raise CheckpointError("CRC mismatch; checkpoint corrupted")
    version, K, S, D, H, L, n, loss_code, shared = _HEADER.unpack_from(payload, len(MAGIC))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    modes = {v: k for k, v in _LOSS_CODES.items()}
    if loss_code not in modes or shared not in (0, 1):
        raise CheckpointError("corrupt header flags")
    shapes = _shapes(K, S, D, H, L, n, shared)
    pos = len(MAGIC) + _HEADER.size
    need = pos + 4 * sum(int(np.prod(s)) for s in shapes.values())
    if need != len(payload):
        raise CheckpointError(f"payload is {len(payload)} bytes, header implies {need}")
    arrays = {}
    for name, shape in shapes.items():
        count = int(np.prod(shape))
        arrays[name] = np.frombuffer(payload, "<f4", count, pos).astype(np.float32).reshape(shape)
        pos += 4 * count
    layers = [LSTMParams(*(arrays[f"{layer}.{k}"] for k in ("W_ih", "W_hh", "b_ih", "b_hh")))
              for layer in ("layer1", "layer2")]
    try:
        model = ModelParams(pool_kernel=K, pool_stride=S, input_dim=D, hidden_dim=H, n_lanes=L,
                            n_cells=n, layer1=layers[0], layer2=layers[1], head_W=arrays["head.W"],
                            head_b=arrays["head.b"], shared_head=bool(shared),
                            loss_mode=modes[loss_code])
    except ValueError as exc:
        raise CheckpointError(f"invalid model: {exc}") from None
    return model


def load(path) -> ModelParams:
    return from_bytes(Path(path).read_bytes())
