"""Binary checkpoint format.

Layout, all little-endian: magic "PLSTM\\x01", four uint32 header fields
(vocab_size, embed_dim, hidden, seq_len), then the embedding matrix and
every branch's parameter blocks in fixed order (softmax, sigmoid, relu,
tanh; per branch: forward then backward gates i/f/o/n as W, U, b, then the
head weights and bias), each block as row-major float64. Round trips are
bitwise exact.
"""

from __future__ import annotations

import struct

import numpy as np

from .model import ParallelModel, init_model

MAGIC = b"PLSTM\x01"
_HEADER = struct.Struct("<4I")


class CheckpointError(ValueError):
    pass


def save_checkpoint(model: ParallelModel, path):
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(model.vocab_size, model.embed_dim, model.hidden,
                              model.seq_len))
        for _, arr in model.blocks():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> ParallelModel:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read {path}: {exc}") from exc
    if blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError("bad checkpoint: wrong magic")
    off = len(MAGIC)
    try:
        vocab_size, embed_dim, hidden, seq_len = _HEADER.unpack_from(blob, off)
    except struct.error as exc:
        raise CheckpointError("bad checkpoint: truncated header") from exc
    off += _HEADER.size
    model = init_model(vocab_size, embed_dim, hidden, seed=0, seq_len=seq_len)
    blocks = model.blocks()
    expected = sum(arr.size for _, arr in blocks) * 8
    if len(blob) - off != expected:
        raise CheckpointError(
            f"bad checkpoint: payload is {len(blob) - off} bytes, header implies {expected}"
        )
    for _, arr in blocks:
        nbytes = arr.size * 8
        flat = np.frombuffer(blob[off : off + nbytes], dtype="<f8")
        arr[...] = flat.reshape(arr.shape)
        off += nbytes
    return model
