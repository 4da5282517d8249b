"""Binary tensor file format.

Layout: 4-byte magic ``TGT1``, uint32 little-endian order M, M uint32
little-endian dimensions, then prod(dims) float64 little-endian values in
column-major order. A matrix is simply the M=2 case. Round-trips are exact:
the payload is the raw IEEE-754 bytes.
"""

import struct

import numpy as np

MAGIC = b"TGT1"

__all__ = ["read_tensor", "write_tensor", "MAGIC"]


class FormatError(ValueError):
    """Raised when a file does not follow the TGT1 layout."""


def write_tensor(path, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim < 1:
        x = x.reshape(1)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", x.ndim))
        fh.write(struct.pack(f"<{x.ndim}I", *x.shape))
        fh.write(np.asfortranarray(x).astype("<f8", copy=False).tobytes(order="F"))


def read_tensor(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise FormatError(f"{path}: missing TGT1 magic")
    (order,) = struct.unpack_from("<I", raw, 4)
    header_end = 8 + 4 * order
    if order == 0 or len(raw) < header_end:
        raise FormatError(f"{path}: truncated header (order={order})")
    dims = struct.unpack_from(f"<{order}I", raw, 8)
    count = int(np.prod(dims, dtype=np.int64))
    expected = header_end + 8 * count
    if len(raw) != expected:
        raise FormatError(
            f"{path}: payload length {len(raw) - header_end} bytes, "
            f"expected {8 * count} for dims {dims}"
        )
    data = np.frombuffer(raw, dtype="<f8", count=count, offset=header_end)
    return data.reshape(dims, order="F").astype(np.float64)
