"""Portable FloatMap (PFM) reading and writing.

Grayscale ('Pf') and RGB ('PF') variants, 32-bit floats.  The scale header's
sign encodes endianness; we always write little-endian (scale -1.0).  Rows
are stored bottom-to-top per the format, so buffers are flipped on IO.
Signed values are permitted (D-ToF buffers are signed by nature).
"""

from __future__ import annotations

import numpy as np


def write_pfm(path, image, scale=-1.0):
    image = np.asarray(image, dtype=np.float32)
    if image.ndim == 2:
        header = b"Pf"
    elif image.ndim == 3 and image.shape[2] == 3:
        header = b"PF"
    else:
        raise ValueError("PFM images must be HxW or HxWx3")
    if scale >= 0.0:
        raise ValueError("only little-endian output is supported "
                         "(scale must be negative)")
    h, w = image.shape[:2]
    data = np.flipud(image).astype("<f4")
    with open(path, "wb") as f:
        f.write(header + b"\n")
        f.write(f"{w} {h}\n".encode())
        f.write(f"{scale}\n".encode())
        f.write(data.tobytes())


def read_pfm(path):
    with open(path, "rb") as f:
        header = f.readline().strip()
        if header == b"Pf":
            channels = 1
        elif header == b"PF":
            channels = 3
        else:
            raise ValueError(f"not a PFM file: {path}")
        dims = f.readline().split()
        w, h = int(dims[0]), int(dims[1])
        scale = float(f.readline().strip())
        dtype = "<f4" if scale < 0.0 else ">f4"
        data = np.frombuffer(f.read(w * h * channels * 4), dtype=dtype)
    shape = (h, w) if channels == 1 else (h, w, 3)
    img = data.reshape(shape)
    return np.flipud(img).copy()
