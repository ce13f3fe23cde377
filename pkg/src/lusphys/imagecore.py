"""Image container conventions, normalization and PGM/PFM persistence.

Images are plain 2D ``numpy`` arrays. Row index is depth (increasing
downward), column index is lateral position. In memory every operation
works in float64; the canonical on-disk form is a 32-bit portable floatmap.
"""

import os
import tempfile
from enum import IntEnum
from pathlib import Path

import numpy as np

FORMAT_VERSION = "1"


class ImageError(ValueError):
    """Base class for image validation and format failures."""


class NonFiniteError(ImageError):
    def __init__(self, row, col, value):
        self.row, self.col, self.value = int(row), int(col), value
        super().__init__(f"non-finite value {value!r} at pixel (row={row}, col={col})")


class ImageFormatError(ImageError):
    """Raised when a file cannot be decoded as PGM/PFM."""


class HeaderError(ImageFormatError):
    pass


class DimensionError(ImageFormatError):
    pass


class TruncatedError(ImageFormatError):
    pass


class SeverityClass(IntEnum):
    """Five-level lung ultrasound severity taxonomy."""

    A_LINES = 1
    NO_A_LINES = 2
    B_LINES = 3
    CONFLUENT_B_LINES = 4
    CONSOLIDATION = 5


def as_image(data, name="image"):
    """Validate ``data`` as a finite 2D image (at least 2x2) and return a float64 array."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise ImageError(f"{name} must be 2D, got shape {arr.shape}")
    if arr.shape[0] < 2 or arr.shape[1] < 2:
        raise ImageError(f"{name} must be at least 2x2, got {arr.shape}")
    bad = ~np.isfinite(arr)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise NonFiniteError(r, c, arr[r, c])
    return arr


def check_same_shape(*images):
    shapes = {np.shape(im) for im in images}
    if len(shapes) != 1:
        raise ImageError(f"image dimensions differ: {sorted(shapes)}")


def normalize(img):
    """Min-max scale to [0, 1]; a constant image maps to all zeros."""
    arr = as_image(img)
    lo, hi = arr.min(), arr.max()
    if hi == lo:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def scale_to_max(arr):
    """Divide by the maximum; an all-zero (or non-positive) array maps to zeros."""
    arr = np.asarray(arr, dtype=np.float64)
    peak = arr.max()
    if peak <= 0:
        return np.zeros_like(arr)
    return arr / peak


# --------------------------------------------------------------------------
# PGM (P5, maxval 255) and PFM (Pf, grayscale)
# --------------------------------------------------------------------------


def _read_tokens(buf, count):
    """Parse ``count`` whitespace-separated header tokens, skipping comments.

    Returns the tokens and the offset just past the single whitespace
    character that terminates the last token.
    """
    tokens = []
    pos = 0
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos : pos + 1] == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise HeaderError("unexpected end of header")
        tokens.append(buf[start:pos])
    if pos >= n:
        raise HeaderError("header not terminated by whitespace")
    return tokens, pos + 1


def _parse_dims(wtok, htok):
    try:
        width, height = int(wtok), int(htok)
    except ValueError as exc:
        raise HeaderError(f"bad dimensions {wtok!r} x {htok!r}") from exc
    if width < 2 or height < 2:
        raise DimensionError(f"image dimensions must be >= 2, got {width}x{height}")
    return width, height


def decode_pgm(buf):
    if not buf.startswith(b"P5"):
        raise HeaderError(f"not a binary PGM (magic {buf[:2]!r})")
    (magic, wtok, htok, mtok), offset = _read_tokens(buf, 4)
    if magic != b"P5":
        raise HeaderError(f"bad magic {magic!r}")
    width, height = _parse_dims(wtok, htok)
    try:
        maxval = int(mtok)
    except ValueError as exc:
        raise HeaderError(f"bad maxval {mtok!r}") from exc
    if maxval != 255:
        raise HeaderError(f"only maxval 255 is supported, got {maxval}")
    payload = buf[offset:]
    expected = width * height
    if len(payload) < expected:
        raise TruncatedError(f"payload has {len(payload)} bytes, expected {expected}")
    if len(payload) > expected:
        raise DimensionError(
            f"payload has {len(payload)} bytes, header declares {width}x{height}"
        )
    data = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return data.astype(np.float64) / 255.0


def encode_pgm(img):
    arr = as_image(img)
    q = np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    rows, cols = q.shape
    return f"P5\n{cols} {rows}\n255\n".encode("ascii") + q.tobytes()


def decode_pfm(buf):
    if not buf.startswith(b"Pf"):
        raise HeaderError(f"not a grayscale PFM (magic {buf[:2]!r})")
    (magic, wtok, htok, stok), offset = _read_tokens(buf, 4)
    if magic != b"Pf":
        raise HeaderError(f"bad magic {magic!r}")
    width, height = _parse_dims(wtok, htok)
    try:
        scale = float(stok)
    except ValueError as exc:
        raise HeaderError(f"bad scale {stok!r}") from exc
    if scale == 0 or not np.isfinite(scale):
        raise HeaderError(f"bad scale {stok!r}")
    dtype = "<f4" if scale < 0 else ">f4"
    payload = buf[offset:]
    expected = 4 * width * height
    if len(payload) < expected:
        raise TruncatedError(f"payload has {len(payload)} bytes, expected {expected}")
    if len(payload) > expected:
        raise DimensionError(
            f"payload has {len(payload)} bytes, header declares {width}x{height}"
        )
    # PFM stores scanlines bottom-to-top.
    data = np.frombuffer(payload, dtype=dtype).reshape(height, width)[::-1]
    return as_image(data)


def encode_pfm(img):
    arr = as_image(img)
    f32 = np.ascontiguousarray(arr[::-1], dtype="<f4")
    rows, cols = arr.shape
    return f"Pf\n{cols} {rows}\n-1.0\n".encode("ascii") + f32.tobytes()


_CODECS = {"pgm": (decode_pgm, encode_pgm), "pfm": (decode_pfm, encode_pfm)}


def infer_format(path):
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix not in _CODECS:
        raise ImageFormatError(f"cannot infer image format from {path!s}; use .pgm or .pfm")
    return suffix


def load_image(path, format=None):
    """Read a P5 graymap (scaled to [0, 1]) or a Pf floatmap."""
    fmt = format or infer_format(path)
    if fmt not in _CODECS:
        raise ImageFormatError(f"unknown format {fmt!r}")
    buf = Path(path).read_bytes()
    return _CODECS[fmt][0](buf)


def write_atomic(path, payload):
    """Write bytes to ``path`` via a temporary sibling file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_image(img, path, format=None):
    fmt = format or infer_format(path)
    if fmt not in _CODECS:
        raise ImageFormatError(f"unknown format {fmt!r}")
    write_atomic(path, _CODECS[fmt][1](img))
