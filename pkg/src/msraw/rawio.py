"""File formats: ``.msraw`` packed Bayer files, RGB images, raw ``.npy``.

``.msraw`` layout (all integers little-endian)::

    offset  size  field
    0       8     magic b"MSRAW001"
    8       4     u32 format version (1)
    12      4     u32 reserved, zero
    16      2     u16 dtype code (16 = uint16 samples)
    18      2     u16 plane count (4)
    20      4     u32 full-resolution height H
    24      4     u32 full-resolution width W
    28      4     u32 white level
    32      4     u32 black level
    36      ...   uint16 samples, C order, planes (B, G1, G2, R), each H/2 x W/2

A sample stores ``round(clip(v, 0, 1) * white_level)``.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .mosaic import RawImage, RgbImage

MAGIC = b"MSRAW001"
VERSION = 1
DTYPE_U16 = 16
_PREAMBLE = struct.Struct("<8sII")
_HEADER = struct.Struct("<HHIIII")
HEADER_SIZE = _PREAMBLE.size + _HEADER.size


def quantize(planes: np.ndarray, white_level: int) -> np.ndarray:
    return np.rint(np.clip(planes, 0.0, 1.0) * white_level).astype("<u2")


def encode_msraw(raw: RawImage) -> bytes:
    wl = int(raw.storage_scale)
    if not 0 < wl <= 0xFFFF:
        raise FormatError(f"white level {wl} does not fit uint16 storage")
    head = _PREAMBLE.pack(MAGIC, VERSION, 0) + _HEADER.pack(
        DTYPE_U16, 4, raw.height, raw.width, wl, int(raw.black_level)
    )
    return head + quantize(raw.planes, wl).tobytes(order="C")


def decode_msraw(data: bytes, source: str = "<bytes>") -> RawImage:
    if len(data) < HEADER_SIZE:
        raise FormatError(f"{source}: truncated header")
    magic, version, _ = _PREAMBLE.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"{source}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{source}: unsupported version {version}")
    dtype, planes, h, w, wl, bl = _HEADER.unpack_from(data, _PREAMBLE.size)
    if dtype != DTYPE_U16 or planes != 4:
        raise FormatError(f"{source}: unsupported dtype/planes ({dtype}, {planes})")
    if h % 2 or w % 2 or h == 0 or w == 0:
        raise FormatError(f"{source}: invalid dimensions {h}x{w}")
    if wl == 0:
        raise FormatError(f"{source}: white level is zero")
    n = 4 * (h // 2) * (w // 2)
    body = data[HEADER_SIZE:]
    if len(body) != 2 * n:
        raise FormatError(f"{source}: expected {2 * n} payload bytes, found {len(body)}")
    q = np.frombuffer(body, dtype="<u2").reshape(4, h // 2, w // 2)
    return RawImage(q.astype(np.float64) / wl, storage_scale=wl, black_level=bl)


def write_msraw(path, raw: RawImage) -> str:
    """Write ``raw`` and return the sha256 of the bytes written."""
    data = encode_msraw(raw)
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def read_msraw(path) -> RawImage:
    path = Path(path)
    return decode_msraw(path.read_bytes(), source=str(path))


def read_raw(path) -> RawImage:
    """Read ``.msraw`` or a float ``.npy`` of shape (4, h, w)."""
    path = Path(path)
    if path.suffix == ".npy":
        try:
            return RawImage(np.load(path), storage_scale=0xFFFF)
        except ValueError as e:
            raise FormatError(f"{path}: {e}") from None
    if path.suffix == ".msraw":
        return read_msraw(path)
    raise FormatError(f"{path}: unknown raw format (expected .msraw or .npy)")


def write_raw(path, raw: RawImage) -> str:
    path = Path(path)
    if path.suffix == ".npy":
        np.save(path, raw.planes)
        return sha256_file(path)
    if path.suffix == ".msraw":
        return write_msraw(path, raw)
    raise FormatError(f"{path}: unknown raw format (expected .msraw or .npy)")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def read_rgb(path) -> RgbImage:
    """Load an sRGB image as floats in [0, 1].

    ``.npy`` files hold (H, W, 3) or (3, H, W) floats. Anything else goes
    through Pillow; 8-bit and 16-bit samples are scaled by their maximum code.
    """
    path = Path(path)
    if path.suffix == ".npy":
        try:
            a = np.load(path)
        except ValueError as e:
            raise FormatError(f"{path}: {e}") from None
        if a.ndim == 3 and a.shape[-1] == 3 and a.shape[0] != 3:
            a = np.moveaxis(a, -1, 0)
        return RgbImage(a, domain="srgb")

    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("I;16", "I;16B", "I;16L", "I"):
                a = np.asarray(im, dtype=np.float64) / 65535.0
                a = np.repeat(a[None], 3, axis=0)
                return RgbImage(a, domain="srgb")
            a = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError) as e:
        raise FormatError(f"{path}: cannot decode image ({e})") from None
    return RgbImage(np.moveaxis(a, -1, 0), domain="srgb")


def write_rgb(path, img: RgbImage) -> None:
    """Write ``.npy`` floats (H, W, 3) or an 8-bit image via Pillow."""
    path = Path(path)
    hwc = np.moveaxis(img.planes, 0, -1)
    if path.suffix == ".npy":
        np.save(path, hwc)
        return
    from PIL import Image

    Image.fromarray(np.rint(np.clip(hwc, 0, 1) * 255).astype(np.uint8)).save(path)
