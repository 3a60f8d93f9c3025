"""Raster types shared by every stage, plus graymap / PNG file I/O.

Images are held as float64 numpy arrays of shape (height, width). Samples are
only re-quantized to integers when written to disk.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Union

import numpy as np

PathLike = Union[str, os.PathLike]


class ImageFormatError(ValueError):
    """Raised for malformed or out-of-range raster files."""


class PixelCoord(NamedTuple):
    x: int
    y: int


def _check_in_bounds(p: PixelCoord, shape: tuple) -> None:
    h, w = shape
    if not (0 <= p.x < w and 0 <= p.y < h):
        raise IndexError(f"pixel {tuple(p)} outside {w}x{h} image")


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Single-channel raster with samples in [0, max_value]."""

    data: np.ndarray
    max_value: float = 255.0

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"image data must be a non-empty 2D array, got shape {arr.shape}")
        if not self.max_value > 0:
            raise ValueError("max_value must be positive")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image contains non-finite samples")
        if arr.min() < 0 or arr.max() > self.max_value:
            raise ValueError("sample out of range")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "max_value", float(self.max_value))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def __getitem__(self, p: PixelCoord) -> float:
        _check_in_bounds(p, self.shape)
        return float(self.data[p.y, p.x])

    def replace(self, data: np.ndarray) -> "GrayImage":
        return GrayImage(data, self.max_value)

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.max_value == other.max_value and np.array_equal(self.data, other.data)

    __hash__ = None


@dataclass(eq=False)
class TargetMask:
    """Pixels to be synthesized by inpainting (True = unknown).

    The only mutable raster: the inpainting driver clears flags as it fills.
    """

    flags: np.ndarray

    def __post_init__(self):
        flags = np.array(self.flags, dtype=bool)
        if flags.ndim != 2 or flags.size == 0:
            raise ValueError(f"mask must be a non-empty 2D array, got shape {flags.shape}")
        self.flags = flags

    @classmethod
    def empty(cls, shape: tuple) -> "TargetMask":
        return cls(np.zeros(shape, dtype=bool))

    @property
    def width(self) -> int:
        return self.flags.shape[1]

    @property
    def height(self) -> int:
        return self.flags.shape[0]

    @property
    def shape(self) -> tuple:
        return self.flags.shape

    def count(self) -> int:
        return int(self.flags.sum())

    def copy(self) -> "TargetMask":
        return TargetMask(self.flags.copy())

    def __eq__(self, other):
        if not isinstance(other, TargetMask):
            return NotImplemented
        return np.array_equal(self.flags, other.flags)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class EdgeMap:
    flags: np.ndarray

    def __post_init__(self):
        flags = np.array(self.flags, dtype=bool)
        if flags.ndim != 2 or flags.size == 0:
            raise ValueError(f"edge map must be a non-empty 2D array, got shape {flags.shape}")
        flags.setflags(write=False)
        object.__setattr__(self, "flags", flags)

    @property
    def shape(self) -> tuple:
        return self.flags.shape

    def __eq__(self, other):
        if not isinstance(other, EdgeMap):
            return NotImplemented
        return np.array_equal(self.flags, other.flags)

    __hash__ = None


def check_same_shape(*items) -> None:
    """Raise ValueError unless every raster argument has the same shape."""
    shapes = {tuple(item.shape) for item in items if item is not None}
    if len(shapes) > 1:
        raise ValueError(f"dimension mismatch: {sorted(shapes)}")


def detect_target_mask(depth: GrayImage, sentinel: float = 0, extra: Optional[TargetMask] = None) -> TargetMask:
    """Flag sentinel-valued pixels, OR-ed with an optional user mask."""
    flags = depth.data == sentinel
    if extra is not None:
        check_same_shape(depth, extra)
        flags = flags | extra.flags
    return TargetMask(flags)


# --------------------------------------------------------------------------
# Portable graymap (P2 / P5)


def _read_pnm_tokens(buf: bytes, count: int, pos: int):
    """Read `count` whitespace-separated header tokens, skipping comments."""
    tokens = []
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos:pos + 1] == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ImageFormatError("malformed header: unexpected end of file")
        tokens.append(buf[start:pos])
    return tokens, pos


def _parse_pgm(buf: bytes) -> GrayImage:
    magic = buf[:2]
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError(f"malformed header: unsupported magic {magic!r}")
    tokens, pos = _read_pnm_tokens(buf, 3, 2)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ImageFormatError("malformed header: non-integer field") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ImageFormatError(f"malformed header: width={width} height={height} maxval={maxval}")
    npix = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        if pos >= len(buf) or not buf[pos:pos + 1].isspace():
            raise ImageFormatError("malformed header: missing separator before raster")
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = npix * dtype.itemsize
        if len(buf) - pos < need:
            raise ImageFormatError("truncated raster data")
        samples = np.frombuffer(buf, dtype=dtype, count=npix, offset=pos).astype(np.int64)
    else:
        fields = buf[pos:].split()
        if len(fields) < npix:
            raise ImageFormatError("truncated raster data")
        try:
            samples = np.array([int(f) for f in fields[:npix]], dtype=np.int64)
        except ValueError:
            raise ImageFormatError("malformed raster: non-integer sample") from None

    if samples.size and (samples.max() > maxval or samples.min() < 0):
        raise ImageFormatError(f"sample out of range (max {maxval})")
    return GrayImage(samples.reshape(height, width).astype(np.float64), float(maxval))


def _quantize(img: GrayImage) -> tuple[np.ndarray, int]:
    maxval = int(round(img.max_value))
    if maxval != img.max_value or not 0 < maxval < 65536:
        raise ValueError(f"max_value {img.max_value} cannot be stored in a graymap")
    return np.clip(np.rint(img.data), 0, maxval).astype(np.int64), maxval


def _encode_pgm(img: GrayImage, ascii: bool = False) -> bytes:
    q, maxval = _quantize(img)
    h, w = q.shape
    if ascii:
        rows = "\n".join(" ".join(str(v) for v in row) for row in q)
        return f"P2\n{w} {h}\n{maxval}\n{rows}\n".encode("ascii")
    dtype = ">u2" if maxval > 255 else "u1"
    return f"P5\n{w} {h}\n{maxval}\n".encode("ascii") + q.astype(dtype).tobytes()


_PNM_SUFFIXES = {".pgm", ".pnm"}


def load_gray_image(path: PathLike) -> GrayImage:
    """Load a graymap (P2/P5) or a single-channel PNG.

    max_value comes from the graymap header, or from the PNG bit depth.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:2] in (b"P2", b"P5"):
        return _parse_pgm(buf)
    if path.suffix.lower() in _PNM_SUFFIXES:
        raise ImageFormatError(f"malformed header in {path}")
    return _load_with_pillow(path)


def _load_with_pillow(path: Path) -> GrayImage:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im, dtype=np.int64)
                max_value = 65535.0
            elif mode in ("L", "1", "P"):
                arr = np.asarray(im.convert("L"), dtype=np.int64)
                max_value = 255.0
            else:
                raise ImageFormatError(f"{path} is not a single-channel raster (mode {mode})")
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"unrecognized raster format: {path}") from exc
    if arr.max(initial=0) > max_value or arr.min(initial=0) < 0:
        raise ImageFormatError(f"sample out of range (max {max_value:g})")
    return GrayImage(arr.astype(np.float64), max_value)


def load_guide_image(path: PathLike, max_value: float = 255.0) -> GrayImage:
    """Load any raster (RGB allowed) as luminance rescaled to [0, max_value]."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head in (b"P2", b"P5"):
        gray = load_gray_image(path)
        return GrayImage(gray.data * (max_value / gray.max_value), max_value)
    from PIL import Image

    with Image.open(path) as im:
        if im.mode.startswith("I;16") or im.mode == "I":
            arr = np.asarray(im, dtype=np.float64)
            peak = 65535.0
        else:
            arr = np.asarray(im.convert("L"), dtype=np.float64)
            peak = 255.0
    return GrayImage(np.clip(arr * (max_value / peak), 0, max_value), max_value)


def save_gray_image(img: GrayImage, path: PathLike, ascii: bool = False) -> None:
    """Write ``img``; samples are rounded to the nearest integer.

    ``.png`` paths are written through Pillow (8-bit when max_value <= 255,
    else 16-bit); everything else is written as a graymap.
    """
    path = Path(path)
    if path.suffix.lower() == ".png":
        from PIL import Image

        q, maxval = _quantize(img)
        if maxval <= 255:
            Image.fromarray(q.astype(np.uint8)).save(path)
        else:
            Image.fromarray(q.astype(np.uint16)).save(path)
        return
    payload = _encode_pgm(img, ascii=ascii)
    with open(path, "wb") as fh:
        fh.write(payload)


def load_mask(path: PathLike, shape: Optional[tuple] = None) -> TargetMask:
    """Load a mask raster; any nonzero sample is a target pixel."""
    img = load_gray_image(path)
    mask = TargetMask(img.data != 0)
    if shape is not None and mask.shape != tuple(shape):
        raise ValueError(f"dimension mismatch: mask {mask.shape} vs image {tuple(shape)}")
    return mask


def save_mask(mask: TargetMask, path: PathLike) -> None:
    save_gray_image(GrayImage(mask.flags.astype(np.float64) * 255, 255), path)
