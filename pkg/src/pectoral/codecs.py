"""Lossless grayscale codecs: portable graymap (P5/P2) and PNG.

The format is chosen from the file's magic bytes when reading and from the
extension when writing.  16-bit graymap samples are big-endian.
"""
from __future__ import annotations

import io
import os
import re

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (BitDepthError, ColorImageError, ImageFormatError,
                     TruncatedImageError)
from .raster import GrayImage

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def read_image(path) -> GrayImage:
    with open(path, "rb") as fh:
        data = fh.read()
    return decode_image(data, name=str(path))


def decode_image(data: bytes, name: str = "<bytes>") -> GrayImage:
    if data.startswith(PNG_MAGIC):
        return _decode_png(data, name)
    if data[:2] in (b"P5", b"P2"):
        return _decode_pnm(data, name)
    if data[:2] in (b"P3", b"P6"):
        raise ColorImageError(f"{name}: color portable pixmap is not supported")
    if data[:2] in (b"P1", b"P4", b"P7"):
        raise ImageFormatError(f"{name}: unsupported portable-anymap variant {data[:2]!r}")
    raise ImageFormatError(f"{name}: unrecognized image format")


def _header_fields(data: bytes, count: int, name: str):
    pos = 2
    fields = []
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise ImageFormatError(f"{name}: incomplete graymap header")
        try:
            fields.append(int(m.group(1)))
        except ValueError:
            raise ImageFormatError(f"{name}: malformed graymap header field {m.group(1)!r}") from None
        pos = m.end()
    return fields, pos


def _decode_pnm(data: bytes, name: str) -> GrayImage:
    magic = data[:2]
    (width, height, maxval), pos = _header_fields(data, 3, name)
    if width < 1 or height < 1:
        raise ImageFormatError(f"{name}: bad dimensions {width}x{height}")
    if maxval < 1:
        raise ImageFormatError(f"{name}: bad maxval {maxval}")
    if maxval > 65535:
        raise BitDepthError(f"{name}: maxval {maxval} exceeds 16 bits")
    depth = 8 if maxval < 256 else 16
    n = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise TruncatedImageError(f"{name}: missing raster data")
        pos += 1
        dtype = np.dtype(">u2") if depth == 16 else np.dtype("u1")
        need = n * dtype.itemsize
        if len(data) - pos < need:
            raise TruncatedImageError(f"{name}: expected {need} raster bytes, found {len(data) - pos}")
        pixels = np.frombuffer(data, dtype=dtype, count=n, offset=pos)
    else:
        tokens = data[pos:].split()
        if len(tokens) < n:
            raise TruncatedImageError(f"{name}: expected {n} samples, found {len(tokens)}")
        try:
            pixels = np.array([int(t) for t in tokens[:n]], dtype=np.int64)
        except ValueError:
            raise ImageFormatError(f"{name}: non-numeric sample in ASCII graymap") from None

    pixels = pixels.reshape(height, width)
    if int(pixels.max()) > maxval:
        raise ImageFormatError(f"{name}: sample exceeds declared maxval {maxval}")
    return GrayImage(pixels.astype(np.uint16), depth)


def _decode_png(data: bytes, name: str) -> GrayImage:
    try:
        im = Image.open(io.BytesIO(data))
        im.load()
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        # the signature already matched, so an unreadable stream is damaged or cut short
        raise TruncatedImageError(f"{name}: {exc}") from None

    if im.mode in ("L", "1"):
        arr = np.asarray(im.convert("L"), dtype=np.uint16)
        return GrayImage(arr, 8)
    if im.mode.startswith("I;16") or im.mode == "I":
        arr = np.asarray(im)
        if arr.dtype.byteorder == ">" or im.mode == "I;16B":
            arr = arr.astype(np.uint16)
        if arr.size and (int(arr.min()) < 0 or int(arr.max()) > 65535):
            raise BitDepthError(f"{name}: samples exceed 16 bits")
        return GrayImage(arr.astype(np.uint16), 16)
    if im.mode in ("RGB", "RGBA", "P", "LA", "PA", "CMYK", "YCbCr"):
        raise ColorImageError(f"{name}: {im.mode} image is not single-channel grayscale")
    raise BitDepthError(f"{name}: unsupported PNG mode {im.mode}")


def encode_pgm(img: GrayImage, ascii: bool = False) -> bytes:
    maxval = img.max_value
    header = f"{'P2' if ascii else 'P5'}\n{img.width} {img.height}\n{maxval}\n".encode()
    if ascii:
        rows = (" ".join(str(v) for v in row) for row in img.pixels.tolist())
        return header + "\n".join(rows).encode() + b"\n"
    dtype = ">u2" if img.bit_depth == 16 else "u1"
    return header + img.pixels.astype(dtype).tobytes()


def encode_png(img: GrayImage) -> bytes:
    if img.bit_depth == 8:
        im = Image.fromarray(img.pixels.astype(np.uint8))
    else:
        im = Image.fromarray(img.pixels.astype(np.uint16))
    buf = io.BytesIO()
    im.save(buf, format="PNG")
    return buf.getvalue()


def write_image(img: GrayImage, path, ascii: bool = False) -> None:
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".png":
        payload = encode_png(img)
    elif ext in (".pgm", ".pnm"):
        payload = encode_pgm(img, ascii=ascii)
    else:
        raise ImageFormatError(f"cannot infer output format from extension {ext!r}")
    with open(path, "wb") as fh:
        fh.write(payload)


def write_mask(mask: np.ndarray, path) -> None:
    """Store a boolean mask as an 8-bit image with 0/255 samples."""
    write_image(GrayImage(np.where(mask, 255, 0).astype(np.uint16), 8), path)


def read_mask(path) -> np.ndarray:
    return read_image(path).pixels > 0


def write_rgb_png(rgb: np.ndarray, path) -> None:
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8)).save(path, format="PNG")
