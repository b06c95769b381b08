"""Binary PGM (P5, maxval 255) luminance images."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PgmError(ValueError):
    pass


@dataclass(frozen=True)
class LuminanceImage:
    width: int
    height: int
    pixels: bytes  # row-major, len == width * height

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise PgmError("image dimensions must be positive")
        if len(self.pixels) != self.width * self.height:
            raise PgmError(
                f"pixel count {len(self.pixels)} != {self.width}x{self.height}"
            )

    def as_array(self) -> np.ndarray:
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "LuminanceImage":
        arr = np.asarray(arr, dtype=np.uint8)
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=arr.tobytes())


def decode_pgm(data: bytes) -> LuminanceImage:
    if not data.startswith(b"P5"):
        raise PgmError("not a P5 PGM")
    fields: list[int] = []
    i = 2
    while len(fields) < 3:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":  # comment to end of line
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace():
            j += 1
        if j == i:
            raise PgmError("truncated header")
        try:
            fields.append(int(data[i:j]))
        except ValueError:
            raise PgmError(f"bad header field {data[i:j]!r}")
        i = j
    i += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise PgmError(f"unsupported maxval {maxval}")
    pixels = data[i : i + width * height]
    if len(pixels) != width * height:
        raise PgmError("truncated pixel data")
    return LuminanceImage(width=width, height=height, pixels=pixels)


def encode_pgm(img: LuminanceImage) -> bytes:
    return b"P5\n%d %d\n255\n" % (img.width, img.height) + img.pixels


def read_pgm(path) -> LuminanceImage:
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def write_pgm(path, img: LuminanceImage) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(img))
