"""Image containers, raster I/O, colorspace conversion, and scribble maps.

Everything downstream works on these types: 8-bit RGB images, their YUV
and CIELAB float representations, ternary scribble annotations, and binary
masks.  All containers are immutable after construction (the backing numpy
arrays are marked read-only) and therefore safe to share across threads.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from skimage.color import rgb2lab

from .errors import (
    CorruptImageError,
    DimensionMismatchError,
    UnsupportedFormatError,
)

# Scribble label codes.
UNLABELED = 0
FOREGROUND = 1
BACKGROUND = 2

# Exact annotation colors: green strokes mark foreground, red background.
SCRIBBLE_FG_COLOR = (0, 255, 0)
SCRIBBLE_BG_COLOR = (255, 0, 0)

# BT.601 full-range luma weights, with U/V affine-mapped into [0, 1].
# U = 0.492(B-Y) has magnitude <= 0.436, V = 0.877(R-Y) magnitude <= 0.615;
# dividing by twice those maxima keeps both chroma channels inside [0, 1].
_YUV_U_SCALE = 0.872
_YUV_V_SCALE = 1.230


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ImageBuffer:
    """Dense 8-bit RGB raster, shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) array, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        object.__setattr__(self, "pixels", _freeze(px))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)


@dataclass(frozen=True)
class YuvImage:
    """Per-pixel luma/chroma planes, every channel in [0, 1]."""

    luma: np.ndarray
    chroma_u: np.ndarray
    chroma_v: np.ndarray

    def __post_init__(self) -> None:
        for name in ("luma", "chroma_u", "chroma_v"):
            ch = np.asarray(getattr(self, name), dtype=np.float64)
            if ch.ndim != 2:
                raise ValueError(f"{name} must be a 2-D plane")
            if ch.shape != np.asarray(self.luma).shape:
                raise DimensionMismatchError("YUV planes differ in shape")
            object.__setattr__(self, name, _freeze(ch))

    @property
    def height(self) -> int:
        return self.luma.shape[0]

    @property
    def width(self) -> int:
        return self.luma.shape[1]


@dataclass(frozen=True)
class ScribbleMap:
    """Per-pixel ternary annotation: foreground / background / unlabeled."""

    labels: np.ndarray

    def __post_init__(self) -> None:
        lab = np.asarray(self.labels, dtype=np.uint8)
        if lab.ndim != 2:
            raise ValueError("labels must be a 2-D plane")
        if lab.max(initial=0) > BACKGROUND:
            raise ValueError("labels must be in {0, 1, 2}")
        object.__setattr__(self, "labels", _freeze(lab))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def fg_mask(self) -> np.ndarray:
        return self.labels == FOREGROUND

    def bg_mask(self) -> np.ndarray:
        return self.labels == BACKGROUND

    def seed_counts(self) -> tuple[int, int]:
        """(foreground, background) seed pixel counts."""
        return int(self.fg_mask().sum()), int(self.bg_mask().sum())

    def is_valid_annotation(self) -> bool:
        fg, bg = self.seed_counts()
        return fg >= 1 and bg >= 1


@dataclass(frozen=True)
class BinaryMask:
    """Per-pixel foreground bit (True = foreground)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=bool)
        if vals.ndim != 2:
            raise ValueError("values must be a 2-D plane")
        object.__setattr__(self, "values", _freeze(vals))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def _open_raster(source: Path | io.BytesIO) -> Image.Image:
    try:
        return Image.open(source)
    except UnidentifiedImageError as exc:
        raise UnsupportedFormatError(f"cannot identify raster: {source}") from exc
    except OSError as exc:
        raise CorruptImageError(f"failed to open raster: {source}") from exc


def load_image(path: str | Path) -> ImageBuffer:
    """Decode a raster file to an RGB buffer.

    Grayscale inputs are expanded to three identical channels; alpha is
    dropped.  PNG and binary PPM are supported (plus whatever else Pillow
    can identify).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such image: {path}")
    with _open_raster(path) as im:
        try:
            rgb = im.convert("RGB")
            return ImageBuffer(np.asarray(rgb, dtype=np.uint8))
        except OSError as exc:
            raise CorruptImageError(f"failed to decode image: {path}") from exc


def decode_image(data: bytes) -> ImageBuffer:
    """Decode raw raster bytes (used by the HTTP service)."""
    with _open_raster(io.BytesIO(data)) as im:
        try:
            rgb = im.convert("RGB")
            return ImageBuffer(np.asarray(rgb, dtype=np.uint8))
        except OSError as exc:
            raise CorruptImageError("failed to decode image bytes") from exc


def save_image(img: ImageBuffer, path: str | Path) -> None:
    """Write an RGB buffer as PNG or binary PPM, chosen by extension."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in (".png", ".ppm"):
        raise UnsupportedFormatError(f"unsupported output format: {suffix!r}")
    Image.fromarray(np.asarray(img.pixels)).save(path)


def rgb_to_yuv(img: ImageBuffer) -> YuvImage:
    """BT.601 full-range RGB -> YUV with all channels affine-mapped to [0, 1].

    y' = y, u' = 0.492(b-y)/0.872 + 0.5, v' = 0.877(r-y)/1.230 + 0.5,
    on r, g, b scaled to [0, 1].
    """
    rgb = img.pixels.astype(np.float64) / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    u = 0.492 * (b - y) / _YUV_U_SCALE + 0.5
    v = 0.877 * (r - y) / _YUV_V_SCALE + 0.5
    return YuvImage(luma=y, chroma_u=u, chroma_v=v)


def rgb_to_lab(img: ImageBuffer) -> np.ndarray:
    """8-bit sRGB -> CIELAB (D65), shape (h, w, 3) float64."""
    return rgb2lab(np.asarray(img.pixels))


def load_scribbles(path: str | Path, width: int, height: int) -> ScribbleMap:
    """Read a scribble sidecar image of exactly (width, height).

    Pure green pixels map to foreground seeds, pure red to background,
    everything else to unlabeled.
    """
    annot = load_image(path)
    if annot.width != width or annot.height != height:
        raise DimensionMismatchError(
            f"scribble image is {annot.width}x{annot.height}, "
            f"expected {width}x{height}"
        )
    return scribbles_from_rgb(annot)


def scribbles_from_rgb(annot: ImageBuffer) -> ScribbleMap:
    px = annot.pixels
    labels = np.zeros(annot.shape, dtype=np.uint8)
    labels[np.all(px == SCRIBBLE_FG_COLOR, axis=-1)] = FOREGROUND
    labels[np.all(px == SCRIBBLE_BG_COLOR, axis=-1)] = BACKGROUND
    return ScribbleMap(labels)


def save_scribbles(scribbles: ScribbleMap, path: str | Path) -> None:
    """Write a scribble map back to the exact-color sidecar convention."""
    rgb = np.zeros((scribbles.height, scribbles.width, 3), dtype=np.uint8)
    rgb[scribbles.fg_mask()] = SCRIBBLE_FG_COLOR
    rgb[scribbles.bg_mask()] = SCRIBBLE_BG_COLOR
    save_image(ImageBuffer(rgb), path)


def load_mask(path: str | Path) -> BinaryMask:
    """Read a mask raster; any pixel with mean intensity >= 128 is foreground."""
    img = load_image(path)
    gray = img.pixels.astype(np.uint16).sum(axis=-1) / 3.0
    return BinaryMask(gray >= 128.0)


def save_mask(mask: BinaryMask, path: str | Path) -> None:
    """Write a mask as PNG/PPM: foreground white (255,255,255), background black."""
    rgb = np.zeros((mask.height, mask.width, 3), dtype=np.uint8)
    rgb[mask.values] = (255, 255, 255)
    save_image(ImageBuffer(rgb), path)


def save_gray(values: np.ndarray, path: str | Path) -> None:
    """Write a float field as an 8-bit grayscale PNG (values x255, clamped)."""
    arr = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    Image.fromarray((arr * 255.0).round().astype(np.uint8), mode="L").save(path)


def save_label_map(labels: np.ndarray, path: str | Path) -> None:
    """Write an integer label map as a 16-bit grayscale PNG."""
    arr = np.asarray(labels)
    if arr.min(initial=0) < 0 or arr.max(initial=0) > 65535:
        raise ValueError("labels outside the 16-bit range")
    Image.fromarray(arr.astype(np.uint16)).save(path)


def encode_mask_png(mask: BinaryMask) -> bytes:
    """PNG-encode a mask in memory (white foreground on black)."""
    rgb = np.zeros((mask.height, mask.width, 3), dtype=np.uint8)
    rgb[mask.values] = (255, 255, 255)
    buf = io.BytesIO()
    Image.fromarray(rgb).save(buf, format="PNG")
    return buf.getvalue()
