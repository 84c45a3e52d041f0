"""Grayscale image preprocessing and GLCM/Haralick texture features.

Pipeline per image: median filter, Otsu background suppression keeping the
largest connected foreground component, overlapping top/mid/bottom
segmentation, then 13 Haralick statistics at four unit offsets (52 values)
for the whole image and each segment.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ImageError, RebalanceError

# (dx, dy): dx is the column step, dy the row step (downward)
OFFSETS = ((1, 0), (1, 1), (0, 1), (-1, 1))
# angle labels for the symmetric matrices, measured counter-clockwise with rows pointing down
ORIENTATION_NAMES = ("0", "135", "90", "45")
HARALICK_NAMES = (
    "angular_second_moment", "contrast", "correlation", "sum_of_squares_variance",
    "inverse_difference_moment", "sum_average", "sum_variance", "sum_entropy", "entropy",
    "difference_variance", "difference_entropy", "info_correlation_1", "info_correlation_2",
)
SEGMENTS = ("whole", "top", "mid", "bottom")


@dataclass(frozen=True, eq=False)
class GrayImage:
    pixels: np.ndarray
    bit_depth: int = 8

    def __post_init__(self):
        if self.pixels.ndim != 2 or self.pixels.size == 0:
            raise ImageError("image must be a non-empty 2-d array")
        if self.bit_depth < 1 or self.bit_depth > 16:
            raise ImageError("bit depth must lie in 1..16")
        if self.pixels.min() < 0 or self.pixels.max() >= 2 ** self.bit_depth:
            raise ImageError(f"intensities must lie in [0, {2 ** self.bit_depth})")

    @classmethod
    def of(cls, pixels, bit_depth: int = 8) -> "GrayImage":
        return cls(np.asarray(pixels, dtype=np.int64), bit_depth)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


# ---------------------------------------------------------------- PGM I/O

_TOKEN = re.compile(rb"(#[^\n]*\n)|(\S+)")


def read_pgm(path) -> GrayImage:
    """Read a P2 (ASCII) or P5 (binary, big-endian when 16-bit) PGM file."""
    raw = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = _TOKEN.search(raw, pos)
        if m is None:
            raise ImageError(f"{path}: truncated PGM header")
        pos = m.end()
        if m.group(2):
            tokens.append(m.group(2))
    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic not in (b"P2", b"P5"):
        raise ImageError(f"{path}: unsupported PGM magic {magic!r}")
    if not 0 < maxval < 65536 or width < 1 or height < 1:
        raise ImageError(f"{path}: bad PGM header")
    bit_depth = max(1, int(maxval).bit_length())
    if magic == b"P5":
        body = raw[pos + 1:]
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        count = width * height
        if len(body) < count * dtype.itemsize:
            raise ImageError(f"{path}: truncated pixel data")
        pixels = np.frombuffer(body, dtype=dtype, count=count).astype(np.int64)
    else:
        values = [int(t.group(2)) for t in _TOKEN.finditer(raw, pos) if t.group(2)]
        if len(values) < width * height:
            raise ImageError(f"{path}: truncated pixel data")
        pixels = np.array(values[: width * height], dtype=np.int64)
    return GrayImage(pixels.reshape(height, width), bit_depth)


def write_pgm(img: GrayImage, path, binary: bool = True) -> None:
    maxval = 2 ** img.bit_depth - 1
    header = f"{'P5' if binary else 'P2'}\n{img.width} {img.height}\n{maxval}\n".encode()
    if binary:
        dtype = ">u2" if maxval > 255 else "u1"
        body = img.pixels.astype(dtype).tobytes()
    else:
        body = "\n".join(" ".join(str(v) for v in row) for row in img.pixels).encode() + b"\n"
    Path(path).write_bytes(header + body)


# ---------------------------------------------------------------- preprocessing

def median_filter(img: GrayImage, window: int = 3) -> GrayImage:
    """Square-window median with edge replication."""
    if window < 3 or window % 2 == 0:
        raise ImageError(f"median window must be odd and >= 3, got {window}")
    out = ndimage.median_filter(img.pixels, size=window, mode="nearest")
    return GrayImage(out.astype(np.int64), img.bit_depth)


def otsu_threshold(img: GrayImage) -> int | None:
    """Level t maximizing between-class variance for the split {<= t} / {> t}; None if uniform."""
    hist = np.bincount(img.pixels.ravel(), minlength=2 ** img.bit_depth).astype(np.float64)
    if np.count_nonzero(hist) < 2:
        return None
    p = hist / hist.sum()
    levels = np.arange(len(p), dtype=np.float64)
    w0 = np.cumsum(p)
    mu = np.cumsum(p * levels)
    mu_t = mu[-1]
    w1 = 1.0 - w0
    with np.errstate(divide="ignore", invalid="ignore"):
        between = (mu_t * w0 - mu) ** 2 / (w0 * w1)
    between[(w0 <= 0) | (w1 <= 0)] = -1.0
    return int(np.argmax(between))


def suppress_background(img: GrayImage) -> tuple[GrayImage, np.ndarray]:
    """Zero everything except the largest 8-connected component above the Otsu threshold."""
    t = otsu_threshold(img)
    if t is None:
        warnings.warn("uniform image: background threshold undefined, image left unchanged", stacklevel=2)
        return img, np.ones(img.pixels.shape, dtype=bool)
    fg = img.pixels > t
    labels, count = ndimage.label(fg, structure=np.ones((3, 3), dtype=int))
    sizes = np.bincount(labels.ravel(), minlength=count + 1)
    sizes[0] = 0
    mask = labels == int(np.argmax(sizes))
    return GrayImage(np.where(mask, img.pixels, 0), img.bit_depth), mask


@dataclass(frozen=True, eq=False)
class SegmentSet:
    whole: GrayImage
    top: GrayImage
    mid: GrayImage
    bottom: GrayImage
    overlap_fraction: float
    bounds: tuple[tuple[int, int], ...]


def segment_bounds(height: int, overlap_fraction: float) -> tuple[tuple[int, int], ...]:
    """Half-open row ranges of the top, mid and bottom segments."""
    if height < 9:
        raise ImageError(f"image height {height} is below the minimum of 9 rows")
    if not 0 <= overlap_fraction < 0.5:
        raise ImageError("overlap_fraction must lie in [0, 0.5)")
    h = math.ceil(height * (1 + 2 * overlap_fraction) / 3 - 1e-9)
    h = min(h, height)
    mid = (height - h) // 2
    return (0, h), (mid, mid + h), (height - h, height)


def segment_thirds(img: GrayImage, overlap_fraction: float = 0.1) -> SegmentSet:
    bounds = segment_bounds(img.height, overlap_fraction)
    parts = [GrayImage(img.pixels[a:b].copy(), img.bit_depth) for a, b in bounds]
    return SegmentSet(img, *parts, overlap_fraction=overlap_fraction, bounds=bounds)


# ---------------------------------------------------------------- GLCM

@dataclass(frozen=True, eq=False)
class Glcm:
    levels: int
    matrix: np.ndarray
    offset: tuple[int, int]
    normalized: bool = True


def quantize(img: GrayImage, levels: int) -> np.ndarray:
    """Uniform bins over [0, 2**bit_depth): level = floor(v * levels / 2**bit_depth)."""
    return (img.pixels * levels) >> img.bit_depth


def glcm(img: GrayImage, levels: int = 8, offset: tuple[int, int] = (1, 0),
         mask: np.ndarray | None = None) -> Glcm:
    """Symmetric, normalized co-occurrence matrix; pairs touching a masked-out pixel are skipped."""
    if levels < 2:
        raise RebalanceError("levels must be >= 2")
    dx, dy = offset
    h, w = img.pixels.shape
    if abs(dx) >= w or abs(dy) >= h:
        raise ImageError(f"image {w}x{h} is smaller than offset {offset}")
    q = quantize(img, levels)
    keep = np.ones_like(q, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if keep.shape != q.shape:
        raise ImageError("mask shape differs from image shape")
    r0, r1 = max(0, -dy), h - max(0, dy)
    c0, c1 = max(0, -dx), w - max(0, dx)
    a = q[r0:r1, c0:c1]
    b = q[r0 + dy:r1 + dy, c0 + dx:c1 + dx]
    ok = keep[r0:r1, c0:c1] & keep[r0 + dy:r1 + dy, c0 + dx:c1 + dx]
    a, b = a[ok], b[ok]
    counts = np.zeros((levels, levels), dtype=np.float64)
    np.add.at(counts, (a, b), 1.0)
    counts = counts + counts.T
    total = counts.sum()
    if total == 0:
        raise ImageError("no valid pixel pairs for this offset and mask")
    return Glcm(levels, counts / total, (dx, dy), True)


def _plogp(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum()) + 0.0  # + 0.0 turns -0.0 into 0.0


def haralick13(g: Glcm) -> np.ndarray:
    """The 13 Haralick statistics of a normalized GLCM (natural logs, 0 log 0 = 0).

    Gray levels are numbered 1..G. Correlation is 1 when either marginal
    has zero variance.
    """
    p = np.asarray(g.matrix, dtype=np.float64)
    total = p.sum()
    if p.ndim != 2 or p.shape[0] != p.shape[1] or not (p >= 0).all():
        raise RebalanceError("GLCM must be a square non-negative matrix")
    if total == 0 or abs(total - 1.0) > 1e-9:
        raise RebalanceError("GLCM must be normalized with at least one nonzero entry")
    n = p.shape[0]
    lv = np.arange(1, n + 1, dtype=np.float64)
    i, j = np.meshgrid(lv, lv, indexing="ij")
    px, py = p.sum(axis=1), p.sum(axis=0)
    mu_x, mu_y = lv @ px, lv @ py
    sd_x = math.sqrt(max(0.0, ((lv - mu_x) ** 2) @ px))
    sd_y = math.sqrt(max(0.0, ((lv - mu_y) ** 2) @ py))

    k_sum = np.arange(2, 2 * n + 1, dtype=np.float64)
    p_sum = np.bincount((i + j - 2).astype(int).ravel(), weights=p.ravel(), minlength=2 * n - 1)
    k_diff = np.arange(n, dtype=np.float64)
    p_diff = np.bincount(np.abs(i - j).astype(int).ravel(), weights=p.ravel(), minlength=n)

    f1 = float((p * p).sum())
    f2 = float((k_diff ** 2) @ p_diff)
    if sd_x * sd_y > 0:
        f3 = float(((i * j * p).sum() - mu_x * mu_y) / (sd_x * sd_y))
    else:
        f3 = 1.0
    f4 = float(((i - mu_x) ** 2 * p).sum())
    f5 = float((p / (1.0 + (i - j) ** 2)).sum())
    f6 = float(k_sum @ p_sum)
    f7 = float(((k_sum - f6) ** 2) @ p_sum)
    f8 = _plogp(p_sum)
    f9 = _plogp(p)
    f10 = float(((k_diff - k_diff @ p_diff) ** 2) @ p_diff)
    f11 = _plogp(p_diff)
    hx, hy = _plogp(px), _plogp(py)
    outer = np.outer(px, py)
    nz = p > 0
    hxy1 = float(-(p[nz] * np.log(outer[nz])).sum()) + 0.0
    onz = outer > 0
    hxy2 = float(-(outer[onz] * np.log(outer[onz])).sum())
    denom = max(hx, hy)
    f12 = (f9 - hxy1) / denom if denom > 0 else 0.0
    f13 = math.sqrt(max(0.0, 1.0 - math.exp(-2.0 * (hxy2 - f9))))
    return np.array([f1, f2, f3, f4, f5, f6, f7, f8, f9, f10, f11, f12, f13])


# ---------------------------------------------------------------- feature extraction

@dataclass(frozen=True)
class TextureConfig:
    levels: int = 8
    median_window: int = 3
    overlap_fraction: float = 0.1


def feature_names() -> list[str]:
    return [f"f_{o}_{k}" for o in ORIENTATION_NAMES for k in range(1, 14)]


def texture_vector(img: GrayImage, levels: int = 8, mask: np.ndarray | None = None) -> np.ndarray:
    """52 values: orientation-major, f1..f13 within each orientation."""
    return np.concatenate([haralick13(glcm(img, levels, off, mask)) for off in OFFSETS])


def extract_features(img: GrayImage, cfg: TextureConfig = TextureConfig(),
                     mask: np.ndarray | None = None) -> dict[str, np.ndarray]:
    """Texture vectors for the whole image and its top/mid/bottom segments."""
    bounds = segment_bounds(img.height, cfg.overlap_fraction)
    out = {"whole": texture_vector(img, cfg.levels, mask)}
    for name, (a, b) in zip(SEGMENTS[1:], bounds):
        part = GrayImage(img.pixels[a:b], img.bit_depth)
        out[name] = texture_vector(part, cfg.levels, None if mask is None else mask[a:b])
    return out


def preprocess(img: GrayImage, cfg: TextureConfig = TextureConfig()) -> tuple[GrayImage, np.ndarray]:
    return suppress_background(median_filter(img, cfg.median_window))


def image_features(img: GrayImage, cfg: TextureConfig = TextureConfig()) -> dict[str, np.ndarray]:
    """Median filter, background suppression, then :func:`extract_features` on the foreground."""
    clean, mask = preprocess(img, cfg)
    return extract_features(clean, cfg, mask)
