"""Foundational image/mask/box types and the pixel algebra used everywhere else.

Conventions, fixed for the whole package:

* an image is a float64 array of shape (H, W, 3) with values in [0, 1]
  (8-bit sources are divided by 255 on load),
* a soft mask is a float64 array of shape (H, W) with values in [0, 1],
* a binary mask is a bool array of shape (H, W),
* boxes are half-open on their max edges: the pixel column ``x_max`` is
  *outside* the box.

All functions here are pure and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_BINARIZE_THRESHOLD = 0.5


@dataclass(frozen=True)
class BBox:
    """Axis-aligned pixel box, half-open on the max edges."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if self.x_min < 0 or self.y_min < 0:
            raise ValueError(f"box has negative origin: {self}")
        if self.x_min >= self.x_max or self.y_min >= self.y_max:
            raise ValueError(f"box is empty or inverted: {self}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    @property
    def area(self) -> int:
        return self.width * self.height

    def fits_in(self, width: int, height: int) -> bool:
        return self.x_max <= width and self.y_max <= height

    def translate(self, dx: int, dy: int) -> "BBox":
        return BBox(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)

    def intersect(self, other: "BBox") -> "BBox | None":
        """Overlap of two boxes, or None when they are disjoint."""
        x0 = max(self.x_min, other.x_min)
        y0 = max(self.y_min, other.y_min)
        x1 = min(self.x_max, other.x_max)
        y1 = min(self.y_max, other.y_max)
        if x0 >= x1 or y0 >= y1:
            return None
        return BBox(x0, y0, x1, y1)

    def slices(self) -> tuple[slice, slice]:
        """(row, col) slices selecting the box region of an (H, W, ...) array."""
        return slice(self.y_min, self.y_max), slice(self.x_min, self.x_max)


def check_image(image: np.ndarray) -> np.ndarray:
    """Validate the package image convention; returns the array unchanged."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"image has empty dimensions: {arr.shape}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("image values must lie in [0, 1]")
    return arr


def check_mask(mask: np.ndarray) -> np.ndarray:
    """Validate the soft-mask convention; returns the array unchanged."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError(f"expected (H, W) mask, got shape {arr.shape}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("mask values must lie in [0, 1]")
    return arr


def binarize(mask: np.ndarray, threshold: float = DEFAULT_BINARIZE_THRESHOLD) -> np.ndarray:
    """Threshold a soft mask: a pixel is foreground iff its value is *strictly*
    above ``threshold``."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold {threshold} outside [0, 1]")
    return np.asarray(mask) > threshold


def mask_l1_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Mean absolute per-pixel difference between two soft masks.

    Symmetric, zero iff the masks are identical, and at most 1.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a - b)))


def apply_mask(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per-pixel, per-channel product of an image with a soft mask.

    Retains only the parts of the image the mask covers; a zero mask blacks
    the image out entirely.
    """
    img = np.asarray(image, dtype=np.float64)
    m = np.asarray(mask, dtype=np.float64)
    if img.shape[:2] != m.shape:
        raise ValueError(f"image {img.shape[:2]} and mask {m.shape} dimensions differ")
    return img * m[:, :, None]
