"""Multi-scale patch decomposition and patch-to-canvas coordinate mapping.

The full scheme cuts an image three ways at the same split lines
(floor(W/2), floor(H/2)): the uncut original, the two horizontal halves,
the two vertical halves, and the four quarters -- nine patches total.
Odd dimensions give the extra pixel to the right/bottom patch so every
origin stays at a floor value. Patch ordering is fixed by the tag list
below, which keeps ledger indices and argmax tie-breaks reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BBox, check_image

SCHEME_ORIGINAL = "original"
SCHEME_HALVE = "original+halve"
SCHEME_FULL = "original+halve+quarters"
PATCH_SCHEMES = (SCHEME_ORIGINAL, SCHEME_HALVE, SCHEME_FULL)

# Enumeration order is normative: patch_id equals the index into this tuple
# restricted to the active scheme.
PATCH_TAGS = (
    "original",
    "halve_h_top",
    "halve_h_bottom",
    "halve_v_left",
    "halve_v_right",
    "quarter_tl",
    "quarter_tr",
    "quarter_bl",
    "quarter_br",
)


@dataclass(frozen=True)
class Patch:
    """A rectangular view of the canvas plus its placement within it."""

    patch_id: int
    origin: tuple[int, int]  # (x, y) of the view's top-left corner in the canvas
    view: np.ndarray
    scheme_tag: str

    @property
    def width(self) -> int:
        return self.view.shape[1]

    @property
    def height(self) -> int:
        return self.view.shape[0]

    def bbox(self) -> BBox:
        """Footprint of this patch in canvas coordinates."""
        ox, oy = self.origin
        return BBox(ox, oy, ox + self.width, oy + self.height)


@dataclass(frozen=True)
class PatchSet:
    canvas_size: tuple[int, int]  # (W, H)
    patches: tuple[Patch, ...]

    def __iter__(self):
        return iter(self.patches)

    def __len__(self) -> int:
        return len(self.patches)

    def by_id(self, patch_id: int) -> Patch:
        return self.patches[patch_id]


def _tag_window(tag: str, width: int, height: int) -> tuple[int, int, int, int]:
    """(x, y, w, h) of one patch window; split lines at floor(W/2), floor(H/2)."""
    sx = width // 2
    sy = height // 2
    windows = {
        "original": (0, 0, width, height),
        "halve_h_top": (0, 0, width, sy),
        "halve_h_bottom": (0, sy, width, height - sy),
        "halve_v_left": (0, 0, sx, height),
        "halve_v_right": (sx, 0, width - sx, height),
        "quarter_tl": (0, 0, sx, sy),
        "quarter_tr": (sx, 0, width - sx, sy),
        "quarter_bl": (0, sy, sx, height - sy),
        "quarter_br": (sx, sy, width - sx, height - sy),
    }
    return windows[tag]


def build_patch_set(image: np.ndarray, scheme: str = SCHEME_FULL) -> PatchSet:
    """Decompose an image into the patch set for the given scheme.

    ``original`` yields 1 patch, ``original+halve`` 5, and the full scheme 9.
    Views are copies, so the PatchSet is immutable even if the source image
    is later modified.
    """
    img = check_image(image)
    height, width = img.shape[:2]
    if scheme not in PATCH_SCHEMES:
        raise ValueError(f"unknown patch scheme: {scheme!r}")
    if scheme != SCHEME_ORIGINAL and (width < 2 or height < 2):
        raise ValueError(f"image {width}x{height} too small to split")

    if scheme == SCHEME_ORIGINAL:
        tags = PATCH_TAGS[:1]
    elif scheme == SCHEME_HALVE:
        tags = PATCH_TAGS[:5]
    else:
        tags = PATCH_TAGS

    patches = []
    for patch_id, tag in enumerate(tags):
        x, y, w, h = _tag_window(tag, width, height)
        view = img[y : y + h, x : x + w].copy()
        patches.append(Patch(patch_id=patch_id, origin=(x, y), view=view, scheme_tag=tag))
    return PatchSet(canvas_size=(width, height), patches=tuple(patches))


def patch_to_global(box: BBox, patch: Patch) -> BBox:
    """Translate a patch-local box into canvas coordinates."""
    if not box.fits_in(patch.width, patch.height):
        raise ValueError(
            f"box {box} exceeds patch bounds {patch.width}x{patch.height}"
        )
    ox, oy = patch.origin
    return box.translate(ox, oy)


def lift_mask(patch_mask: np.ndarray, patch: Patch, canvas_size: tuple[int, int]) -> np.ndarray:
    """Embed a patch-local soft mask into a canvas-sized mask.

    The result is zero outside the patch footprint and carries the patch
    values inside it.
    """
    m = np.asarray(patch_mask, dtype=np.float64)
    if m.shape != (patch.height, patch.width):
        raise ValueError(
            f"mask {m.shape} does not match patch view ({patch.height}, {patch.width})"
        )
    width, height = canvas_size
    ox, oy = patch.origin
    if ox + patch.width > width or oy + patch.height > height:
        raise ValueError("patch does not fit inside the canvas")
    canvas = np.zeros((height, width), dtype=np.float64)
    canvas[oy : oy + patch.height, ox : ox + patch.width] = m
    return canvas
