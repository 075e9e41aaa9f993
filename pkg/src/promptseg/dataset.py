"""Dataset ingestion and mask file I/O.

Images and ground-truth masks pair by filename stem. Images load as 8-bit
RGB and are normalized to [0, 1]; ground-truth masks load as grayscale with
pixels above 127 counted as foreground. Predicted soft masks are written as
8-bit grayscale PNGs (value = round(255 * m)) via a temp-file rename so a
crashed run never leaves a partial mask behind.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import DatasetError

log = logging.getLogger(__name__)

IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class DatasetEntry:
    image_id: str
    image_path: Path
    gt_path: Path | None = None


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[DatasetEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _image_files(directory: Path) -> list[Path]:
    return sorted(
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
    )


def load_dataset(images_dir: str | Path, gt_dir: str | Path | None = None) -> DatasetManifest:
    """Build a manifest of images, optionally paired with ground truth.

    Unreadable files are skipped with a warning; ground-truth files with no
    matching image are ignored with a warning; an empty image set is an
    error.
    """
    images_dir = Path(images_dir)
    if not images_dir.is_dir():
        raise DatasetError(f"image directory not found: {images_dir}")

    gt_by_stem: dict[str, Path] = {}
    if gt_dir is not None:
        gt_dir = Path(gt_dir)
        if not gt_dir.is_dir():
            raise DatasetError(f"ground-truth directory not found: {gt_dir}")
        for path in _image_files(gt_dir):
            gt_by_stem.setdefault(path.stem, path)

    entries: list[DatasetEntry] = []
    seen: set[str] = set()
    for path in _image_files(images_dir):
        if path.stem in seen:
            log.warning("duplicate image stem %r skipped: %s", path.stem, path)
            continue
        try:
            with PILImage.open(path) as img:
                img.verify()
        except Exception as exc:  # Pillow raises various decode errors
            log.warning("unreadable image skipped: %s (%s)", path, exc)
            continue
        seen.add(path.stem)
        entries.append(
            DatasetEntry(
                image_id=path.stem,
                image_path=path,
                gt_path=gt_by_stem.pop(path.stem, None),
            )
        )
    for stem, path in gt_by_stem.items():
        log.warning("ground truth %r has no matching image, ignored: %s", stem, path)
    if not entries:
        raise DatasetError(f"no readable images in {images_dir}")
    return DatasetManifest(entries=tuple(entries))


def read_image(path: str | Path) -> np.ndarray:
    """Load an image as float64 (H, W, 3) in [0, 1]."""
    with PILImage.open(path) as img:
        rgb = img.convert("RGB")
        arr = np.asarray(rgb, dtype=np.float64) / 255.0
    return arr


def read_gt_mask(path: str | Path) -> np.ndarray:
    """Load a ground-truth mask as bool (H, W); foreground is value > 127."""
    with PILImage.open(path) as img:
        gray = img.convert("L")
        arr = np.asarray(gray, dtype=np.uint8)
    return arr > 127


def read_soft_mask(path: str | Path) -> np.ndarray:
    """Load a predicted soft mask as float64 (H, W) in [0, 1]."""
    with PILImage.open(path) as img:
        gray = img.convert("L")
        arr = np.asarray(gray, dtype=np.float64) / 255.0
    return arr


def write_mask_png(path: str | Path, mask: np.ndarray) -> None:
    """Write a soft mask as 8-bit grayscale PNG, atomically."""
    path = Path(path)
    m = np.asarray(mask, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d mask, got shape {m.shape}")
    data = np.round(np.clip(m, 0.0, 1.0) * 255.0).astype(np.uint8)
    tmp_path = path.with_name(path.name + ".tmp")
    PILImage.fromarray(data, mode="L").save(tmp_path, format="PNG")
    os.replace(tmp_path, path)


def write_text_atomic(path: str | Path, text: str) -> None:
    """Write a text report via temp-file rename, for byte-stable outputs."""
    path = Path(path)
    tmp_path = path.with_name(path.name + ".tmp")
    tmp_path.write_text(text, encoding="utf-8")
    os.replace(tmp_path, path)
