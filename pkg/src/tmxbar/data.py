"""Dataset ingestion and booleanization.

Images and labels use the big-endian IDX container (magic 0x00000803
for uint8 image tensors, 0x00000801 for uint8 label vectors). Files
ending in .gz are transparently decompressed. Small tabular datasets can
come in through a CSV loader instead (header row, label column named
"label", feature cells already 0/1).
"""

from __future__ import annotations

import csv
import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class DataError(ValueError):
    """Malformed dataset file or inconsistent contents."""


@dataclass
class RawDataset:
    """Grayscale images (samples x H x W, uint8) with integer labels."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        if self.images.shape[0] != self.labels.shape[0]:
            raise DataError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels"
            )

    @property
    def n_samples(self) -> int:
        return int(self.images.shape[0])

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0


def _read_bytes(path: str | Path) -> bytes:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as e:
        raise DataError(f"cannot read {p}: {e}") from e
    if p.suffix == ".gz":
        try:
            raw = gzip.decompress(raw)
        except OSError as e:
            raise DataError(f"bad gzip data in {p}: {e}") from e
    return raw


def load_idx(images_path: str | Path, labels_path: str | Path) -> RawDataset:
    """Parse an image/label IDX file pair into a RawDataset."""
    img_raw = _read_bytes(images_path)
    if len(img_raw) < 16:
        raise DataError(f"truncated image file {images_path}")
    magic, count, h, w = struct.unpack(">IIII", img_raw[:16])
    if magic != IMAGE_MAGIC:
        raise DataError(f"bad image magic 0x{magic:08x} in {images_path}")
    if len(img_raw) != 16 + count * h * w:
        raise DataError(f"image payload size mismatch in {images_path}")
    images = np.frombuffer(img_raw, dtype=np.uint8, offset=16).reshape(count, h, w)

    lab_raw = _read_bytes(labels_path)
    if len(lab_raw) < 8:
        raise DataError(f"truncated label file {labels_path}")
    magic, lab_count = struct.unpack(">II", lab_raw[:8])
    if magic != LABEL_MAGIC:
        raise DataError(f"bad label magic 0x{magic:08x} in {labels_path}")
    if len(lab_raw) != 8 + lab_count:
        raise DataError(f"label payload size mismatch in {labels_path}")
    if lab_count != count:
        raise DataError(f"{count} images but {lab_count} labels")
    labels = np.frombuffer(lab_raw, dtype=np.uint8, offset=8).astype(np.int64)
    return RawDataset(images=images.copy(), labels=labels)


def save_idx(
    images_path: str | Path, labels_path: str | Path, ds: RawDataset
) -> None:
    """Write a RawDataset as an IDX file pair (gzipped if paths end .gz)."""
    count, h, w = ds.images.shape
    img_raw = struct.pack(">IIII", IMAGE_MAGIC, count, h, w)
    img_raw += ds.images.astype(np.uint8).tobytes()
    lab_raw = struct.pack(">II", LABEL_MAGIC, count)
    lab_raw += ds.labels.astype(np.uint8).tobytes()
    for path, raw in ((images_path, img_raw), (labels_path, lab_raw)):
        p = Path(path)
        # mtime=0 keeps rebuilt dataset files byte-identical.
        p.write_bytes(gzip.compress(raw, mtime=0) if p.suffix == ".gz" else raw)


def booleanize(ds: RawDataset, threshold: int = 75) -> np.ndarray:
    """Literal matrix (samples x 2F, bool): features then their negations.

    Feature bit = (pixel > threshold).
    """
    features = ds.images.reshape(ds.n_samples, -1) > threshold
    return np.concatenate([features, ~features], axis=1)


def to_literals(features: np.ndarray) -> np.ndarray:
    """Stack an already-Boolean feature matrix with its negations."""
    features = np.atleast_2d(np.asarray(features, dtype=bool))
    return np.concatenate([features, ~features], axis=1)


def check_labels(labels: np.ndarray, n_classes: int) -> None:
    bad = (labels < 0) | (labels >= n_classes)
    if bad.any():
        raise DataError(
            f"label value {int(labels[bad][0])} outside [0, {n_classes})"
        )


def load_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Load a small tabular dataset: Boolean feature columns + 'label'.

    Returns (features bool matrix, labels int vector).
    """
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "label" not in reader.fieldnames:
                raise DataError(f"{path}: need a header row with a 'label' column")
            feat_cols = [c for c in reader.fieldnames if c != "label"]
            feats, labels = [], []
            for row in reader:
                try:
                    feats.append([int(row[c]) for c in feat_cols])
                    labels.append(int(row["label"]))
                except (TypeError, ValueError) as e:
                    raise DataError(f"{path}: non-integer cell in row {row}") from e
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    if not feats:
        raise DataError(f"{path}: no data rows")
    f = np.array(feats)
    if not np.isin(f, (0, 1)).all():
        raise DataError(f"{path}: feature cells must be 0 or 1")
    return f.astype(bool), np.array(labels, dtype=np.int64)


def stratified_split(
    labels: np.ndarray, test_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic per-class split; returns (train_idx, test_idx)."""
    rng = np.random.default_rng(seed)
    labels = np.asarray(labels)
    train, test = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(idx.size)]
        n_test = int(round(idx.size * test_fraction))
        test.append(idx[:n_test])
        train.append(idx[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))
