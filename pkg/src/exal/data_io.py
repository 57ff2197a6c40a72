"""Dataset acquisition and image export.

Loaders return ``RawLabeledImages`` (uint8 pixels, small integer labels);
``make_pair_dataset`` turns them into the binary-labeled, [0, 1]-scaled
train/test split the game consumes. Paths ending in ``.gz`` are read and
written through gzip transparently.

Pixel clamping to [0, 1] happens only in image export, never in any
evaluation path.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    ConfigurationError,
    DataError,
    IdxCountMismatchError,
    IdxMagicError,
    IdxTruncatedError,
)
from .learner import Dataset

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass
class RawLabeledImages:
    """Stacked grayscale images (n, H, W) uint8 with integer labels (n,)."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.uint8)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 3:
            raise DataError(f"images must be (n, H, W), got ndim={self.images.ndim}")
        if self.images.shape[0] != self.labels.shape[0]:
            raise DataError(
                f"{self.images.shape[0]} images vs {self.labels.shape[0]} labels"
            )
        if self.images.shape[1] < 1 or self.images.shape[2] < 1:
            raise DataError(f"degenerate image shape {self.images.shape[1:]}")


@dataclass
class PairSpec:
    """One binary task: positive/negative source labels plus sampling policy."""

    positive_label: int
    negative_label: int
    samples_per_class: int = 1000
    train_fraction: float = 0.8

    def __post_init__(self):
        if self.positive_label == self.negative_label:
            raise ConfigurationError(
                f"positive and negative labels must differ, both are {self.positive_label}"
            )
        if self.samples_per_class < 2:
            raise ConfigurationError(
                f"samples_per_class must be >= 2, got {self.samples_per_class}"
            )
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigurationError(
                f"train_fraction must lie in (0, 1), got {self.train_fraction}"
            )


def _read_bytes(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def _write_bytes(path, blob: bytes) -> None:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "wb") as fh:
        fh.write(blob)


def _parse_idx_header(blob: bytes, path, expected_magic: int, n_dims: int):
    header_len = 4 + 4 * n_dims
    if len(blob) < header_len:
        raise IdxTruncatedError(
            f"{path}: file has {len(blob)} bytes, header alone needs {header_len}"
        )
    (magic,) = struct.unpack_from(">I", blob, 0)
    if magic != expected_magic:
        raise IdxMagicError(
            f"{path}: bad magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    dims = struct.unpack_from(f">{n_dims}I", blob, 4)
    payload = np.prod(dims, dtype=np.int64)
    if len(blob) != header_len + payload:
        raise IdxTruncatedError(
            f"{path}: payload should be {payload} bytes for dims {dims}, "
            f"found {len(blob) - header_len}"
        )
    return dims


def load_idx(images_path, labels_path) -> RawLabeledImages:
    """Parse a big-endian IDX image/label file pair (MNIST layout)."""
    img_blob = _read_bytes(images_path)
    n, h, w = _parse_idx_header(img_blob, images_path, IDX_IMAGES_MAGIC, 3)
    images = np.frombuffer(img_blob, dtype=np.uint8, offset=16).reshape(n, h, w)

    lbl_blob = _read_bytes(labels_path)
    (n_labels,) = _parse_idx_header(lbl_blob, labels_path, IDX_LABELS_MAGIC, 1)
    labels = np.frombuffer(lbl_blob, dtype=np.uint8, offset=8)

    if n != n_labels:
        raise IdxCountMismatchError(
            f"{images_path} holds {n} images but {labels_path} holds {n_labels} labels"
        )
    return RawLabeledImages(images=images, labels=labels)


def save_idx(raw: RawLabeledImages, images_path, labels_path) -> None:
    """Encode back to the same IDX layout (useful as a dataset cache)."""
    n, h, w = raw.images.shape
    img_blob = struct.pack(">IIII", IDX_IMAGES_MAGIC, n, h, w) + raw.images.tobytes()
    lbl_blob = struct.pack(">II", IDX_LABELS_MAGIC, n) + raw.labels.astype(np.uint8).tobytes()
    _write_bytes(images_path, img_blob)
    _write_bytes(labels_path, lbl_blob)


def load_image_dir(root, class_dirs, image_size: int = 32) -> RawLabeledImages:
    """Ingest per-class directories of grayscale images.

    Label i is assigned to the i-th entry of ``class_dirs``. Files are taken
    in lexicographic order; every file must decode. Non-square or non-target
    sizes are bilinearly resampled to ``image_size`` x ``image_size`` after
    grayscale conversion.
    """
    root = Path(root)
    images = []
    labels = []
    for label, class_dir in enumerate(class_dirs):
        directory = root / class_dir
        if not directory.is_dir():
            raise DataError(f"class directory {directory} does not exist")
        files = sorted(p for p in directory.iterdir() if p.is_file())
        if not files:
            raise DataError(f"class directory {directory} contains no files")
        for path in files:
            try:
                with Image.open(path) as img:
                    gray = img.convert("L")
                    if gray.size != (image_size, image_size):
                        gray = gray.resize((image_size, image_size), Image.BILINEAR)
                    images.append(np.asarray(gray, dtype=np.uint8))
            except (UnidentifiedImageError, OSError) as exc:
                raise DataError(f"cannot decode image {path}: {exc}") from exc
            labels.append(label)
    return RawLabeledImages(images=np.stack(images), labels=np.asarray(labels))


def make_pair_dataset(
    raw: RawLabeledImages, spec: PairSpec, seed: int
) -> tuple[Dataset, Dataset]:
    """Filter to two labels, subsample, scale to [0, 1], stratified 80/20-style split.

    The positive label maps to 1, the negative to 0. Up to
    ``spec.samples_per_class`` samples per class are drawn without
    replacement; each class is split by ``spec.train_fraction`` (rounded,
    but never leaving either side empty), then rows are shuffled. Everything
    is a pure function of (raw, spec, seed).
    """
    rng = np.random.default_rng(seed)
    h, w = raw.images.shape[1], raw.images.shape[2]

    train_parts, test_parts = [], []
    for target, label in ((1, spec.positive_label), (0, spec.negative_label)):
        idx = np.flatnonzero(raw.labels == label)
        if idx.size == 0:
            raise ConfigurationError(f"label {label} is not present in the data")
        if idx.size < 2:
            raise ConfigurationError(
                f"label {label} has only {idx.size} sample(s); need at least 2"
            )
        take = min(spec.samples_per_class, idx.size)
        chosen = rng.permutation(idx)[:take]
        n_train = int(round(spec.train_fraction * take))
        n_train = min(max(n_train, 1), take - 1)
        train_parts.append((chosen[:n_train], target))
        test_parts.append((chosen[n_train:], target))

    def assemble(parts):
        rows = np.concatenate([p[0] for p in parts])
        ys = np.concatenate([np.full(p[0].size, p[1], dtype=np.int64) for p in parts])
        order = rng.permutation(rows.size)
        x = raw.images[rows[order]].reshape(rows.size, h * w).astype(np.float64) / 255.0
        return Dataset(X=x, y=ys[order], shape=(h, w))

    return assemble(train_parts), assemble(test_parts)


def make_synthetic(
    n_per_class: int, shape: tuple[int, int], separation: float, seed: int
) -> Dataset:
    """Two-class image generator standing in for the real corpora.

    Class 0 images are Gaussian noise around a flat low-intensity template.
    Class 1 adds ``separation`` times a raised template with a bright
    off-center blob, so separation 0 makes both classes identically
    distributed and separation near 1 makes them trivially separable.
    Pixels are clipped to [0, 1].
    """
    h, w = int(shape[0]), int(shape[1])
    if h < 8 or w < 8:
        raise ConfigurationError(f"synthetic shape must be at least 8x8, got {h}x{w}")
    if n_per_class < 1:
        raise ConfigurationError(f"n_per_class must be >= 1, got {n_per_class}")
    rng = np.random.default_rng(seed)

    base, lifted = class_templates((h, w), separation)
    base, lifted = base.reshape(h, w), lifted.reshape(h, w)

    noise_sigma = 0.08
    imgs0 = base + rng.normal(0.0, noise_sigma, size=(n_per_class, h, w))
    imgs1 = lifted + rng.normal(0.0, noise_sigma, size=(n_per_class, h, w))
    x = np.concatenate([imgs0, imgs1]).reshape(2 * n_per_class, h * w)
    np.clip(x, 0.0, 1.0, out=x)
    y = np.concatenate(
        [np.zeros(n_per_class, dtype=np.int64), np.ones(n_per_class, dtype=np.int64)]
    )
    order = rng.permutation(2 * n_per_class)
    return Dataset(X=x[order], y=y[order], shape=(h, w))


def class_templates(shape: tuple[int, int], separation: float) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free class means of :func:`make_synthetic`, flattened."""
    h, w = int(shape[0]), int(shape[1])
    base = np.full((h, w), 0.2)
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    r0, c0 = 0.35 * (h - 1), 0.6 * (w - 1)
    sigma = min(h, w) / 6.0
    blob = np.exp(-(((rr - r0) ** 2) + ((cc - c0) ** 2)) / (2.0 * sigma**2))
    lifted = base + separation * (0.2 + 0.55 * blob)
    return base.reshape(-1), lifted.reshape(-1)


# -- PGM output ----------------------------------------------------------------


def write_pgm(path, img: np.ndarray) -> None:
    """Binary PGM (P5, maxval 255) writer for uint8 grayscale arrays."""
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValueError(f"expected a 2-d uint8 array, got {img.dtype} ndim={img.ndim}")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    """Reader for the P5 files this package writes (tests and round-trips)."""
    blob = Path(path).read_bytes()
    fields, offset = [], 0
    while len(fields) < 4:
        while offset < len(blob) and blob[offset : offset + 1].isspace():
            offset += 1
        if blob[offset : offset + 1] == b"#":
            offset = blob.index(b"\n", offset) + 1
            continue
        start = offset
        while offset < len(blob) and not blob[offset : offset + 1].isspace():
            offset += 1
        fields.append(blob[start:offset])
    offset += 1  # single whitespace after maxval
    if fields[0] != b"P5":
        raise DataError(f"{path}: not a binary PGM (got {fields[0]!r})")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise DataError(f"{path}: unsupported maxval {maxval}")
    data = np.frombuffer(blob, dtype=np.uint8, count=h * w, offset=offset)
    return data.reshape(h, w).copy()


def _to_u8(img: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def export_triptych(x_row: np.ndarray, a: np.ndarray, scale: float, shape, path_prefix) -> None:
    """Write original / perturbation / perturbed panels as three PGM files.

    The perturbation panel is min-max normalized to the full gray range
    (a constant perturbation maps to mid-gray via the 0/0 -> 0.5 rule), so
    it is invariant to ``scale``. The perturbed panel is ``x + scale*a``
    clamped to [0, 1]; this export is the only place clamping happens.
    """
    h, w = int(shape[0]), int(shape[1])
    x_row = np.asarray(x_row, dtype=np.float64).reshape(-1)
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    if x_row.size != h * w or a.size != h * w:
        raise ValueError(
            f"image has {x_row.size} and perturbation {a.size} pixels, "
            f"shape {h}x{w} needs {h * w}"
        )
    span = a.max() - a.min()
    normalized = np.full_like(a, 0.5) if span == 0 else (a - a.min()) / span

    prefix = Path(path_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_pgm(f"{prefix}_original.pgm", _to_u8(x_row).reshape(h, w))
    write_pgm(f"{prefix}_perturbation.pgm", _to_u8(normalized).reshape(h, w))
    write_pgm(f"{prefix}_perturbed.pgm", _to_u8(x_row + scale * a).reshape(h, w))
