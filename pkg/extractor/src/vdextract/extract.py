"""Forward images through a CNN and dump the full-network activation matrix.

For every image: each convolutional tap is average-pooled over its spatial
axes (one value per filter, however large the feature map), fully connected
taps pass through unchanged, and all taps concatenate into one row.  The
matrix goes out as FNERAW1 with a manifest TSV (row -> image -> synset) and
a layer layout TSV giving each tap's feature range.  No standardization or
discretization happens here; thresholds stay tunable downstream without
re-extraction.

FNERAW1 wire format (independent writer, little-endian): 7-byte magic
``FNERAW1``, u32 n_samples, u32 n_features, then f32 values row-major.
"""

from __future__ import annotations

import struct
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .errors import EmptyJob, UndecodableImage
from .model import PreparedModel, prepare

RAW_MAGIC = b"FNERAW1"

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png", ".bmp", ".gif", ".webp")


@dataclass
class ExtractionJob:
    images_by_synset: dict[str, list[Path]]
    architecture: str = "vgg16"
    weights: str = "pretrained"
    seed: int = 0
    batch_size: int = 32
    out_raw: Path = Path("raw.fne")
    out_manifest: Path = Path("manifest.tsv")
    out_layout: Path = Path("layout.tsv")

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        for synset_id, paths in self.images_by_synset.items():
            if not paths:
                raise EmptyJob(f"synset {synset_id!r} has no images")


@dataclass
class ExtractionResult:
    n_samples: int
    n_features: int
    segments: list[tuple[str, str, int, int]]
    skipped: list[str] = field(default_factory=list)


def collect_images(images_dir: Path, by_synset_subdirs: bool) -> dict[str, list[Path]]:
    """Deterministic image discovery: sorted subdirs, sorted file names."""
    images_dir = Path(images_dir)
    groups: dict[str, list[Path]] = {}
    if by_synset_subdirs:
        for subdir in sorted(p for p in images_dir.iterdir() if p.is_dir()):
            files = sorted(
                f for f in subdir.iterdir()
                if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES
            )
            if files:
                groups[subdir.name] = files
    else:
        files = sorted(
            f for f in images_dir.iterdir()
            if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES
        )
        if files:
            groups[images_dir.name] = files
    if not groups:
        raise EmptyJob(f"no images found under {images_dir}")
    return groups


def _load_tensor(prepared: PreparedModel, path: Path) -> torch.Tensor:
    try:
        with Image.open(path) as image:
            return prepared.preprocess(image.convert("RGB"))
    except (OSError, SyntaxError, ValueError) as exc:
        raise UndecodableImage(f"{path}: {exc}") from exc


def _forward_batch(
    prepared: PreparedModel, batch: torch.Tensor
) -> tuple[np.ndarray, list[int]]:
    """One batch through the net; returns rows plus per-tap feature widths."""
    captured: dict[int, torch.Tensor] = {}
    handles = []
    for position, tap in enumerate(prepared.taps):
        def hook(module, inputs, output, position=position):
            captured[position] = output.detach()
        handles.append(tap.module.register_forward_hook(hook))
    try:
        with torch.no_grad():
            prepared.model(batch)
    finally:
        for handle in handles:
            handle.remove()

    pieces = []
    widths = []
    for position, tap in enumerate(prepared.taps):
        activation = captured[position]
        if tap.kind == "conv":
            activation = activation.mean(dim=(2, 3))  # one value per filter
        activation = activation.to(torch.float32)
        widths.append(activation.shape[1])
        pieces.append(activation)
    return torch.cat(pieces, dim=1).numpy(), widths


def run_job(job: ExtractionJob) -> ExtractionResult:
    prepared = prepare(job.architecture, job.weights, job.seed)

    ordered: list[tuple[str, Path]] = []
    for synset_id in sorted(job.images_by_synset):
        for path in job.images_by_synset[synset_id]:
            ordered.append((synset_id, path))

    tensors: list[torch.Tensor] = []
    kept: list[tuple[str, Path]] = []
    skipped: list[str] = []
    for synset_id, path in ordered:
        try:
            tensors.append(_load_tensor(prepared, path))
        except UndecodableImage as exc:
            print(f"vd-extract: warning: skipping {exc}", file=sys.stderr)
            skipped.append(str(path))
            continue
        kept.append((synset_id, path))
    if not tensors:
        raise EmptyJob("every image failed to decode")

    rows: list[np.ndarray] = []
    widths: list[int] | None = None
    for start in range(0, len(tensors), job.batch_size):
        batch = torch.stack(tensors[start:start + job.batch_size])
        batch_rows, batch_widths = _forward_batch(prepared, batch)
        if widths is None:
            widths = batch_widths
        rows.append(batch_rows)

    matrix = np.ascontiguousarray(np.vstack(rows), dtype=np.float32)
    n_samples, n_features = matrix.shape

    segments: list[tuple[str, str, int, int]] = []
    cursor = 0
    for tap, width in zip(prepared.taps, widths):
        segments.append((tap.name, tap.kind, cursor, cursor + width))
        cursor += width
    assert cursor == n_features

    _write_raw(job.out_raw, matrix)
    _write_manifest(job.out_manifest, kept)
    _write_layout(job.out_layout, segments, prepared.provenance)
    return ExtractionResult(
        n_samples=n_samples,
        n_features=n_features,
        segments=segments,
        skipped=skipped,
    )


def _write_raw(path: Path, matrix: np.ndarray) -> None:
    with open(path, "wb") as sink:
        sink.write(RAW_MAGIC)
        sink.write(struct.pack("<II", matrix.shape[0], matrix.shape[1]))
        sink.write(matrix.astype("<f4").tobytes())


def _write_manifest(path: Path, kept: list[tuple[str, Path]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as sink:
        for row, (synset_id, image_path) in enumerate(kept):
            sink.write(f"{row}\t{image_path.name}\t{synset_id}\n")


def _write_layout(
    path: Path, segments: list[tuple[str, str, int, int]], provenance: str
) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as sink:
        sink.write(f"# {provenance}\n")
        for name, kind, start, end in segments:
            sink.write(f"{name}\t{kind}\t{start}\t{end}\n")
