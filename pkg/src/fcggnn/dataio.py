"""Corpus manifests, directory scanning, model container, embedding export."""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import SPLITS, Corpus, Sample
from .errors import DataError, ModelFormatError
from .features import StandardizationStats
from .gnn import ModelConfig, ModelParams, parameter_shapes
from .graph import read_edge_list

MAGIC = b"FCGGNN"
VERSION = 1
MANIFEST_HEADER = ("path", "label", "split")
EDGE_LIST_SUFFIX = ".edgelist"


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    label: str
    split: str


@dataclass
class CorpusManifest:
    entries: list[ManifestEntry]
    class_names: list[str]

    @property
    def class_ids(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.class_names)}

    def load(self) -> Corpus:
        """Read every edge list into a :class:`Corpus`."""
        ids = self.class_ids
        samples = [
            Sample(read_edge_list(e.path), ids[e.label], name=str(e.path), split=e.split)
            for e in self.entries
        ]
        return Corpus(samples, list(self.class_names))


def _validate(entries: list[ManifestEntry], source: str) -> CorpusManifest:
    seen: set[Path] = set()
    for e in entries:
        if e.split not in SPLITS:
            raise DataError(f"{source}: unknown split {e.split!r} (expected one of {', '.join(SPLITS)})")
        if not e.label:
            raise DataError(f"{source}: empty label for {e.path}")
        if e.path in seen:
            raise DataError(f"{source}: duplicate path {e.path}")
        seen.add(e.path)
    for split in ("train", "test"):
        if not any(e.split == split for e in entries):
            raise DataError(f"{source}: empty {split} split")
    return CorpusManifest(entries, sorted({e.label for e in entries}))


def read_manifest(path) -> CorpusManifest:
    """Parse ``path,label,split`` CSV; relative paths resolve against the manifest's folder."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    base = path.parent
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(c.strip() for c in rows[0]) != MANIFEST_HEADER:
        raise DataError(f"{path}: header must be {','.join(MANIFEST_HEADER)}")
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise DataError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
        p, label, split = (c.strip() for c in row)
        entries.append(ManifestEntry(Path(os.path.normpath(base / p)), label, split))
    return _validate(entries, str(path))


def write_manifest(manifest: CorpusManifest, path) -> None:
    path = Path(path)
    base = path.parent.resolve()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)
    for e in manifest.entries:
        try:
            rel = Path(os.path.relpath(Path(e.path).resolve(), base))
        except ValueError:
            rel = Path(e.path).resolve()
        writer.writerow([rel.as_posix(), e.label, e.split])
    path.write_text(buf.getvalue(), encoding="utf-8")


def scan_directory(root) -> CorpusManifest:
    """Build a manifest from ``root/<split>/<class>/<name>.edgelist``."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"not a directory: {root}")
    entries, bad = [], []
    for f in sorted(p for p in root.rglob("*") if p.is_file()):
        rel = f.relative_to(root)
        if f.suffix != EDGE_LIST_SUFFIX:
            continue
        if len(rel.parts) != 3 or rel.parts[0] not in SPLITS:
            bad.append(rel.as_posix())
            continue
        entries.append(ManifestEntry(f, rel.parts[1], rel.parts[0]))
    if bad:
        raise DataError(f"{root}: files outside <split>/<class>/ layout: {', '.join(bad)}")
    if not entries:
        raise DataError(f"{root}: no {EDGE_LIST_SUFFIX} files found")
    return _validate(entries, str(root))


def load_corpus(source) -> Corpus:
    """Directory tree or manifest file -> loaded corpus."""
    source = Path(source)
    manifest = scan_directory(source) if source.is_dir() else read_manifest(source)
    return manifest.load()


# --- model container -------------------------------------------------------
#
# magic "FCGGNN" | u8 version | 4 sections, each u32 byte length + payload:
#   config   utf-8 JSON
#   classes  u32 count, then (u32 length + utf-8) per name
#   stats    u32 width, f64 mean[width], f64 std[width], f64 epsilon
#   params   u32 count, then per array: u16 name length + name,
#            u32 rows, u32 cols, f32 row-major values
# All integers and floats little-endian.


def _section(payload: bytes) -> bytes:
    return struct.pack("<I", len(payload)) + payload


def encode_model(params: ModelParams) -> bytes:
    params.check()
    cfg = json.dumps(params.config.to_dict(), sort_keys=True).encode("utf-8")
    names = [n.encode("utf-8") for n in params.class_names]
    classes = struct.pack("<I", len(names)) + b"".join(struct.pack("<I", len(n)) + n for n in names)
    if params.stats is None:
        stats = struct.pack("<I", 0)
    else:
        mean = np.asarray(params.stats.mean, dtype="<f8")
        std = np.asarray(params.stats.std, dtype="<f8")
        stats = (struct.pack("<I", len(mean)) + mean.tobytes() + std.tobytes()
                 + struct.pack("<d", params.stats.epsilon_guard))
    arrays = [struct.pack("<I", len(params.weights))]
    for name, arr in params.weights.items():
        key = name.encode("utf-8")
        arrays.append(struct.pack("<H", len(key)) + key + struct.pack("<II", *arr.shape))
        arrays.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    body = b"".join(_section(s) for s in (cfg, classes, stats, b"".join(arrays)))
    return MAGIC + bytes([VERSION]) + body


class _Reader:
    def __init__(self, buf: bytes, what: str):
        self.buf, self.pos, self.what = buf, 0, what

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.buf):
            raise ModelFormatError(
                f"dimension error: {self.what} needs {n} bytes at offset {self.pos}, "
                f"only {len(self.buf) - self.pos} left (truncated file?)"
            )
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise ModelFormatError(f"{len(self.buf) - self.pos} trailing bytes after {self.what}")


def decode_model(buf: bytes) -> ModelParams:
    if buf[: len(MAGIC)] != MAGIC:
        raise ModelFormatError("bad magic: not an FCGGNN model file")
    top = _Reader(buf, "model file")
    top.take(len(MAGIC))
    (version,) = top.unpack("<B")
    if version != VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    sections = []
    for what in ("config", "class names", "stats", "parameters"):
        top.what = what
        (n,) = top.unpack("<I")
        sections.append(_Reader(top.take(n), what))
    top.done()
    cfg_r, cls_r, stats_r, par_r = sections

    try:
        config = ModelConfig(**json.loads(cfg_r.take(len(cfg_r.buf)).decode("utf-8")))
    except (ValueError, TypeError) as exc:
        raise ModelFormatError(f"invalid config section: {exc}") from None

    (count,) = cls_r.unpack("<I")
    class_names = []
    for _ in range(count):
        (n,) = cls_r.unpack("<I")
        class_names.append(cls_r.take(n).decode("utf-8"))
    cls_r.done()

    (width,) = stats_r.unpack("<I")
    stats = None
    if width:
        mean = np.frombuffer(stats_r.take(8 * width), dtype="<f8").astype(np.float64)
        std = np.frombuffer(stats_r.take(8 * width), dtype="<f8").astype(np.float64)
        (eps,) = stats_r.unpack("<d")
        stats = StandardizationStats(mean, std, eps)
    stats_r.done()

    expected = parameter_shapes(config)
    (count,) = par_r.unpack("<I")
    if count != len(expected):
        raise ModelFormatError(f"dimension error: {count} arrays stored, config needs {len(expected)}")
    weights = {}
    for _ in range(count):
        (n,) = par_r.unpack("<H")
        name = par_r.take(n).decode("utf-8")
        rows, cols = par_r.unpack("<II")
        if expected.get(name) != (rows, cols):
            raise ModelFormatError(
                f"dimension error: {name} stored as {rows}x{cols}, config needs {expected.get(name)}"
            )
        data = np.frombuffer(par_r.take(4 * rows * cols), dtype="<f4")
        weights[name] = data.astype(np.float32).reshape(rows, cols)
    par_r.done()
    if len(class_names) not in (0, config.num_classes):
        raise ModelFormatError("class name count does not match num_classes")
    params = ModelParams(config, {k: weights[k] for k in expected}, stats, class_names)
    return params


def save_model(params: ModelParams, path) -> None:
    """Write atomically via a temp file in the target directory."""
    path = Path(path)
    payload = encode_model(params)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path) -> ModelParams:
    path = Path(path)
    if not path.is_file():
        raise ModelFormatError(f"model file not found: {path}")
    return decode_model(path.read_bytes())


def export_embeddings(params: ModelParams, corpus: Corpus | Sequence[Sample], out_path) -> int:
    """Write one TSV row per graph: id, class, split, embedding values. Returns rows written."""
    from .train import forward_samples

    samples = corpus.samples if isinstance(corpus, Corpus) else list(corpus)
    names = params.class_names or (corpus.class_names if isinstance(corpus, Corpus) else [])
    if not samples:
        raise DataError("no graphs to export")
    _, emb = forward_samples(params, samples)
    header = ["graph_id", "class", "split"] + [f"e{i}" for i in range(emb.shape[1])]
    lines = ["\t".join(header)]
    for s, row in zip(samples, emb):
        label = names[s.label] if s.label < len(names) else str(s.label)
        lines.append("\t".join([s.name, label, s.split] + [f"{v:.9g}" for v in row]))
    Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(samples)
