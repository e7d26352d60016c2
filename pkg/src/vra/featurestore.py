"""On-disk store of per-frame backbone features and MOS labels.

A store is a directory holding ``manifest.jsonl`` plus one ``.vraf`` binary
file per video under ``features/``.  The binary layout is little-endian::

    b"VRAF" | version u16 | dim u32 | n_frames u32 | n_frames*dim float32

with rows stored contiguously.  Anything after the last value is treated
as corruption.
"""
from __future__ import annotations

import json
import math
import re
import struct
import threading
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CorruptFileError,
    DimensionMismatchError,
    DuplicateIdError,
    ManifestError,
    MissingFileError,
    NonFiniteError,
    UnknownVideoError,
    VersionError,
)

MAGIC = b"VRAF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHII")

MANIFEST_NAME = "manifest.jsonl"
FEATURE_DIR = "features"
MANIFEST_FIELDS = ("video_id", "mos_label", "n_frames", "feature_file", "split")
SPLITS = ("train", "test", "val", "unassigned")
SPLIT_RATIOS = (0.7, 0.2, 0.1)


@dataclass(frozen=True)
class VideoManifestEntry:
    video_id: str
    mos_label: float
    n_frames: int
    feature_file: str
    split: str = "unassigned"

    def validate(self):
        if not isinstance(self.video_id, str) or not self.video_id:
            raise ManifestError(f"invalid video_id {self.video_id!r}")
        if not (math.isfinite(self.mos_label) and 1.0 <= self.mos_label <= 5.0):
            raise ManifestError(
                f"video {self.video_id!r}: mos_label {self.mos_label} outside [1, 5]"
            )
        if self.n_frames < 1:
            raise ManifestError(f"video {self.video_id!r}: n_frames must be >= 1")
        if self.split not in SPLITS:
            raise ManifestError(f"video {self.video_id!r}: unknown split {self.split!r}")


@dataclass(frozen=True)
class FrameFeatureMatrix:
    """Per-frame features of one video, shape ``(n_frames, dim)``."""

    video_id: str
    values: np.ndarray

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SplitAssignment:
    train_ids: list
    test_ids: list
    val_ids: list
    seed: int
    ratios: tuple = SPLIT_RATIOS

    def split_of(self) -> dict:
        out = {}
        for name, ids in (("train", self.train_ids), ("test", self.test_ids), ("val", self.val_ids)):
            for vid in ids:
                out[vid] = name
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ratios"] = list(self.ratios)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SplitAssignment":
        return cls(
            train_ids=list(d["train_ids"]),
            test_ids=list(d["test_ids"]),
            val_ids=list(d["val_ids"]),
            seed=int(d["seed"]),
            ratios=tuple(d.get("ratios", SPLIT_RATIOS)),
        )

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "SplitAssignment":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, ValueError, KeyError) as exc:
            raise ManifestError(f"cannot read split file {path}: {exc}") from exc


# -- binary feature files ---------------------------------------------------

def encode_features(values) -> bytes:
    arr = np.asarray(values)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatchError(f"feature matrix must be 2-D and non-empty, got shape {arr.shape}")
    arr32 = np.ascontiguousarray(arr, dtype="<f4")
    if not np.all(np.isfinite(arr32)):
        raise NonFiniteError("feature matrix contains non-finite values")
    n, d = arr32.shape
    return _HEADER.pack(MAGIC, FORMAT_VERSION, d, n) + arr32.tobytes()


def decode_features(buf: bytes, name: str = "<buffer>") -> np.ndarray:
    if len(buf) < _HEADER.size:
        raise CorruptFileError(f"{name}: file shorter than header")
    magic, version, dim, n = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise CorruptFileError(f"{name}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionError(f"{name}: unsupported feature file version {version}")
    expected = _HEADER.size + 4 * dim * n
    if len(buf) != expected:
        raise CorruptFileError(
            f"{name}: length {len(buf)} does not match header ({expected} bytes expected)"
        )
    if dim == 0 or n == 0:
        raise CorruptFileError(f"{name}: empty feature matrix")
    values = np.frombuffer(buf, dtype="<f4", offset=_HEADER.size).reshape(n, dim)
    return values.astype(np.float32)


def write_feature_file(path, values):
    Path(path).write_bytes(encode_features(values))


def read_feature_file(path) -> np.ndarray:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except FileNotFoundError as exc:
        raise MissingFileError(f"feature file not found: {path}") from exc
    return decode_features(buf, str(path))


# -- manifests ----------------------------------------------------------------

def read_manifest(path, *, require_n_frames: bool = True) -> list:
    """Parse a JSON-lines manifest into a list of entries.

    With ``require_n_frames=False`` a missing or zero ``n_frames`` is
    accepted (ingestion fills it in from the feature file).
    """
    entries = []
    seen = set()
    try:
        lines = Path(path).read_text().splitlines()
    except FileNotFoundError as exc:
        raise MissingFileError(f"manifest not found: {path}") from exc
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            entry = VideoManifestEntry(
                video_id=rec["video_id"],
                mos_label=float(rec["mos_label"]),
                n_frames=int(rec.get("n_frames") or 0),
                feature_file=str(rec["feature_file"]),
                split=rec.get("split", "unassigned"),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise ManifestError(f"{path}:{lineno}: malformed record ({exc})") from exc
        if entry.video_id in seen:
            raise DuplicateIdError(f"{path}:{lineno}: duplicate video_id {entry.video_id!r}")
        seen.add(entry.video_id)
        if require_n_frames or entry.n_frames:
            entry.validate()
        else:
            replace(entry, n_frames=1).validate()
        entries.append(entry)
    return entries


def write_manifest(path, entries: Iterable[VideoManifestEntry]):
    with open(path, "w") as fh:
        for e in entries:
            rec = {k: getattr(e, k) for k in MANIFEST_FIELDS}
            fh.write(json.dumps(rec) + "\n")


def _load_raw(path: Path) -> np.ndarray:
    if not path.exists():
        raise MissingFileError(f"raw feature file not found: {path}")
    if path.suffix == ".npy":
        arr = np.load(path, allow_pickle=False)
    elif path.suffix == ".vraf":
        arr = read_feature_file(path)
    else:
        delimiter = "," if path.suffix == ".csv" else None
        arr = np.loadtxt(path, delimiter=delimiter, ndmin=2)
    return np.asarray(arr, dtype=np.float64)


_SAFE = re.compile(r"[^A-Za-z0-9._-]")


def _feature_name(video_id: str) -> str:
    return f"{FEATURE_DIR}/{_SAFE.sub('_', video_id)}.vraf"


# -- the store ----------------------------------------------------------------

class FeatureStore:
    """Read access to a store directory.

    Loads are cached; the cache is guarded so concurrent readers are safe.
    """

    def __init__(self, root, entries: Sequence[VideoManifestEntry] | None = None):
        self.root = Path(root)
        if entries is None:
            entries = read_manifest(self.root / MANIFEST_NAME)
        self._entries = {e.video_id: e for e in entries}
        self._cache: dict = {}
        self._lock = threading.Lock()
        self._dim = None

    @classmethod
    def open(cls, root) -> "FeatureStore":
        return cls(root)

    @property
    def entries(self) -> list:
        return list(self._entries.values())

    @property
    def video_ids(self) -> list:
        return list(self._entries)

    def __contains__(self, video_id) -> bool:
        return video_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def entry(self, video_id) -> VideoManifestEntry:
        try:
            return self._entries[video_id]
        except KeyError:
            raise UnknownVideoError(f"video {video_id!r} not in store {self.root}") from None

    def label(self, video_id) -> float:
        return self.entry(video_id).mos_label

    def labels(self, video_ids) -> np.ndarray:
        return np.array([self.label(v) for v in video_ids], dtype=np.float64)

    @property
    def dim(self) -> int:
        if self._dim is None:
            first = next(iter(self._entries))
            self._dim = self.load(first).dim
        return self._dim

    def load(self, video_id) -> FrameFeatureMatrix:
        entry = self.entry(video_id)
        with self._lock:
            cached = self._cache.get(video_id)
        if cached is not None:
            return cached
        values = read_feature_file(self.root / entry.feature_file)
        if values.shape[0] != entry.n_frames:
            raise CorruptFileError(
                f"video {video_id!r}: file has {values.shape[0]} frames, manifest says {entry.n_frames}"
            )
        values.setflags(write=False)
        mat = FrameFeatureMatrix(video_id, values)
        with self._lock:
            self._cache.setdefault(video_id, mat)
        return mat

    def with_splits(self, assignment: SplitAssignment) -> "FeatureStore":
        """Rewrite the manifest's split column from ``assignment``."""
        where = assignment.split_of()
        entries = [replace(e, split=where.get(e.video_id, "unassigned")) for e in self.entries]
        write_manifest(self.root / MANIFEST_NAME, entries)
        return FeatureStore(self.root, entries)


def load_video_features(store: FeatureStore, video_id: str) -> FrameFeatureMatrix:
    return store.load(video_id)


def build_store(root, records, splits=None) -> FeatureStore:
    """Write a store from in-memory ``(video_id, mos_label, matrix)`` records.

    All matrices must share one feature dimension and be finite; duplicate
    ids are rejected.  ``splits`` optionally maps video_id to split name.
    """
    root = Path(root)
    (root / FEATURE_DIR).mkdir(parents=True, exist_ok=True)
    splits = splits or {}
    entries = []
    seen_ids = set()
    seen_files = set()
    dim = None
    for video_id, mos, values in records:
        if video_id in seen_ids:
            raise DuplicateIdError(f"duplicate video_id {video_id!r}")
        seen_ids.add(video_id)
        values = np.asarray(values)
        if values.ndim != 2:
            raise DimensionMismatchError(f"video {video_id!r}: features must be 2-D, got {values.shape}")
        if dim is None:
            dim = values.shape[1]
        elif values.shape[1] != dim:
            raise DimensionMismatchError(
                f"video {video_id!r}: feature dim {values.shape[1]} differs from {dim}"
            )
        if not np.all(np.isfinite(values)) or not np.all(np.isfinite(values.astype(np.float32))):
            raise NonFiniteError(f"video {video_id!r}: non-finite feature value")
        name = _feature_name(video_id)
        if name in seen_files:
            raise ManifestError(f"video {video_id!r}: feature file name collides with another id")
        seen_files.add(name)
        entry = VideoManifestEntry(
            video_id, float(mos), int(values.shape[0]), name, splits.get(video_id, "unassigned")
        )
        entry.validate()
        write_feature_file(root / name, values)
        entries.append(entry)
    write_manifest(root / MANIFEST_NAME, entries)
    return FeatureStore(root, entries)


def ingest_features(manifest_path, raw_feature_dir, store_dir) -> FeatureStore:
    """Validate raw per-frame features and write them into a new store.

    The input manifest uses the store's record format; ``feature_file``
    points to a raw matrix (``.npy``, ``.csv``, whitespace text or
    ``.vraf``) relative to ``raw_feature_dir``.  ``n_frames`` may be left
    out, but when present it must match the file's row count.
    """
    raw_dir = Path(raw_feature_dir)
    entries = read_manifest(manifest_path, require_n_frames=False)
    if not entries:
        raise ManifestError(f"{manifest_path}: manifest is empty")

    def records():
        for e in entries:
            values = _load_raw(raw_dir / e.feature_file)
            if e.n_frames and e.n_frames != values.shape[0]:
                raise ManifestError(
                    f"video {e.video_id!r}: manifest n_frames={e.n_frames} but file has {values.shape[0]} rows"
                )
            yield e.video_id, e.mos_label, values

    return build_store(store_dir, records(), {e.video_id: e.split for e in entries})


def split_dataset(manifest, seed: int) -> SplitAssignment:
    """Seeded 70/20/10 train/test/val partition.

    ``manifest`` may be a store, a list of entries or a list of ids.
    Train and test sizes are floored; validation takes the remainder.
    """
    if isinstance(manifest, FeatureStore):
        ids = manifest.video_ids
    else:
        ids = [getattr(m, "video_id", m) for m in manifest]
    n = len(ids)
    if n == 0:
        raise ManifestError("cannot split an empty manifest")
    if len(set(ids)) != n:
        raise DuplicateIdError("manifest contains duplicate video ids")
    # integer arithmetic keeps floor(0.7*N) exact
    n_train = 7 * n // 10
    n_test = 2 * n // 10
    perm = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF).permutation(n)
    shuffled = [ids[i] for i in perm]
    return SplitAssignment(
        train_ids=shuffled[:n_train],
        test_ids=shuffled[n_train:n_train + n_test],
        val_ids=shuffled[n_train + n_test:],
        seed=int(seed),
    )
