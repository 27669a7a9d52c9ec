"""Feature files, dataset manifests, and word slicing.

The ACFT v1 container is the single on-disk format shared by MFCC output and
neural-layer dumps (little-endian): magic ``ACFT``, version u16 = 1, dim u32,
frame_count u32, frame_stride_ms f32, window_ms f32 (0 if unknown),
source-tag length u16 + UTF-8 bytes, then frame_count x dim float32 values
row-major. Round trips are bit exact.

Manifests, segment lists, and transcriptions are UTF-8 TSV; ``#`` starts a
comment line. Paths inside a manifest are resolved relative to the manifest
file unless absolute.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CorruptFile,
    EmptySlice,
    InvalidManifest,
    NotAFeatureFile,
    SegmentOutOfRange,
    UnsupportedVersion,
)
from .signal import FrameMatrix

ACFT_MAGIC = b"ACFT"
ACFT_VERSION = 1
_HEADER = struct.Struct("<HIIffH")  # version, dim, frame_count, stride_ms, window_ms, tag length

ROLES = ("target", "reference")


def write_features(m: FrameMatrix, path) -> None:
    """Serialize ``m`` to an ACFT v1 file."""
    tag = m.source_tag.encode("utf-8")
    if len(tag) > 0xFFFF:
        raise ValueError("source_tag longer than 65535 bytes")
    header = ACFT_MAGIC + _HEADER.pack(
        ACFT_VERSION, m.dim, m.n_frames,
        np.float32(m.frame_stride_ms), np.float32(m.window_ms), len(tag),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(tag)
        fh.write(m.frames.astype("<f4", copy=False).tobytes(order="C"))


def read_features(path) -> FrameMatrix:
    """Read an ACFT v1 file back into a :class:`FrameMatrix` (bit exact)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 4 or data[:4] != ACFT_MAGIC:
        raise NotAFeatureFile(f"{path}: bad magic")
    if len(data) < 4 + _HEADER.size:
        raise CorruptFile(f"{path}: truncated header")
    version, dim, frame_count, stride_ms, window_ms, tag_len = _HEADER.unpack_from(data, 4)
    if version != ACFT_VERSION:
        raise UnsupportedVersion(f"{path}: version {version}, expected {ACFT_VERSION}")
    offset = 4 + _HEADER.size
    if len(data) < offset + tag_len:
        raise CorruptFile(f"{path}: truncated source tag")
    tag = data[offset:offset + tag_len].decode("utf-8")
    offset += tag_len
    expected = dim * frame_count * 4
    if len(data) - offset != expected:
        raise CorruptFile(
            f"{path}: payload is {len(data) - offset} bytes, header implies {expected}"
        )
    frames = np.frombuffer(data, dtype="<f4", count=dim * frame_count, offset=offset)
    frames = frames.reshape(frame_count, dim)
    return FrameMatrix(frames=frames, frame_stride_ms=stride_ms,
                       window_ms=window_ms, source_tag=tag)


@dataclass(frozen=True)
class WordSegment:
    """One word's time span within an utterance (seconds)."""

    word: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if not self.word:
            raise ValueError("segment word label must be non-empty")
        if self.start_s < 0 or self.end_s <= self.start_s:
            raise ValueError(f"invalid segment times [{self.start_s}, {self.end_s}]")


def _check_ordered(segments) -> None:
    for prev, cur in zip(segments, segments[1:]):
        if cur.start_s < prev.end_s:
            raise ValueError(
                f"segments overlap or are out of order at {cur.word!r} ({cur.start_s}s)"
            )


def slice_words(m: FrameMatrix, segments) -> list[tuple[str, FrameMatrix]]:
    """Cut per-word FrameMatrix slices out of a full-utterance matrix.

    Frame range per word is [floor(start/stride), ceil(end/stride)): boundary
    frames are never dropped, so every word keeps at least one frame. End
    times may overrun the utterance by at most one frame.
    """
    segments = list(segments)
    _check_ordered(segments)
    stride = m.frame_stride_ms
    out = []
    for seg in segments:
        first = math.floor(seg.start_s * 1000.0 / stride)
        last = math.ceil(seg.end_s * 1000.0 / stride)
        if first >= m.n_frames + 1 or last > m.n_frames + 1:
            raise SegmentOutOfRange(
                f"{seg.word!r} [{seg.start_s}, {seg.end_s}]s lies outside the "
                f"{m.n_frames}-frame utterance (stride {stride} ms)"
            )
        last = min(last, m.n_frames)
        if last <= first:
            raise EmptySlice(f"{seg.word!r} rounds to zero frames")
        out.append((seg.word, FrameMatrix(
            frames=m.frames[first:last], frame_stride_ms=stride,
            window_ms=m.window_ms, source_tag=m.source_tag,
        )))
    return out


def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line


def load_segments(path) -> list[WordSegment]:
    """Read a TSV segment file: word <TAB> start_s <TAB> end_s, time-ordered."""
    segments = []
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
        segments.append(WordSegment(parts[0], float(parts[1]), float(parts[2])))
    _check_ordered(segments)
    return segments


def load_transcriptions(path) -> dict[str, list[str]]:
    """Read a TSV transcription file: word <TAB> space-separated IPA segments.

    Repeated words get ``@k`` occurrence suffixes (k >= 2), mirroring
    :func:`word_keys`.
    """
    out: dict[str, list[str]] = {}
    seen: dict[str, int] = {}
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 2 tab-separated fields")
        word, tokens = parts[0], parts[1].split()
        if not tokens:
            raise ValueError(f"{path}:{lineno}: empty transcription for {word!r}")
        seen[word] = seen.get(word, 0) + 1
        key = word if seen[word] == 1 else f"{word}@{seen[word]}"
        out[key] = tokens
    return out


def word_keys(words) -> list[str]:
    """Disambiguate repeated words by occurrence: her, her@2, her@3, ...

    Elicitation paragraphs repeat words; the k-th occurrence for one speaker
    is compared with the k-th occurrence for another.
    """
    seen: dict[str, int] = {}
    keys = []
    for word in words:
        seen[word] = seen.get(word, 0) + 1
        keys.append(word if seen[word] == 1 else f"{word}@{seen[word]}")
    return keys


@dataclass(frozen=True)
class SpeakerEntry:
    """One manifest row."""

    speaker_id: str
    role: str
    features_path: str
    segments_path: str
    transcription_path: str | None = None
    metadata: dict = field(default_factory=dict)

    def resolve(self, field_name: str, base: Path, tag: str | None = None) -> Path:
        raw = getattr(self, field_name)
        if raw is None:
            raise InvalidManifest(f"{self.speaker_id}: no {field_name} in manifest")
        if tag is not None:
            raw = raw.replace("{features}", tag)
        p = Path(raw)
        return p if p.is_absolute() else base / p


@dataclass(frozen=True)
class DatasetManifest:
    """Speakers with roles, metadata, and file locations."""

    speakers: tuple
    base_dir: Path

    def by_role(self, role: str) -> list[SpeakerEntry]:
        return [s for s in self.speakers if s.role == role]

    @property
    def targets(self) -> list[SpeakerEntry]:
        return self.by_role("target")

    @property
    def references(self) -> list[SpeakerEntry]:
        return self.by_role("reference")


def _parse_metadata(text: str) -> dict:
    meta = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ValueError(f"metadata item {item!r} is not key=value")
        key, value = item.split("=", 1)
        meta[key.strip()] = value.strip()
    return meta


def load_manifest(path) -> DatasetManifest:
    """Read a TSV manifest.

    Columns: speaker_id, role (target|reference), features path, segments
    path, transcription path or ``-``, metadata (``k=v,k=v`` or ``-``). The
    two trailing columns may be omitted.
    """
    path = Path(path)
    speakers = []
    ids = set()
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) < 4:
            raise InvalidManifest(f"{path}:{lineno}: expected at least 4 fields")
        parts += ["-"] * (6 - len(parts))
        speaker_id, role, feats, segs, trans, meta = parts[:6]
        if speaker_id in ids:
            raise InvalidManifest(f"{path}:{lineno}: duplicate speaker id {speaker_id!r}")
        if role not in ROLES:
            raise InvalidManifest(f"{path}:{lineno}: role must be one of {ROLES}")
        ids.add(speaker_id)
        speakers.append(SpeakerEntry(
            speaker_id=speaker_id,
            role=role,
            features_path=feats,
            segments_path=segs,
            transcription_path=None if trans == "-" else trans,
            metadata={} if meta == "-" else _parse_metadata(meta),
        ))
    if not speakers:
        raise InvalidManifest(f"{path}: manifest lists no speakers")
    return DatasetManifest(speakers=tuple(speakers), base_dir=path.parent)


def load_word_features(entry: SpeakerEntry, base: Path,
                       tag: str | None = None) -> dict[str, FrameMatrix]:
    """Features + segments for one speaker, sliced into a word -> matrix map."""
    feats = read_features(entry.resolve("features_path", base, tag))
    segments = load_segments(entry.resolve("segments_path", base))
    slices = slice_words(feats, segments)
    return dict(zip(word_keys(w for w, _ in slices), (m for _, m in slices)))


def validate_feature_file(path) -> FrameMatrix:
    """Parse an ACFT file, raising on any structural defect."""
    return read_features(path)


def validate_manifest(manifest: DatasetManifest, tag: str | None = None) -> list[str]:
    """Check that every referenced file exists and parses; returns log lines."""
    lines = []
    for entry in manifest.speakers:
        feats_path = entry.resolve("features_path", manifest.base_dir, tag)
        if "{features}" in str(feats_path):
            lines.append(f"{entry.speaker_id}: features path is a template, not checked")
        else:
            if not feats_path.exists():
                raise InvalidManifest(f"{entry.speaker_id}: missing features file {feats_path}")
            read_features(feats_path)
        segs_path = entry.resolve("segments_path", manifest.base_dir)
        if not segs_path.exists():
            raise InvalidManifest(f"{entry.speaker_id}: missing segments file {segs_path}")
        load_segments(segs_path)
        if entry.transcription_path is not None:
            trans_path = entry.resolve("transcription_path", manifest.base_dir)
            if not trans_path.exists():
                raise InvalidManifest(
                    f"{entry.speaker_id}: missing transcription file {trans_path}")
            load_transcriptions(trans_path)
        lines.append(f"{entry.speaker_id}: ok ({entry.role})")
    return lines
