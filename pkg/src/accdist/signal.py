"""Audio ingestion and 39-dimensional MFCC extraction.

WAV files are parsed directly (RIFF PCM16 / float32 only) so that codec and
truncation failures map onto the package's error taxonomy. MFCC output is a
:class:`FrameMatrix`, the same container used for externally extracted neural
embeddings: T frames by 39 coefficients (13 cepstra with c0 = log frame
energy, 13 deltas, 13 delta-deltas) at a 10 ms stride.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct
from scipy.signal import resample_poly

from .errors import CorruptFile, TooShort, UnsupportedFormat

MFCC_SAMPLE_RATE = 16000
PRE_EMPHASIS = 0.97
WINDOW_MS = 25.0
HOP_MS = 10.0
NUM_FFT = 512
NUM_FILTERS = 26
NUM_CEPSTRA = 13
MEL_LOW_HZ = 0.0
MEL_HIGH_HZ = 8000.0
ENERGY_FLOOR = 1e-10
DELTA_SPAN = 2


@dataclass(frozen=True)
class AudioClip:
    """Mono audio with amplitudes in [-1, 1)."""

    samples: np.ndarray
    sample_rate: int
    channel_count: int = 1

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1 or self.channel_count != 1:
            raise ValueError("AudioClip must be mono (1-D samples)")
        if samples.size == 0:
            raise ValueError("AudioClip must have positive duration")
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioClip contains non-finite amplitudes")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class FrameMatrix:
    """T x D frame-feature matrix with frame timing metadata.

    Frames are stored as float32 (the on-disk precision) so that feature-file
    round trips are bit exact. ``window_ms`` is 0 when the analysis window is
    unknown (e.g. neural embeddings).
    """

    frames: np.ndarray
    frame_stride_ms: float
    window_ms: float = 0.0
    source_tag: str = ""

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float32, order="C")
        if frames.ndim != 2 or frames.shape[0] < 1 or frames.shape[1] < 1:
            raise ValueError("frames must be a T x D matrix with T >= 1, D >= 1")
        if not np.all(np.isfinite(frames)):
            raise ValueError("frames contain non-finite values")
        stride = float(np.float32(self.frame_stride_ms))
        window = float(np.float32(self.window_ms))
        if stride <= 0:
            raise ValueError("frame_stride_ms must be positive")
        if window < 0:
            raise ValueError("window_ms must be >= 0")
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "frame_stride_ms", stride)
        object.__setattr__(self, "window_ms", window)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


def load_wav(path) -> AudioClip:
    """Read a RIFF/WAVE file (PCM 16-bit or IEEE float32) as a mono clip.

    Multi-channel audio is averaged into one channel; integer samples are
    scaled by 2^15 so all amplitudes lie in [-1, 1).
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise UnsupportedFormat(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8:pos + 8 + chunk_size]
        if len(body) < chunk_size:
            raise CorruptFile(f"{path}: chunk {chunk_id!r} truncated")
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise CorruptFile(f"{path}: fmt chunk too small")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)

    if fmt is None or payload is None:
        raise CorruptFile(f"{path}: missing fmt or data chunk")

    audio_format, channels, sample_rate, _, _, bits = fmt
    if channels < 1 or sample_rate <= 0:
        raise CorruptFile(f"{path}: invalid fmt fields")
    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 2], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif audio_format == 3 and bits == 32:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % 4], dtype="<f4")
        samples = np.clip(raw.astype(np.float64), -1.0, np.nextafter(1.0, 0.0))
    else:
        raise UnsupportedFormat(
            f"{path}: unsupported codec (format={audio_format}, bits={bits})"
        )

    if samples.size == 0 or samples.size % channels != 0:
        raise CorruptFile(f"{path}: data chunk size inconsistent with channel count")
    if channels > 1:
        samples = samples.reshape(-1, channels).mean(axis=1)
    return AudioClip(samples=samples, sample_rate=int(sample_rate))


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Windowed-sinc (polyphase) resampling to ``target_rate``."""
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == clip.sample_rate:
        return clip
    g = np.gcd(int(target_rate), int(clip.sample_rate))
    up, down = target_rate // g, clip.sample_rate // g
    out = resample_poly(clip.samples, up, down)
    out = np.clip(out, -1.0, np.nextafter(1.0, 0.0))
    return AudioClip(samples=out, sample_rate=int(target_rate))


def _mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def _mel_inv(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(num_filters: int = NUM_FILTERS, nfft: int = NUM_FFT,
                   sample_rate: int = MFCC_SAMPLE_RATE,
                   low_hz: float = MEL_LOW_HZ, high_hz: float = MEL_HIGH_HZ) -> np.ndarray:
    """Triangular mel filterbank, rows = filters, cols = rfft bins."""
    points_mel = np.linspace(_mel(low_hz), _mel(high_hz), num_filters + 2)
    bins = np.floor((nfft + 1) * _mel_inv(points_mel) / sample_rate).astype(int)
    bank = np.zeros((num_filters, nfft // 2 + 1))
    for f in range(num_filters):
        left, center, right = bins[f], bins[f + 1], bins[f + 2]
        for i in range(left, center):
            bank[f, i] = (i - left) / max(center - left, 1)
        for i in range(center, right):
            bank[f, i] = (right - i) / max(right - center, 1)
    return bank


def _delta(coeffs: np.ndarray, span: int = DELTA_SPAN) -> np.ndarray:
    """Regression deltas over +/-span frames with edge replication."""
    padded = np.pad(coeffs, ((span, span), (0, 0)), mode="edge")
    denom = 2.0 * sum(n * n for n in range(1, span + 1))
    out = np.zeros_like(coeffs)
    for n in range(1, span + 1):
        out += n * (padded[span + n:span + n + coeffs.shape[0]]
                    - padded[span - n:span - n + coeffs.shape[0]])
    return out / denom


def compute_mfcc(clip: AudioClip, cmvn: bool = False) -> FrameMatrix:
    """39-dimensional MFCCs (13 cepstra + deltas + delta-deltas).

    Recipe: pre-emphasis 0.97, 25 ms Hamming window, 10 ms hop, 512-point
    spectrum, 26 mel filters spanning 0-8000 Hz, DCT-II (ortho), c0 replaced
    by log frame energy (floored at 1e-10). No padding: the last partial
    window is dropped. ``cmvn`` enables per-utterance mean/variance
    normalization of all 39 columns (off by default).
    """
    if clip.sample_rate != MFCC_SAMPLE_RATE:
        raise ValueError(f"compute_mfcc expects {MFCC_SAMPLE_RATE} Hz input; resample first")
    window = int(round(WINDOW_MS / 1000.0 * clip.sample_rate))
    hop = int(round(HOP_MS / 1000.0 * clip.sample_rate))
    n = clip.samples.size
    if n < window:
        raise TooShort(f"clip of {n} samples is shorter than one {window}-sample window")

    emphasized = np.empty(n)
    emphasized[0] = clip.samples[0]
    emphasized[1:] = clip.samples[1:] - PRE_EMPHASIS * clip.samples[:-1]

    n_frames = (n - window) // hop + 1
    idx = np.arange(window)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = emphasized[idx] * np.hamming(window)[None, :]

    energy = np.maximum(np.sum(frames ** 2, axis=1), ENERGY_FLOOR)
    power = np.abs(np.fft.rfft(frames, NUM_FFT)) ** 2
    mel_energies = np.maximum(power @ mel_filterbank().T, ENERGY_FLOOR)
    cepstra = dct(np.log(mel_energies), type=2, axis=1, norm="ortho")[:, :NUM_CEPSTRA]
    cepstra[:, 0] = np.log(energy)

    deltas = _delta(cepstra)
    features = np.hstack([cepstra, deltas, _delta(deltas)])
    tag = "mfcc39"
    if cmvn:
        features = (features - features.mean(axis=0)) / np.maximum(features.std(axis=0), 1e-8)
        tag = "mfcc39+cmvn"
    return FrameMatrix(frames=features, frame_stride_ms=HOP_MS,
                       window_ms=WINDOW_MS, source_tag=tag)
