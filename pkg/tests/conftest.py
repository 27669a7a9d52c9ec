"""Shared fixture helpers: tiny WAV writers used across test modules."""

import struct
import wave

import numpy as np


def write_pcm16(path, samples, sample_rate=16000, channels=1):
    """Write int16 samples (1-D, or n x channels) as a PCM16 WAV."""
    samples = np.asarray(samples, dtype=np.int16)
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(channels)
        fh.setsampwidth(2)
        fh.setframerate(sample_rate)
        fh.writeframes(samples.tobytes())


def write_float32(path, samples, sample_rate=16000):
    """Write float samples as an IEEE float32 WAV (hand-built RIFF)."""
    payload = np.asarray(samples, dtype="<f4").tobytes()
    fmt = struct.pack("<HHIIHH", 3, 1, sample_rate, sample_rate * 4, 4, 32)
    body = (b"WAVE"
            + b"fmt " + struct.pack("<I", len(fmt)) + fmt
            + b"data" + struct.pack("<I", len(payload)) + payload)
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", len(body)) + body)


def write_mulaw(path, n_samples=100, sample_rate=8000):
    """Write a mu-law (format 7) WAV, unsupported by design."""
    payload = bytes(n_samples)
    fmt = struct.pack("<HHIIHH", 7, 1, sample_rate, sample_rate, 1, 8)
    body = (b"WAVE"
            + b"fmt " + struct.pack("<I", len(fmt)) + fmt
            + b"data" + struct.pack("<I", len(payload)) + payload)
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", len(body)) + body)


def sine(freq_hz, duration_s, sample_rate, amplitude=0.5):
    t = np.arange(int(duration_s * sample_rate)) / sample_rate
    return amplitude * np.sin(2 * np.pi * freq_hz * t)
