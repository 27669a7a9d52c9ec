#!/usr/bin/env python3
"""Offline dumper: pretrained self-supervised speech models to ACFT files.

For every (WAV, layer) pair one ACFT v1 feature file is written, tagged
``layer-L``. Layer 0 is the convolutional encoder output; layers 1..N are the
transformer layer outputs, taken raw (no normalization). The frame stride is
measured empirically from output lengths on two probe inputs and recorded in
the file header, because model families stride differently.

usage: extract.py --model <checkpoint-or-path> --layers 1-24 --wavs list.txt --out dir/
"""

from __future__ import annotations

import argparse
import os
import struct
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from scipy.io import wavfile
from scipy.signal import resample_poly

ACFT_MAGIC = b"ACFT"
ACFT_VERSION = 1
_ACFT_HEADER = struct.Struct("<HIIffH")
TARGET_RATE = 16000


class ModelUnavailable(Exception):
    """Checkpoint could not be loaded (missing, offline, or wrong format)."""


class BadLayer(Exception):
    """Requested layer does not exist in the chosen model."""


def write_acft(frames: np.ndarray, frame_stride_ms: float, source_tag: str,
               path) -> None:
    """Write one ACFT v1 file atomically (temp file + rename)."""
    frames = np.ascontiguousarray(frames, dtype="<f4")
    if frames.ndim != 2 or frames.shape[0] < 1 or frames.shape[1] < 1:
        raise ValueError("frames must be a non-empty T x D matrix")
    if not np.all(np.isfinite(frames)):
        raise ValueError("frames contain non-finite values")
    tag = source_tag.encode("utf-8")
    header = ACFT_MAGIC + _ACFT_HEADER.pack(
        ACFT_VERSION, frames.shape[1], frames.shape[0],
        np.float32(frame_stride_ms), np.float32(0.0), len(tag))
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(tag)
            fh.write(frames.tobytes(order="C"))
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def load_wav_mono_16k(path) -> np.ndarray:
    """Read a WAV as mono float at 16 kHz (averaging channels, resampling)."""
    rate, data = wavfile.read(path)
    data = np.asarray(data)
    if data.dtype.kind == "i":
        samples = data.astype(np.float64) / float(2 ** (data.dtype.itemsize * 8 - 1))
    elif data.dtype.kind == "u":
        samples = (data.astype(np.float64) - 128.0) / 128.0
    else:
        samples = data.astype(np.float64)
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if rate != TARGET_RATE:
        g = np.gcd(int(TARGET_RATE), int(rate))
        samples = resample_poly(samples, TARGET_RATE // g, rate // g)
    return samples


@dataclass(frozen=True)
class ExtractorJob:
    model_id: str
    layers: tuple
    wav_paths: tuple
    out_dir: Path


class LayerDumper:
    """Loads one checkpoint and exposes per-layer hidden states."""

    def __init__(self, model_id: str):
        from transformers import AutoModel
        try:
            self.model = AutoModel.from_pretrained(model_id)
        except Exception as exc:
            raise ModelUnavailable(f"cannot load {model_id!r}: {exc}") from exc
        self.model.eval()
        self.num_layers = int(self.model.config.num_hidden_layers)
        self.frame_stride_ms = self._measure_stride()

    def _forward(self, samples: np.ndarray):
        batch = torch.as_tensor(samples, dtype=torch.float32)[None, :]
        with torch.no_grad():
            return self.model(batch, output_hidden_states=True)

    def _measure_stride(self) -> float:
        """Frames added per second of extra audio, measured on probe inputs."""
        t_short = self._forward(np.zeros(TARGET_RATE // 2)).hidden_states[-1].shape[1]
        t_long = self._forward(np.zeros(TARGET_RATE)).hidden_states[-1].shape[1]
        if t_long <= t_short:
            raise ModelUnavailable("model output length does not grow with input")
        stride_samples = (TARGET_RATE - TARGET_RATE // 2) / (t_long - t_short)
        return stride_samples / TARGET_RATE * 1000.0

    def check_layers(self, layers) -> None:
        for layer in layers:
            if not (0 <= layer <= self.num_layers):
                raise BadLayer(
                    f"layer {layer} out of range 0..{self.num_layers}")

    def hidden_states(self, samples: np.ndarray, layers) -> dict:
        """Raw per-layer matrices for one utterance (no post-processing)."""
        self.check_layers(layers)
        out = self._forward(samples)
        states = {}
        for layer in layers:
            if layer == 0:
                conv = getattr(out, "extract_features", None)
                if conv is None:
                    raise BadLayer("model exposes no convolutional encoder output")
                states[0] = conv[0].numpy()
            else:
                states[layer] = out.hidden_states[layer][0].numpy()
        return states


def extract(job: ExtractorJob) -> list:
    """Run the model over every WAV; write one ACFT file per (wav, layer)."""
    dumper = LayerDumper(job.model_id)
    dumper.check_layers(job.layers)
    job.out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for wav_path in job.wav_paths:
        samples = load_wav_mono_16k(wav_path)
        states = dumper.hidden_states(samples, job.layers)
        stem = Path(wav_path).stem
        for layer in job.layers:
            out_path = job.out_dir / f"{stem}.layer-{layer}.acft"
            write_acft(states[layer], dumper.frame_stride_ms,
                       f"layer-{layer}", out_path)
            written.append(out_path)
    return written


def parse_layers(text: str) -> tuple:
    layers = set()
    for part in text.split(","):
        part = part.strip().replace("..", "-")
        if "-" in part:
            lo, hi = part.split("-", 1)
            layers.update(range(int(lo), int(hi) + 1))
        elif part:
            layers.add(int(part))
    if not layers:
        raise ValueError(f"no layers in {text!r}")
    return tuple(sorted(layers))


def read_wav_list(path) -> tuple:
    base = Path(path).parent
    out = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        p = Path(line)
        out.append(p if p.is_absolute() else base / p)
    if not out:
        raise ValueError(f"{path}: empty WAV list")
    return tuple(out)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="extract.py",
        description="Dump per-layer hidden states of a pretrained speech "
                    "model to ACFT feature files.")
    parser.add_argument("--model", required=True,
                        help="checkpoint name or local path")
    parser.add_argument("--layers", required=True,
                        help="e.g. 1-24, 0,4,8 (0 = convolutional encoder)")
    parser.add_argument("--wavs", required=True,
                        help="text file listing WAV paths, one per line")
    parser.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)
    try:
        job = ExtractorJob(model_id=args.model,
                           layers=parse_layers(args.layers),
                           wav_paths=read_wav_list(args.wavs),
                           out_dir=Path(args.out))
        written = extract(job)
    except (ModelUnavailable, BadLayer, ValueError, OSError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
