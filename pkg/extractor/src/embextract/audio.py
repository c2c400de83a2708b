"""Minimal PCM WAV reading and resampling, stdlib only."""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np


class AudioError(ValueError):
    """An audio file could not be decoded."""


def read_wav(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a PCM WAV file as mono float64 in [-1, 1] plus its sample rate."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            frames = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError, OSError) as exc:
        raise AudioError(f"{path}: {exc}") from None
    if width == 2:
        data = np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32768.0
    elif width == 4:
        data = np.frombuffer(frames, dtype="<i4").astype(np.float64) / 2147483648.0
    elif width == 1:
        data = (np.frombuffer(frames, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    else:
        raise AudioError(f"{path}: unsupported sample width {width} bytes")
    if data.size == 0:
        raise AudioError(f"{path}: no audio frames")
    if n_channels > 1:
        data = data.reshape(-1, n_channels).mean(axis=1)
    return data, rate


def write_wav(path: str | Path, samples: np.ndarray, rate: int) -> None:
    """Write mono float samples in [-1, 1] as 16-bit PCM."""
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    pcm = np.round(clipped * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(rate)
        wf.writeframes(pcm.tobytes())


def resample(samples: np.ndarray, rate: int, target_rate: int) -> np.ndarray:
    """Linear-interpolation resampling; identity when rates match."""
    if rate == target_rate:
        return samples
    duration = samples.size / rate
    n_out = max(1, int(round(duration * target_rate)))
    t_in = np.arange(samples.size) / rate
    t_out = np.arange(n_out) / target_rate
    return np.interp(t_out, t_in, samples)
