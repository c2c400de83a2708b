"""Synthetic voice-like test audio: harmonic source plus formant envelope."""

from __future__ import annotations

import zlib

import numpy as np


def make_voice(
    f0: float,
    formants: tuple[float, ...],
    seed: int,
    duration: float = 1.2,
    rate: int = 16000,
) -> np.ndarray:
    """A crude vowel-like signal: harmonics of f0 shaped by formant peaks.

    Different seeds for the same (f0, formants) give distinct utterances of
    the same synthetic speaker; changing f0/formants changes the speaker.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(int(duration * rate)) / rate
    jitter = 1.0 + 0.01 * rng.standard_normal()
    signal = np.zeros_like(t)
    for h in range(1, 30):
        freq = f0 * jitter * h
        if freq >= rate / 2:
            break
        gain = sum(np.exp(-0.5 * ((freq - f) / 120.0) ** 2) for f in formants) + 0.05
        signal += (gain / h) * np.sin(2.0 * np.pi * freq * t + rng.uniform(0, 2 * np.pi))
    signal += 0.01 * rng.standard_normal(t.size)
    return 0.5 * signal / np.abs(signal).max()


SPEAKERS = {
    "alpha": {"f0": 110.0, "formants": (700.0, 1200.0, 2600.0)},
    "bravo": {"f0": 220.0, "formants": (850.0, 2000.0, 3000.0)},
    "carol": {"f0": 160.0, "formants": (500.0, 1500.0, 2450.0)},
}


def utterance(speaker: str, take: int, duration: float = 1.2, rate: int = 16000) -> np.ndarray:
    spec = SPEAKERS[speaker]
    seed = zlib.crc32(f"{speaker}-{take}".encode())
    return make_voice(spec["f0"], spec["formants"], seed=seed, duration=duration, rate=rate)
