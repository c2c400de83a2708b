"""Embedding backends.

``PretrainedSpeakerEncoder`` wraps the public pretrained speaker-verification
model (ECAPA-TDNN via speechbrain) and is the production path; it needs the
optional ``pretrained`` extra installed and the checkpoint available.
``SpectralStatsEncoder`` is a dependency-free deterministic stand-in used
for tests and dry runs: log filterbank statistics pushed through a fixed
random projection. It is not a speaker-verification model, but it is stable,
fast, and separates coarsely different voices, which is all the offline test
path needs.
"""

from __future__ import annotations

import numpy as np

from .audio import AudioError


class BackendError(RuntimeError):
    """The embedding backend is unavailable or misconfigured."""


class SpectralStatsEncoder:
    """Deterministic offline encoder: filterbank statistics, fixed projection.

    Frames the waveform, takes log energies in triangular bands spaced
    logarithmically between 100 Hz and 7.6 kHz, summarizes each band by its
    mean and standard deviation over frames, projects the summary through a
    fixed seeded Gaussian matrix to the target dimension, and length-
    normalizes the result.
    """

    expected_sample_rate = 16000

    _FRAME = 400
    _HOP = 160
    _N_BANDS = 40
    _F_LO = 100.0
    _F_HI = 7600.0
    _PROJECTION_SEED = 1924

    def __init__(self, dim: int = 192):
        if dim < 2:
            raise ValueError(f"embedding dimension must be >= 2, got {dim}")
        self.dim = dim
        rng = np.random.default_rng(self._PROJECTION_SEED)
        self._projection = rng.normal(size=(2 * self._N_BANDS, dim)) / np.sqrt(2 * self._N_BANDS)
        self._window = np.hanning(self._FRAME)
        self._bands = self._triangular_bands()

    def _triangular_bands(self) -> np.ndarray:
        n_bins = self._FRAME // 2 + 1
        freqs = np.fft.rfftfreq(self._FRAME, d=1.0 / self.expected_sample_rate)
        edges = np.geomspace(self._F_LO, self._F_HI, self._N_BANDS + 2)
        bands = np.zeros((self._N_BANDS, n_bins))
        for b in range(self._N_BANDS):
            lo, mid, hi = edges[b], edges[b + 1], edges[b + 2]
            rising = (freqs - lo) / (mid - lo)
            falling = (hi - freqs) / (hi - mid)
            bands[b] = np.clip(np.minimum(rising, falling), 0.0, None)
        return bands

    def embed(self, samples: np.ndarray, sample_rate: int) -> np.ndarray:
        if sample_rate != self.expected_sample_rate:
            raise ValueError(f"expected {self.expected_sample_rate} Hz input, got {sample_rate}")
        if samples.size < self._FRAME:
            raise AudioError(f"audio too short: {samples.size} samples (< {self._FRAME})")
        n_frames = 1 + (samples.size - self._FRAME) // self._HOP
        idx = np.arange(self._FRAME)[None, :] + self._HOP * np.arange(n_frames)[:, None]
        frames = samples[idx] * self._window
        power = np.abs(np.fft.rfft(frames, axis=1)) ** 2
        energies = np.log(power @ self._bands.T + 1e-10)
        stats = np.concatenate([energies.mean(axis=0), energies.std(axis=0)])
        vec = stats @ self._projection
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            raise AudioError("degenerate audio produced a zero embedding")
        return vec / norm


class PretrainedSpeakerEncoder:
    """Pretrained speaker-verification encoder (ECAPA-TDNN, speechbrain hub).

    Imports lazily so the package works without the heavyweight optional
    dependencies installed; inference runs deterministically in eval mode.
    """

    expected_sample_rate = 16000

    DEFAULT_MODEL_ID = "speechbrain/spkrec-ecapa-voxceleb"

    def __init__(self, dim: int = 192, model_id: str = DEFAULT_MODEL_ID, cache_dir: str | None = None):
        self.dim = dim
        self.model_id = model_id
        try:
            import torch
            from speechbrain.pretrained import EncoderClassifier
        except ImportError as exc:
            raise BackendError(
                "the pretrained backend needs the 'pretrained' extra "
                "(pip install embextract[pretrained])"
            ) from exc
        self._torch = torch
        kwargs = {"savedir": cache_dir} if cache_dir else {}
        try:
            self._model = EncoderClassifier.from_hparams(source=model_id, run_opts={"device": "cpu"}, **kwargs)
        except Exception as exc:
            raise BackendError(f"could not load checkpoint {model_id!r}: {exc}") from exc
        self._model.eval()

    def embed(self, samples: np.ndarray, sample_rate: int) -> np.ndarray:
        if sample_rate != self.expected_sample_rate:
            raise ValueError(f"expected {self.expected_sample_rate} Hz input, got {sample_rate}")
        with self._torch.no_grad():
            batch = self._torch.from_numpy(np.asarray(samples, dtype=np.float32)).unsqueeze(0)
            emb = self._model.encode_batch(batch).squeeze().cpu().numpy().astype(np.float64)
        if emb.ndim != 1:
            emb = emb.reshape(-1)
        return emb


BACKENDS = {
    "spectral": SpectralStatsEncoder,
    "pretrained": PretrainedSpeakerEncoder,
}


def make_backend(name: str, dim: int, model_id: str = "") -> SpectralStatsEncoder | PretrainedSpeakerEncoder:
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {sorted(BACKENDS)}")
    if name == "pretrained":
        return PretrainedSpeakerEncoder(dim=dim, model_id=model_id or PretrainedSpeakerEncoder.DEFAULT_MODEL_ID)
    return SpectralStatsEncoder(dim=dim)
