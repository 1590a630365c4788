"""Short-time spectral analysis and resynthesis.

Signals are analysed with a square-root Hann window at 50% overlap.  Using the
same window for analysis and synthesis makes the analysis-synthesis cascade an
identity for the interior of the signal (the first and last frame's worth of
samples see an incomplete overlap sum), which the separation stage relies on:
masked spectra are resynthesised with the mixture phase and the masked
components add up to the original mixture.

All spectral processing happens in float64 regardless of the input dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["StftConfig", "stft", "istft", "magnitudes", "frame_times", "frame_energies"]


@dataclass(frozen=True)
class StftConfig:
    """Parameters of the short-time transform.

    Attributes
    ----------
    sample_rate : int
        Sampling rate of the audio in Hz.
    n_fft : int
        Window and FFT length in samples.
    hop : int
        Hop between successive frames in samples.  Must divide ``n_fft``
        such that the squared window overlap-adds to a constant; the default
        50% overlap with a square-root Hann window satisfies this.
    """

    sample_rate: int = 8000
    n_fft: int = 256
    hop: int = 128

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1

    def window(self) -> np.ndarray:
        # Periodic Hann; its square overlap-adds to a constant at 50% overlap.
        n = np.arange(self.n_fft)
        hann = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / self.n_fft)
        return np.sqrt(hann)

    def n_frames(self, n_samples: int) -> int:
        if n_samples < self.n_fft:
            return 0
        return 1 + (n_samples - self.n_fft) // self.hop

    def frame_center(self, index: int) -> float:
        """Time in seconds of the centre of frame ``index``."""
        return (index * self.hop + self.n_fft / 2) / self.sample_rate


def stft(signal: np.ndarray, config: StftConfig) -> np.ndarray:
    """Complex spectrogram of shape ``(n_bins, n_frames)``.

    Frames start at multiples of ``config.hop``; no padding is applied, so a
    trailing partial frame is dropped.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a one-dimensional signal")
    n_frames = config.n_frames(x.shape[0])
    if n_frames == 0:
        return np.zeros((config.n_bins, 0), dtype=np.complex128)
    window = config.window()
    idx = np.arange(config.n_fft)[None, :] + config.hop * np.arange(n_frames)[:, None]
    frames = x[idx] * window[None, :]
    return np.fft.rfft(frames, axis=1).T.copy()


def istft(spec: np.ndarray, config: StftConfig, n_samples: int | None = None) -> np.ndarray:
    """Overlap-add resynthesis; inverse of :func:`stft` on the signal interior.

    Parameters
    ----------
    spec : np.ndarray
        Complex spectrogram ``(n_bins, n_frames)``.
    n_samples : int, optional
        Length to trim or zero-pad the output to.  Defaults to the natural
        length ``(n_frames - 1) * hop + n_fft``.
    """
    spec = np.asarray(spec)
    if spec.ndim != 2 or spec.shape[0] != config.n_bins:
        raise ValueError("spectrogram shape does not match the configuration")
    n_frames = spec.shape[1]
    window = config.window()
    natural = (n_frames - 1) * config.hop + config.n_fft if n_frames else 0
    out = np.zeros(natural, dtype=np.float64)
    norm = np.zeros(natural, dtype=np.float64)
    frames = np.fft.irfft(spec.T, n=config.n_fft, axis=1) * window[None, :]
    wsq = window * window
    for i in range(n_frames):
        start = i * config.hop
        out[start:start + config.n_fft] += frames[i]
        norm[start:start + config.n_fft] += wsq
    nonzero = norm > 1e-12
    out[nonzero] /= norm[nonzero]
    if n_samples is not None:
        if n_samples <= natural:
            out = out[:n_samples]
        else:
            out = np.concatenate([out, np.zeros(n_samples - natural)])
    return out


def magnitudes(signal: np.ndarray, config: StftConfig) -> np.ndarray:
    """Magnitude spectrogram ``(n_bins, n_frames)`` used as the feature representation."""
    return np.abs(stft(signal, config))


def frame_times(n_frames: int, config: StftConfig) -> np.ndarray:
    """Centre times in seconds for ``n_frames`` consecutive frames."""
    return (np.arange(n_frames) * config.hop + config.n_fft / 2) / config.sample_rate


def frame_energies(signal: np.ndarray, config: StftConfig) -> np.ndarray:
    """Per-frame signal energy (sum of squares over each windowed frame span)."""
    x = np.asarray(signal, dtype=np.float64)
    n_frames = config.n_frames(x.shape[0])
    if n_frames == 0:
        return np.zeros(0)
    idx = np.arange(config.n_fft)[None, :] + config.hop * np.arange(n_frames)[:, None]
    frames = x[idx]
    return np.sum(frames * frames, axis=1)
