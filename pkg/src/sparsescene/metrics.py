"""Signal-level quality metrics for separation and mixing."""

from __future__ import annotations

import numpy as np

__all__ = ["snr_db", "si_sdr_db", "spans_to_sample_mask", "restrict_to_spans"]


def snr_db(signal: np.ndarray, noise: np.ndarray) -> float:
    """Energy ratio ``10*log10(sum(s^2)/sum(n^2))`` in dB."""
    ps = float(np.sum(np.square(np.asarray(signal, dtype=np.float64))))
    pn = float(np.sum(np.square(np.asarray(noise, dtype=np.float64))))
    if ps <= 0.0:
        return -np.inf
    if pn <= 0.0:
        return np.inf
    return 10.0 * np.log10(ps / pn)


def si_sdr_db(reference: np.ndarray, estimate: np.ndarray) -> float:
    """Scale-invariant signal-to-distortion ratio in dB.

    The estimate is orthogonally projected onto the reference; the ratio of
    projected energy to residual energy is returned in dB, so a perfect
    estimate up to scaling scores +inf and an uncorrelated one -inf.
    """
    ref = np.asarray(reference, dtype=np.float64)
    est = np.asarray(estimate, dtype=np.float64)
    if ref.shape != est.shape:
        raise ValueError("reference and estimate must have the same length")
    denom = float(ref @ ref)
    if denom <= 0.0:
        raise ValueError("reference signal has no energy")
    alpha = float(est @ ref) / denom
    target = alpha * ref
    residual = est - target
    pt = float(target @ target)
    pr = float(residual @ residual)
    if pr <= 0.0:
        return np.inf
    if pt <= 0.0:
        return -np.inf
    return 10.0 * np.log10(pt / pr)


def spans_to_sample_mask(
    spans: list[tuple[float, float]], n_samples: int, sample_rate: int
) -> np.ndarray:
    """Boolean sample mask covering the union of the (start_s, end_s) spans."""
    mask = np.zeros(n_samples, dtype=bool)
    for t0, t1 in spans:
        a = max(0, int(round(t0 * sample_rate)))
        b = min(n_samples, int(round(t1 * sample_rate)))
        if b > a:
            mask[a:b] = True
    return mask


def restrict_to_spans(
    x: np.ndarray, spans: list[tuple[float, float]], sample_rate: int
) -> np.ndarray:
    """Samples of ``x`` inside the union of spans (concatenated)."""
    mask = spans_to_sample_mask(spans, len(x), sample_rate)
    return np.asarray(x)[mask]
