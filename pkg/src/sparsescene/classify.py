"""Block-sparse classification: which noise types, where they switch, who speaks.

All decisions share one mechanism: frames are coded against a concatenation
of per-source dictionaries and each source is scored by the sum of its atoms'
weights (its "block" of the weight vector).  Noise typing codes every frame
against the speaker and noise dictionaries jointly — speech energy is
absorbed by the speaker blocks, so the per-frame winner among the noise
blocks stays reliable even where speech is present.  The switch between the
two mixture halves is the change point that makes the per-frame noise
decisions before and after it maximally consistent; speaker identity is
ranked by block scores accumulated over speech frames.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bank import DictionaryBank
from .features import StftConfig, frame_times
from .solvers import code_frames

__all__ = ["NoiseDecision", "classify_noise", "rank_speakers", "block_score_matrix"]


def block_score_matrix(
    weights: np.ndarray, groups: list[tuple[str, str, slice]]
) -> np.ndarray:
    """Per-group weight sums, shape ``(n_groups, n_frames)``."""
    return np.stack([np.sum(weights[g[2], :], axis=0) for g in groups], axis=0)


@dataclass
class NoiseDecision:
    """Outcome of noise typing over a two-half mixture."""

    noise_first: str
    noise_second: str
    transition_s: float
    frame_labels: list[str]
    frame_times: np.ndarray


def _best_changepoint(votes: np.ndarray, n_labels: int) -> tuple[int, int, int]:
    """(first_idx, second_idx, split) maximising prefix/suffix vote agreement."""
    n = votes.size
    counts = np.zeros((n_labels, n + 1), dtype=np.int64)
    for g in range(n_labels):
        counts[g, 1:] = np.cumsum(votes == g)
    total = counts[:, -1]
    best = (-1, 0, min(1, n_labels - 1), 0)
    for split in range(n + 1):
        left = counts[:, split]
        right = total - left
        for a in range(n_labels):
            for b in range(n_labels):
                if a == b:
                    continue
                s = int(left[a] + right[b])
                if s > best[0]:
                    best = (s, a, b, split)
    return best[1], best[2], best[3]


def classify_noise(
    mag: np.ndarray,
    bank: DictionaryBank,
    config: StftConfig,
    *,
    frame_mask: np.ndarray | None = None,
    stride: int = 1,
    with_speaker_blocks: bool = True,
    solver: str = "mu",
    **solver_kwargs,
) -> NoiseDecision:
    """Identify the noise type of each half and locate the switch point.

    Parameters
    ----------
    mag : np.ndarray
        Magnitude spectrogram of the whole mixture, ``(P, N)``.
    frame_mask : np.ndarray, optional
        Boolean mask of frames to use; by default every frame is used (the
        speaker blocks soak up the speech energy, so no mask is needed).
    stride : int
        Keep every ``stride``-th considered frame; a cheap speed knob that
        coarsens the switch-point resolution accordingly.
    with_speaker_blocks : bool
        Include the bank's speaker dictionaries in the coding dictionary.
    """
    n_frames = mag.shape[1]
    considered = (
        np.flatnonzero(frame_mask) if frame_mask is not None else np.arange(n_frames)
    )
    if considered.size < 2:
        considered = np.arange(n_frames)
    if stride > 1:
        considered = considered[::stride]
    labels = list(bank.noise_labels)
    if not labels:
        raise ValueError("bank holds no noise dictionaries")
    speaker_labels = list(bank.speaker_labels) if with_speaker_blocks else []
    D, groups = bank.concatenated(speaker_labels=speaker_labels, noise_labels=labels)
    noise_groups = [g for g in groups if g[0] == "noise"]
    W = code_frames(mag[:, considered], D, solver=solver, **solver_kwargs)
    scores = block_score_matrix(W, noise_groups)
    frame_label_idx = np.argmax(scores, axis=0)

    a_idx, b_idx, split = _best_changepoint(frame_label_idx, len(labels))

    times = frame_times(n_frames, config)[considered]
    if split <= 0:
        transition = float(times[0])
    elif split >= considered.size:
        transition = float(times[-1])
    else:
        transition = float(0.5 * (times[split - 1] + times[split]))

    return NoiseDecision(
        noise_first=labels[a_idx],
        noise_second=labels[b_idx],
        transition_s=transition,
        frame_labels=[labels[i] for i in frame_label_idx],
        frame_times=times,
    )


def rank_speakers(
    mag: np.ndarray,
    bank: DictionaryBank,
    config: StftConfig,
    *,
    speech_mask: np.ndarray,
    noise_context: tuple[np.ndarray | None, np.ndarray | None] = (None, None),
    solver: str = "mu",
    **solver_kwargs,
) -> list[str]:
    """Rank speaker labels by accumulated block score over speech frames.

    ``noise_context`` optionally supplies per-half noise atoms that are
    appended to the dictionary so noise energy in the speech frames has
    somewhere to go other than the speaker blocks.
    """
    speakers = list(bank.speaker_labels)
    if not speakers:
        raise ValueError("bank holds no speaker dictionaries")
    n_frames = mag.shape[1]
    half_edge = n_frames // 2
    frames = np.flatnonzero(speech_mask)
    if frames.size == 0:
        energy = np.sum(mag * mag, axis=0)
        take = min(20, n_frames)
        frames = np.sort(np.argsort(energy)[::-1][:take])

    totals = np.zeros(len(speakers))
    D_spk, groups = bank.concatenated(speaker_labels=speakers)
    for half in (0, 1):
        in_half = frames[(frames < half_edge) if half == 0 else (frames >= half_edge)]
        if in_half.size == 0:
            continue
        context = noise_context[half]
        D = D_spk if context is None or context.size == 0 else np.concatenate(
            [D_spk, context], axis=1
        )
        W = code_frames(mag[:, in_half], D, solver=solver, **solver_kwargs)
        scores = block_score_matrix(W[: D_spk.shape[1], :], groups)
        totals += np.sum(scores, axis=1)
    order = np.argsort(-totals, kind="stable")
    return [speakers[i] for i in order]
