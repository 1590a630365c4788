"""Learning per-source spectral dictionaries from training feature frames.

A dictionary is a matrix of unit-L2-norm non-negative columns ("atoms"), one
dictionary per source (a speaker or a noise type).  Five learning methods are
provided:

``random``
    atoms are randomly selected training frames;
``kmeans``
    atoms are k-means centroids of the training frames;
``kmedoid``
    atoms are k-medoid frames under cosine distance (medoids are actual
    frames, chosen by Voronoi iteration);
``ksvd``
    alternating sparse coding and per-atom rank-one updates, with all
    quantities projected back onto the non-negative orthant;
``cosine_threshold`` (alias ``tdcs``)
    greedy frame selection controlled by two cosine-similarity thresholds: a
    candidate frame is accepted only if its similarity to every
    already-accepted atom of the same dictionary is at most ``tw`` (within)
    and its similarity to every atom of previously learned dictionaries is at
    most ``tb`` (between).  If the thresholds reject too many candidates to
    fill the requested atom budget, the least-correlated rejected frames are
    appended and flagged, so structural checks can exclude them.

All methods are deterministic given the ``rng`` argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.vq import kmeans2

__all__ = [
    "METHODS",
    "LearnedDictionary",
    "learn_dictionary",
    "normalize_atoms",
    "cosine_similarities",
]

METHODS = ("random", "kmeans", "kmedoid", "ksvd", "tdcs")


@dataclass
class LearnedDictionary:
    """Atoms plus the bookkeeping needed for structural checks.

    Attributes
    ----------
    atoms : np.ndarray
        Unit-norm non-negative columns, ``(P, K)``.
    method : str
        Learning method name.
    appended : np.ndarray
        Boolean mask ``(K,)``; True marks atoms appended past the
        threshold-accepted set (only the threshold method sets these).
    """

    atoms: np.ndarray
    method: str
    appended: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.appended is None:
            self.appended = np.zeros(self.atoms.shape[1], dtype=bool)


def normalize_atoms(columns: np.ndarray) -> np.ndarray:
    """Return columns scaled to unit L2 norm; all-zero columns are dropped."""
    A = np.asarray(columns, dtype=np.float64)
    norms = np.linalg.norm(A, axis=0)
    keep = norms > 1e-12
    return A[:, keep] / norms[keep][None, :]


def cosine_similarities(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities between unit-norm columns of ``a`` and ``b``."""
    return a.T @ b


def _select_random(frames: np.ndarray, n_atoms: int, rng: np.random.Generator) -> np.ndarray:
    n = frames.shape[1]
    k = min(n_atoms, n)
    idx = rng.choice(n, size=k, replace=False)
    return frames[:, np.sort(idx)]


def _learn_kmeans(frames: np.ndarray, n_atoms: int, rng: np.random.Generator) -> np.ndarray:
    n = frames.shape[1]
    k = min(n_atoms, n)
    seed = int(rng.integers(0, 2**31 - 1))
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # empty clusters are re-seated below
        centroids, labels = kmeans2(frames.T, k, minit="++", seed=seed)
    # Re-seat empty clusters on the frames farthest from their centroids.
    counts = np.bincount(labels, minlength=k)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        residual = np.linalg.norm(frames.T - centroids[labels], axis=1)
        far = np.argsort(residual)[::-1]
        for slot, frame_idx in zip(empty, far):
            centroids[slot] = frames[:, frame_idx]
    return np.maximum(centroids.T, 0.0)


def _learn_kmedoid(
    frames: np.ndarray, n_atoms: int, rng: np.random.Generator, max_iter: int = 60
) -> np.ndarray:
    unit = normalize_atoms(frames)
    n = unit.shape[1]
    k = min(n_atoms, n)
    sim = unit.T @ unit
    medoids = np.sort(rng.choice(n, size=k, replace=False))
    for _ in range(max_iter):
        assign = np.argmax(sim[:, medoids], axis=1)
        new_medoids = medoids.copy()
        for c in range(k):
            members = np.flatnonzero(assign == c)
            if members.size == 0:
                continue
            # medoid = member maximising total similarity to its cluster
            within = sim[np.ix_(members, members)].sum(axis=0)
            new_medoids[c] = members[int(np.argmax(within))]
        new_medoids = np.sort(new_medoids)
        if np.array_equal(new_medoids, medoids):
            break
        medoids = new_medoids
    return frames[:, medoids]


def _learn_ksvd(
    frames: np.ndarray,
    n_atoms: int,
    rng: np.random.Generator,
    n_iter: int = 10,
    sparsity: int = 5,
) -> np.ndarray:
    from .solvers import solve_mu

    atoms = normalize_atoms(_select_random(frames, n_atoms, rng))
    k = atoms.shape[1]
    for _ in range(n_iter):
        X = solve_mu(frames, atoms, n_iter=60, tol=1e-6)
        # hard sparsification: keep the largest weights per frame
        if sparsity < k:
            order = np.argsort(X, axis=0)
            X[order[: k - sparsity, :], np.arange(X.shape[1])[None, :]] = 0.0
        approx = atoms @ X
        for j in range(k):
            users = np.flatnonzero(X[j, :] > 0)
            if users.size == 0:
                worst = int(np.argmax(np.sum((frames - approx) ** 2, axis=0)))
                atom = frames[:, worst].copy()
            else:
                residual = frames[:, users] - approx[:, users] + np.outer(atoms[:, j], X[j, users])
                atom = residual @ X[j, users]
                np.maximum(atom, 0.0, out=atom)
            norm = np.linalg.norm(atom)
            if norm <= 1e-12:
                atom = frames[:, int(rng.integers(frames.shape[1]))].copy()
                norm = np.linalg.norm(atom)
            atom /= norm
            if users.size:
                approx[:, users] -= np.outer(atoms[:, j], X[j, users])
                weights = np.maximum(atom @ residual, 0.0)
                X[j, users] = weights
                approx[:, users] += np.outer(atom, weights)
            atoms[:, j] = atom
    return atoms


def _learn_threshold(
    frames: np.ndarray,
    n_atoms: int,
    tw: float,
    tb: float,
    prior_atoms: np.ndarray | None,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    unit = normalize_atoms(frames)
    n = unit.shape[1]
    order = rng.permutation(n)
    have_prior = prior_atoms is not None and prior_atoms.size > 0
    accepted: list[int] = []
    for idx in order:
        c = unit[:, idx]
        if accepted and float(np.max(c @ unit[:, accepted])) > tw:
            continue
        if have_prior and float(np.max(c @ prior_atoms)) > tb:
            continue
        accepted.append(int(idx))
        if len(accepted) == n_atoms:
            break
    n_accepted = len(accepted)
    chosen = list(accepted)
    if n_accepted < n_atoms:
        # fill the remaining budget with the least-correlated rejected frames
        rest = np.setdiff1d(order, np.array(accepted, dtype=int), assume_unique=False)
        if rest.size:
            ref = unit[:, accepted] if accepted else unit[:, rest[:1]]
            score = np.max(unit[:, rest].T @ ref, axis=1)
            if have_prior:
                score = np.maximum(score, np.max(unit[:, rest].T @ prior_atoms, axis=1))
            for idx in rest[np.argsort(score, kind="stable")]:
                chosen.append(int(idx))
                if len(chosen) == n_atoms:
                    break
    atoms = unit[:, chosen]
    appended = np.zeros(len(chosen), dtype=bool)
    appended[n_accepted:] = True
    return atoms, appended


def learn_dictionary(
    features: np.ndarray,
    method: str,
    n_atoms: int,
    *,
    tw: float = 0.8,
    tb: float = 0.8,
    prior_atoms: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> LearnedDictionary:
    """Learn one source dictionary from feature frames.

    Parameters
    ----------
    features : np.ndarray
        Non-negative feature frames as columns, ``(P, N)``.
    method : str
        One of :data:`METHODS`.
    n_atoms : int
        Atom budget (methods may return fewer if the data cannot support it).
    tw, tb : float
        Within/between cosine-similarity thresholds (threshold method only).
    prior_atoms : np.ndarray, optional
        Atoms of previously learned dictionaries, used by the threshold
        method's between-source test.
    rng : np.random.Generator, optional
        Source of randomness; defaults to a fixed seed for reproducibility.
    """
    if method not in METHODS:
        raise ValueError(f"unknown dictionary method {method!r}; choose from {METHODS}")
    F = np.asarray(features, dtype=np.float64)
    if F.ndim != 2:
        raise ValueError("features must be a 2-D array of frame columns")
    if np.any(F < 0):
        raise ValueError("features must be non-negative")
    live = np.linalg.norm(F, axis=0) > 1e-12
    F = F[:, live]
    if F.shape[1] == 0:
        raise ValueError("no non-silent frames to learn from")
    if n_atoms < 1:
        raise ValueError("n_atoms must be positive")
    rng = rng if rng is not None else np.random.default_rng(0)

    appended = None
    if method == "random":
        atoms = _select_random(F, n_atoms, rng)
    elif method == "kmeans":
        atoms = _learn_kmeans(F, n_atoms, rng)
    elif method == "kmedoid":
        atoms = _learn_kmedoid(F, n_atoms, rng)
    elif method == "ksvd":
        atoms = _learn_ksvd(F, n_atoms, rng)
    else:  # tdcs
        atoms, appended = _learn_threshold(F, n_atoms, tw, tb, prior_atoms, rng)
    atoms = normalize_atoms(atoms)
    if appended is not None and appended.shape[0] != atoms.shape[1]:
        appended = appended[: atoms.shape[1]]
    return LearnedDictionary(atoms=atoms, method=method, appended=appended)
