"""Non-negative sparse coding of spectra against a dictionary.

Both solvers minimise the generalized Kullback-Leibler divergence

    D(y, By x) = sum_p [ y_p * log(y_p / (Bx)_p) - y_p + (Bx)_p ]

over weight vectors ``x >= 0``.  The problem is convex in ``x``, so the two
solvers approach the same optimum and can be used to cross-check each other:

``solve_mu``
    classic multiplicative updates; robust, supports many observation columns
    at once, converges slowly near the optimum.
``solve_asna``
    an active-set Newton method; maintains a small set of non-zero weights,
    takes damped Newton steps on that set, and adds/removes atoms based on the
    gradient sign.  Weights outside the active set are exactly zero, which the
    classification stages exploit.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError

__all__ = ["generalized_kl", "solve_mu", "solve_asna", "code_frames"]

#: floor applied to model spectra before divisions and logarithms
EPS = 1e-12


def generalized_kl(y: np.ndarray, yhat: np.ndarray) -> float:
    """Generalized KL divergence ``sum(y*log(y/yhat) - y + yhat)`` with ``0*log(0) = 0``."""
    y = np.asarray(y, dtype=np.float64)
    yhat = np.maximum(np.asarray(yhat, dtype=np.float64), EPS)
    pos = y > 0
    acc = float(np.sum(yhat) - np.sum(y))
    if np.any(pos):
        yp = y[pos]
        acc += float(np.sum(yp * np.log(yp / yhat[pos])))
    return acc


def _check_inputs(y: np.ndarray, dictionary: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    B = np.asarray(dictionary, dtype=np.float64)
    Y = np.asarray(y, dtype=np.float64)
    if B.ndim != 2:
        raise ValueError("dictionary must be a 2-D array of atom columns")
    single = Y.ndim == 1
    if single:
        Y = Y[:, None]
    if Y.ndim != 2 or Y.shape[0] != B.shape[0]:
        raise ValueError("observations and dictionary have mismatched feature dimensions")
    if np.any(B < 0) or np.any(Y < 0):
        raise ValueError("observations and dictionary must be non-negative")
    return Y, B, single


def solve_mu(
    y: np.ndarray,
    dictionary: np.ndarray,
    n_iter: int = 2000,
    tol: float = 0.0,
    check_every: int = 100,
) -> np.ndarray:
    """Multiplicative-update minimisation of the generalized KL divergence.

    Parameters
    ----------
    y : np.ndarray
        Observation vector ``(P,)`` or matrix of column observations ``(P, N)``.
    dictionary : np.ndarray
        Non-negative atoms as columns, ``(P, M)``.
    n_iter : int
        Maximum number of update sweeps.
    tol : float
        If positive, stop early once the relative decrease of the objective
        (summed over columns, measured every ``check_every`` sweeps) falls
        below this value.  ``tol=0`` always runs the full ``n_iter`` sweeps.

    Returns
    -------
    np.ndarray
        Non-negative weights, ``(M,)`` or ``(M, N)`` matching the input shape.
    """
    Y, B, single = _check_inputs(y, dictionary)
    M = B.shape[1]
    N = Y.shape[1]
    colsum = np.sum(B, axis=0)
    if np.any(colsum <= 0):
        raise ValueError("dictionary contains an all-zero atom")

    X = np.full((M, N), np.maximum(np.mean(Y), EPS) / M, dtype=np.float64)
    live = np.sum(Y, axis=0) > EPS
    X[:, ~live] = 0.0
    if np.any(live):
        Xl = np.ascontiguousarray(X[:, live])
        Yl = np.ascontiguousarray(Y[:, live])
        Bt_scaled = np.ascontiguousarray((B / colsum[None, :]).T)
        Yhat = np.empty_like(Yl)
        ratio = np.empty_like(Yl)
        update = np.empty_like(Xl)
        prev = np.inf
        for it in range(n_iter):
            np.matmul(B, Xl, out=Yhat)
            np.maximum(Yhat, EPS, out=Yhat)
            np.divide(Yl, Yhat, out=ratio)
            np.matmul(Bt_scaled, ratio, out=update)
            Xl *= update
            if tol > 0.0 and (it + 1) % check_every == 0:
                obj = generalized_kl(Yl, B @ Xl)
                if abs(prev - obj) <= tol * (1.0 + abs(obj)):
                    break
                prev = obj
        X[:, live] = Xl
    if not np.all(np.isfinite(X)):
        raise NumericalError("multiplicative updates diverged")
    return X[:, 0] if single else X


def _asna_single(
    y: np.ndarray,
    B: np.ndarray,
    colsum: np.ndarray,
    max_iter: int,
    tol: float,
) -> np.ndarray:
    P, M = B.shape
    x_full = np.zeros(M, dtype=np.float64)
    ysum = float(np.sum(y))
    if ysum <= EPS:
        return x_full

    # Start from the best single-atom approximation: for one atom b at scale s
    # the divergence is minimised at s = sum(y) / sum(b).
    scales = ysum / colsum
    logyhat = np.log(np.maximum(B, EPS)) + np.log(scales)[None, :]
    pos = y > 0
    fit = scales * colsum - ysum + (y[pos] @ (np.log(y[pos])[:, None] - logyhat[pos, :]))
    first = int(np.argmin(fit))
    active = [first]
    x = np.array([scales[first]], dtype=np.float64)

    for _ in range(max_iter):
        # Weights driven to the boundary land within rounding error of zero;
        # snap them out so they do not pin the next feasible step at length 0.
        dead = x <= 1e-13 * (1.0 + (x.max() if x.size else 0.0))
        if np.any(dead):
            if np.all(dead):
                dead[int(np.argmax(x))] = False
            active = [a for a, d in zip(active, dead) if not d]
            x = x[~dead]

        Ba = B[:, active]
        yhat = np.maximum(Ba @ x, EPS)
        r = y / yhat
        grad_all = colsum - B.T @ r
        g = grad_all[active]

        mask = np.ones(M, dtype=bool)
        mask[active] = False
        worst_inactive = float(np.min(grad_all[mask])) if mask.any() else np.inf
        if np.max(np.abs(g)) <= tol and worst_inactive >= -tol:
            break

        if worst_inactive < -tol:
            j = int(np.flatnonzero(mask)[np.argmin(grad_all[mask])])
            active.append(j)
            x = np.append(x, 0.0)
            Ba = B[:, active]
            g = grad_all[active]

        w = y / (yhat * yhat)
        H = Ba.T @ (Ba * w[:, None])
        ridge = 1e-10 * (np.trace(H) / max(len(active), 1) + 1.0)
        H[np.diag_indices_from(H)] += ridge
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            step = -g
        if float(step @ g) >= 0.0:
            step = -g

        # largest feasible step before a weight would cross zero
        def max_feasible(s: np.ndarray) -> float:
            neg = s < 0
            if not np.any(neg):
                return np.inf
            return float(np.min(-x[neg] / s[neg]))

        alpha_max = max_feasible(step)
        if alpha_max == 0.0:
            # a zero weight would be pushed negative; retreat to steepest descent
            step = -g
            alpha_max = max_feasible(step)
            if alpha_max == 0.0:
                break
        alpha = min(1.0, alpha_max)

        f0 = generalized_kl(y, yhat)
        slope = float(g @ step)
        accepted = False
        while alpha > 1e-14:
            x_try = x + alpha * step
            x_try[x_try < 0] = 0.0
            f1 = generalized_kl(y, Ba @ x_try)
            if f1 <= f0 + 1e-4 * alpha * slope or f1 < f0:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        x = x_try

        keep = x > 0.0
        if not np.all(keep):
            if not np.any(keep):
                keep[int(np.argmax(x))] = True
            active = [a for a, k in zip(active, keep) if k]
            x = x[keep]

    if not np.all(np.isfinite(x)):
        raise NumericalError("active-set Newton iteration diverged")
    x_full[active] = x
    return x_full


def solve_asna(
    y: np.ndarray,
    dictionary: np.ndarray,
    max_iter: int = 500,
    tol: float = 1e-9,
) -> np.ndarray:
    """Active-set Newton minimisation of the generalized KL divergence.

    Parameters match :func:`solve_mu`; for matrix input each column is solved
    independently.  Weights of atoms never entering the active set are exactly
    ``0.0``.
    """
    Y, B, single = _check_inputs(y, dictionary)
    colsum = np.sum(B, axis=0)
    if np.any(colsum <= 0):
        raise ValueError("dictionary contains an all-zero atom")
    out = np.empty((B.shape[1], Y.shape[1]), dtype=np.float64)
    for n in range(Y.shape[1]):
        out[:, n] = _asna_single(Y[:, n], B, colsum, max_iter, tol)
    return out[:, 0] if single else out


def code_frames(
    features: np.ndarray,
    dictionary: np.ndarray,
    solver: str = "asna",
    **kwargs,
) -> np.ndarray:
    """Code feature columns against a dictionary with the chosen solver."""
    if solver == "asna":
        return solve_asna(features, dictionary, **kwargs)
    if solver == "mu":
        kwargs.setdefault("tol", 1e-7)
        return solve_mu(features, dictionary, **kwargs)
    raise ValueError(f"unknown solver {solver!r}")
