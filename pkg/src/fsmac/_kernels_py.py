"""Pure-numpy implementations of the hot kernels (fallback for ``_kernels``)."""
from __future__ import annotations

import numpy as np

BACKEND = "python"


def bank_offsets(x_size: int, y_size: int, n: int) -> np.ndarray:
    sizes = [x_size**i * y_size**i * x_size for i in range(n)]
    return np.concatenate([[0], np.cumsum(sizes)]).astype(np.intp)


def _plogp_sum(p: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -v.sum(axis=axes)


def di_terms(kernel, s0w, n, bank1, bank2, idx1, idx2, per_state):
    """Per-step directed-information terms for a batch of policy pairs.

    Returns ``(B, S_out, 3, n)``: rows are I(X1->Y||X2), I(X2->Y||X1) and
    I((X1,X2)->Y) per step, conditioned on each initial state when
    ``per_state`` (S_out = |S|) or with s0 drawn from ``s0w`` (S_out = 1).
    """
    kernel = np.asarray(kernel, dtype=float)
    S, X1, X2, Y, _ = kernel.shape
    s0w = np.asarray(s0w, dtype=float)
    B = len(idx1)
    off1 = bank_offsets(X1, Y, n)
    off2 = bank_offsets(X2, Y, n)
    l1 = np.asarray(bank1)[np.asarray(idx1)]
    l2 = np.asarray(bank2)[np.asarray(idx2)]
    a = np.zeros((B, S, 1, 1, 1, S))
    a[:, np.arange(S), 0, 0, 0, np.arange(S)] = s0w
    s_out = S if per_state else 1
    out = np.zeros((B, s_out, 3, n))
    if per_state:
        norm = np.where(s0w > 0, s0w, 1.0)[None, :, None, None, None, None]
    for i in range(n):
        _, _, n1, n2, ny, _ = a.shape
        t1 = l1[:, off1[i]:off1[i + 1]].reshape(B, n1, ny, X1)
        t2 = l2[:, off2[i]:off2[i + 1]].reshape(B, n2, ny, X2)
        a = np.einsum("nzpqrs,npra,nqrb,sabyt->nzpaqbryt", a, t1, t2, kernel, optimize=True)
        a = a.reshape(B, S, n1 * X1, n2 * X2, ny * Y, S)
        p = a.sum(axis=-1).reshape(B, S, n1 * X1, n2 * X2, ny, Y)
        if per_state:
            p = p / norm
        else:
            p = p.sum(axis=1, keepdims=True)
        p_noy = p.sum(axis=-1)
        p_2 = p.sum(axis=2)
        p_1 = p.sum(axis=3)
        p_y = p_2.sum(axis=2)
        h_full = _plogp_sum(p, (2, 3, 4, 5))
        h_full_noy = _plogp_sum(p_noy, (2, 3, 4))
        h_all = h_full - h_full_noy
        h2 = _plogp_sum(p_2, (2, 3, 4)) - _plogp_sum(p_2.sum(axis=-1), (2, 3))
        h1 = _plogp_sum(p_1, (2, 3, 4)) - _plogp_sum(p_1.sum(axis=-1), (2, 3))
        hy = _plogp_sum(p_y, (2, 3)) - _plogp_sum(p_y.sum(axis=-1), (2,))
        out[:, :, 0, i] = h2 - h_all
        out[:, :, 1, i] = h1 - h_all
        out[:, :, 2, i] = hy - h_all
    if per_state:
        out[:, s0w <= 0] = np.nan
    return out


def pair_likelihoods(kernel, s0w, xs1, xs2, y):
    """Matrix of ``P(y^n || x1^n(m1), x2^n(m2))`` over all candidate pairs."""
    kernel = np.asarray(kernel, dtype=float)
    xs1 = np.asarray(xs1, dtype=np.intp)
    xs2 = np.asarray(xs2, dtype=np.intp)
    m1, m2 = len(xs1), len(xs2)
    S = kernel.shape[0]
    alpha = np.broadcast_to(np.asarray(s0w, dtype=float), (m1, m2, S))
    for i, yi in enumerate(np.asarray(y, dtype=np.intp)):
        k = kernel[:, xs1[:, i][:, None], xs2[:, i][None, :], yi, :]  # (S, m1, m2, S)
        alpha = np.einsum("abs,sabt->abt", alpha, k)
    return alpha.sum(axis=-1)


def ml_decode(kernel, s0w, xs1, xs2, y, rtol=1e-12):
    """Lexicographically first pair whose likelihood is within ``rtol`` of the maximum."""
    lik = pair_likelihoods(kernel, s0w, xs1, xs2, y)
    best = float(lik.max())
    if best <= 0.0:
        return 0, 0, 0.0
    flat = int(np.flatnonzero(lik.ravel() >= best * (1.0 - rtol))[0])
    m1, m2 = divmod(flat, lik.shape[1])
    return m1, m2, float(lik[m1, m2])
