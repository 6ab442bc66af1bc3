"""Maximization over input-dependent initial-state laws ``P(s0 | x1^n, x2^n)``.

For fixed feedback-free inputs each rate face of the outer region is

    F(P) = H(S0) + sum_i [H(S0, A_i, Y^i) - H(S0, A_i, Y^{i-1})]
                 - sum_i [H(S0, X^i, Y^i) - H(S0, X^i, Y^{i-1})]

with ``A_i = X2^i`` (face 0), ``X1^i`` (face 1) or nothing (face 2). All
problems in a batch are solved together by exponentiated-gradient ascent on the
rows of ``P`` with a per-problem backtracking step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._info import xlog2x

FACES = ("x1", "x2", "sum")


@dataclass(frozen=True)
class LawShape:
    n: int
    x1: int
    x2: int
    s: int
    y: int

    @property
    def n1(self) -> int:
        return self.x1**self.n

    @property
    def n2(self) -> int:
        return self.x2**self.n

    @property
    def ny(self) -> int:
        return self.y**self.n

    def view(self, j: np.ndarray, i: int) -> np.ndarray:
        """``[b, x1 head, x1 tail, x2 head, x2 tail, s, y head, y_i, y tail]`` view for step ``i``."""
        n, X1, X2, S, Y = self.n, self.x1, self.x2, self.s, self.y
        return j.reshape(j.shape[0], X1**i, X1 ** (n - i), X2**i, X2 ** (n - i), S,
                         Y ** (i - 1), Y, Y ** (n - i))


def _neg_entropy_rows(m: np.ndarray) -> np.ndarray:
    return xlog2x(m).reshape(m.shape[0], -1).sum(axis=1)


def _log2_safe(m: np.ndarray) -> np.ndarray:
    return np.log2(np.maximum(m, 1e-300))


def _step_marginals(v: np.ndarray, face: int):
    full = v.sum(axis=(2, 4, 8), keepdims=True)
    if face == 0:
        part = full.sum(axis=1, keepdims=True)
    elif face == 1:
        part = full.sum(axis=3, keepdims=True)
    else:
        part = full.sum(axis=(1, 3), keepdims=True)
    return full, full.sum(axis=7, keepdims=True), part, part.sum(axis=7, keepdims=True)


def face_value(j: np.ndarray, shape: LawShape, face: int) -> np.ndarray:
    """Objective ``F`` (bits, not divided by n) for each joint in the batch.

    ``j`` has shape ``(B, N1, N2, S, NY)``.
    """
    val = -_neg_entropy_rows(j.sum(axis=(1, 2, 4)))
    for i in range(1, shape.n + 1):
        full, full_p, part, part_p = _step_marginals(shape.view(j, i), face)
        val += (-_neg_entropy_rows(part) + _neg_entropy_rows(part_p)
                + _neg_entropy_rows(full) - _neg_entropy_rows(full_p))
    return val


def face_gradient(j: np.ndarray, shape: LawShape, face: int) -> np.ndarray:
    """``dF/dJ`` up to a constant, same shape as ``j``."""
    g = np.zeros_like(j)
    g -= _log2_safe(j.sum(axis=(1, 2, 4), keepdims=True))
    for i in range(1, shape.n + 1):
        gv = shape.view(g, i)
        full, full_p, part, part_p = _step_marginals(shape.view(j, i), face)
        gv += _log2_safe(full) - _log2_safe(full_p) - _log2_safe(part) + _log2_safe(part_p)
    return g


def face_values_all(j: np.ndarray, shape: LawShape) -> np.ndarray:
    return np.stack([face_value(j, shape, f) for f in range(3)], axis=1)


@dataclass
class StateLawSolution:
    value: np.ndarray  # (B,)
    law: np.ndarray  # (B, N1, N2, S)
    gap: np.ndarray  # (B,) Frank-Wolfe gap at the returned law
    iterations: int


def _joint(base: np.ndarray, law: np.ndarray) -> np.ndarray:
    return base * law[..., None]


def maximize_state_law(base: np.ndarray, w: np.ndarray, qx: np.ndarray, init: np.ndarray,
                       shape: LawShape, face: int, max_iter: int = 200,
                       tol: float = 1e-11, stall_tol: float = 1e-12,
                       stall_window: int = 5) -> StateLawSolution:
    """Ascend ``F`` over ``P(s0|x)`` for a batch of input laws.

    ``base[b, x1, x2, s, y] = Q1(x1) Q2(x2) W(y | x, s)``; ``w`` is ``W`` laid out
    as ``(N1, N2, S, NY)``; ``qx`` is ``Q1 Q2`` as ``(B, N1, N2)``; ``init`` holds
    starting laws ``(B, N1, N2, S)``. A problem stops when its Frank-Wolfe gap
    falls below ``tol`` or its objective gains less than ``stall_tol`` over
    ``stall_window`` iterations; near the simplex boundary the entropy terms are
    steep and the gap alone overstates the remaining error.
    """
    law = np.array(init, dtype=float)
    live_rows = (qx > 0)[..., None]
    eta = np.ones(law.shape[0])
    val = face_value(_joint(base, law), shape, face)
    gap = np.full(law.shape[0], np.inf)
    history = [val.copy()]
    it = 0
    for it in range(1, max_iter + 1):
        g = face_gradient(_joint(base, law), shape, face)
        gt = np.einsum("abcsy,bcsy->abcs", g, w)  # per-row gradient of F / Q(x)
        gt = np.where(live_rows, gt, 0.0)
        row_best = gt.max(axis=-1)
        gap = np.einsum("abc,abc->a", qx, row_best - (law * gt).sum(axis=-1))
        active = gap > tol
        if len(history) > stall_window:
            active &= (val - history[-stall_window - 1]) > stall_tol
        if not active.any():
            break
        accepted = np.zeros(law.shape[0], dtype=bool)
        trial_eta = eta.copy()
        for _ in range(40):
            todo = active & ~accepted
            if not todo.any():
                break
            e = trial_eta[:, None, None, None]
            cand = law * np.exp2(np.clip(e * (gt - row_best[..., None]), -1000.0, 0.0))
            cand /= cand.sum(axis=-1, keepdims=True)
            cand = np.where(live_rows, cand, law)
            cv = face_value(_joint(base, cand), shape, face)
            ok = todo & (cv >= val - 1e-15)
            law[ok] = cand[ok]
            val[ok] = cv[ok]
            accepted |= ok
            trial_eta = np.where(todo & ~ok, trial_eta * 0.5, trial_eta)
            if np.all(trial_eta[todo & ~ok] < 1e-12):
                break
        eta = np.where(accepted, np.minimum(trial_eta * 2.0, 1e6), trial_eta)
        history.append(val.copy())
        if not accepted[active].any():
            break
    return StateLawSolution(val, law, gap, it)


def start_laws(shape: LawShape, batch: int, prior: np.ndarray, deterministic_budget: int = 4096,
               mix: float = 0.98) -> list[np.ndarray]:
    """Starting points: uniform, the channel prior, near-constant maps and (when few) all near-deterministic maps."""
    S, N1, N2 = shape.s, shape.n1, shape.n2
    starts = [np.full((batch, N1, N2, S), 1.0 / S)]
    if S == 1:
        return starts
    pr = np.asarray(prior, dtype=float)
    if np.all(pr > 0) and not np.allclose(pr, 1.0 / S):
        starts.append(np.broadcast_to(pr, (batch, N1, N2, S)).copy())
    eye = np.eye(S)
    soft = mix * eye + (1.0 - mix) / S
    for s in range(S):
        starts.append(np.broadcast_to(soft[s], (batch, N1, N2, S)).copy())
    if S ** (N1 * N2) <= deterministic_budget:
        for code in range(S ** (N1 * N2)):
            digits = np.array([(code // S**k) % S for k in range(N1 * N2)]).reshape(N1, N2)
            if np.all(digits == digits.flat[0]):
                continue
            starts.append(np.broadcast_to(soft[digits], (batch, N1, N2, S)).copy())
    return starts
