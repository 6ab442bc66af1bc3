"""The additive mod-q MAC ``y = x1 + x2 + v (mod q)``.

Its capacity region is the triangle with sum rate ``log2 q - H(V)`` whether or
not the encoders see feedback. This module evaluates that formula, checks the
feedback claim by exhaustive lattice enumeration at small block lengths, tests
the zero-capacity equivalence, and compares a source rate with the channel
budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from ._info import entropy
from .bounds import _Evaluator
from .causal import BudgetExceeded
from .channel import (ChannelSpec, IidNoise, MarkovNoise, _check_noise, build_additive,
                      stationary_distribution, is_irreducible)
from .policies import lattice_count, lattice_policies, policy_bank
from .regions import RatePentagon, RateRegion

ZERO_TOL = 1e-9


class HiddenNoiseError(ValueError):
    """Raised when a noise process has no closed-form entropy rate."""


@dataclass(frozen=True)
class NoiseEntropyRate:
    value: float
    method: str
    noise: dict

    def to_json(self) -> dict:
        return asdict(self)


def _chain(noise: MarkovNoise) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = np.asarray(noise.transition, dtype=float)
    e = np.asarray(noise.emission, dtype=float)
    if not is_irreducible(t):
        raise ValueError("noise chain is reducible; the entropy rate depends on the start state")
    return t, e, stationary_distribution(t)


def _state_observable(e: np.ndarray) -> bool:
    """Every noise symbol is emitted by at most one state."""
    return bool(np.all((e > 0).sum(axis=0) <= 1))


def entropy_rate(noise) -> NoiseEntropyRate:
    """Exact entropy rate in bits per symbol.

    Markov noise is exact when its symbols reveal the emitting state, when the
    state sequence is i.i.d. (identical transition rows), or when every state
    emits the same pmf. Other hidden-chain noise raises :class:`HiddenNoiseError`;
    use :func:`entropy_rate_bounds`.
    """
    if isinstance(noise, IidNoise):
        return NoiseEntropyRate(entropy(np.asarray(noise.pmf)), "iid_exact", noise.to_json())
    if not isinstance(noise, MarkovNoise):
        raise TypeError(f"unsupported noise model {type(noise).__name__}")
    t, e, pi = _chain(noise)
    if np.allclose(e, e[:1], atol=1e-15):
        return NoiseEntropyRate(entropy(e[0]), "iid_exact", noise.to_json())
    if np.allclose(t, t[:1], atol=1e-15):
        return NoiseEntropyRate(entropy(t[0] @ e), "iid_exact", noise.to_json())
    if _state_observable(e):
        rate = sum(pi[s] * (entropy(t[s]) + entropy(e[s])) for s in range(len(pi)))
        return NoiseEntropyRate(float(rate), "markov_exact", noise.to_json())
    raise HiddenNoiseError("noise symbols do not determine the hidden state, so the entropy rate has "
                           "no closed form; use entropy_rate_bounds(noise, k) for an upper/lower pair")


def _block_pmf(noise, n: int, per_state: bool = False) -> np.ndarray:
    """pmf of ``V^n`` under the stationary start (or per start state when ``per_state``)."""
    if isinstance(noise, IidNoise):
        p = np.ones(1)
        for _ in range(n):
            p = np.outer(p, noise.pmf).ravel()
        return p[None] if per_state else p
    t, e, pi = _chain(noise)
    k, q = e.shape
    alpha = np.eye(k)[:, None, :] if per_state else pi[None, None, :]  # [start][v^i][state]
    for _ in range(n):
        b, m, _ = alpha.shape
        alpha = np.einsum("bms,sv,st->bmvt", alpha, e, t).reshape(b, m * q, k)
    p = alpha.sum(axis=-1)
    return p if per_state else p[0]


def _q_of(noise) -> int:
    return len(noise.pmf) if isinstance(noise, IidNoise) else len(noise.emission[0])


def noise_block_entropy(noise, n: int) -> float:
    """``H(V^n)`` in bits for the stationary noise process."""
    _check_noise(_q_of(noise), noise)
    return entropy(_block_pmf(noise, n)) if n > 0 else 0.0


def entropy_rate_bounds(noise, k: int = 8) -> tuple[float, float]:
    """``(lower, upper)`` bracket of the entropy rate from order-``k`` conditional entropies.

    Upper: ``H(V_k | V^{k-1})``. Lower: the same conditioned also on the initial
    hidden state.
    """
    if k < 1:
        raise ValueError("order k must be at least 1")
    upper = noise_block_entropy(noise, k) - noise_block_entropy(noise, k - 1)
    if isinstance(noise, IidNoise):
        return upper, upper
    _, _, pi = _chain(noise)
    def cond(m):
        return sum(pi[s] * entropy(row) for s, row in enumerate(_block_pmf(noise, m, True))) if m else 0.0
    lower = cond(k) - cond(k - 1)
    return float(lower), float(upper)


def capacity_sum_rate(q: int, noise) -> float:
    """``log2 q - H(V)``; valid for any number of senders."""
    _check_noise(q, noise)
    return math.log2(q) - entropy_rate(noise).value


def additive_region(q: int, noise) -> RateRegion:
    """Capacity region as the pentagon ``(C, C, C)``, i.e. the sum-rate triangle."""
    c = max(0.0, capacity_sum_rate(q, noise))
    region = RatePentagon(c, c, c).to_region()
    return RateRegion(region.vertices, {"q": q, "noise": noise.to_json(), "sum_rate": c})


def _face_maxima(channel: ChannelSpec, n: int, budget: int, grid: int | None = None):
    g = grid or channel.x1_size
    c1 = lattice_count(n, channel.x1_size, channel.z_size(1), g)
    c2 = lattice_count(n, channel.x2_size, channel.z_size(2), grid or channel.x2_size)
    if c1 * c2 > budget:
        raise BudgetExceeded("lattice policy pairs", c1 * c2, budget)
    pol1 = lattice_policies(n, channel.x1_size, channel.z_size(1), g, 1)
    pol2 = lattice_policies(n, channel.x2_size, channel.z_size(2), grid or channel.x2_size, 2)
    ev = _Evaluator(channel, n, "multi_letter")
    b1, b2 = policy_bank(pol1, channel, 1), policy_bank(pol2, channel, 2)
    idx = np.arange(c1 * c2)
    faces = np.concatenate([ev.pentagons(b1, b2, idx[lo:lo + 4096] // c2, idx[lo:lo + 4096] % c2)
                            for lo in range(0, len(idx), 4096)]) * n
    return faces, pol1, pol2


def _uniform_index(policies) -> int:
    for k, p in enumerate(policies):
        if all(np.allclose(t, 1.0 / p.x_size) for t in p.tables):
            return k
    raise ValueError("uniform policy is not on the lattice; use a grid that is a multiple of |X|")


@dataclass
class FeedbackInvarianceReport:
    q: int
    n: int
    noise: dict
    pairs: int
    bound: float  # n log2 q - H(V^n)
    max_faces: list[float]  # bits over n uses, perfect feedback
    max_faces_no_feedback: list[float]
    uniform_faces: list[float]
    within_bound: bool
    uniform_attains: bool
    feedback_gain: float

    @property
    def ok(self) -> bool:
        return self.within_bound and self.uniform_attains

    def to_json(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d


def verify_feedback_invariance(q: int, noise, n: int, budget: int = 10**6,
                               tol: float = ZERO_TOL) -> FeedbackInvarianceReport:
    """Maximize every face over all lattice perfect-feedback policy pairs and compare with the formula."""
    fb = build_additive(q, noise, feedback="perfect")
    nofb = build_additive(q, noise, feedback="none")
    faces, pol1, pol2 = _face_maxima(fb, n, budget)
    faces0, _, _ = _face_maxima(nofb, n, budget)
    bound = n * math.log2(q) - noise_block_entropy(noise, n)
    u = _uniform_index(pol1) * len(pol2) + _uniform_index(pol2)
    mx, uni = faces.max(axis=0), faces[u]
    return FeedbackInvarianceReport(
        q, n, noise.to_json(), int(len(faces)), float(bound), [float(v) for v in mx],
        [float(v) for v in faces0.max(axis=0)], [float(v) for v in uni],
        bool(np.all(mx <= bound + tol)), bool(np.all(uni >= mx - tol)),
        float(mx[2] - faces0.max(axis=0)[2]))


def factorizes(channel: ChannelSpec, tol: float = 1e-12) -> bool:
    """Whether ``kernel[s,x1,x2,y,t] = P(t|s) P(y|x1,x2,s)`` for some chain and emission."""
    k = np.asarray(channel.kernel)
    chain = k.sum(axis=3)  # [s, x1, x2, t]
    if not np.allclose(chain, chain[:, :1, :1, :], atol=tol):
        return False
    em = k.sum(axis=4)  # [s, x1, x2, y]
    return bool(np.allclose(k, em[..., None] * chain[:, :, :, None, :], atol=tol))


@dataclass
class ZeroCapacityReport:
    n: int
    max_no_feedback: float
    max_feedback: float
    zero_no_feedback: bool
    zero_feedback: bool
    tolerance: float

    @property
    def consistent(self) -> bool:
        return self.zero_no_feedback == self.zero_feedback

    def to_json(self) -> dict:
        d = asdict(self)
        d["consistent"] = self.consistent
        return d


def zero_capacity_iff(channel: ChannelSpec, n: int, budget: int = 10**6,
                      tol: float = ZERO_TOL) -> ZeroCapacityReport:
    """Max of ``I((X1,X2)^n -> Y^n)`` with and without perfect feedback, and the zero/zero check."""
    if not factorizes(channel):
        raise ValueError("channel does not factor as P(s'|s) P(y|x1,x2,s)")
    nofb = channel.with_feedback("none")
    fb = channel.with_feedback("perfect")
    m0 = float(_face_maxima(nofb, n, budget)[0][:, 2].max())
    m1 = float(_face_maxima(fb, n, budget)[0][:, 2].max())
    return ZeroCapacityReport(n, m0, m1, m0 <= tol, m1 <= tol, tol)


@dataclass(frozen=True)
class SeparationVerdict:
    source_entropy_rate: float
    channel_budget: float
    feasible: bool
    margin: float
    status: str

    def to_json(self) -> dict:
        return asdict(self)


def separation_check(source_entropy_rate: float, q: int, noise, boundary_tol: float = 1e-12) -> SeparationVerdict:
    """Compare a source entropy rate with the channel's sum-rate budget.

    The coding theorem needs a strict inequality, so a margin within
    ``boundary_tol`` of zero is reported as undetermined.
    """
    if source_entropy_rate < 0:
        raise ValueError("source entropy rate must be nonnegative")
    budget = capacity_sum_rate(q, noise)
    margin = budget - float(source_entropy_rate)
    if abs(margin) <= boundary_tol:
        status, feasible = "boundary, undetermined", False
    elif margin > 0:
        status, feasible = "feasible", True
    else:
        status, feasible = "infeasible", False
    return SeparationVerdict(float(source_entropy_rate), budget, feasible, margin, status)


__all__ = ["NoiseEntropyRate", "HiddenNoiseError", "entropy_rate", "entropy_rate_bounds",
           "noise_block_entropy", "capacity_sum_rate", "additive_region", "verify_feedback_invariance",
           "FeedbackInvarianceReport", "zero_capacity_iff", "ZeroCapacityReport", "factorizes",
           "SeparationVerdict", "separation_check"]
