"""Random code-tree coding over an FS-MAC with ML decoding.

A code-tree for encoder ``l`` assigns an input symbol to every feedback prefix
``z_l^{i-1}``; level ``i`` of a tree is an integer array over the ``|Z_l|^i``
prefixes. Without feedback (``|Z_l| = 1``) a tree is an ordinary codeword.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._parallel import pmap, spawn_seeds
from .bounds import PolicyPair
from .causal import BudgetExceeded, CausalPolicy
from .channel import ChannelSpec

DEFAULT_LABEL_BUDGET = 10**8


def message_count(n: int, rate: float) -> int:
    """``ceil(2^(n R))`` with a guard against floating-point overshoot."""
    if rate < 0:
        raise ValueError(f"rates must be nonnegative, got {rate}")
    return max(1, math.ceil(2.0 ** (n * rate) - 1e-9))


@dataclass(frozen=True)
class CodeTree:
    """Single tree: ``levels[i]`` maps each flat ``z^i`` prefix to ``x_{i+1}``."""

    levels: tuple[np.ndarray, ...]
    x_size: int
    z_size: int

    @property
    def depth(self) -> int:
        return len(self.levels)

    def inputs(self, z_prefixes: np.ndarray) -> np.ndarray:
        """Inputs along a feedback path given its prefix indices ``z_prefixes[i]`` (flat ``z^i``)."""
        return np.array([lvl[int(h)] for lvl, h in zip(self.levels, z_prefixes)], dtype=np.intp)


@dataclass
class CodeTreeBook:
    rates: tuple[float, float]
    messages: tuple[int, int]
    labels1: tuple[np.ndarray, ...]  # level i: (M1, Z1^i)
    labels2: tuple[np.ndarray, ...]
    x_sizes: tuple[int, int]
    z_sizes: tuple[int, int]
    seed: int | None = None
    policy: PolicyPair | None = None

    @property
    def depth(self) -> int:
        return len(self.labels1)

    def tree(self, encoder: int, message: int) -> CodeTree:
        labels = self.labels1 if encoder == 1 else self.labels2
        return CodeTree(tuple(lvl[message] for lvl in labels), self.x_sizes[encoder - 1],
                        self.z_sizes[encoder - 1])

    def restrict(self, depth: int) -> "CodeTreeBook":
        """Book of the first ``depth`` levels (the inverse of concatenation on prefixes)."""
        return CodeTreeBook(self.rates, self.messages, self.labels1[:depth], self.labels2[:depth],
                            self.x_sizes, self.z_sizes, self.seed, self.policy)

    def same_as(self, other: "CodeTreeBook") -> bool:
        return (self.messages == other.messages and self.depth == other.depth
                and all(np.array_equal(a, b) for a, b in zip(self.labels1, other.labels1))
                and all(np.array_equal(a, b) for a, b in zip(self.labels2, other.labels2)))

    def to_json(self) -> dict:
        return {"rates": list(self.rates), "messages": list(self.messages), "seed": self.seed,
                "x_sizes": list(self.x_sizes), "z_sizes": list(self.z_sizes),
                "labels1": [lvl.tolist() for lvl in self.labels1],
                "labels2": [lvl.tolist() for lvl in self.labels2]}


def _sample_labels(rng: np.random.Generator, policy: CausalPolicy, messages: int) -> tuple[np.ndarray, ...]:
    X, Z = policy.x_size, policy.z_size
    levels: list[np.ndarray] = []
    xpref = np.zeros((messages, 1), dtype=np.intp)  # flat x-prefix at every node of the current level
    for i, table in enumerate(policy.tables):
        nodes = Z**i
        hz = np.arange(nodes)
        probs = table[xpref, hz[None, :], :]  # (M, nodes, X)
        cdf = np.cumsum(probs, axis=-1)
        u = rng.random((messages, nodes, 1))
        lab = np.minimum((u >= cdf).sum(axis=-1), X - 1).astype(np.intp)
        levels.append(lab)
        # children of node hz are hz*Z + z; each inherits this node's x-prefix extended by its label
        xpref = np.repeat(xpref * X + lab, Z, axis=1)
    return tuple(levels)


def sample_codebook(channel: ChannelSpec, pair: PolicyPair, n: int, rates: tuple[float, float],
                    seed=None, rng: np.random.Generator | None = None,
                    label_budget: int = DEFAULT_LABEL_BUDGET) -> CodeTreeBook:
    """Draw one code-tree per message per encoder from the generating policies."""
    if pair.n != n:
        raise ValueError(f"policy horizon {pair.n} does not match n={n}")
    for l, p in ((1, pair.p1), (2, pair.p2)):
        if p.x_size != channel.x_size(l) or p.z_size != channel.z_size(l):
            raise ValueError(f"policy {l} alphabets ({p.x_size}, {p.z_size}) do not match the channel "
                             f"({channel.x_size(l)}, {channel.z_size(l)})")
    m1, m2 = message_count(n, rates[0]), message_count(n, rates[1])
    need = sum(m * sum(z**i for i in range(n)) for m, z in ((m1, channel.z1_size), (m2, channel.z2_size)))
    if need > label_budget:
        raise BudgetExceeded("code-tree labels", need, label_budget,
                             f"about {need * 8 / 2**20:.1f} MiB of labels")
    rng = rng if rng is not None else np.random.default_rng(seed)
    return CodeTreeBook((float(rates[0]), float(rates[1])), (m1, m2), _sample_labels(rng, pair.p1, m1),
                        _sample_labels(rng, pair.p2, m2), (channel.x1_size, channel.x2_size),
                        (channel.z1_size, channel.z2_size), seed if isinstance(seed, int) else None, pair)


def concatenate(book_a: CodeTreeBook, book_b: CodeTreeBook) -> CodeTreeBook:
    """Depth ``n_a + n_b`` book: after any depth-``n_a`` prefix, continue with ``book_b``'s tree."""
    if book_a.x_sizes != book_b.x_sizes or book_a.z_sizes != book_b.z_sizes:
        raise ValueError("books use different input or feedback alphabets")
    if book_b.depth and book_a.depth and book_a.messages != book_b.messages:
        raise ValueError(f"message counts differ: {book_a.messages} vs {book_b.messages}")
    messages = book_a.messages if book_a.depth or not book_b.depth else book_b.messages
    na = book_a.depth

    def join(la, lb, z):
        tail = tuple(np.tile(lvl, (1, z**na)) for lvl in lb)
        return tuple(la) + tail

    total = na + book_b.depth
    rates = tuple(math.log2(m) / total if total else 0.0 for m in messages)
    return CodeTreeBook(rates, messages, join(book_a.labels1, book_b.labels1, book_a.z_sizes[0]),
                        join(book_a.labels2, book_b.labels2, book_a.z_sizes[1]), book_a.x_sizes,
                        book_a.z_sizes, book_a.seed, book_a.policy)


# ---------------------------------------------------------------------------
# Transmission and decoding
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    states: np.ndarray  # s_0 .. s_n
    x1: np.ndarray
    x2: np.ndarray
    y: np.ndarray
    z1: np.ndarray
    z2: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "s_prev", "x1", "x2", "y", "s", "z1", "z2"])
        for i in range(len(self.y)):
            w.writerow([i + 1, self.states[i], self.x1[i], self.x2[i], self.y[i], self.states[i + 1],
                        self.z1[i], self.z2[i]])
        return buf.getvalue()


def _prefix_indices(z: np.ndarray, z_size: int) -> np.ndarray:
    """Flat index of ``z^i`` for i = 0..n-1 (the prefix available before step i+1)."""
    h = np.zeros(len(z), dtype=np.intp)
    for i in range(1, len(z)):
        h[i] = h[i - 1] * z_size + z[i - 1]
    return h


def transmit(channel: ChannelSpec, book: CodeTreeBook, m1: int, m2: int, seed=None,
             rng: np.random.Generator | None = None) -> Trajectory:
    """Simulate one block; encoders see ``z_{l,i}`` only from step ``i + 1`` on."""
    if not (0 <= m1 < book.messages[0] and 0 <= m2 < book.messages[1]):
        raise ValueError(f"messages ({m1}, {m2}) out of range {book.messages}")
    rng = rng if rng is not None else np.random.default_rng(seed)
    n, S, Y = book.depth, channel.s_size, channel.y_size
    k = np.asarray(channel.kernel).reshape(S, channel.x1_size, channel.x2_size, Y * S)
    f1, f2 = channel.feedback_map(1), channel.feedback_map(2)
    Z1, Z2 = book.z_sizes
    states = np.zeros(n + 1, dtype=np.intp)
    states[0] = int(rng.choice(S, p=channel.s0_weights())) if S > 1 else 0
    x1, x2, y, z1, z2 = (np.zeros(n, dtype=np.intp) for _ in range(5))
    h1 = h2 = 0
    for i in range(n):
        x1[i] = book.labels1[i][m1, h1]
        x2[i] = book.labels2[i][m2, h2]
        row = k[states[i], x1[i], x2[i]]
        out = min(int(np.searchsorted(np.cumsum(row), rng.random(), side="right")), Y * S - 1)
        y[i], states[i + 1] = divmod(out, S)
        z1[i], z2[i] = f1[y[i]], f2[y[i]]
        h1, h2 = h1 * Z1 + z1[i], h2 * Z2 + z2[i]
    return Trajectory(states, x1, x2, y, z1, z2)


def rollout(channel: ChannelSpec, book: CodeTreeBook, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Input sequences every message would have produced against the output ``y``."""
    y = np.asarray(y, dtype=np.intp)
    out = []
    for l, labels in ((1, book.labels1), (2, book.labels2)):
        h = _prefix_indices(channel.feedback_map(l)[y], book.z_sizes[l - 1])
        if labels:
            out.append(np.stack([lvl[:, hi] for lvl, hi in zip(labels, h)], axis=1))
        else:
            out.append(np.zeros((book.messages[l - 1], 0), dtype=np.intp))
    return out[0], out[1]


def ml_decode(channel: ChannelSpec, book: CodeTreeBook, y, s0_weights=None) -> tuple[int, int, float]:
    """Most likely message pair; ties go to the lexicographically smallest pair.

    Returns ``(m1, m2, log2 likelihood)``; the likelihood is the causal law
    ``P(y^n || x1^n, x2^n)`` summed over hidden states.
    """
    xs1, xs2 = rollout(channel, book, y)
    w = channel.s0_weights() if s0_weights is None else np.asarray(s0_weights, dtype=float)
    m1, m2, lik = kernels.ml_decode(np.asarray(channel.kernel), w, xs1, xs2, np.asarray(y, dtype=np.intp))
    return int(m1), int(m2), (math.log2(lik) if lik > 0 else -math.inf)


# ---------------------------------------------------------------------------
# Error probability
# ---------------------------------------------------------------------------

def wilson_interval(errors: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    p = errors / trials
    den = 1 + z * z / trials
    mid = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    lo = 0.0 if errors == 0 else max(0.0, mid - half)
    hi = 1.0 if errors == trials else min(1.0, mid + half)
    return lo, hi


@dataclass
class SimResult:
    trials: int
    errors: int
    m1_only: int
    m2_only: int
    both: int
    seed: int
    config: dict
    runtime: float = field(default=0.0, compare=False)

    @property
    def pe(self) -> float:
        return self.errors / self.trials if self.trials else 0.0

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.errors, self.trials)

    def to_json(self, include_runtime: bool = False) -> dict:
        d = {"trials": self.trials, "errors": self.errors, "pe": self.pe, "ci95": list(self.ci),
             "error_types": {"m1_only": self.m1_only, "m2_only": self.m2_only, "both": self.both},
             "seed": self.seed, "config": self.config}
        if include_runtime:
            d["runtime_s"] = self.runtime
        return d


def uniform_pair(channel: ChannelSpec, n: int) -> PolicyPair:
    return PolicyPair(CausalPolicy.uniform(n, channel.x1_size, channel.z1_size, 1),
                      CausalPolicy.uniform(n, channel.x2_size, channel.z2_size, 2))


def estimate_pe(channel: ChannelSpec, pair: PolicyPair | None, n: int, rates: tuple[float, float],
                trials: int, seed: int, refresh: int = 100, decoder_s0=None) -> SimResult:
    """Empirical error probability with a fresh codebook every ``refresh`` trials."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if refresh < 1:
        raise ValueError("refresh must be at least 1")
    pair = pair or uniform_pair(channel, n)
    batches = [(lo, min(lo + refresh, trials)) for lo in range(0, trials, refresh)]
    seeds = spawn_seeds(seed, len(batches))
    start = time.perf_counter()

    def run(b):
        lo, hi = batches[b]
        rng = np.random.default_rng(seeds[b])
        book = sample_codebook(channel, pair, n, rates, rng=rng)
        counts = np.zeros(3, dtype=np.int64)
        for _ in range(hi - lo):
            m1 = int(rng.integers(book.messages[0]))
            m2 = int(rng.integers(book.messages[1]))
            traj = transmit(channel, book, m1, m2, rng=rng)
            d1, d2, _ = ml_decode(channel, book, traj.y, decoder_s0)
            w1, w2 = d1 != m1, d2 != m2
            if w1 and w2:
                counts[2] += 1
            elif w1:
                counts[0] += 1
            elif w2:
                counts[1] += 1
        return counts

    tally = np.sum(pmap(run, range(len(batches))), axis=0) if batches else np.zeros(3, dtype=np.int64)
    cfg = {"n": n, "rates": [float(r) for r in rates], "refresh": refresh, "channel": channel.name,
           "messages": [message_count(n, rates[0]), message_count(n, rates[1])],
           "decoder_s0": None if decoder_s0 is None else [float(v) for v in decoder_s0]}
    return SimResult(trials, int(tally.sum()), int(tally[0]), int(tally[1]), int(tally[2]), int(seed), cfg,
                     time.perf_counter() - start)


def _tree_distribution(policy: CausalPolicy) -> tuple[list[tuple[np.ndarray, ...]], np.ndarray]:
    """Every code-tree of a policy with its probability (trees of probability 0 dropped)."""
    X, Z = policy.x_size, policy.z_size
    sizes = [Z**i for i in range(policy.n)]
    total = sum(sizes)
    trees, probs = [], []
    for code in range(X**total):
        flat = [(code // X**k) % X for k in range(total)]
        levels, off = [], 0
        for s in sizes:
            levels.append(np.array(flat[off:off + s], dtype=np.intp))
            off += s
        p = 1.0
        xpref = np.zeros(1, dtype=np.intp)
        for i, lvl in enumerate(levels):
            p *= float(np.prod(policy.tables[i][xpref, np.arange(sizes[i]), lvl]))
            xpref = np.repeat(xpref * X + lvl, Z)
        if p > 0:
            trees.append(tuple(levels))
            probs.append(p)
    return trees, np.array(probs)


def exact_average_pe(channel: ChannelSpec, pair: PolicyPair | None, n: int, rates: tuple[float, float],
                     budget: int = 10**6, decoder_s0=None) -> float:
    """Ensemble-average error probability by enumerating every codebook.

    Averages over uniform messages, the channel, and all codebooks weighted by
    their probability under the generating policies, with the same ML rule
    and tie-breaking as :func:`ml_decode`.
    """
    pair = pair or uniform_pair(channel, n)
    m1, m2 = message_count(n, rates[0]), message_count(n, rates[1])
    t1, p1 = _tree_distribution(pair.p1)
    t2, p2 = _tree_distribution(pair.p2)
    books = len(t1) ** m1 * len(t2) ** m2
    if books > budget:
        raise BudgetExceeded("codebooks", books, budget)
    kernel = np.asarray(channel.kernel)
    w = channel.s0_weights() if decoder_s0 is None else np.asarray(decoder_s0, dtype=float)
    true_w = channel.s0_weights()
    ys = np.array(np.unravel_index(np.arange(channel.y_size**n), (channel.y_size,) * n)).T
    total = 0.0
    from itertools import product
    for c1 in product(range(len(t1)), repeat=m1):
        for c2 in product(range(len(t2)), repeat=m2):
            weight = float(np.prod(p1[list(c1)]) * np.prod(p2[list(c2)]))
            labels1 = tuple(np.stack([t1[c][i] for c in c1]) for i in range(n))
            labels2 = tuple(np.stack([t2[c][i] for c in c2]) for i in range(n))
            book = CodeTreeBook(tuple(rates), (m1, m2), labels1, labels2,
                                (channel.x1_size, channel.x2_size), (channel.z1_size, channel.z2_size))
            err = 0.0
            for y in ys:
                xs1, xs2 = rollout(channel, book, y)
                lik = kernels.pair_likelihoods(kernel, true_w, xs1, xs2, y)
                d1, d2, _ = kernels.ml_decode(kernel, w, xs1, xs2, y)
                err += lik.sum() - lik[d1, d2]
            total += weight * err / (m1 * m2)
    return float(total)
