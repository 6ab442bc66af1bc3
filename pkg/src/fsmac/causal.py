"""Causally conditioned laws, exact joint pmfs and directed information.

All information quantities are in bits.  A :class:`JointLaw` keeps the dense
pmf over ``(s0, x1^n, x2^n, y^n, s_n)`` with one array axis per symbol, so any
prefix marginal is a plain ``sum`` over trailing axes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from ._info import entropy, safe_log2, xlog2x
from .channel import ChannelSpec, InitialState

DEFAULT_JOINT_BUDGET = 10**8


class BudgetExceeded(RuntimeError):
    """A dense enumeration would exceed its configured size budget."""

    def __init__(self, what: str, required: int, budget: int, hint: str = ""):
        self.required = int(required)
        self.budget = int(budget)
        msg = f"{what}: required {required} exceeds budget {budget}"
        super().__init__(msg + (f"; {hint}" if hint else ""))


def digits(index: int, base: int, length: int) -> list[int]:
    out = [0] * length
    for k in range(length - 1, -1, -1):
        index, out[k] = divmod(index, base)
    return out


def seq_index(seq: Sequence[int], base: int) -> int:
    idx = 0
    for v in seq:
        idx = idx * base + int(v)
    return idx


def prefix_map(fmap: np.ndarray, y_size: int, z_size: int, length: int) -> np.ndarray:
    """Map each flat y-prefix of ``length`` symbols to the flat z-prefix it induces."""
    idx = np.zeros(1, dtype=np.intp)
    for _ in range(length):
        idx = (idx[:, None] * z_size + fmap[None, :]).ravel()
    assert idx.size == y_size**length
    return idx


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CausalPolicy:
    """Causally conditioned input law ``Q(x^n || z^{n-1})`` for one encoder.

    ``tables[i]`` has shape ``(x_size**i, z_size**i, x_size)``: row
    ``[x^{i}, z^{i}]`` is the pmf of the next input given the flat-indexed past
    inputs and past feedback symbols.
    """

    tables: tuple[np.ndarray, ...]
    x_size: int
    z_size: int
    encoder: int = 1

    def __post_init__(self):
        tabs = []
        for i, t in enumerate(self.tables):
            t = np.array(t, dtype=float, copy=True)
            want = (self.x_size**i, self.z_size**i, self.x_size)
            if t.shape != want:
                raise ValueError(f"policy table {i} has shape {t.shape}, expected {want}")
            t.setflags(write=False)
            tabs.append(t)
        object.__setattr__(self, "tables", tuple(tabs))

    @property
    def n(self) -> int:
        return len(self.tables)

    def check(self, tol: float = 1e-12) -> list[str]:
        bad = []
        for i, t in enumerate(self.tables):
            if np.any(t < -tol):
                bad.append(f"table {i} has negative entries")
            dev = np.abs(t.sum(axis=-1) - 1.0)
            if np.any(dev > tol):
                hx, hz = np.unravel_index(int(np.argmax(dev)), dev.shape)
                bad.append(f"table {i} row (x-hist={hx}, z-hist={hz}) sums to {t[hx, hz].sum():.15g}")
        return bad

    @property
    def feedback_free(self) -> bool:
        return all(np.allclose(t, t[:, :1, :], atol=0.0, rtol=0.0) for t in self.tables)

    @classmethod
    def uniform(cls, n: int, x_size: int, z_size: int = 1, encoder: int = 1) -> "CausalPolicy":
        return cls(tuple(np.full((x_size**i, z_size**i, x_size), 1.0 / x_size) for i in range(n)),
                   x_size, z_size, encoder)

    @classmethod
    def constant(cls, n: int, x_size: int, symbol: int, z_size: int = 1, encoder: int = 1) -> "CausalPolicy":
        tabs = []
        for i in range(n):
            t = np.zeros((x_size**i, z_size**i, x_size))
            t[..., symbol] = 1.0
            tabs.append(t)
        return cls(tuple(tabs), x_size, z_size, encoder)

    @classmethod
    def random(cls, rng: np.random.Generator, n: int, x_size: int, z_size: int = 1,
               encoder: int = 1, alpha: float = 1.0) -> "CausalPolicy":
        return cls(tuple(rng.dirichlet(np.full(x_size, alpha), size=(x_size**i, z_size**i))
                         for i in range(n)), x_size, z_size, encoder)

    @classmethod
    def from_sequence_pmf(cls, pmf: np.ndarray, n: int, x_size: int, encoder: int = 1) -> "CausalPolicy":
        """Feedback-free policy realizing the pmf over ``X^n`` (flat index, first symbol most significant)."""
        p = np.asarray(pmf, dtype=float).reshape((x_size,) * n) if n else np.ones(())
        tabs = []
        for i in range(n):
            marg = p.sum(axis=tuple(range(i + 1, n))).reshape(x_size**i, x_size)
            tot = marg.sum(axis=1, keepdims=True)
            row = np.where(tot > 0, marg / np.where(tot > 0, tot, 1.0), 1.0 / x_size)
            tabs.append(row[:, None, :])
        return cls(tuple(tabs), x_size, 1, encoder)

    def sequence_pmf(self) -> np.ndarray:
        """pmf over ``X^n`` for a feedback-free policy (z-history fixed at 0)."""
        p = np.ones(1)
        for i, t in enumerate(self.tables):
            p = (p[:, None] * t[:, 0, :]).ravel()
        return p

    def lifted(self, fmap: np.ndarray, y_size: int) -> list[np.ndarray]:
        """Tables re-indexed by output history: shape ``(x_size**i, y_size**i, x_size)``."""
        fmap = np.asarray(fmap, dtype=np.intp)
        return [t[:, prefix_map(fmap, y_size, self.z_size, i), :] for i, t in enumerate(self.tables)]

    def to_json(self) -> dict:
        return {"encoder": self.encoder, "x_size": self.x_size, "z_size": self.z_size,
                "tables": [t.tolist() for t in self.tables]}

    @classmethod
    def from_json(cls, d: dict) -> "CausalPolicy":
        return cls(tuple(np.asarray(t, dtype=float) for t in d["tables"]),
                   int(d["x_size"]), int(d["z_size"]), int(d.get("encoder", 1)))


def causal_pmf(policy: CausalPolicy, x_sequence: Sequence[int], z_sequence: Sequence[int]) -> float:
    """``prod_i Q_i(x_i | x^{i-1}, z^{i-1})`` for one trajectory."""
    n = policy.n
    if len(x_sequence) != n or len(z_sequence) < max(n - 1, 0):
        raise ValueError(f"need x of length {n} and z of length {n - 1}")
    for v in x_sequence:
        if not 0 <= v < policy.x_size:
            raise ValueError(f"input symbol {v} outside alphabet of size {policy.x_size}")
    for v in z_sequence[: max(n - 1, 0)]:
        if not 0 <= v < policy.z_size:
            raise ValueError(f"feedback symbol {v} outside alphabet of size {policy.z_size}")
    prob = 1.0
    for i in range(n):
        hx = seq_index(x_sequence[:i], policy.x_size)
        hz = seq_index(z_sequence[:i], policy.z_size)
        prob *= policy.tables[i][hx, hz, x_sequence[i]]
    return float(prob)


def _check_policy_for(channel: ChannelSpec, policy: CausalPolicy, encoder: int, n: int) -> None:
    if policy.n != n:
        raise ValueError(f"policy {encoder} horizon {policy.n} != {n}")
    if policy.x_size != channel.x_size(encoder):
        raise ValueError(f"policy {encoder} axis x: size {policy.x_size} != channel x{encoder}_size "
                         f"{channel.x_size(encoder)}")
    if policy.z_size != channel.z_size(encoder):
        raise ValueError(f"policy {encoder} axis z: size {policy.z_size} != channel z{encoder}_size "
                         f"{channel.z_size(encoder)}")


def joint_size(channel: ChannelSpec, n: int) -> int:
    return channel.s_size**2 * (channel.x1_size * channel.x2_size * channel.y_size) ** n


# ---------------------------------------------------------------------------
# Joint laws
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class JointLaw:
    """Dense pmf over ``(s0, x1_1..x1_n, x2_1..x2_n, y_1..y_n, s_n)``."""

    n: int
    probs: np.ndarray
    x1_size: int
    x2_size: int
    y_size: int
    s_size: int
    provenance: dict = field(default_factory=dict)
    channel: ChannelSpec | None = None
    p1: CausalPolicy | None = None
    p2: CausalPolicy | None = None
    s0_weights: np.ndarray | None = None

    # axis bookkeeping
    def ax_s0(self) -> tuple[int, ...]:
        return (0,)

    def ax_x1(self, i: int) -> tuple[int, ...]:
        return tuple(range(1, 1 + i))

    def ax_x2(self, i: int) -> tuple[int, ...]:
        return tuple(range(1 + self.n, 1 + self.n + i))

    def ax_y(self, i: int) -> tuple[int, ...]:
        return tuple(range(1 + 2 * self.n, 1 + 2 * self.n + i))

    @property
    def ndim(self) -> int:
        return 3 * self.n + 2

    def marginal(self, keep: Sequence[int]) -> np.ndarray:
        """Marginal over the kept axes, in axis order, with the other axes summed out."""
        keep = tuple(sorted(set(keep)))
        drop = tuple(a for a in range(self.ndim) if a not in keep)
        return self.probs.sum(axis=drop)

    def marginal_keepdims(self, keep: Sequence[int]) -> np.ndarray:
        keep = set(keep)
        drop = tuple(a for a in range(self.ndim) if a not in keep)
        return self.probs.sum(axis=drop, keepdims=True)

    @cached_property
    def _entropy_cache(self) -> dict:
        return {}

    def entropy_of(self, keep: Sequence[int]) -> float:
        key = tuple(sorted(set(keep)))
        cache = self._entropy_cache
        if key not in cache:
            cache[key] = entropy(self.marginal(key))
        return cache[key]

    def total(self) -> float:
        return float(self.probs.sum())


def channel_causal_law(channel: ChannelSpec, n: int, s0_weights=None, per_state: bool = False,
                       keep_final_state: bool = False) -> np.ndarray:
    """Forward sum ``P(y^n || x1^n, x2^n)`` over hidden states.

    Returns an array indexed ``[x1^n, x2^n, y^n]`` by flat sequence index, with a
    leading ``s0`` axis when ``per_state`` (each slice conditioned on its s0) and
    a trailing ``s_n`` axis when ``keep_final_state``.
    """
    S, X1, X2, Y = channel.s_size, channel.x1_size, channel.x2_size, channel.y_size
    k = np.asarray(channel.kernel)
    w = channel.s0_weights() if s0_weights is None else np.asarray(s0_weights, dtype=float)
    b = np.eye(S)[:, None, None, None, :] if per_state else w[None, None, None, None, :]
    b = np.array(b, dtype=float)  # [z][h1][h2][hy][s]
    for _ in range(n):
        z, n1, n2, ny, _s = b.shape
        b = np.einsum("zpqrs,sabyt->zpaqbryt", b, k).reshape(z, n1 * X1, n2 * X2, ny * Y, S)
    out = b if keep_final_state else b.sum(axis=-1)
    return out if per_state else out[0]


def lifted_product(policy_lifted: list[np.ndarray], x_size: int, y_size: int) -> np.ndarray:
    """``Q(x^n || z^{n-1})`` as an array over flat ``(x^n, y^n)`` (constant in the last y)."""
    q = np.ones((1, 1))
    for t in policy_lifted:
        nx, ny = q.shape
        q = (q[:, None, :, None] * t[:, :, :].transpose(0, 2, 1)[:, :, :, None]).reshape(nx * x_size, ny, 1)
        q = np.broadcast_to(q, (nx * x_size, ny, y_size)).reshape(nx * x_size, ny * y_size)
    return q


def assemble_joint(channel: ChannelSpec, p1: CausalPolicy, p2: CausalPolicy,
                   s0_mode: InitialState | None = None, budget: int = DEFAULT_JOINT_BUDGET) -> JointLaw:
    """Exact joint law by forward recursion: state, output, feedback, next inputs."""
    n = p1.n
    _check_policy_for(channel, p1, 1, n)
    _check_policy_for(channel, p2, 2, n)
    size = joint_size(channel, n)
    if size > budget:
        raise BudgetExceeded("joint pmf entries", size, budget, "reduce n or alphabet sizes")
    S, X1, X2, Y = channel.s_size, channel.x1_size, channel.x2_size, channel.y_size
    init = s0_mode or channel.initial_state
    w = init.weights(S)
    k = np.asarray(channel.kernel)
    l1 = p1.lifted(channel.feedback_map(1), Y)
    l2 = p2.lifted(channel.feedback_map(2), Y)
    a = np.zeros((S, 1, 1, 1, S))
    a[np.arange(S), 0, 0, 0, np.arange(S)] = w
    for i in range(n):
        z, n1, n2, ny, _s = a.shape
        a = np.einsum("zpqrs,pra,qrb,sabyt->zpaqbryt", a, l1[i], l2[i], k)
        a = a.reshape(z, n1 * X1, n2 * X2, ny * Y, S)
    probs = a.reshape((S,) + (X1,) * n + (X2,) * n + (Y,) * n + (S,))
    prov = {"channel": channel.name, "policies": [id(p1), id(p2)], "s0_mode": init.to_json()}
    return JointLaw(n, probs, X1, X2, Y, S, prov, channel, p1, p2, w)


def assemble_joint_with_state_law(channel: ChannelSpec, q1: np.ndarray, q2: np.ndarray,
                                  state_law: np.ndarray, n: int) -> JointLaw:
    """Joint for feedback-free inputs with an input-dependent initial state ``P(s0 | x1^n, x2^n)``.

    ``q1``, ``q2`` are pmfs over flat input sequences; ``state_law`` has shape
    ``(|X1|^n, |X2|^n, |S|)``.
    """
    S, X1, X2, Y = channel.s_size, channel.x1_size, channel.x2_size, channel.y_size
    f = channel_causal_law(channel, n, per_state=True, keep_final_state=True)  # [s0][x1][x2][y][s]
    j = np.einsum("a,b,abz,zabyt->zabyt", q1, q2, state_law, f)
    probs = j.reshape((S,) + (X1,) * n + (X2,) * n + (Y,) * n + (S,))
    return JointLaw(n, probs, X1, X2, Y, S, {"channel": channel.name, "s0_mode": "input-dependent"}, channel)


# ---------------------------------------------------------------------------
# Directed information
# ---------------------------------------------------------------------------

@dataclass
class DirectedInfoReport:
    """Directed informations in bits plus their per-step terms (rows: X1, X2, pair)."""

    i_x1_to_y_given_x2: float
    i_x2_to_y_given_x1: float
    i_pair_to_y: float
    terms: np.ndarray
    conditioned_on_s0: bool = False

    def totals(self) -> tuple[float, float, float]:
        return self.i_x1_to_y_given_x2, self.i_x2_to_y_given_x1, self.i_pair_to_y


def directed_info(joint: JointLaw, condition_on_s0: bool = False) -> DirectedInfoReport:
    """``sum_i I(X1^i; Y_i | Y^{i-1}, X2^i)`` and its companions, exactly."""
    n = joint.n
    c = joint.ax_s0() if condition_on_s0 else ()
    h = joint.entropy_of
    terms = np.zeros((3, n))
    for i in range(1, n + 1):
        x1, x2, y, yp = joint.ax_x1(i), joint.ax_x2(i), joint.ax_y(i), joint.ax_y(i - 1)
        h_given_all = h(c + x1 + x2 + y) - h(c + x1 + x2 + yp)
        terms[0, i - 1] = h(c + x2 + y) - h(c + x2 + yp) - h_given_all
        terms[1, i - 1] = h(c + x1 + y) - h(c + x1 + yp) - h_given_all
        terms[2, i - 1] = h(c + y) - h(c + yp) - h_given_all
    tot = terms.sum(axis=1)
    return DirectedInfoReport(float(tot[0]), float(tot[1]), float(tot[2]), terms, condition_on_s0)


def conditional_mutual_information(probs: np.ndarray, a: Sequence[int], b: Sequence[int],
                                   c: Sequence[int] = ()) -> float:
    """Plain ``I(A; B | C)`` from a dense pmf, by direct log-ratio summation."""
    a, b, c = tuple(a), tuple(b), tuple(c)
    nd = probs.ndim
    keep = set(a) | set(b) | set(c)
    p_abc = probs.sum(axis=tuple(x for x in range(nd) if x not in keep), keepdims=True)

    def marg(axes):
        return probs.sum(axis=tuple(x for x in range(nd) if x not in set(axes)), keepdims=True)

    p_ac, p_bc, p_c = marg(a + c), marg(b + c), marg(c)
    num = p_abc * p_c
    den = p_ac * p_bc
    pos = p_abc > 0
    ratio = np.where(pos, num / np.where(pos, den, 1.0), 1.0)
    return float(np.sum(np.where(pos, p_abc * np.log2(ratio), 0.0)))


# ---------------------------------------------------------------------------
# Identity checks on a joint law
# ---------------------------------------------------------------------------

@dataclass
class CausalIdentityReport:
    residual_decomposition: float
    residual_functional: float | None
    residual_no_feedback: float | None
    state_gap: float
    state_entropy: float

    @property
    def state_bound_ok(self) -> bool:
        return self.state_gap <= self.state_entropy + 1e-12


def _xy_flat(joint: JointLaw) -> np.ndarray:
    """``P(x1^n, x2^n, y^n)`` on flat sequence indices."""
    n = joint.n
    p = joint.probs.sum(axis=(0, joint.ndim - 1))
    return p.reshape(joint.x1_size**n, joint.x2_size**n, joint.y_size**n)


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def causal_decomposition_residual(joint: JointLaw) -> float:
    """max |P(x1,y||x2) - P(x1||y^{n-1},x2) P(y||x1,x2)| over the support."""
    n = joint.n
    shape = joint.probs.shape[1:-1]
    lhs = np.ones(shape)
    q1 = np.ones(shape)
    py = np.ones(shape)
    mk = joint.marginal_keepdims
    for i in range(1, n + 1):
        x1, x1p = joint.ax_x1(i), joint.ax_x1(i - 1)
        x2, y, yp = joint.ax_x2(i), joint.ax_y(i), joint.ax_y(i - 1)
        full = mk(x1 + x2 + y)[0, ..., 0]
        past = mk(x1p + x2 + yp)[0, ..., 0]
        no_y = mk(x1 + x2 + yp)[0, ..., 0]
        lhs = lhs * _ratio(full, past)
        q1 = q1 * _ratio(no_y, past)
        py = py * _ratio(full, no_y)
    support = joint.probs.sum(axis=(0, joint.ndim - 1)) > 0
    return float(np.max(np.abs(lhs - q1 * py)[support], initial=0.0))


def functional_value(joint: JointLaw) -> float:
    """The I(X1;Y|X2) functional evaluated at (Q1(.||y), Q2(.||y), P(y||x1,x2)).

    Built from the policy tables and an independent forward sum of the channel,
    not from the joint array.
    """
    ch, p1, p2, n = joint.channel, joint.p1, joint.p2, joint.n
    if ch is None or p1 is None or p2 is None:
        raise ValueError("joint does not carry its channel and policies")
    Y = ch.y_size
    q1 = lifted_product(p1.lifted(ch.feedback_map(1), Y), ch.x1_size, Y)  # [x1][y]
    q2 = lifted_product(p2.lifted(ch.feedback_map(2), Y), ch.x2_size, Y)  # [x2][y]
    pyx = channel_causal_law(ch, n, s0_weights=joint.s0_weights)          # [x1][x2][y]
    weight = q1[:, None, :] * q2[None, :, :] * pyx
    mix = np.einsum("ay,aby->by", q1, pyx)[None, :, :]
    pos = weight > 0
    ratio = np.where(pos, pyx / np.where(pos, mix, 1.0), 1.0)
    return float(np.sum(np.where(pos, weight * np.log2(ratio), 0.0)))


def check_causal_identities(joint: JointLaw) -> CausalIdentityReport:
    """Residuals of the causal-conditioning identities on ``joint``."""
    n = joint.n
    r_dec = causal_decomposition_residual(joint)
    di = directed_info(joint)
    r_fun = None
    if joint.p1 is not None and joint.p2 is not None:
        r_fun = abs(functional_value(joint) - di.i_x1_to_y_given_x2)
    r_plain = None
    if joint.p1 is not None and joint.p2 is not None and joint.p1.feedback_free and joint.p2.feedback_free:
        plain = conditional_mutual_information(joint.probs, joint.ax_x1(n), joint.ax_y(n), joint.ax_x2(n))
        r_plain = abs(plain - di.i_x1_to_y_given_x2)
    di_s = directed_info(joint, condition_on_s0=True)
    gap = abs(di.i_x1_to_y_given_x2 - di_s.i_x1_to_y_given_x2)
    hs = entropy(joint.marginal(joint.ax_s0()))
    return CausalIdentityReport(r_dec, r_fun, r_plain, gap, hs)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def export_joint_json(joint: JointLaw) -> str:
    """JSON dump of the support: index tuple -> probability, 17 significant digits."""
    axes = (["s0"] + [f"x1_{i}" for i in range(1, joint.n + 1)]
            + [f"x2_{i}" for i in range(1, joint.n + 1)]
            + [f"y_{i}" for i in range(1, joint.n + 1)] + [f"s_{joint.n}"])
    parts = []
    for idx in zip(*np.nonzero(joint.probs)):
        key = ",".join(str(int(i)) for i in idx)
        parts.append(f'    "{key}": {format(float(joint.probs[idx]), ".17g")}')
    head = '{\n  "axes": ' + str(axes).replace("'", '"') + ',\n  "shape": ' + str(list(joint.probs.shape))
    return head + ',\n  "entries": {\n' + ",\n".join(parts) + "\n  }\n}\n"
