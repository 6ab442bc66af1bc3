"""Finite-n inner, multi-letter and outer rate regions.

Every region is a union of rate pentagons over input policies, convexified.
The union is realized by a support-function sweep: for each direction in the
nonnegative quadrant the best pentagon is searched for, and the region is the
convex hull of the winners. Two search regimes exist:

* ``exhaustive``: every lattice policy pair (conditional rows on a probability
  grid, see :mod:`fsmac.policies`) is evaluated exactly.
* ``ascent``: projected finite-difference ascent over stochastic tables with
  random restarts.

``auto`` picks ``exhaustive`` whenever the pair count fits the budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from . import kernels
from ._info import entropy
from ._outer import LawShape, maximize_state_law, start_laws, face_value
from ._parallel import chunks, pmap, spawn_seeds
from .causal import (DEFAULT_JOINT_BUDGET, BudgetExceeded, CausalPolicy, assemble_joint,
                     assemble_joint_with_state_law, channel_causal_law, directed_info, joint_size,
                     prefix_map)
from .channel import ChannelSpec, InitialState
from .policies import lattice_count, lattice_policies, policy_bank
from .regions import (RatePentagon, RateRegion, check_subadditive, check_superadditive, hausdorff,
                      hull_of_union, pentagon_support, quadrant_directions)

KINDS = ("inner", "multi_letter", "outer")
MODES = ("auto", "exhaustive", "ascent")
TIE_TOL = 1e-12


@dataclass
class OptimizerConfig:
    directions: int = 64
    restarts: int = 32
    mode: str = "auto"
    budget: int = 10**6
    seed: int = 0
    tolerance: float = 1e-10
    grid: int | None = None
    max_iter: int = 200
    joint_budget: int = DEFAULT_JOINT_BUDGET
    refine: int = 4
    chunk: int = 1024

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.directions < 1 or self.restarts < 1 or self.max_iter < 1:
            raise ValueError("directions, restarts and max_iter must be positive")
        if self.budget < 1:
            raise ValueError("budget must be positive")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "OptimizerConfig":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        return cls(**known)


@dataclass(frozen=True)
class PolicyPair:
    p1: CausalPolicy
    p2: CausalPolicy
    weight: float = 1.0

    def __post_init__(self):
        if self.p1.n != self.p2.n:
            raise ValueError(f"policy horizons differ: {self.p1.n} vs {self.p2.n}")

    @property
    def n(self) -> int:
        return self.p1.n

    def to_json(self) -> dict:
        return {"p1": self.p1.to_json(), "p2": self.p2.to_json(), "weight": self.weight}

    @classmethod
    def from_json(cls, d: dict) -> "PolicyPair":
        return cls(CausalPolicy.from_json(d["p1"]), CausalPolicy.from_json(d["p2"]),
                   float(d.get("weight", 1.0)))


@dataclass
class CertificateEntry:
    direction: np.ndarray
    pair: PolicyPair
    pentagon: RatePentagon
    support: float
    state_laws: list[np.ndarray] | None = None  # outer only: one P(s0|x1^n,x2^n) per face
    state_entropy: list[float] | None = None

    def to_json(self) -> dict:
        d = {"direction": [float(v) for v in self.direction], "support": self.support,
             "pentagon": [self.pentagon.a, self.pentagon.b, self.pentagon.c],
             "pair": self.pair.to_json()}
        if self.state_laws is not None:
            d["state_laws"] = [law.tolist() for law in self.state_laws]
            d["state_entropy"] = list(self.state_entropy)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "CertificateEntry":
        laws = d.get("state_laws")
        return cls(np.array(d["direction"]), PolicyPair.from_json(d["pair"]),
                   RatePentagon(*d["pentagon"]), float(d["support"]),
                   None if laws is None else [np.array(x) for x in laws], d.get("state_entropy"))


@dataclass
class BoundResult:
    kind: str
    n: int
    region: RateRegion
    certificate: list[CertificateEntry]
    trace: dict
    corrections: dict
    search: str
    config: OptimizerConfig
    channel_name: str = ""

    @property
    def sum_face(self) -> float:
        return max((float(v.sum()) for v in self.region.vertices), default=0.0)

    def to_json(self) -> dict:
        return {"kind": self.kind, "n": self.n, "channel": self.channel_name, "search": self.search,
                "corrections": self.corrections, "config": self.config.to_json(),
                "region": self.region.to_json(), "sum_face": self.sum_face,
                "certificate": [c.to_json() for c in self.certificate], "trace": self.trace}

    @classmethod
    def from_json(cls, d: dict) -> "BoundResult":
        return cls(d["kind"], int(d["n"]), RateRegion.from_json(d["region"]),
                   [CertificateEntry.from_json(c) for c in d["certificate"]], d.get("trace", {}),
                   d.get("corrections", {}), d.get("search", ""),
                   OptimizerConfig.from_json(d.get("config", {})), d.get("channel", ""))


# ---------------------------------------------------------------------------
# Exact pentagons through the joint law (reference path)
# ---------------------------------------------------------------------------

def pentagon_for_policy(channel: ChannelSpec, pair: PolicyPair, s0_mode: InitialState | None = None,
                        budget: int = DEFAULT_JOINT_BUDGET) -> RatePentagon:
    """``(1/n) (I(X1->Y||X2), I(X2->Y||X1), I((X1,X2)->Y))`` from the exact joint."""
    joint = assemble_joint(channel, pair.p1, pair.p2, s0_mode, budget)
    a, b, c = directed_info(joint).totals()
    n = pair.n
    return RatePentagon(a / n, b / n, c / n)


def inner_pentagon_for_policy(channel: ChannelSpec, pair: PolicyPair,
                              budget: int = DEFAULT_JOINT_BUDGET) -> RatePentagon:
    """Per-initial-state pentagons intersected, minus ``log2|S| / n`` on every face, clamped at 0."""
    n = pair.n
    faces = np.array([_raw_faces(channel, pair, InitialState.known(s), budget)
                      for s in range(channel.s_size)])
    pen = math.log2(channel.s_size) / n
    return RatePentagon(*(np.maximum(faces.min(axis=0) - pen, 0.0)))


def _raw_faces(channel, pair, init, budget) -> np.ndarray:
    joint = assemble_joint(channel, pair.p1, pair.p2, init, budget)
    return np.array(directed_info(joint).totals()) / pair.n


def outer_faces_for_law(channel: ChannelSpec, pair: PolicyPair, laws: Sequence[np.ndarray]) -> np.ndarray:
    """Outer faces ``(I(.|S0) + H(S0)) / n`` for given per-face state laws, via the joint-law route."""
    n = pair.n
    q1, q2 = pair.p1.sequence_pmf(), pair.p2.sequence_pmf()
    out = np.zeros(3)
    for f, law in enumerate(laws):
        joint = assemble_joint_with_state_law(channel, q1, q2, np.asarray(law), n)
        di = directed_info(joint, condition_on_s0=True).totals()
        out[f] = (di[f] + entropy(joint.marginal(joint.ax_s0()))) / n
    return out


def reproduce_entry(channel: ChannelSpec, kind: str, entry: CertificateEntry,
                    budget: int = DEFAULT_JOINT_BUDGET) -> RatePentagon:
    """Re-derive a certificate pentagon from its policies through the exact joint."""
    if kind == "inner":
        return inner_pentagon_for_policy(channel, entry.pair, budget)
    if kind == "multi_letter":
        return pentagon_for_policy(channel, entry.pair, None, budget)
    return RatePentagon(*outer_faces_for_law(channel, entry.pair, entry.state_laws))


def certificate_residual(channel: ChannelSpec, result: BoundResult) -> float:
    worst = 0.0
    for e in result.certificate:
        p = reproduce_entry(channel, result.kind, e, result.config.joint_budget)
        worst = max(worst, abs(p.a - e.pentagon.a), abs(p.b - e.pentagon.b), abs(p.c - e.pentagon.c))
    return worst


# ---------------------------------------------------------------------------
# Batched evaluation
# ---------------------------------------------------------------------------

class _Evaluator:
    """Pentagons for batches of policies given as lifted banks (inner, multi-letter)."""

    def __init__(self, channel: ChannelSpec, n: int, kind: str):
        self.channel, self.n, self.kind = channel, n, kind
        self.kernel = np.ascontiguousarray(channel.kernel, dtype=float)
        self.s = channel.s_size

    def pentagons(self, bank1, bank2, i1, i2) -> np.ndarray:
        if self.kind == "inner":
            terms = kernels.di_terms(self.kernel, np.ones(self.s), self.n, bank1, bank2, i1, i2, True)
            faces = terms.sum(axis=-1) / self.n  # (B, S, 3)
            return np.maximum(faces.min(axis=1) - math.log2(self.s) / self.n, 0.0)
        terms = kernels.di_terms(self.kernel, self.channel.s0_weights(), self.n, bank1, bank2, i1, i2, False)
        return terms[:, 0].sum(axis=-1) / self.n


class _OuterEvaluator:
    """Outer pentagons for feedback-free input laws; inner maximization over ``P(s0|x)``."""

    def __init__(self, channel: ChannelSpec, n: int, cfg: OptimizerConfig):
        self.channel, self.n, self.cfg = channel, n, cfg
        self.shape = LawShape(n, channel.x1_size, channel.x2_size, channel.s_size, channel.y_size)
        w = channel_causal_law(channel, n, per_state=True)  # [s0][x1][x2][y]
        self.w = np.ascontiguousarray(w.transpose(1, 2, 0, 3))
        self.prior = channel.s0_weights()
        det_budget = max(1, min(cfg.budget, 4096))
        self.det_budget = det_budget

    def _base(self, q1, q2):
        qx = q1[:, :, None] * q2[:, None, :]
        return qx, qx[..., None, None] * self.w[None]

    def screen(self, q1, q2) -> np.ndarray:
        """Lower-bound pentagons from the starting laws alone (no ascent)."""
        qx, base = self._base(q1, q2)
        best = np.full((len(q1), 3), -np.inf)
        for law in start_laws(self.shape, len(q1), self.prior, 0):
            j = base * law[..., None]
            for f in range(3):
                best[:, f] = np.maximum(best[:, f], face_value(j, self.shape, f))
        return best / self.n

    def solve(self, q1, q2, max_iter: int | None = None):
        """Full ascent per face from every start; returns pentagons, laws and H(S0) per face."""
        qx, base = self._base(q1, q2)
        B = len(q1)
        starts = start_laws(self.shape, B, self.prior, self.det_budget)
        vals = np.full((B, 3), -np.inf)
        laws = np.zeros((B, 3) + qx.shape[1:] + (self.shape.s,))
        for f in range(3):
            for st in starts:
                sol = maximize_state_law(base, self.w, qx, st, self.shape, f,
                                         max_iter=max_iter or self.cfg.max_iter)
                better = sol.value > vals[:, f] + TIE_TOL
                vals[better, f] = sol.value[better]
                laws[better, f] = sol.law[better]
        ent = np.zeros((B, 3))
        for f in range(3):
            ps0 = np.einsum("abc,abcs->as", qx, laws[:, f])
            ent[:, f] = [entropy(r) for r in ps0]
        return vals / self.n, laws, ent


def _sequence_pmfs(policies: Sequence[CausalPolicy]) -> np.ndarray:
    return np.stack([p.sequence_pmf() for p in policies])


def _first_best(values: np.ndarray) -> int:
    best = values.max()
    return int(np.flatnonzero(values >= best - TIE_TOL)[0])


def _scan_directions(pent: np.ndarray, dirs: np.ndarray, chunk: int) -> tuple[np.ndarray, np.ndarray]:
    """Per direction, the best support and the first pentagon index attaining it."""
    best = np.full(len(dirs), -np.inf)
    for lo, hi in chunks(len(pent), chunk):
        best = np.maximum(best, pentagon_support(pent[lo:hi], dirs).max(axis=0))
    arg = np.full(len(dirs), -1, dtype=np.intp)
    for lo, hi in chunks(len(pent), chunk):
        sup = pentagon_support(pent[lo:hi], dirs)
        for d in np.flatnonzero(arg < 0):
            hit = np.flatnonzero(sup[:, d] >= best[d] - TIE_TOL)
            if hit.size:
                arg[d] = lo + hit[0]
    return best, arg


# ---------------------------------------------------------------------------
# Ascent over stochastic tables
# ---------------------------------------------------------------------------

class _TableLayout:
    """Maps raw policy tables (rows of pmfs) to the lifted kernel layout."""

    def __init__(self, channel: ChannelSpec, encoder: int, n: int):
        self.x = channel.x_size(encoder)
        self.z = channel.z_size(encoder)
        fmap = channel.feedback_map(encoder)
        Y, X, Z = channel.y_size, self.x, self.z
        gather, off, self.row_counts = [], 0, []
        for i in range(n):
            zmap = prefix_map(fmap, Y, Z, i)
            hx, hy, a = np.meshgrid(np.arange(X**i), np.arange(Y**i), np.arange(X), indexing="ij")
            gather.append((off + (hx * Z**i + zmap[hy]) * X + a).ravel())
            off += X**i * Z**i * X
            self.row_counts.append(X**i * Z**i)
        self.gather = np.concatenate(gather) if gather else np.zeros(0, dtype=np.intp)
        self.rows = sum(self.row_counts)
        self.n = n

    def bank(self, theta: np.ndarray) -> np.ndarray:
        """``theta`` is ``(B, rows, X)``; returns the ``(B, T)`` lifted bank."""
        return theta.reshape(theta.shape[0], -1)[:, self.gather]

    def to_policy(self, theta: np.ndarray, encoder: int) -> CausalPolicy:
        tabs, r = [], 0
        for i, cnt in enumerate(self.row_counts):
            tabs.append(theta[r:r + cnt].reshape(self.x**i, self.z**i, self.x))
            r += cnt
        return CausalPolicy(tuple(tabs), self.x, self.z, encoder)

    def from_policy(self, p: CausalPolicy) -> np.ndarray:
        return np.concatenate([t.reshape(-1, self.x) for t in p.tables])

    def sequence_pmf(self, theta: np.ndarray) -> np.ndarray:
        """Feedback-free input pmf over ``X^n`` for ``theta (B, rows, X)`` with z-size 1."""
        B = theta.shape[0]
        p = np.ones((B, 1))
        r = 0
        for i, cnt in enumerate(self.row_counts):
            t = theta[:, r:r + cnt]  # (B, X^i, X)
            p = (p[:, :, None] * t).reshape(B, -1)
            r += cnt
        return p


def project_rows(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of every last-axis row onto the probability simplex."""
    u = -np.sort(-v, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    k = np.arange(1, v.shape[-1] + 1)
    cond = u - css / k > 0
    rho = v.shape[-1] - 1 - np.argmax(cond[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1)
    return np.maximum(v - theta, 0.0)


class _AscentProblem:
    def __init__(self, channel: ChannelSpec, n: int, kind: str, cfg: OptimizerConfig):
        self.l1, self.l2 = _TableLayout(channel, 1, n), _TableLayout(channel, 2, n)
        self.kind, self.cfg = kind, cfg
        self.outer = _OuterEvaluator(channel, n, cfg) if kind == "outer" else None
        self.ev = None if kind == "outer" else _Evaluator(channel, n, kind)

    def pentagons(self, t1: np.ndarray, t2: np.ndarray, full: bool = False):
        if self.kind == "outer":
            q1, q2 = self.l1.sequence_pmf(t1), self.l2.sequence_pmf(t2)
            if full:
                return self.outer.solve(q1, q2)
            return self.outer.solve(q1, q2, max_iter=max(10, self.cfg.max_iter // 10))[0]
        idx = np.arange(len(t1))
        return self.ev.pentagons(self.l1.bank(t1), self.l2.bank(t2), idx, idx)

    # The outer objective is a max over state laws. Its gradient in the input
    # tables equals the gradient at the maximizing laws held fixed, so finite
    # differences use the current laws and only accepted steps re-solve.
    def _outer_fixed(self, t1, t2, laws, direction) -> np.ndarray:
        q1, q2 = self.l1.sequence_pmf(t1), self.l2.sequence_pmf(t2)
        _, base = self.outer._base(q1, q2)
        vals = np.stack([face_value(base * laws[f][None, ..., None], self.outer.shape, f)
                         for f in range(3)], axis=1) / self.outer.n
        return pentagon_support(vals, direction[None])[:, 0]

    def _outer_warm(self, t1, t2, laws, direction):
        """Re-solve the state laws starting from ``laws``; returns supports and new laws per candidate."""
        q1, q2 = self.l1.sequence_pmf(t1), self.l2.sequence_pmf(t2)
        qx, base = self.outer._base(q1, q2)
        B = len(t1)
        vals = np.zeros((B, 3))
        new = np.zeros((B, 3) + laws.shape[1:])
        for f in range(3):
            init = np.broadcast_to(laws[f], (B,) + laws.shape[1:]).copy()
            sol = maximize_state_law(base, self.outer.w, qx, init, self.outer.shape, f,
                                     max_iter=max(10, self.cfg.max_iter // 10))
            vals[:, f], new[:, f] = sol.value, sol.law
        return pentagon_support(vals / self.outer.n, direction[None])[:, 0], new

    def objective(self, t1, t2, direction) -> np.ndarray:
        return pentagon_support(self.pentagons(t1, t2), direction[None])[:, 0]

    def _probes(self, t1, t2, h):
        batch1, batch2 = [], []
        for enc, t in enumerate((t1, t2)):
            for r in range(t.shape[0]):
                for a in range(t.shape[1]):
                    moved = t.copy()
                    e = np.zeros(t.shape[1])
                    e[a] = 1.0
                    moved[r] = (1.0 - h) * moved[r] + h * e
                    batch1.append(moved if enc == 0 else t1)
                    batch2.append(t2 if enc == 0 else moved)
        return np.stack(batch1), np.stack(batch2)

    def run(self, direction: np.ndarray, t1: np.ndarray, t2: np.ndarray, h: float = 1e-6):
        """Projected finite-difference ascent; returns best tables, objective and iteration count."""
        outer = self.kind == "outer"
        laws = None
        if outer:
            v, all_laws, _ = self.pentagons(t1[None], t2[None], full=True)
            laws = all_laws[0]
            cur = float(pentagon_support(v, direction[None])[0, 0])
        else:
            cur = float(self.objective(t1[None], t2[None], direction)[0])
        step = 1.0
        it = 0
        for it in range(1, self.cfg.max_iter + 1):
            b1, b2 = self._probes(t1, t2, h)
            if outer:
                base = float(self._outer_fixed(t1[None], t2[None], laws, direction)[0])
                d = (self._outer_fixed(b1, b2, laws, direction) - base) / h
            else:
                d = (self.objective(b1, b2, direction) - cur) / h
            n1 = t1.size
            g1 = d[:n1].reshape(t1.shape)
            g2 = d[n1:].reshape(t2.shape)
            if not (np.any(np.abs(g1) > 0) or np.any(np.abs(g2) > 0)):
                break
            alphas = step * 0.5 ** np.arange(8)
            c1 = project_rows(t1[None] + alphas[:, None, None] * g1[None])
            c2 = project_rows(t2[None] + alphas[:, None, None] * g2[None])
            if outer:
                cv, cand_laws = self._outer_warm(c1, c2, laws, direction)
            else:
                cv = self.objective(c1, c2, direction)
            k = _first_best(cv)
            if cv[k] - cur <= self.cfg.tolerance:
                if step < 1e-8:
                    break
                step *= 0.125
                continue
            t1, t2, cur = c1[k], c2[k], float(cv[k])
            if outer:
                laws = cand_laws[k]
            step = min(alphas[k] * 2.0, 64.0)
        return t1, t2, cur, it


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------

def _check_scope(channel: ChannelSpec, n: int, kind: str, cfg: OptimizerConfig) -> None:
    if n < 1:
        raise ValueError("block length n must be at least 1")
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if kind == "outer" and channel.has_feedback:
        raise ValueError("the outer region is defined only for channels without feedback; "
                         "use with_feedback('none') or drop the outer bound")
    size = joint_size(channel, n)
    if size > cfg.joint_budget:
        raise BudgetExceeded("joint pmf entries", size, cfg.joint_budget, "reduce n")


def _lattice_sizes(channel: ChannelSpec, n: int, cfg: OptimizerConfig) -> tuple[int, int, int, int]:
    g1 = cfg.grid or channel.x1_size
    g2 = cfg.grid or channel.x2_size
    c1 = lattice_count(n, channel.x1_size, channel.z_size(1), g1)
    c2 = lattice_count(n, channel.x2_size, channel.z_size(2), g2)
    return g1, g2, c1, c2


def _choose_mode(channel: ChannelSpec, n: int, cfg: OptimizerConfig) -> str:
    _, _, c1, c2 = _lattice_sizes(channel, n, cfg)
    pairs = c1 * c2
    if cfg.mode == "exhaustive":
        if pairs > cfg.budget:
            raise BudgetExceeded("lattice policy pairs", pairs, cfg.budget, "use --mode ascent")
        return "exhaustive"
    if cfg.mode == "ascent":
        return "ascent"
    return "exhaustive" if pairs <= cfg.budget else "ascent"


def _corrections(channel: ChannelSpec, n: int, kind: str) -> dict:
    if kind == "inner":
        return {"state_penalty": math.log2(channel.s_size) / n, "clamped_at_zero": True}
    if kind == "outer":
        return {"state_entropy_bonus": "H(S0)/n per face, S0 law from the certificate"}
    return {}


def _exhaustive(channel: ChannelSpec, n: int, kind: str, cfg: OptimizerConfig):
    g1, g2, c1, c2 = _lattice_sizes(channel, n, cfg)
    pol1 = lattice_policies(n, channel.x1_size, channel.z_size(1), g1, 1)
    pol2 = lattice_policies(n, channel.x2_size, channel.z_size(2), g2, 2)
    dirs = quadrant_directions(cfg.directions)
    total = c1 * c2
    trace = {"evaluated_pairs": total, "policies": [c1, c2], "grid": [g1, g2]}
    if kind == "outer":
        ev = _OuterEvaluator(channel, n, cfg)
        q1, q2 = _sequence_pmfs(pol1), _sequence_pmfs(pol2)

        def screen(span):
            idx = np.arange(*span)
            return ev.screen(q1[idx // c2], q2[idx % c2])

        low = np.concatenate(pmap(screen, chunks(total, cfg.chunk)))
        sup = []
        for lo, hi in chunks(total, cfg.chunk):
            sup.append(pentagon_support(low[lo:hi], dirs))
        sup = np.concatenate(sup)  # (total, D)
        cand = set()
        for d in range(len(dirs)):
            order = np.argsort(-sup[:, d], kind="stable")
            cand.update(int(k) for k in order[:cfg.refine])
        cand = np.array(sorted(cand), dtype=np.intp)
        vals, laws, ent = ev.solve(q1[cand // c2], q2[cand % c2])
        best, arg = _scan_directions(vals, dirs, cfg.chunk)
        entries = []
        for d, k in enumerate(arg):
            k = int(k)
            pair = PolicyPair(pol1[cand[k] // c2], pol2[cand[k] % c2])
            entries.append(CertificateEntry(dirs[d], pair, RatePentagon(*vals[k]), float(best[d]),
                                            [laws[k, f] for f in range(3)], [float(v) for v in ent[k]]))
        trace.update({"screened_pairs": total, "refined_pairs": int(len(cand)),
                      "best_per_direction": [float(v) for v in best]})
        return entries, trace, "exhaustive-lattice-inputs, screened state-law ascent"

    ev = _Evaluator(channel, n, kind)
    b1, b2 = policy_bank(pol1, channel, 1), policy_bank(pol2, channel, 2)

    def run(span):
        idx = np.arange(*span)
        return ev.pentagons(b1, b2, idx // c2, idx % c2)

    pent = np.concatenate(pmap(run, chunks(total, cfg.chunk)))
    best, arg = _scan_directions(pent, dirs, cfg.chunk)
    entries = [CertificateEntry(dirs[d], PolicyPair(pol1[int(k) // c2], pol2[int(k) % c2]),
                                RatePentagon(*pent[int(k)]), float(best[d]))
               for d, k in enumerate(arg)]
    trace["best_per_direction"] = [float(v) for v in best]
    return entries, trace, "exhaustive-lattice"


def _ascent(channel: ChannelSpec, n: int, kind: str, cfg: OptimizerConfig):
    prob = _AscentProblem(channel, n, kind, cfg)
    dirs = quadrant_directions(cfg.directions)
    seeds = spawn_seeds(cfg.seed, len(dirs) * cfg.restarts)
    units = [(d, r) for d in range(len(dirs)) for r in range(cfg.restarts)]
    x1, x2 = prob.l1.x, prob.l2.x

    def unit(dr):
        d, r = dr
        if r == 0:
            t1 = np.full((prob.l1.rows, x1), 1.0 / x1)
            t2 = np.full((prob.l2.rows, x2), 1.0 / x2)
        else:
            rng = np.random.default_rng(seeds[d * cfg.restarts + r])
            t1 = rng.dirichlet(np.ones(x1), size=prob.l1.rows)
            t2 = rng.dirichlet(np.ones(x2), size=prob.l2.rows)
        t1, t2, val, it = prob.run(dirs[d], t1, t2)
        return t1, t2, val, it

    results = pmap(unit, units)
    entries, per_dir = [], []
    for d in range(len(dirs)):
        block = results[d * cfg.restarts:(d + 1) * cfg.restarts]
        vals = np.array([b[2] for b in block])
        r = _first_best(vals)
        t1, t2 = block[r][0], block[r][1]
        pair = PolicyPair(prob.l1.to_policy(t1, 1), prob.l2.to_policy(t2, 2))
        if kind == "outer":
            v, laws, ent = prob.pentagons(t1[None], t2[None], full=True)
            pent, laws_k, ent_k = v[0], [laws[0, f] for f in range(3)], [float(x) for x in ent[0]]
        else:
            pent, laws_k, ent_k = prob.pentagons(t1[None], t2[None])[0], None, None
        sup = float(pentagon_support(pent[None], dirs[d][None])[0, 0])
        entries.append(CertificateEntry(dirs[d], pair, RatePentagon(*pent), sup, laws_k, ent_k))
        per_dir.append({"restart": r, "objective": float(vals[r]),
                        "iterations": [int(b[3]) for b in block]})
    return entries, {"restarts": cfg.restarts, "per_direction": per_dir}, "ascent"


def _compute(channel: ChannelSpec, n: int, kind: str, cfg: OptimizerConfig | None) -> BoundResult:
    cfg = cfg or OptimizerConfig()
    _check_scope(channel, n, kind, cfg)
    mode = _choose_mode(channel, n, cfg)
    if mode == "exhaustive":
        entries, trace, search = _exhaustive(channel, n, kind, cfg)
    else:
        entries, trace, search = _ascent(channel, n, kind, cfg)
    region = hull_of_union([e.pentagon.to_region() for e in entries])
    region = RateRegion(region.vertices, {"kind": kind, "n": n, "channel": channel.name})
    return BoundResult(kind, n, region, entries, trace, _corrections(channel, n, kind), search, cfg,
                       channel.name)


def compute_inner(channel: ChannelSpec, n: int, cfg: OptimizerConfig | None = None) -> BoundResult:
    """Achievable region: worst initial state, ``log2|S|/n`` penalty, faces clamped at 0."""
    return _compute(channel, n, "inner", cfg)


def compute_multi_letter(channel: ChannelSpec, n: int, cfg: OptimizerConfig | None = None) -> BoundResult:
    """Region with the initial state drawn from the channel's initial law and no corrections."""
    return _compute(channel, n, "multi_letter", cfg)


def compute_outer(channel: ChannelSpec, n: int, cfg: OptimizerConfig | None = None) -> BoundResult:
    """Outer region for channels without feedback (input-dependent initial state, ``+H(S0)/n``)."""
    return _compute(channel, n, "outer", cfg)


# ---------------------------------------------------------------------------
# Sandwich diagnostics
# ---------------------------------------------------------------------------

@dataclass
class SandwichReport:
    channel: str
    indecomposable: bool
    inner: list[BoundResult]
    outer: list[BoundResult]
    gaps: list[float]
    superadditivity: dict | None
    subadditivity: dict | None
    claim: str
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"channel": self.channel, "indecomposable": self.indecomposable, "claim": self.claim,
                "n": [r.n for r in self.inner], "gaps": self.gaps,
                "inner_sum_faces": [r.sum_face for r in self.inner],
                "outer_sum_faces": [r.sum_face for r in self.outer],
                "superadditivity": self.superadditivity, "subadditivity": self.subadditivity,
                "notes": self.notes}


def sandwich_report(channel: ChannelSpec, n_max: int, cfg: OptimizerConfig | None = None,
                    tolerance: float = 1e-6) -> SandwichReport:
    cfg = cfg or OptimizerConfig()
    ns = list(range(1, n_max + 1))
    inner = [compute_inner(channel, n, cfg) for n in ns]
    notes = []
    if channel.has_feedback:
        outer, gaps, sub = [], [], None
        notes.append("channel has feedback: outer region undefined, report is inner-only")
    else:
        outer = [compute_outer(channel, n, cfg) for n in ns]
        gaps = [hausdorff(i.region, o.region) for i, o in zip(inner, outer)]
        sub = check_subadditive([(r.n, r.region) for r in outer], tolerance).to_json() if n_max >= 2 else None
    sup = check_superadditive([(r.n, r.region) for r in inner], tolerance).to_json() if n_max >= 2 else None
    if channel.has_feedback:
        claim = "not applicable (feedback)"
    elif channel.indecomposable:
        claim = "limits coincide (caller asserts indecomposability)"
    else:
        claim = "no convergence claim (indecomposability not asserted)"
    return SandwichReport(channel.name, channel.indecomposable, inner, outer, gaps, sup, sub, claim, notes)
