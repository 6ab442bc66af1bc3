"""Finite-state multiple-access channel model and constructors.

A channel is a kernel ``P(y, s' | x1, x2, s)`` stored as a dense array indexed
``[s][x1][x2][y][s']`` together with two deterministic feedback maps
``z_l = f_l(y)``.  Null feedback is a map onto a singleton alphabet and perfect
feedback is the identity map.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

INPUT_TOL = 1e-9
INTERNAL_TOL = 1e-12


class ChannelValidationError(ValueError):
    """Raised when a channel description violates its invariants."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def _frozen(a: Any, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class InitialState:
    """Either a known initial state index or a pmf over states."""

    mode: str  # "known" | "distribution"
    state: int | None = None
    pmf: tuple[float, ...] | None = None

    @classmethod
    def known(cls, s0: int) -> "InitialState":
        return cls("known", state=int(s0))

    @classmethod
    def distribution(cls, pmf: Sequence[float]) -> "InitialState":
        return cls("distribution", pmf=tuple(float(p) for p in pmf))

    def weights(self, s_size: int) -> np.ndarray:
        if self.mode == "known":
            w = np.zeros(s_size)
            w[self.state] = 1.0
            return w
        return np.asarray(self.pmf, dtype=float)

    def to_json(self) -> dict:
        if self.mode == "known":
            return {"mode": "known", "state": self.state}
        return {"mode": "distribution", "pmf": list(self.pmf)}

    @classmethod
    def from_json(cls, d: dict) -> "InitialState":
        if d["mode"] == "known":
            return cls.known(d["state"])
        if d["mode"] == "distribution":
            return cls.distribution(d["pmf"])
        raise ValueError(f"unknown initial_state mode {d['mode']!r}")


@dataclass(frozen=True)
class ChannelSpec:
    x1_size: int
    x2_size: int
    y_size: int
    s_size: int
    kernel: np.ndarray
    initial_state: InitialState
    feedback_1: tuple[int, ...]
    feedback_2: tuple[int, ...]
    z1_size: int = 0
    z2_size: int = 0
    name: str = ""
    indecomposable: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kernel", _frozen(self.kernel))
        object.__setattr__(self, "feedback_1", tuple(int(z) for z in self.feedback_1))
        object.__setattr__(self, "feedback_2", tuple(int(z) for z in self.feedback_2))
        if not self.z1_size:
            object.__setattr__(self, "z1_size", max(self.feedback_1, default=0) + 1)
        if not self.z2_size:
            object.__setattr__(self, "z2_size", max(self.feedback_2, default=0) + 1)

    @property
    def has_feedback(self) -> bool:
        return self.z1_size > 1 or self.z2_size > 1

    def s0_weights(self) -> np.ndarray:
        return self.initial_state.weights(self.s_size)

    def with_feedback(self, kind: str) -> "ChannelSpec":
        """Copy of this channel with ``"none"`` or ``"perfect"`` feedback to both encoders."""
        f, z = _feedback_map(kind, self.y_size)
        return replace(self, feedback_1=f, feedback_2=f, z1_size=z, z2_size=z)

    def with_initial_state(self, initial: InitialState) -> "ChannelSpec":
        return replace(self, initial_state=initial)

    def feedback_map(self, encoder: int) -> np.ndarray:
        return np.asarray(self.feedback_1 if encoder == 1 else self.feedback_2, dtype=np.intp)

    def z_size(self, encoder: int) -> int:
        return self.z1_size if encoder == 1 else self.z2_size

    def x_size(self, encoder: int) -> int:
        return self.x1_size if encoder == 1 else self.x2_size

    def to_json(self) -> dict:
        d = {
            "name": self.name,
            "x1_size": self.x1_size,
            "x2_size": self.x2_size,
            "y_size": self.y_size,
            "s_size": self.s_size,
            "kernel": self.kernel.tolist(),
            "initial_state": self.initial_state.to_json(),
            "feedback_1": list(self.feedback_1),
            "feedback_2": list(self.feedback_2),
            "z1_size": self.z1_size,
            "z2_size": self.z2_size,
            "indecomposable": self.indecomposable,
        }
        if self.meta:
            d["meta"] = self.meta
        return d


def _feedback_map(kind: str, y_size: int) -> tuple[tuple[int, ...], int]:
    if kind == "none":
        return (0,) * y_size, 1
    if kind == "perfect":
        return tuple(range(y_size)), y_size
    raise ValueError(f"feedback kind must be 'none' or 'perfect', got {kind!r}")


def validate(spec: ChannelSpec) -> list[str]:
    """Return the list of violated invariants; empty means valid."""
    out = []
    shape = (spec.s_size, spec.x1_size, spec.x2_size, spec.y_size, spec.s_size)
    k = np.asarray(spec.kernel)
    if k.shape != shape:
        return [f"kernel shape {k.shape} != expected {shape}"]
    if not np.all(np.isfinite(k)):
        out.append("kernel contains non-finite entries")
    for idx in zip(*np.nonzero((k < 0) | (k > 1))):
        out.append(f"kernel entry {tuple(int(i) for i in idx)} = {k[idx]:.6g} outside [0,1]")
    sums = k.sum(axis=(3, 4))
    for idx in zip(*np.nonzero(np.abs(sums - 1.0) > INPUT_TOL)):
        s, x1, x2 = (int(i) for i in idx)
        out.append(f"kernel row (s={s}, x1={x1}, x2={x2}) sums to {sums[idx]:.12g}, not 1")
    for l, fmap, zs in ((1, spec.feedback_1, spec.z1_size), (2, spec.feedback_2, spec.z2_size)):
        if len(fmap) != spec.y_size:
            out.append(f"feedback_{l} has length {len(fmap)}, expected y_size={spec.y_size}")
        bad = [z for z in fmap if not 0 <= z < zs]
        if bad:
            out.append(f"feedback_{l} values {bad} outside alphabet of size {zs}")
    init = spec.initial_state
    if init.mode == "known":
        if not 0 <= (init.state if init.state is not None else -1) < spec.s_size:
            out.append(f"initial state {init.state} outside [0, {spec.s_size})")
    else:
        pmf = np.asarray(init.pmf, dtype=float)
        if pmf.shape != (spec.s_size,):
            out.append(f"initial pmf has length {pmf.size}, expected {spec.s_size}")
        elif np.any(pmf < 0) or abs(pmf.sum() - 1) > INPUT_TOL:
            out.append("initial pmf is not a probability vector")
    return out


def check_pmf_rows(mat: np.ndarray, what: str, tol: float = INPUT_TOL) -> None:
    """Raise ``ValueError`` naming the first row of ``mat`` that is not a pmf."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    for i, row in enumerate(mat.reshape(-1, mat.shape[-1])):
        if np.any(row < -tol) or abs(row.sum() - 1.0) > tol:
            raise ValueError(f"{what}: row {i} is not a pmf (sum={row.sum():.12g})")


# ---------------------------------------------------------------------------
# Markov-state channels
# ---------------------------------------------------------------------------

def is_irreducible(chain: np.ndarray) -> bool:
    n = chain.shape[0]
    adj = chain > 0
    for start in range(n):
        seen = {start}
        todo = deque([start])
        while todo:
            u = todo.popleft()
            for v in np.nonzero(adj[u])[0]:
                if v not in seen:
                    seen.add(int(v))
                    todo.append(int(v))
        if len(seen) < n:
            return False
    return True


def stationary_distribution(chain: np.ndarray) -> np.ndarray:
    chain = np.asarray(chain, dtype=float)
    n = chain.shape[0]
    a = np.vstack([chain.T - np.eye(n), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi = np.linalg.lstsq(a, b, rcond=None)[0]
    # One power step flushes the least-squares residual.
    for _ in range(3):
        pi = np.clip(pi, 0.0, None)
        pi = pi / pi.sum()
        pi = pi @ chain
    return pi / pi.sum()


@dataclass(frozen=True)
class MarkovStateChannel:
    """Channel whose state evolves autonomously: P(s'|s) P(y|x1,x2,s)."""

    state_chain: np.ndarray
    emission: np.ndarray  # [x1][x2][s_prev][y]
    stationary_dist: np.ndarray

    def __post_init__(self):
        for name in ("state_chain", "emission", "stationary_dist"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def kernel(self) -> np.ndarray:
        # kernel[s][x1][x2][y][s'] = chain[s][s'] * emission[x1][x2][s][y]
        return np.einsum("st,absy->sabyt", self.state_chain, self.emission)

    def to_spec(self, feedback: str = "none", name: str = "", indecomposable: bool = False,
                initial: InitialState | None = None) -> ChannelSpec:
        x1, x2, s, y = self.emission.shape
        f, z = _feedback_map(feedback, y)
        return ChannelSpec(
            x1_size=x1, x2_size=x2, y_size=y, s_size=s,
            kernel=self.kernel,
            initial_state=initial or InitialState.distribution(self.stationary_dist),
            feedback_1=f, feedback_2=f, z1_size=z, z2_size=z,
            name=name, indecomposable=indecomposable,
        )


def build_markov_state(state_chain, emission) -> MarkovStateChannel:
    """Build a Markov-state channel; the state chain must be irreducible."""
    chain = np.asarray(state_chain, dtype=float)
    em = np.asarray(emission, dtype=float)
    if chain.ndim != 2 or chain.shape[0] != chain.shape[1]:
        raise ValueError(f"state_chain must be square, got shape {chain.shape}")
    if em.ndim != 4 or em.shape[2] != chain.shape[0]:
        raise ValueError(f"emission must be [x1][x2][s][y] with |S|={chain.shape[0]}, got {em.shape}")
    check_pmf_rows(chain, "state_chain")
    check_pmf_rows(em, "emission")
    if not is_irreducible(chain):
        raise ValueError("state chain is reducible; an ergodic state process is required")
    pi = stationary_distribution(chain)
    if np.max(np.abs(pi @ chain - pi)) > INTERNAL_TOL:
        raise ValueError("stationary distribution did not converge")
    return MarkovStateChannel(chain, em, pi)


# ---------------------------------------------------------------------------
# Additive mod-q noise
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IidNoise:
    pmf: tuple[float, ...]

    def to_json(self) -> dict:
        return {"type": "iid", "pmf": list(self.pmf)}


@dataclass(frozen=True)
class MarkovNoise:
    """Noise emitted from a hidden chain: ``v_i ~ emission[s_{i-1}]``, ``s_i ~ transition[s_{i-1}]``."""

    transition: tuple[tuple[float, ...], ...]
    emission: tuple[tuple[float, ...], ...]

    def to_json(self) -> dict:
        return {"type": "markov", "transition": [list(r) for r in self.transition],
                "emission": [list(r) for r in self.emission]}


def iid_noise(pmf: Sequence[float]) -> IidNoise:
    return IidNoise(tuple(float(p) for p in pmf))


def markov_noise(transition, emission=None) -> MarkovNoise:
    """Markov noise model; ``emission=None`` means the symbol is the state itself."""
    t = np.asarray(transition, dtype=float)
    e = np.eye(t.shape[0]) if emission is None else np.asarray(emission, dtype=float)
    return MarkovNoise(tuple(map(tuple, t.tolist())), tuple(map(tuple, e.tolist())))


def binary_noise(p: float) -> IidNoise:
    return iid_noise([1.0 - p, p])


def symmetric_markov_noise(stay: float) -> MarkovNoise:
    return markov_noise([[stay, 1 - stay], [1 - stay, stay]])


def noise_from_json(d: dict):
    if d["type"] == "iid":
        return iid_noise(d["pmf"])
    if d["type"] == "markov":
        return markov_noise(d["transition"], d["emission"])
    raise ValueError(f"unknown noise model type {d['type']!r}")


@dataclass(frozen=True)
class AdditiveNoiseMAC:
    q: int
    noise_model: IidNoise | MarkovNoise


def _check_noise(q: int, noise) -> None:
    if isinstance(noise, IidNoise):
        pmf = np.asarray(noise.pmf)
        if pmf.shape != (q,):
            raise ValueError(f"iid noise pmf has length {pmf.size}, expected q={q}")
        check_pmf_rows(pmf, "noise pmf")
    elif isinstance(noise, MarkovNoise):
        t = np.asarray(noise.transition)
        e = np.asarray(noise.emission)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError("noise transition must be square")
        if e.shape != (t.shape[0], q):
            raise ValueError(f"noise emission must have shape ({t.shape[0]}, {q}), got {e.shape}")
        check_pmf_rows(t, "noise transition")
        check_pmf_rows(e, "noise emission")
    else:
        raise TypeError(f"unsupported noise model {type(noise).__name__}")


def additive_emission(q: int, noise) -> tuple[np.ndarray, np.ndarray]:
    """Return (state_chain, emission[x1][x2][s][y]) for ``y = x1 + x2 + v mod q``."""
    _check_noise(q, noise)
    if isinstance(noise, IidNoise):
        chain = np.ones((1, 1))
        vrows = np.asarray(noise.pmf, dtype=float)[None, :]
    else:
        chain = np.asarray(noise.transition, dtype=float)
        vrows = np.asarray(noise.emission, dtype=float)
    k = chain.shape[0]
    em = np.zeros((q, q, k, q))
    for x1 in range(q):
        for x2 in range(q):
            for v in range(q):
                em[x1, x2, :, (x1 + x2 + v) % q] += vrows[:, v]
    return chain, em


def build_additive(q: int, noise_model, feedback: str = "none", name: str = "") -> ChannelSpec:
    """Additive mod-q MAC ``y = x1 + x2 + v (mod q)``.

    iid noise gives a single-state channel.  Markov noise uses the noise chain
    as channel state, started from its stationary law.
    """
    if q < 2:
        raise ValueError(f"q must be >= 2, got {q}")
    chain, em = additive_emission(q, noise_model)
    if isinstance(noise_model, MarkovNoise):
        msc = build_markov_state(chain, em)
    else:
        msc = MarkovStateChannel(chain, em, np.ones(1))
    spec = msc.to_spec(feedback=feedback, name=name or f"additive-mod{q}")
    return replace(spec, meta={"additive": {"q": q, "noise": noise_model.to_json()}})


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def _dense_kernel(nested, shape: tuple[int, ...]) -> np.ndarray:
    """Densify the nested kernel list, naming the (s, x1, x2) row that is malformed."""
    out = np.zeros(shape)
    s_n, x1_n, x2_n, y_n, t_n = shape
    problems = []
    if len(nested) != s_n:
        raise ChannelValidationError([f"kernel has {len(nested)} state blocks, expected {s_n}"])
    for s in range(s_n):
        for x1 in range(x1_n):
            for x2 in range(x2_n):
                try:
                    row = np.asarray(nested[s][x1][x2], dtype=float)
                except (IndexError, ValueError, TypeError):
                    row = None
                if row is None or row.shape != (y_n, t_n):
                    problems.append(f"kernel row (s={s}, x1={x1}, x2={x2}) is missing or has wrong shape")
                    continue
                out[s, x1, x2] = row
    if problems:
        raise ChannelValidationError(problems)
    return out


def channel_from_json(d: dict, check: bool = True) -> ChannelSpec:
    shape = (int(d["s_size"]), int(d["x1_size"]), int(d["x2_size"]), int(d["y_size"]), int(d["s_size"]))
    spec = ChannelSpec(
        x1_size=shape[1], x2_size=shape[2], y_size=shape[3], s_size=shape[0],
        kernel=_dense_kernel(d["kernel"], shape),
        initial_state=InitialState.from_json(d.get("initial_state", {"mode": "known", "state": 0})),
        feedback_1=d.get("feedback_1", [0] * int(d["y_size"])),
        feedback_2=d.get("feedback_2", [0] * int(d["y_size"])),
        z1_size=int(d.get("z1_size", 0)), z2_size=int(d.get("z2_size", 0)),
        name=d.get("name", ""), indecomposable=bool(d.get("indecomposable", False)),
        meta=d.get("meta", {}),
    )
    if check:
        problems = validate(spec)
        if problems:
            raise ChannelValidationError(problems)
    return spec


def load_channel(path: str | Path) -> ChannelSpec:
    with open(path) as fh:
        d = json.load(fh)
    try:
        return channel_from_json(d)
    except (KeyError, TypeError) as exc:
        raise ChannelValidationError([f"malformed channel file: {exc!r}"]) from exc
    except ValueError as exc:
        if isinstance(exc, ChannelValidationError):
            raise
        raise ChannelValidationError([str(exc)]) from exc


def save_channel(spec: ChannelSpec, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(spec.to_json(), fh, indent=1)
