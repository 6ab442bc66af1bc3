"""Finite policy families: grid (lattice) enumeration and lifted table banks.

A lattice policy has every conditional row on the grid ``{k/g}`` of the
probability simplex. Rows at histories that the policy itself can never reach
are irrelevant to every law it induces, so enumeration fixes them to a point
mass on symbol 0 and each distinct induced law is produced exactly once.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np

from .causal import BudgetExceeded, CausalPolicy
from .channel import ChannelSpec


@lru_cache(maxsize=None)
def grid_points(x_size: int, grid: int) -> np.ndarray:
    """All pmfs over ``x_size`` symbols with entries in multiples of ``1/grid``.

    Ordered by decreasing mass on symbol 0, so point masses come first and
    last, e.g. ``[(1, 0), (.5, .5), (0, 1)]`` for ``x_size=2, grid=2``.
    """
    def comps(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in comps(total - first, parts - 1):
                yield (first,) + rest

    pts = np.array(list(comps(grid, x_size)), dtype=float) / grid
    pts.setflags(write=False)
    return pts


def lattice_count(n: int, x_size: int, z_size: int, grid: int) -> int:
    """Number of distinct lattice policies of horizon ``n``."""
    pts = grid_points(x_size, grid)
    supp = (pts > 0).sum(axis=1)
    count = 1
    for _ in range(n):
        count = int(sum(count ** int(k * z_size) for k in supp))
    return count


def lattice_policies(n: int, x_size: int, z_size: int, grid: int, encoder: int = 1,
                     limit: int | None = None) -> list[CausalPolicy]:
    """Enumerate every distinct lattice policy (see module docstring)."""
    total = lattice_count(n, x_size, z_size, grid)
    if limit is not None and total > limit:
        raise BudgetExceeded("lattice policies", total, limit)
    pts = grid_points(x_size, grid)
    filler = np.zeros(x_size)
    filler[0] = 1.0
    out: list[CausalPolicy] = []

    def rec(i: int, tables: list[np.ndarray], reach: np.ndarray):
        if i == n:
            out.append(CausalPolicy(tuple(tables), x_size, z_size, encoder))
            return
        rows = [tuple(r) for r in np.argwhere(reach)]
        for choice in product(range(len(pts)), repeat=len(rows)):
            t = np.broadcast_to(filler, (x_size**i, z_size**i, x_size)).copy()
            for (hx, hz), c in zip(rows, choice):
                t[hx, hz] = pts[c]
            # (x^{i+1}, z^{i+1}) is reachable when its parent row is and puts mass on x_{i+1}
            nxt = (reach[:, :, None] & (t > 0))  # [hx, hz, x]
            nxt = nxt.transpose(0, 2, 1).reshape(x_size ** (i + 1), z_size**i)
            nxt = np.repeat(nxt, z_size, axis=1)
            rec(i + 1, tables + [t], nxt)

    rec(0, [], np.ones((1, 1), dtype=bool))
    return out


def flat_lifted(policy: CausalPolicy, channel: ChannelSpec, encoder: int) -> np.ndarray:
    """Concatenated lifted tables of one policy, the row layout used by the kernels."""
    tabs = policy.lifted(channel.feedback_map(encoder), channel.y_size)
    return np.concatenate([t.ravel() for t in tabs]) if tabs else np.zeros(0)


def policy_bank(policies: list[CausalPolicy], channel: ChannelSpec, encoder: int) -> np.ndarray:
    """Stack ``flat_lifted`` for many policies into a ``(P, T)`` array."""
    return np.stack([flat_lifted(p, channel, encoder) for p in policies])
