"""Time the compiled kernels against the numpy fallback.

Run with ``python benchmarks/bench_kernels.py``. Each kernel is fed identical
inputs through both backends; the script checks that the outputs agree and
prints the median wall time and the speed-up.
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from fsmac import _kernels_py
from fsmac.channel import build_additive, symmetric_markov_noise
from fsmac.kernels import compiled_available
from fsmac.policies import lattice_policies, policy_bank


def _timed(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def _di_case(n, pairs):
    ch = build_additive(2, symmetric_markov_noise(0.9))
    pol = lattice_policies(n, 2, 1, 2, 1)[: int(np.sqrt(pairs)) + 1]
    b1 = policy_bank(pol, ch, 1)
    b2 = policy_bank(lattice_policies(n, 2, 1, 2, 2)[: len(pol)], ch, 2)
    i1, i2 = np.divmod(np.arange(min(pairs, len(pol) ** 2)), len(pol))
    return ch, b1, b2, i1, i2


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--pairs", type=int, default=2048)
    ap.add_argument("--messages", type=int, default=128)
    args = ap.parse_args(argv)
    if not compiled_available():
        print("compiled extension not built; only the fallback can run")
        return 1
    from fsmac import _kernels as cy

    rows = []
    for n in (2, 3):
        ch, b1, b2, i1, i2 = _di_case(n, args.pairs)
        k = np.asarray(ch.kernel)
        w = np.ones(ch.s_size) / ch.s_size
        ins = (k, w, n, b1, b2, i1, i2)
        t_py, r_py = _timed(lambda: _kernels_py.di_terms(*ins, per_state=True), args.repeat)
        t_cy, r_cy = _timed(lambda: cy.di_terms(*ins, per_state=True), args.repeat)
        assert np.allclose(np.nan_to_num(r_py), np.nan_to_num(r_cy), atol=1e-10)
        rows.append((f"di_terms n={n} pairs={len(i1)}", t_py, t_cy))

    rng = np.random.default_rng(0)
    ch = build_additive(2, symmetric_markov_noise(0.9))
    k = np.asarray(ch.kernel)
    for n in (8, 12):
        m = args.messages
        xs1 = rng.integers(0, 2, size=(m, n))
        xs2 = rng.integers(0, 2, size=(m, n))
        y = rng.integers(0, 2, size=n)
        w = ch.s0_weights()
        t_py, r_py = _timed(lambda: _kernels_py.ml_decode(k, w, xs1, xs2, y), args.repeat)
        t_cy, r_cy = _timed(lambda: cy.ml_decode(k, w, xs1, xs2, y), args.repeat)
        assert tuple(r_py[:2]) == tuple(r_cy[:2]) and np.isclose(r_py[2], r_cy[2], rtol=1e-10)
        rows.append((f"ml_decode n={n} pairs={m * m}", t_py, t_cy))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel'.ljust(width)}  {'python_s':>10}  {'cython_s':>10}  {'speedup':>8}")
    for name, t_py, t_cy in rows:
        print(f"{name.ljust(width)}  {t_py:10.4f}  {t_cy:10.4f}  {t_py / t_cy:8.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
