"""Acceptance criteria 1-7 as plain functions, plus an artifact dumper.

Each ``criterion_k()`` returns a :class:`Outcome` holding the verdict, a one
line summary and a JSON-serializable artifact without timing data. Running
``python tests/acceptance.py --dump DIR`` writes every artifact to ``DIR`` so
two runs under different thread counts can be compared byte for byte.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))

from helpers import informative_channel, random_channel, random_pentagon, useless_channel  # noqa: E402

from fsmac import additive, bounds, montecarlo  # noqa: E402
from fsmac._info import binary_entropy  # noqa: E402
from fsmac.causal import CausalPolicy, assemble_joint, check_causal_identities  # noqa: E402
from fsmac.channel import binary_noise, build_additive, symmetric_markov_noise  # noqa: E402
from fsmac.regions import (check_subadditive, check_superadditive, hausdorff, minkowski_sum,  # noqa: E402
                           minkowski_sum_oracle, pentagon_support, quadrant_directions, RatePentagon)

SEED = 20240601


@dataclass
class Outcome:
    ok: bool
    summary: str
    artifact: object
    runtime: float = 0.0
    parts: dict = field(default_factory=dict)


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    out.runtime = time.perf_counter() - t0
    return out


def criterion_1() -> Outcome:
    cfg = bounds.OptimizerConfig(mode="exhaustive")
    rows, art, ok = [], [], True
    for p in (0.0, 0.1, 0.25):
        t0 = time.perf_counter()
        res = bounds.compute_multi_letter(build_additive(2, binary_noise(p)), 1, cfg)
        dt = time.perf_counter() - t0
        want = 1.0 - binary_entropy(p)
        good = abs(res.sum_face - want) <= 1e-6 and dt < 1.0
        ok &= good
        rows.append(f"p={p}: {res.sum_face:.6f} vs {want:.6f} ({dt:.3f}s)")
        art.append(res.to_json())
    return Outcome(ok, "; ".join(rows), art)


def criterion_2() -> Outcome:
    rep = additive.verify_feedback_invariance(2, binary_noise(0.25), 2)
    bound = 2 * (1.0 - binary_entropy(0.25))
    within = rep.max_faces[2] <= bound + 1e-9
    attained = rep.uniform_faces[2] >= rep.max_faces[2] - 1e-9
    return Outcome(within and attained, f"{rep.pairs} feedback pairs, max sum {rep.max_faces[2]:.9f} "
                   f"<= {bound:.9f}, uniform attains: {attained}", rep.to_json())


def criterion_3(instances: int = 1000) -> Outcome:
    seeds = np.random.SeedSequence(SEED + 3).spawn(instances)
    worst = {"decomposition": 0.0, "functional": 0.0, "null_feedback": 0.0, "state_slack": -math.inf}
    ok = True
    null_count = 0
    for k, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        n = int(rng.integers(1, 4))
        s = int(rng.integers(1, 3))
        fb = "perfect" if rng.random() < 0.5 else "none"
        ch = random_channel(rng, s_size=s, feedback=fb)
        z = ch.z1_size
        p1 = CausalPolicy.random(rng, n, 2, z, 1)
        p2 = CausalPolicy.random(rng, n, 2, z, 2)
        rep = check_causal_identities(assemble_joint(ch, p1, p2))
        worst["decomposition"] = max(worst["decomposition"], rep.residual_decomposition)
        worst["functional"] = max(worst["functional"], rep.residual_functional)
        if rep.residual_no_feedback is not None:
            null_count += 1
            worst["null_feedback"] = max(worst["null_feedback"], rep.residual_no_feedback)
        worst["state_slack"] = max(worst["state_slack"], rep.state_gap - rep.state_entropy)
        ok &= rep.state_bound_ok
    ok &= (worst["decomposition"] < 1e-12 and worst["functional"] < 1e-10 and worst["null_feedback"] <= 1e-10
           and null_count > 0)
    art = {"instances": instances, "null_feedback_instances": null_count, **worst}
    return Outcome(ok, f"max residuals: decomposition {worst['decomposition']:.2e}, functional "
                   f"{worst['functional']:.2e}, plain-MI {worst['null_feedback']:.2e} on {null_count} "
                   f"null-feedback cases, "
                   f"state-gap slack {worst['state_slack']:.3f}", art)


def criterion_4(pairs: int = 1000) -> Outcome:
    rng = np.random.default_rng(SEED + 4)
    dirs = quadrant_directions(64)
    worst_oracle = worst_param = 0.0
    support_exact = True
    for _ in range(pairs):
        p, q = random_pentagon(rng), random_pentagon(rng)
        a, b = p.to_region(), q.to_region()
        m = minkowski_sum(a, b)
        worst_oracle = max(worst_oracle, hausdorff(m, minkowski_sum_oracle(a, b)))
        tp, tq = RatePentagon(*p.tight()), RatePentagon(*q.tight())
        worst_param = max(worst_param, hausdorff(m, (tp + tq).to_region()))
        v = p.vertices()
        scan = np.max(v[:, :1] * dirs[:, 0] + v[:, 1:] * dirs[:, 1], axis=0)
        support_exact &= bool(np.array_equal(scan, pentagon_support(np.array([p.a, p.b, p.c]), dirs)))
    ok = worst_oracle <= 1e-12 and worst_param <= 1e-12 and support_exact
    return Outcome(ok, f"oracle gap {worst_oracle:.1e}, parameter-sum gap {worst_param:.1e}, "
                   f"support exact: {support_exact}",
                   {"pairs": pairs, "oracle": worst_oracle, "param_sum": worst_param,
                    "support_exact": support_exact})


def criterion_5() -> Outcome:
    ch = build_additive(2, symmetric_markov_noise(0.9), name="markov-0.9")
    cfg = bounds.OptimizerConfig(mode="exhaustive")
    inner = [bounds.compute_inner(ch, n, cfg) for n in (1, 2, 3)]
    outer = [bounds.compute_outer(ch, n, cfg) for n in (1, 2, 3)]
    sup = check_superadditive([(r.n, r.region) for r in inner], 1e-6)
    sub = check_subadditive([(r.n, r.region) for r in outer], 1e-6)
    art = {"inner": [r.to_json() for r in inner], "outer": [r.to_json() for r in outer],
           "superadditive": sup.to_json(), "subadditive": sub.to_json()}
    return Outcome(sup.ok and sub.ok,
                   f"inner sums {[round(r.sum_face, 6) for r in inner]}, outer sums "
                   f"{[round(r.sum_face, 6) for r in outer]}, worst slack sup {sup.worst:.1e} sub {sub.worst:.1e}",
                   art)


def criterion_6(count: int = 50) -> Outcome:
    rng = np.random.default_rng(SEED + 6)
    useless = [additive.zero_capacity_iff(useless_channel(rng), 2) for _ in range(count)]
    useful = [additive.zero_capacity_iff(informative_channel(rng), 2) for _ in range(count)]
    u_max = max(max(r.max_no_feedback, r.max_feedback) for r in useless)
    i_min = min(min(r.max_no_feedback, r.max_feedback) for r in useful)
    ok = u_max <= 1e-9 and i_min > 1e-3
    return Outcome(ok, f"useless max {u_max:.2e} (<=1e-9), informative min {i_min:.4f} (>1e-3)",
                   {"useless": [r.to_json() for r in useless], "informative": [r.to_json() for r in useful]})


CRIT7_TRIALS = 10_000
CRIT7_CONVERSE_TRIALS = 2_000


def criterion_7() -> Outcome:
    noisy = build_additive(2, binary_noise(0.1), feedback="perfect", name="bac-0.1")
    clean = build_additive(2, binary_noise(0.0), feedback="perfect", name="bac-0")
    ach = [montecarlo.estimate_pe(noisy, None, n, (0.2, 0.2), CRIT7_TRIALS, SEED + 70 + n)
           for n in (4, 8, 12)]
    conv = [montecarlo.estimate_pe(clean, None, n, (0.8, 0.8), CRIT7_CONVERSE_TRIALS, SEED + 700 + n)
            for n in (4, 8, 12)]
    decreasing = all(a.pe > b.pe and a.ci[0] > b.ci[1] for a, b in zip(ach, ach[1:]))
    converse = all(r.pe >= 0.3 for r in conv)
    fmt = ", ".join(f"n={r.config['n']} M={r.config['messages'][0]} pe={r.pe:.4f}"
                    f"[{r.ci[0]:.4f},{r.ci[1]:.4f}]" for r in ach)
    summary = (f"achievability {'decreasing' if decreasing else 'NOT strictly decreasing'}: {fmt}; "
               f"converse pe {[round(r.pe, 4) for r in conv]} (>=0.3: {converse})")
    return Outcome(decreasing and converse, summary,
                   {"achievability": [r.to_json() for r in ach], "converse": [r.to_json() for r in conv]},
                   parts={"decreasing": decreasing, "converse": converse})


def criterion_9(trials: int = 100_000) -> Outcome:
    ch = build_additive(2, binary_noise(0.25), feedback="perfect", name="bac-0.25")
    exact = montecarlo.exact_average_pe(ch, None, 2, (0.5, 0.5))
    sim = montecarlo.estimate_pe(ch, None, 2, (0.5, 0.5), trials, SEED + 9)
    sigma = math.sqrt(exact * (1.0 - exact) / trials)
    z = (sim.pe - exact) / sigma
    return Outcome(abs(z) <= 3.0, f"exact {exact:.6f}, empirical {sim.pe:.6f} over {trials} trials, "
                   f"z = {z:+.2f}", {"exact": exact, "simulated": sim.to_json()})


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7}
BUDGETS = {1: 3.0, 2: 300.0, 3: 120.0, 4: 10.0, 5: 1800.0, 6: 600.0, 7: 1200.0}


def dump_artifacts(out: Path, which=None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for k in which or CRITERIA:
        res = CRITERIA[k]()
        (out / f"criterion_{k}.json").write_text(json.dumps(res.artifact, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--dump", required=True)
    ap.add_argument("--only", type=int, nargs="*")
    a = ap.parse_args()
    dump_artifacts(Path(a.dump), a.only)
