import json

import numpy as np
import pytest

from fsmac import bounds
from fsmac._info import binary_entropy
from fsmac.bounds import BoundResult, OptimizerConfig, PolicyPair
from fsmac.causal import BudgetExceeded, CausalPolicy
from fsmac.channel import binary_noise, build_additive, symmetric_markov_noise
from fsmac.policies import grid_points, lattice_count, lattice_policies
from fsmac.regions import RatePentagon

from helpers import random_channel

EXH = OptimizerConfig(mode="exhaustive")


@pytest.mark.parametrize("n,z,count", [(1, 1, 3), (2, 1, 15), (3, 1, 255), (2, 2, 99)])
def test_lattice_counts(n, z, count):
    assert lattice_count(n, 2, z, 2) == count
    pols = lattice_policies(n, 2, z, 2)
    assert len(pols) == count
    keys = {tuple(np.concatenate([t.ravel() for t in p.tables])) for p in pols}
    assert len(keys) == count


def test_grid_points_order():
    assert grid_points(2, 2).tolist() == [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]]
    assert len(grid_points(3, 3)) == 10


@pytest.mark.parametrize("p", [0.0, 0.1, 0.25])
def test_memoryless_adder_sum_face(p):
    res = bounds.compute_multi_letter(build_additive(2, binary_noise(p)), 1, EXH)
    assert res.sum_face == pytest.approx(1.0 - binary_entropy(p), abs=1e-9)
    assert res.search == "exhaustive-lattice"
    assert bounds.certificate_residual(build_additive(2, binary_noise(p)), res) < 1e-12


def test_inner_penalty_wipes_out_single_letter_markov_region():
    ch = build_additive(2, symmetric_markov_noise(0.9))
    inner = bounds.compute_inner(ch, 1, EXH)
    assert inner.sum_face == 0.0
    assert inner.corrections["state_penalty"] == pytest.approx(1.0)


def test_markov_outer_and_inner_values():
    ch = build_additive(2, symmetric_markov_noise(0.9))
    h = binary_entropy(0.1)
    outer = bounds.compute_outer(ch, 2, EXH)
    inner = bounds.compute_inner(ch, 2, EXH)
    # state known: noise of step 1 is known, step 2 is a fresh flip; one bit of H(S0) added
    assert outer.sum_face == pytest.approx((2 - h + 1) / 2, abs=1e-9)
    assert inner.sum_face == pytest.approx((2 - h - 1) / 2, abs=1e-9)
    assert bounds.certificate_residual(ch, outer) < 1e-9
    assert outer.region.contains_point(inner.region.vertices.max(axis=0) * 0.999)


def test_outer_rejects_feedback():
    ch = build_additive(2, binary_noise(0.1), feedback="perfect")
    with pytest.raises(ValueError, match="without feedback"):
        bounds.compute_outer(ch, 1, EXH)


def test_exhaustive_over_budget_raises():
    ch = build_additive(2, binary_noise(0.1), feedback="perfect")
    with pytest.raises(BudgetExceeded) as info:
        bounds.compute_inner(ch, 3, OptimizerConfig(mode="exhaustive", budget=1000))
    assert info.value.required > 1000


def test_auto_mode_switches_to_ascent():
    ch = build_additive(2, binary_noise(0.1))
    res = bounds.compute_multi_letter(ch, 1, OptimizerConfig(budget=2, restarts=2, directions=4, seed=1))
    assert res.search == "ascent"
    assert res.sum_face == pytest.approx(1.0 - binary_entropy(0.1), abs=1e-6)


def test_ascent_is_reproducible():
    rng = np.random.default_rng(0)
    ch = random_channel(rng, s_size=2, feedback="perfect")
    cfg = OptimizerConfig(mode="ascent", restarts=3, directions=4, seed=9, max_iter=30)
    a = bounds.compute_inner(ch, 1, cfg).to_json()
    b = bounds.compute_inner(ch, 1, cfg).to_json()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_exhaustive_region_dominates_uniform_inputs():
    rng = np.random.default_rng(3)
    ch = random_channel(rng, s_size=2, feedback="perfect")
    res = bounds.compute_multi_letter(ch, 2, EXH)
    uni = bounds.pentagon_for_policy(ch, PolicyPair(CausalPolicy.uniform(2, 2, 2, 1),
                                                    CausalPolicy.uniform(2, 2, 2, 2)))
    for v in uni.to_region().vertices:
        assert res.region.contains_point(v, tol=1e-9)


def test_inner_pentagon_is_min_over_states_minus_penalty():
    rng = np.random.default_rng(5)
    ch = random_channel(rng, s_size=2)
    pair = PolicyPair(CausalPolicy.random(rng, 2, 2), CausalPolicy.random(rng, 2, 2, encoder=2))
    from fsmac.channel import InitialState
    per = [bounds.pentagon_for_policy(ch, pair, InitialState.known(s)) for s in range(2)]
    got = bounds.inner_pentagon_for_policy(ch, pair)
    assert got.c == pytest.approx(max(0.0, min(p.c for p in per) - 0.5))


def test_bound_result_json_round_trip():
    ch = build_additive(2, symmetric_markov_noise(0.9))
    res = bounds.compute_outer(ch, 1, EXH)
    back = BoundResult.from_json(json.loads(json.dumps(res.to_json())))
    assert back.region.same_as(res.region) and back.kind == "outer"
    assert bounds.certificate_residual(ch, back) < 1e-9
    assert isinstance(back.certificate[0].pentagon, RatePentagon)


def test_sandwich_on_memoryless_channel_closes():
    rep = bounds.sandwich_report(build_additive(2, binary_noise(0.1)), 2, EXH)
    assert max(rep.gaps) < 1e-9
    assert rep.superadditivity["ok"] and rep.subadditivity["ok"]


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(mode="greedy")
    with pytest.raises(ValueError):
        OptimizerConfig(directions=0)
