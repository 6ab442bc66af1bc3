import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fsmac.causal import (BudgetExceeded, CausalPolicy, assemble_joint, causal_pmf, check_causal_identities,
                          conditional_mutual_information, directed_info, prefix_map, seq_index)
from fsmac.channel import InitialState

from helpers import random_channel


def brute_joint(ch, p1, p2):
    """Independent path enumeration: sum over every state path explicitly."""
    n, S, Y = p1.n, ch.s_size, ch.y_size
    out = np.zeros((S,) + (2,) * (3 * n) + (S,))
    w = ch.s0_weights()
    f1, f2 = ch.feedback_map(1), ch.feedback_map(2)
    for x1 in itertools.product(range(2), repeat=n):
        for x2 in itertools.product(range(2), repeat=n):
            for y in itertools.product(range(Y), repeat=n):
                q = causal_pmf(p1, x1, [f1[v] for v in y]) * causal_pmf(p2, x2, [f2[v] for v in y])
                if q == 0:
                    continue
                for path in itertools.product(range(S), repeat=n + 1):
                    pr = w[path[0]]
                    for i in range(n):
                        pr *= ch.kernel[path[i], x1[i], x2[i], y[i], path[i + 1]]
                    out[(path[0],) + x1 + x2 + y + (path[-1],)] += q * pr
    return out


@pytest.mark.parametrize("n,fb", [(1, "none"), (2, "perfect"), (2, "none"), (3, "perfect")])
def test_joint_matches_path_enumeration(n, fb):
    rng = np.random.default_rng(n)
    ch = random_channel(rng, s_size=2, feedback=fb)
    p1 = CausalPolicy.random(rng, n, 2, ch.z1_size, 1)
    p2 = CausalPolicy.random(rng, n, 2, ch.z2_size, 2)
    joint = assemble_joint(ch, p1, p2)
    assert np.allclose(joint.probs, brute_joint(ch, p1, p2), atol=1e-15)
    assert joint.probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_single_letter_directed_info_is_mutual_information():
    rng = np.random.default_rng(3)
    ch = random_channel(rng, s_size=2)
    p1 = CausalPolicy.random(rng, 1, 2)
    p2 = CausalPolicy.random(rng, 1, 2, encoder=2)
    joint = assemble_joint(ch, p1, p2)
    a, b, c = directed_info(joint).totals()
    assert a == pytest.approx(conditional_mutual_information(joint.probs, (1,), (3,), (2,)), abs=1e-12)
    assert b == pytest.approx(conditional_mutual_information(joint.probs, (2,), (3,), (1,)), abs=1e-12)
    assert c == pytest.approx(conditional_mutual_information(joint.probs, (1, 2), (3,)), abs=1e-12)


def test_constant_inputs_carry_no_information():
    rng = np.random.default_rng(5)
    ch = random_channel(rng, s_size=2, feedback="perfect")
    p1 = CausalPolicy.constant(2, 2, 1, z_size=2)
    p2 = CausalPolicy.constant(2, 2, 0, z_size=2, encoder=2)
    assert max(directed_info(assemble_joint(ch, p1, p2)).totals()) == pytest.approx(0.0, abs=1e-12)


def test_causal_pmf_reads_only_past_feedback():
    rng = np.random.default_rng(7)
    p = CausalPolicy.random(rng, 3, 2, 2)
    base = causal_pmf(p, [1, 0, 1], [0, 1, 0])
    # the last feedback symbol arrives after the final input
    assert causal_pmf(p, [1, 0, 1], [0, 1, 1]) == base
    assert causal_pmf(p, [1, 0, 1], [0, 1]) == base


def test_sequence_pmf_round_trip():
    rng = np.random.default_rng(9)
    pmf = rng.dirichlet(np.ones(8))
    pol = CausalPolicy.from_sequence_pmf(pmf, 3, 2)
    assert np.allclose(pol.sequence_pmf(), pmf)
    assert pol.feedback_free


def test_prefix_map_orders_first_symbol_most_significant():
    fmap = np.array([0, 1, 1])
    m = prefix_map(fmap, 3, 2, 2)
    assert m[seq_index([2, 0], 3)] == seq_index([1, 0], 2)


def test_budget_is_enforced():
    rng = np.random.default_rng(0)
    ch = random_channel(rng)
    p = CausalPolicy.uniform(3, 2)
    with pytest.raises(BudgetExceeded) as info:
        assemble_joint(ch, p, CausalPolicy.uniform(3, 2, encoder=2), budget=10)
    assert info.value.required > 10


def test_known_initial_state_overrides_channel_law():
    rng = np.random.default_rng(1)
    ch = random_channel(rng)
    j = assemble_joint(ch, CausalPolicy.uniform(1, 2), CausalPolicy.uniform(1, 2, encoder=2),
                       InitialState.known(1))
    assert j.marginal(j.ax_s0()) == pytest.approx([0.0, 1.0])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3), s=st.integers(1, 2),
       fb=st.sampled_from(["none", "perfect"]))
def test_causal_identities(seed, n, s, fb):
    rng = np.random.default_rng(seed)
    ch = random_channel(rng, s_size=s, feedback=fb)
    p1 = CausalPolicy.random(rng, n, 2, ch.z1_size, 1, alpha=0.5)
    p2 = CausalPolicy.random(rng, n, 2, ch.z2_size, 2, alpha=0.5)
    rep = check_causal_identities(assemble_joint(ch, p1, p2))
    assert rep.residual_decomposition < 1e-12
    assert rep.residual_functional < 1e-10
    if rep.residual_no_feedback is not None:
        assert rep.residual_no_feedback < 1e-10
    assert rep.state_bound_ok
