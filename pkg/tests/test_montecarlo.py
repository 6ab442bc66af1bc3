import itertools
import math

import numpy as np
import pytest

from fsmac import montecarlo as mc
from fsmac.bounds import PolicyPair
from fsmac.causal import BudgetExceeded, CausalPolicy
from fsmac.channel import binary_noise, build_additive, symmetric_markov_noise

from helpers import random_channel


def book(ch, n, rates, seed):
    return mc.sample_codebook(ch, mc.uniform_pair(ch, n), n, rates, seed=seed)


def test_message_counts_round_up():
    assert mc.message_count(4, 0.2) == 2
    assert mc.message_count(8, 0.2) == 4
    assert mc.message_count(12, 0.8) == 777
    assert mc.message_count(5, 0.0) == 1
    assert mc.message_count(10, 0.1) == 2  # 2^1 exactly, no overshoot from rounding


def test_zero_rate_gives_single_tree_and_no_errors():
    ch = build_additive(2, binary_noise(0.3), feedback="perfect")
    b = book(ch, 3, (0.0, 0.0), 1)
    assert b.messages == (1, 1)
    res = mc.estimate_pe(ch, None, 3, (0.0, 0.0), 50, seed=2)
    assert res.errors == 0 and res.pe == 0.0


def test_trees_degenerate_to_codewords_without_feedback():
    ch = build_additive(2, binary_noise(0.1))
    b = book(ch, 4, (0.5, 0.5), 3)
    assert all(lvl.shape == (4, 1) for lvl in b.labels1)
    x1, _ = mc.rollout(ch, b, np.zeros(4, dtype=int))
    x1b, _ = mc.rollout(ch, b, np.ones(4, dtype=int))
    assert np.array_equal(x1, x1b)


def test_unit_delay_causality_exhaustive():
    ch = build_additive(2, binary_noise(0.2), feedback="perfect")
    for n in (1, 2, 3):
        b = book(ch, n, (1.0, 1.0), n)
        for y in itertools.product(range(2), repeat=n):
            y = np.array(y)
            x1, x2 = mc.rollout(ch, b, y)
            for i in range(n):
                flipped = y.copy()
                flipped[i] ^= 1
                f1, f2 = mc.rollout(ch, b, flipped)
                assert np.array_equal(f1[:, :i + 1], x1[:, :i + 1])
                assert np.array_equal(f2[:, :i + 1], x2[:, :i + 1])


def test_labels_follow_generating_policy():
    ch = build_additive(2, binary_noise(0.1), feedback="perfect")
    p1 = CausalPolicy.constant(2, 2, 1, z_size=2)
    p2 = CausalPolicy.uniform(2, 2, 2, 2)
    b = mc.sample_codebook(ch, PolicyPair(p1, p2), 2, (2.0, 2.0), seed=0)
    assert all(np.all(lvl == 1) for lvl in b.labels1)
    assert set(np.unique(b.labels2[1])) == {0, 1}


def test_concatenation_structure():
    ch = build_additive(2, binary_noise(0.1), feedback="perfect")
    a, b, c = (book(ch, 2, (1.0, 1.0), s) for s in (1, 2, 3))
    ab = mc.concatenate(a, b)
    assert ab.depth == 4 and ab.messages == a.messages
    assert ab.restrict(2).same_as(a)
    # after any depth-2 feedback prefix, the continuation is b's tree for that message
    for prefix in range(4):
        for j in range(2):
            block = ab.labels1[2 + j].reshape(a.messages[0], 4, 2**j)[:, prefix]
            assert np.array_equal(block, b.labels1[j])
    assert mc.concatenate(mc.concatenate(a, b), c).same_as(mc.concatenate(a, mc.concatenate(b, c)))
    empty = a.restrict(0)
    assert mc.concatenate(a, empty).same_as(a) and mc.concatenate(empty, a).same_as(a)


def test_concatenation_rejects_mismatch():
    ch = build_additive(2, binary_noise(0.1), feedback="perfect")
    with pytest.raises(ValueError):
        mc.concatenate(book(ch, 2, (1.0, 1.0), 1), book(ch, 2, (0.5, 1.0), 2))
    other = build_additive(2, binary_noise(0.1))
    with pytest.raises(ValueError):
        mc.concatenate(book(ch, 2, (1.0, 1.0), 1), book(other, 2, (1.0, 1.0), 2))


def test_transmit_noiseless_and_flip():
    clean = build_additive(2, binary_noise(0.0), feedback="perfect")
    b = book(clean, 4, (0.5, 0.5), 5)
    t = mc.transmit(clean, b, 1, 2, seed=0)
    assert np.array_equal(t.y, (t.x1 + t.x2) % 2)
    flip = build_additive(2, binary_noise(1.0))
    b = book(flip, 4, (0.5, 0.5), 5)
    t = mc.transmit(flip, b, 0, 3, seed=0)
    assert np.array_equal(t.y, (t.x1 + t.x2 + 1) % 2)
    assert t.to_csv().splitlines()[0].startswith("i,s_prev,x1")
    with pytest.raises(ValueError):
        mc.transmit(flip, b, 4, 0)


def test_transmit_reproducible():
    ch = build_additive(2, symmetric_markov_noise(0.8), feedback="perfect")
    b = book(ch, 5, (0.4, 0.4), 1)
    t1, t2 = mc.transmit(ch, b, 1, 1, seed=9), mc.transmit(ch, b, 1, 1, seed=9)
    assert np.array_equal(t1.y, t2.y) and np.array_equal(t1.states, t2.states)


def test_likelihood_equals_state_path_sum():
    rng = np.random.default_rng(3)
    ch = random_channel(rng, s_size=2, feedback="perfect")
    b = mc.sample_codebook(ch, mc.uniform_pair(ch, 2), 2, (1.0, 1.0), seed=4)
    y = np.array([1, 0])
    m1, m2, ll = mc.ml_decode(ch, b, y)
    xs1, xs2 = mc.rollout(ch, b, y)
    w = ch.s0_weights()

    def path_sum(a, c):
        tot = 0.0
        for s0, s1, s2 in itertools.product(range(2), repeat=3):
            tot += (w[s0] * ch.kernel[s0, xs1[a, 0], xs2[c, 0], y[0], s1]
                    * ch.kernel[s1, xs1[a, 1], xs2[c, 1], y[1], s2])
        return tot

    table = np.array([[path_sum(a, c) for c in range(b.messages[1])] for a in range(b.messages[0])])
    assert ll == pytest.approx(math.log2(table.max()), abs=1e-12)
    assert table[m1, m2] >= table.max() * (1 - 1e-12)


def test_identical_trees_tie_to_smaller_index():
    ch = build_additive(2, binary_noise(0.1))
    b = book(ch, 3, (1.0, 1.0), 0)
    labels = tuple(np.repeat(lvl[:1], len(lvl), axis=0) for lvl in b.labels1)
    same = mc.CodeTreeBook(b.rates, b.messages, labels, b.labels2, b.x_sizes, b.z_sizes)
    m1, _, _ = mc.ml_decode(ch, same, np.array([0, 1, 1]))
    assert m1 == 0


def test_codebook_budget():
    ch = build_additive(2, binary_noise(0.1), feedback="perfect")
    with pytest.raises(BudgetExceeded):
        mc.sample_codebook(ch, mc.uniform_pair(ch, 10), 10, (1.0, 1.0), seed=0, label_budget=1000)
    with pytest.raises(ValueError):
        mc.message_count(4, -0.1)


def test_estimate_is_deterministic_and_consistent():
    ch = build_additive(2, binary_noise(0.2), feedback="perfect")
    a = mc.estimate_pe(ch, None, 3, (0.5, 0.5), 300, seed=4)
    b = mc.estimate_pe(ch, None, 3, (0.5, 0.5), 300, seed=4)
    assert a.to_json() == b.to_json()
    assert a.errors == a.m1_only + a.m2_only + a.both <= a.trials
    lo, hi = a.ci
    assert lo <= a.pe <= hi
    assert "runtime_s" not in a.to_json()


def test_exact_average_matches_simulation_small():
    ch = build_additive(2, symmetric_markov_noise(0.8))
    exact = mc.exact_average_pe(ch, None, 2, (0.5, 0.5))
    sim = mc.estimate_pe(ch, None, 2, (0.5, 0.5), 20000, seed=1)
    assert abs(sim.pe - exact) <= 3 * math.sqrt(exact * (1 - exact) / sim.trials) + 0.01


def test_exact_average_trivial_cases():
    clean = build_additive(2, binary_noise(0.0))
    assert mc.exact_average_pe(clean, None, 1, (0.0, 0.0)) == 0.0
    ch = build_additive(2, binary_noise(0.5))
    # pure noise: the decoder always guesses pair (0, 0)
    assert mc.exact_average_pe(ch, None, 1, (1.0, 1.0)) == pytest.approx(0.75)


def test_wilson_interval_edges():
    assert mc.wilson_interval(0, 0) == (0.0, 1.0)
    lo, hi = mc.wilson_interval(0, 100)
    assert lo == 0.0 and 0 < hi < 0.05
