import math

import numpy as np
import pytest

from fsmac import additive
from fsmac._info import binary_entropy, entropy
from fsmac.channel import binary_noise, iid_noise, markov_noise, symmetric_markov_noise

from helpers import informative_channel, random_channel, useless_channel


def test_iid_entropy_rate_and_capacity():
    assert additive.entropy_rate(binary_noise(0.1)).value == pytest.approx(binary_entropy(0.1))
    assert additive.capacity_sum_rate(2, binary_noise(0.25)) == pytest.approx(0.188721875540867)
    assert additive.capacity_sum_rate(3, iid_noise([1, 0, 0])) == pytest.approx(math.log2(3))


def test_state_observable_markov_rate_matches_block_limit():
    noise = symmetric_markov_noise(0.9)
    rate = additive.entropy_rate(noise)
    assert rate.method == "markov_exact" and rate.value == pytest.approx(binary_entropy(0.1))
    lo, hi = additive.entropy_rate_bounds(noise, 6)
    assert lo - 1e-12 <= rate.value <= hi + 1e-12


def test_markov_rate_with_state_revealing_emission():
    # three states; state 2 emits symbols 1 or 2, others emit one symbol each
    t = np.array([[0.5, 0.3, 0.2], [0.1, 0.8, 0.1], [0.3, 0.3, 0.4]])
    e = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0.6, 0.4]])
    noise = markov_noise(t, e)
    rate = additive.entropy_rate(noise).value
    blocks = [additive.noise_block_entropy(noise, k) for k in (7, 8)]
    assert rate == pytest.approx(blocks[1] - blocks[0], abs=1e-9)


def test_hidden_chain_needs_bounds():
    noise = markov_noise([[0.9, 0.1], [0.2, 0.8]], [[0.7, 0.3], [0.4, 0.6]])
    with pytest.raises(additive.HiddenNoiseError):
        additive.entropy_rate(noise)
    lo, hi = additive.entropy_rate_bounds(noise, 8)
    assert 0 < lo <= hi < 1
    assert hi - lo < 1e-2


def test_iid_special_cases_of_markov_noise():
    same_rows = markov_noise([[0.3, 0.7], [0.3, 0.7]], [[0.9, 0.1], [0.2, 0.8]])
    pmf = np.array([0.3, 0.7]) @ np.array([[0.9, 0.1], [0.2, 0.8]])
    assert additive.entropy_rate(same_rows).value == pytest.approx(entropy(pmf))


def test_additive_region_is_triangle():
    r = additive.additive_region(2, binary_noise(0.1))
    c = 1 - binary_entropy(0.1)
    pts = {tuple(np.round(v, 12)) for v in r.vertices}
    assert pts == {(0.0, 0.0), (round(c, 12), 0.0), (0.0, round(c, 12))}


@pytest.mark.parametrize("noise", [binary_noise(0.25), binary_noise(0.0), symmetric_markov_noise(0.8)])
def test_feedback_invariance(noise):
    rep = additive.verify_feedback_invariance(2, noise, 2)
    assert rep.ok
    assert rep.feedback_gain <= 1e-9


def test_zero_capacity_equivalence():
    rng = np.random.default_rng(1)
    for _ in range(3):
        assert additive.zero_capacity_iff(useless_channel(rng), 2).zero_feedback
        rep = additive.zero_capacity_iff(informative_channel(rng), 2)
        assert rep.consistent and not rep.zero_no_feedback and rep.max_feedback > 1e-3


def test_zero_capacity_requires_factorization():
    ch = random_channel(np.random.default_rng(2), s_size=2)
    assert not additive.factorizes(ch)
    with pytest.raises(ValueError, match="factor"):
        additive.zero_capacity_iff(ch, 1)


def test_separation_verdicts():
    c = additive.capacity_sum_rate(2, binary_noise(0.1))
    assert additive.separation_check(0.3, 2, binary_noise(0.1)).status == "feasible"
    assert not additive.separation_check(0.6, 2, binary_noise(0.1)).feasible
    edge = additive.separation_check(c, 2, binary_noise(0.1))
    assert edge.status == "boundary, undetermined" and not edge.feasible
    with pytest.raises(ValueError):
        additive.separation_check(-1.0, 2, binary_noise(0.1))


def test_noise_size_mismatch_rejected():
    with pytest.raises(ValueError):
        additive.capacity_sum_rate(3, binary_noise(0.1))
