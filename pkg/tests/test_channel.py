import json

import numpy as np
import pytest

from fsmac.channel import (ChannelValidationError, InitialState, binary_noise, build_additive,
                           channel_from_json, iid_noise, load_channel, markov_noise, save_channel,
                           stationary_distribution, symmetric_markov_noise, validate)

from helpers import random_channel


def test_additive_kernel_is_mod_sum():
    ch = build_additive(3, iid_noise([0.7, 0.2, 0.1]))
    k = ch.kernel[0, :, :, :, 0]
    for x1 in range(3):
        for x2 in range(3):
            for v, pv in enumerate([0.7, 0.2, 0.1]):
                assert k[x1, x2, (x1 + x2 + v) % 3] == pytest.approx(pv)
    assert validate(ch) == []


def test_markov_additive_state_tracks_noise():
    ch = build_additive(2, symmetric_markov_noise(0.9))
    assert ch.s_size == 2
    # noise symbol equals the previous state: y = x1 + x2 + s_prev
    for s in range(2):
        row = ch.kernel[s, 1, 0]
        assert row[(1 + s) % 2].sum() == pytest.approx(1.0)
    assert np.allclose(ch.s0_weights(), [0.5, 0.5])


def test_stationary_distribution_solves_balance():
    t = np.array([[0.9, 0.1], [0.3, 0.7]])
    pi = stationary_distribution(t)
    assert np.allclose(pi @ t, pi)
    assert pi == pytest.approx([0.75, 0.25])


def test_json_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    ch = random_channel(rng, s_size=2, feedback="perfect")
    path = tmp_path / "c.json"
    save_channel(ch, path)
    back = load_channel(path)
    assert np.array_equal(back.kernel, ch.kernel)
    assert back.feedback_1 == ch.feedback_1 and back.z1_size == 2
    assert back.initial_state == ch.initial_state


def test_missing_kernel_row_names_index(tmp_path):
    d = build_additive(2, binary_noise(0.1)).to_json()
    d["kernel"][0][1][0] = []
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    with pytest.raises(ChannelValidationError) as info:
        load_channel(path)
    assert "s=0, x1=1, x2=0" in str(info.value)


def test_row_not_summing_to_one_is_reported():
    d = build_additive(2, binary_noise(0.1)).to_json()
    d["kernel"][0][0][1][0][0] = 0.5
    with pytest.raises(ChannelValidationError) as info:
        channel_from_json(d)
    assert "(s=0, x1=0, x2=1)" in str(info.value)


def test_feedback_variants():
    ch = build_additive(2, binary_noise(0.1))
    assert not ch.has_feedback
    fb = ch.with_feedback("perfect")
    assert fb.has_feedback and fb.z_size(1) == 2 and list(fb.feedback_map(2)) == [0, 1]
    with pytest.raises(ValueError):
        ch.with_feedback("partial")


def test_initial_state_modes():
    assert list(InitialState.known(1).weights(3)) == [0, 1, 0]
    assert list(InitialState.distribution([0.2, 0.8]).weights(2)) == [0.2, 0.8]
    ch = build_additive(2, binary_noise(0.1)).with_initial_state(InitialState.known(4))
    assert any("initial state" in v for v in validate(ch))


def test_markov_noise_default_emission_is_identity():
    m = markov_noise([[0.5, 0.5], [0.2, 0.8]])
    assert np.array_equal(np.array(m.emission), np.eye(2))
