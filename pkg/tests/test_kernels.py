import os
import subprocess
import sys

import numpy as np
import pytest

from fsmac import _kernels_py, kernels
from fsmac.causal import CausalPolicy, assemble_joint, directed_info
from fsmac.policies import lattice_policies, policy_bank

from helpers import random_channel

BACKENDS = ["python"] + (["cython"] if kernels.compiled_available() else [])


def _banks(rng, ch, n, count):
    pols = [[CausalPolicy.random(rng, n, 2, ch.z_size(l), l) for _ in range(count)] for l in (1, 2)]
    return pols, policy_bank(pols[0], ch, 1), policy_bank(pols[1], ch, 2)


@pytest.mark.parametrize("name", BACKENDS)
@pytest.mark.parametrize("fb", ["none", "perfect"])
def test_di_terms_match_joint_law(name, fb):
    rng = np.random.default_rng(11)
    ch = random_channel(rng, s_size=2, feedback=fb)
    n = 2
    pols, b1, b2 = _banks(rng, ch, n, 3)
    i1 = np.array([0, 1, 2, 2])
    i2 = np.array([0, 2, 1, 0])
    mod = kernels.backend(name)
    got = mod.di_terms(np.asarray(ch.kernel), ch.s0_weights(), n, b1, b2, i1, i2, False)
    for k, (a, b) in enumerate(zip(i1, i2)):
        ref = directed_info(assemble_joint(ch, pols[0][a], pols[1][b])).terms
        assert np.allclose(got[k, 0], ref, atol=1e-12)


def test_backends_agree_per_state_with_zero_weight():
    if len(BACKENDS) < 2:
        pytest.skip("compiled kernels not built")
    rng = np.random.default_rng(2)
    ch = random_channel(rng, s_size=3)
    pols = lattice_policies(2, 2, 1, 2, 1)
    b = policy_bank(pols, ch, 1)
    i = np.arange(len(pols))
    w = np.array([0.5, 0.0, 0.5])
    args = (np.asarray(ch.kernel), w, 2, b, b, i, i[::-1].copy(), True)
    py = kernels.backend("python").di_terms(*args)
    cy = kernels.backend("cython").di_terms(*args)
    assert np.all(np.isnan(py[:, 1])) and np.all(np.isnan(cy[:, 1]))
    assert np.allclose(np.nan_to_num(py), np.nan_to_num(cy), atol=1e-12)


@pytest.mark.parametrize("name", BACKENDS)
def test_ml_decode_prefers_smallest_pair_on_ties(name):
    rng = np.random.default_rng(4)
    ch = random_channel(rng, s_size=2)
    xs = np.array([[0, 1], [0, 1], [1, 1]])
    mod = kernels.backend(name)
    m1, m2, lik = mod.ml_decode(np.asarray(ch.kernel), ch.s0_weights(), xs, xs, np.array([1, 0]))
    L = _kernels_py.pair_likelihoods(np.asarray(ch.kernel), ch.s0_weights(), xs, xs, np.array([1, 0]))
    best = np.argwhere(L >= L.max() * (1 - 1e-12))[0]
    assert (m1, m2) == tuple(best) and lik == pytest.approx(L.max(), rel=1e-12)


@pytest.mark.parametrize("name", BACKENDS)
def test_pair_likelihoods_sum_to_one_over_outputs(name):
    rng = np.random.default_rng(8)
    ch = random_channel(rng, s_size=2)
    xs1 = rng.integers(0, 2, size=(3, 3))
    xs2 = rng.integers(0, 2, size=(2, 3))
    mod = kernels.backend(name)
    total = sum(mod.pair_likelihoods(np.asarray(ch.kernel), ch.s0_weights(), xs1, xs2, np.array(y))
                for y in np.ndindex(2, 2, 2))
    assert np.allclose(total, 1.0)


def test_env_var_forces_fallback():
    env = {**os.environ, "FSMAC_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", "import fsmac.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
