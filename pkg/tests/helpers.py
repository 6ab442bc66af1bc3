"""Random instance generators shared by the test modules."""
from __future__ import annotations

import numpy as np

from fsmac.channel import ChannelSpec, InitialState, MarkovStateChannel


def random_channel(rng, s_size=2, x_size=2, y_size=2, feedback="none", initial=None,
                   alpha=1.0) -> ChannelSpec:
    """Generic FS-MAC kernel with Dirichlet rows over joint ``(y, s')``."""
    rows = rng.dirichlet(np.full(y_size * s_size, alpha), size=(s_size, x_size, x_size))
    kernel = rows.reshape(s_size, x_size, x_size, y_size, s_size)
    if initial is None:
        initial = InitialState.distribution(rng.dirichlet(np.ones(s_size)))
    f = tuple(range(y_size)) if feedback == "perfect" else (0,) * y_size
    return ChannelSpec(x_size, x_size, y_size, s_size, kernel, initial, f, f, name="random")


def random_chain(rng, s_size):
    return rng.dirichlet(np.ones(s_size), size=s_size)


def useless_channel(rng, s_size=2) -> ChannelSpec:
    """Factorized channel whose output law ignores the inputs in every state."""
    per_state = rng.dirichlet(np.ones(2), size=s_size)  # [s][y]
    em = np.broadcast_to(per_state[None, None], (2, 2, s_size, 2)).copy()
    chain = random_chain(rng, s_size)
    return MarkovStateChannel(chain, em, np.full(s_size, 1.0 / s_size)).to_spec(name="useless")


def informative_channel(rng, s_size=2, gap=0.3) -> ChannelSpec:
    """Factorized channel where, in every state, inputs (0,0) and (1,1) shift P(y=1) by ``gap``."""
    p1 = rng.uniform(0.0, 1.0, size=(2, 2, s_size))
    lo = rng.uniform(0.0, 1.0 - gap, size=s_size)
    p1[0, 0] = lo
    p1[1, 1] = lo + gap
    em = np.stack([1.0 - p1, p1], axis=-1)  # [x1][x2][s][y]
    chain = random_chain(rng, s_size)
    return MarkovStateChannel(chain, em, np.full(s_size, 1.0 / s_size)).to_spec(name="informative")


def random_pentagon(rng, scale=2.0):
    from fsmac.regions import RatePentagon
    a, b = rng.uniform(0, scale, size=2)
    c = rng.uniform(0, a + b + 0.5)
    if rng.random() < 0.1:
        a = 0.0
    return RatePentagon(a, b, c)
