"""Named random substreams derived from a single master seed.

Every consumer of randomness asks for a stream by name plus integer indices,
so results never depend on the order in which streams are requested::

    init                 -> stream(seed, "init")
    mutation noise at t  -> stream(seed, "mutation", t)
    episode of (t, i)    -> episode_seed(seed, t, i)
"""

import numpy as np

STREAMS = {"init": 0, "mutation": 1, "episodes": 2, "projection": 3, "visual": 4}


def _sequence(seed, name, *index):
    if name not in STREAMS:
        raise KeyError(f"unknown stream {name!r}")
    key = (STREAMS[name],) + tuple(int(i) for i in index)
    return np.random.SeedSequence(int(seed), spawn_key=key)


def stream(seed, name, *index):
    """Return a fresh ``numpy.random.Generator`` for the named substream."""
    return np.random.Generator(np.random.PCG64(_sequence(seed, name, *index)))


def episode_seed(seed, t, i):
    """Integer episode seed for individual ``i`` evaluated at step ``t``."""
    return int(_sequence(seed, "episodes", t, i).generate_state(2, np.uint32).view(np.uint64)[0])


def episode_seeds(seed, t, n):
    return np.array([episode_seed(seed, t, i) for i in range(n)], dtype=np.uint64)
