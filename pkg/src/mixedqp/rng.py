"""Counter-based splittable random streams.

Every stochastic routine in this package derives its generator from a master
seed plus a tuple of integer stream indices (module tag, sample index, ...).
Sample i therefore owns the state h(seed, tag, i) no matter how samples are
chunked over worker threads, which is what makes serial and parallel runs
agree bit for bit.
"""

from __future__ import annotations

import numpy as np

# Stream tags, one per independent consumer of randomness.  Never reuse a tag
# for two different draw sites with the same remaining key.
BASE_SYMBOLS = 1
TRANSFER_SYMBOLS = 2
LYAPUNOV_THETA = 3
MEASURE_SAMPLES = 4
HAAR_SAMPLES = 5
ENERGY_SCAN = 6


def derived_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for stream ``key`` of the experiment with master ``seed``.

    Uses Philox (counter-based) keyed through SeedSequence, so distinct keys
    give statistically independent streams and equal keys reproduce the exact
    draw sequence.
    """
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))
