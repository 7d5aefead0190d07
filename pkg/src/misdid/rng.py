"""Independent PCG64 streams keyed by (seed, index, purpose).

Every random draw in the package goes through :func:`stream`. The key is fed to
``numpy.random.SeedSequence`` as entropy plus spawn key, so streams for
different replications or purposes never overlap and do not depend on the
order in which they are requested.
"""

from __future__ import annotations

import numpy as np

# purpose tags
LATENT = 1
PILOT = 2
BOOTSTRAP = 3
SCENARIO = 4

_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=(int(purpose), int(index)))
    return np.random.Generator(np.random.PCG64(ss))
