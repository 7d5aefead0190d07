"""Two-period DID point estimate and unit-level bootstrap standard errors."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import DegenerateError, InvalidInputError, LatentPanel, MisdidError, ObservedPanel, arm_mean
from .rng import BOOTSTRAP, stream

DEFAULT_BOOT_REPS = 999


class BootstrapDegeneracyError(MisdidError):
    pass


@dataclass(frozen=True)
class DidEstimate:
    theta_did: float
    theta_ols_1: float
    theta_ols_0: float
    n: int
    se: Optional[float] = None
    boot_reps: Optional[int] = None
    redraws: int = 0


def _did(y0: np.ndarray, y1: np.ndarray, d: np.ndarray) -> DidEstimate:
    treated = d == 1
    control = ~treated
    if not treated.any() or not control.any():
        raise DegenerateError("DID needs both treatment arms populated")
    ols1 = arm_mean(y1, treated) - arm_mean(y1, control)
    ols0 = arm_mean(y0, treated) - arm_mean(y0, control)
    return DidEstimate(theta_did=ols1 - ols0, theta_ols_1=ols1, theta_ols_0=ols0, n=int(d.size))


def estimate_did(panel: ObservedPanel) -> DidEstimate:
    return _did(panel.y0, panel.y1, panel.d)


def estimate_did_oracle(latent: LatentPanel) -> DidEstimate:
    """DID computed on the true treatment D* instead of the recorded one."""
    y1 = np.where(latent.d_star == 1, latent.y1_1, latent.y1_0)
    return _did(latent.y0_0, y1, latent.d_star)


def _boot_replicate(panel: ObservedPanel, seed: int, b: int, max_redraws: int):
    rng = stream(seed, b, BOOTSTRAP)
    n = len(panel)
    redraws = 0
    while True:
        idx = rng.integers(0, n, size=n)
        d = panel.d[idx]
        n1 = int(d.sum())
        if 0 < n1 < n:
            return _did(panel.y0[idx], panel.y1[idx], d).theta_did, redraws
        redraws += 1
        if redraws > max_redraws:
            return None, redraws


def bootstrap_se(panel: ObservedPanel, reps: int = DEFAULT_BOOT_REPS, seed: int = 0,
                 threads: int = 1) -> DidEstimate:
    """Point estimate plus the standard deviation of resampled DID estimates.

    Units are resampled with replacement, keeping each unit's (Y0, Y1) pair.
    Replicate ``b`` draws from its own stream keyed by ``(seed, b)``, so the
    result does not depend on ``threads``. Resamples with an empty arm are
    redrawn; more than ``100 * reps`` redraws in total is an error.
    """
    if reps < 2:
        raise InvalidInputError("bootstrap needs reps >= 2")
    base = estimate_did(panel)
    cap = 100 * reps

    def run(b):
        return _boot_replicate(panel, seed, b, cap)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(run, range(reps)))
    else:
        out = [run(b) for b in range(reps)]

    redraws = sum(r for _, r in out)
    if redraws > cap or any(t is None for t, _ in out):
        raise BootstrapDegeneracyError(
            f"bootstrap redrew {redraws} degenerate resamples (cap {cap})")
    thetas = np.array([t for t, _ in out])
    se = float(np.std(thetas, ddof=1))
    return replace(base, se=se, boot_reps=reps, redraws=redraws)
