"""Simulation designs for misclassified two-period DID and replicated experiments.

Outcome model (every design)::

    D*     ~ Bernoulli(0.5)
    Y0(0)  = D* U[-6, 0] + (1 - D*) U[0, 2] + u0
    Y1(1)  = D* U[-3, 3] + (1 - D*) U[3, 5] + u1
    Y1(0)  = Y0(0)

with u0, u1 standard normal, so the ATT is 3 and parallel trends hold exactly
unit by unit. Designs differ only in how the misclassification indicator is
drawn.
"""

from __future__ import annotations

import enum
import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    AssumptionViolation,
    DegenerateError,
    InvalidInputError,
    JointTreatmentDist,
    LatentPanel,
    MisdidError,
    conditional_rates,
    joint_dist_from_latent,
    observe,
)
from .estimators import estimate_did, estimate_did_oracle
from .identification import (
    AttBounds,
    att_bounds,
    attenuation_factor,
    decompose,
    parallel_trends_gap,
    prop2_relation,
)
from .rng import LATENT, PILOT, stream

P_TREATED = 0.5
PILOT_SIZE = 100_000
PILOT_SEED = 0x5EED_D1D
MAX_PANEL_REDRAWS = 100


class Mode(str, enum.Enum):
    DIFFERENTIAL = "differential"
    NONDIFFERENTIAL = "nondifferential"


class PanelKind(str, enum.Enum):
    SYMMETRIC = "symmetric"
    ASYMMETRIC = "asymmetric"
    FALSE_NEG_ONLY = "fn-only"
    FALSE_POS_ONLY = "fp-only"


class Threshold(str, enum.Enum):
    PER_ARM = "per-arm"
    GLOBAL = "global"


# Realized rates of the reference simulation study, keyed by
# (mode, panel, overall error rate). The two columns there are
# P(eps=1 | D=0) and P(eps=1 | D=1); the last two entries are the
# reported DID estimates on D* and on D.
REFERENCE_TABLES: dict[tuple[Mode, PanelKind, float], tuple[float, float, float, float]] = {}


def _load_reference():
    rates = (0.05, 0.10, 0.20, 0.30, 0.40, 0.50)
    rows = {
        (Mode.DIFFERENTIAL, PanelKind.SYMMETRIC): [
            (0.050, 0.050, 3.000, 2.134), (0.100, 0.100, 3.000, 1.419),
            (0.200, 0.200, 3.000, 0.209), (0.300, 0.300, 3.000, -0.789),
            (0.400, 0.400, 3.000, -1.617), (0.500, 0.500, 3.000, -2.290)],
        (Mode.DIFFERENTIAL, PanelKind.ASYMMETRIC): [
            (0.083, 0.011, 3.000, 1.807), (0.155, 0.024, 3.000, 0.937),
            (0.273, 0.059, 3.000, -0.384), (0.365, 0.115, 3.000, -1.403),
            (0.439, 0.222, 3.000, -2.242), (0.486, 0.396, 3.000, -2.688)],
        (Mode.DIFFERENTIAL, PanelKind.FALSE_NEG_ONLY): [
            (0.084, 0.0, 3.000, 1.829), (0.179, 0.0, 2.999, 0.698),
            (0.281, 0.0, 3.000, -0.443), (0.393, 0.0, 3.000, -1.846),
            (0.456, 0.0, 3.000, -3.030), (0.495, 0.0, 3.000, -5.023)],
        (Mode.DIFFERENTIAL, PanelKind.FALSE_POS_ONLY): [
            (0.0, 0.075, 3.001, 2.775), (0.0, 0.199, 3.000, 2.404),
            (0.0, 0.304, 3.001, 2.090), (0.0, 0.386, 3.000, 1.843),
            (0.0, 0.448, 2.999, 1.656), (0.0, 0.498, 3.000, 1.506)],
        (Mode.NONDIFFERENTIAL, PanelKind.SYMMETRIC): [
            (0.050, 0.050, 2.999, 2.700), (0.100, 0.100, 3.000, 2.400),
            (0.200, 0.200, 3.000, 1.800), (0.300, 0.300, 3.000, 1.200),
            (0.400, 0.400, 3.000, 0.600), (0.490, 0.490, 3.001, 0.060)],
        (Mode.NONDIFFERENTIAL, PanelKind.ASYMMETRIC): [
            (0.011, 0.069, 3.000, 2.760), (0.170, 0.028, 3.000, 2.408),
            (0.288, 0.019, 2.999, 2.077), (0.376, 0.015, 3.000, 1.826),
            (0.445, 0.012, 3.000, 1.629), (0.487, 0.010, 3.000, 1.511)],
        (Mode.NONDIFFERENTIAL, PanelKind.FALSE_NEG_ONLY): [
            (0.091, 0.0, 3.000, 2.727), (0.167, 0.0, 3.000, 2.501),
            (0.286, 0.0, 3.000, 2.143), (0.375, 0.0, 2.999, 1.875),
            (0.445, 0.0, 3.000, 1.667), (0.487, 0.0, 3.000, 1.535)],
        (Mode.NONDIFFERENTIAL, PanelKind.FALSE_POS_ONLY): [
            (0.0, 0.091, 3.001, 2.728), (0.0, 0.167, 3.000, 2.500),
            (0.0, 0.286, 3.000, 2.143), (0.0, 0.375, 3.000, 1.875),
            (0.0, 0.444, 3.000, 1.667), (0.0, 0.487, 3.000, 1.538)],
    }
    for (mode, panel), values in rows.items():
        for rate, row in zip(rates, values):
            REFERENCE_TABLES[(mode, panel, rate)] = row


_load_reference()


def rates_given_dstar(eps_given_d0: float, eps_given_d1: float, p: float = P_TREATED) -> tuple[float, float]:
    """Convert (P(eps=1|D=0), P(eps=1|D=1)) to (P(eps=1|D*=1), P(eps=1|D*=0)).

    Uses P(D*=1) = p. Returns ``(fn_rate, fp_rate)``.
    """
    denom = 1.0 - eps_given_d0 - eps_given_d1
    if denom <= 0:
        raise AssumptionViolation("rates conditional on D sum to 1 or more; not invertible")
    p_d1 = (p - eps_given_d0) / denom
    fn = eps_given_d0 * (1.0 - p_d1) / p
    fp = eps_given_d1 * p_d1 / (1.0 - p)
    return fn, fp


@dataclass(frozen=True)
class MisclassDesign:
    """How eps is generated.

    ``fn_rate`` is P(eps=1 | D*=1) and ``fp_rate`` is P(eps=1 | D*=0). For
    differential designs these are the exceedance probabilities of the per-arm
    gain thresholds; ``threshold="global"`` instead uses one pooled quantile.
    """

    mode: Mode
    panel: PanelKind
    target_rate: float
    fn_rate: float
    fp_rate: float
    threshold: Threshold = Threshold.PER_ARM
    calibrated: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "panel", PanelKind(self.panel))
        object.__setattr__(self, "threshold", Threshold(self.threshold))
        for name in ("fn_rate", "fp_rate"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise InvalidInputError(f"{name}={v!r} must lie in [0, 1)")
        if not 0.0 <= self.target_rate <= 0.5:
            raise InvalidInputError(f"target_rate={self.target_rate!r} must lie in [0, 0.5]")
        if self.panel is PanelKind.FALSE_POS_ONLY and self.fn_rate != 0:
            raise InvalidInputError("false-positive-only design needs fn_rate = 0")
        if self.panel is PanelKind.FALSE_NEG_ONLY and self.fp_rate != 0:
            raise InvalidInputError("false-negative-only design needs fp_rate = 0")
        if self.panel is PanelKind.SYMMETRIC and self.fn_rate != self.fp_rate:
            raise InvalidInputError("symmetric design needs fn_rate = fp_rate")

    @classmethod
    def explicit(cls, mode, fn_rate: float, fp_rate: float, threshold=Threshold.PER_ARM) -> "MisclassDesign":
        if fn_rate == fp_rate:
            panel = PanelKind.SYMMETRIC
        elif fp_rate == 0:
            panel = PanelKind.FALSE_NEG_ONLY
        elif fn_rate == 0:
            panel = PanelKind.FALSE_POS_ONLY
        else:
            panel = PanelKind.ASYMMETRIC
        target = P_TREATED * fn_rate + (1 - P_TREATED) * fp_rate
        return cls(mode, panel, target, fn_rate, fp_rate, threshold)

    @classmethod
    def from_rate(cls, mode, panel, rate: float, calibrated: bool = True,
                  threshold=Threshold.PER_ARM) -> "MisclassDesign":
        """Design for an overall error rate P(eps=1) = ``rate``.

        With ``calibrated`` and a rate listed in the reference tables, the
        per-arm rates are recovered from the realized rates reported there.
        Otherwise symmetric designs use ``rate`` in each arm and one-sided
        designs put ``rate / 0.5`` in the affected arm. Asymmetric designs
        exist only as calibrated presets.
        """
        mode, panel = Mode(mode), PanelKind(panel)
        key = (mode, panel, round(rate, 10))
        if calibrated and key in REFERENCE_TABLES:
            e_d0, e_d1 = REFERENCE_TABLES[key][:2]
            if panel is PanelKind.SYMMETRIC:
                # equal rates in both D arms imply equal rates in both D* arms
                return cls(mode, panel, rate, e_d0, e_d0, threshold, calibrated=True)
            fn, fp = rates_given_dstar(e_d0, e_d1)
            if panel is PanelKind.FALSE_NEG_ONLY:
                fp = 0.0
            elif panel is PanelKind.FALSE_POS_ONLY:
                fn = 0.0
            return cls(mode, panel, rate, fn, fp, threshold, calibrated=True)
        if panel is PanelKind.SYMMETRIC:
            fn = fp = rate
        elif panel is PanelKind.FALSE_NEG_ONLY:
            fn, fp = rate / P_TREATED, 0.0
        elif panel is PanelKind.FALSE_POS_ONLY:
            fn, fp = 0.0, rate / (1 - P_TREATED)
        else:
            raise InvalidInputError(
                f"no calibrated asymmetric preset for rate {rate!r}; pass explicit fn/fp rates")
        if fn >= 1 or fp >= 1:
            raise InvalidInputError(f"rate {rate!r} needs a per-arm error probability >= 1")
        return cls(mode, panel, rate, fn, fp, threshold)

    @property
    def is_null(self) -> bool:
        return self.fn_rate == 0 and self.fp_rate == 0


@functools.lru_cache(maxsize=None)
def _pilot_gains(arm: int) -> np.ndarray:
    rng = stream(PILOT_SEED, arm, PILOT)
    u = rng.random(PILOT_SIZE)
    v = rng.random(PILOT_SIZE)
    u0 = rng.standard_normal(PILOT_SIZE)
    u1 = rng.standard_normal(PILOT_SIZE)
    d = np.full(PILOT_SIZE, arm, dtype=np.int8)
    y0, y1_1 = _outcomes(d, u, v, u0, u1)
    g = y1_1 - y0
    g.flags.writeable = False
    return g


@functools.lru_cache(maxsize=None)
def gain_thresholds(design: MisclassDesign) -> tuple[float, float]:
    """Gain cutoffs ``(q_control, q_treated)``; eps = 1 when the gain exceeds the arm's cutoff."""
    def q(gains, rate):
        return math.inf if rate == 0 else float(np.quantile(gains, 1.0 - rate))

    if design.threshold is Threshold.PER_ARM:
        return q(_pilot_gains(0), design.fp_rate), q(_pilot_gains(1), design.fn_rate)
    pooled = np.concatenate([_pilot_gains(0), _pilot_gains(1)])
    shared = q(pooled, design.target_rate)
    return (math.inf if design.fp_rate == 0 else shared,
            math.inf if design.fn_rate == 0 else shared)


def _outcomes(d_star, u, v, u0, u1):
    treated = d_star == 1
    y0_0 = np.where(treated, -6.0 + 6.0 * u, 2.0 * u) + u0
    y1_1 = np.where(treated, -3.0 + 6.0 * v, 3.0 + 2.0 * v) + u1
    return y0_0, y1_1


def _draw_once(rng: np.random.Generator, n: int, design: MisclassDesign, p_treated: float) -> LatentPanel:
    d_star = (rng.random(n) < p_treated).astype(np.int8)
    u = rng.random(n)
    v = rng.random(n)
    u0 = rng.standard_normal(n)
    u1 = rng.standard_normal(n)
    y0_0, y1_1 = _outcomes(d_star, u, v, u0, u1)
    y1_0 = y0_0
    treated = d_star == 1
    if design.mode is Mode.NONDIFFERENTIAL:
        prob = np.where(treated, design.fn_rate, design.fp_rate)
        eps = rng.random(n) < prob
    else:
        q0, q1 = gain_thresholds(design)
        eps = (y1_1 - y1_0) > np.where(treated, q1, q0)
    return LatentPanel(y0_0, y1_0, y1_1, d_star, eps.astype(np.int8))


def draw_latent_panel(n: int, design: MisclassDesign, seed: int, index: int = 0,
                      p_treated: float = P_TREATED) -> LatentPanel:
    """Draw ``n`` latent units; replication ``index`` has its own stream.

    Draws that leave a true or observed arm empty are redrawn from the same
    stream (only plausible for tiny ``n``). Differential cutoffs always come
    from the ``P(D*=1) = 0.5`` pilot, whatever ``p_treated`` is.
    """
    if n < 2:
        raise InvalidInputError("n must be at least 2")
    if not 0.0 < p_treated < 1.0:
        raise InvalidInputError("p_treated must lie in (0, 1)")
    rng = stream(seed, index, LATENT)
    for _ in range(MAX_PANEL_REDRAWS):
        try:
            panel = _draw_once(rng, n, design, p_treated)
        except DegenerateError:
            continue
        d = panel.d
        if 0 < int(d.sum()) < n:
            return panel
    raise DegenerateError(f"replication {index}: no draw with both arms populated "
                          f"after {MAX_PANEL_REDRAWS} attempts (n={n})")


@dataclass(frozen=True)
class McConfig:
    n: int
    reps: int
    seed: int
    design: MisclassDesign
    lambda_grid: tuple[float, ...] = (0.4,)
    threads: int = 1

    def __post_init__(self):
        if self.n < 2:
            raise InvalidInputError("n must be at least 2")
        if self.reps < 1:
            raise InvalidInputError("reps must be at least 1")
        object.__setattr__(self, "lambda_grid", tuple(float(x) for x in self.lambda_grid))
        for lam in self.lambda_grid:
            if not 0 <= lam < 1:
                raise AssumptionViolation(f"lambda={lam!r} outside [0, 1); λ < 1 is required")


@dataclass(frozen=True)
class RepStats:
    joint: JointTreatmentDist
    did_true: float
    did_observed: float
    fn_rate: float
    fp_rate: float
    eps_given_d1: float
    eps_given_d0: float
    att: float
    att_implied: float
    pt_gap: float
    decomposition_residual: float
    attenuation: float


def replication_stats(latent: LatentPanel) -> RepStats:
    joint = joint_dist_from_latent(latent)
    rates = conditional_rates(joint)
    did_obs = estimate_did(observe(latent)).theta_did
    did_true = estimate_did_oracle(latent).theta_did
    p2 = prop2_relation(latent)
    try:
        resid = decompose(latent).residual
    except DegenerateError:
        resid = math.nan
    try:
        atten = attenuation_factor(rates)
    except AssumptionViolation:
        atten = math.nan
    return RepStats(joint, did_true, did_obs, rates.fn_rate, rates.fp_rate, rates.eps_given_d1,
                    rates.eps_given_d0, p2.att, p2.att_implied, parallel_trends_gap(latent),
                    resid, atten)


@dataclass(frozen=True)
class McResult:
    config: McConfig
    mean_fn_rate: float
    mean_fp_rate: float
    mean_eps_given_d0: float
    mean_eps_given_d1: float
    did_true: float
    did_observed: float
    mean_att: float
    mean_att_implied: float
    mean_pt_gap: float
    mean_attenuation: float
    max_decomposition_residual: float
    bounds_by_lambda: dict[float, AttBounds]
    sign_reversal_share: float
    rep_dispersion: float
    reps: tuple[RepStats, ...] = field(default=(), repr=False, compare=False)


def _one_rep(cfg: McConfig, index: int) -> RepStats:
    try:
        return replication_stats(draw_latent_panel(cfg.n, cfg.design, cfg.seed, index))
    except MisdidError as exc:
        raise type(exc)(f"replication {index}: {exc}") from exc


def run_experiment(cfg: McConfig, keep_reps: bool = False) -> McResult:
    """Run ``cfg.reps`` independent replications and average them in index order."""
    if cfg.threads > 1 and cfg.reps > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            stats = list(pool.map(lambda i: _one_rep(cfg, i), range(cfg.reps)))
    else:
        stats = [_one_rep(cfg, i) for i in range(cfg.reps)]

    def col(name):
        return np.array([getattr(s, name) for s in stats], dtype=np.float64)

    did_obs = col("did_observed")
    did_true = col("did_true")
    mean_obs = float(np.mean(did_obs))
    atten = col("attenuation")
    resid = col("decomposition_residual")
    return McResult(
        config=cfg,
        mean_fn_rate=float(np.mean(col("fn_rate"))),
        mean_fp_rate=float(np.mean(col("fp_rate"))),
        mean_eps_given_d0=float(np.mean(col("eps_given_d0"))),
        mean_eps_given_d1=float(np.mean(col("eps_given_d1"))),
        did_true=float(np.mean(did_true)),
        did_observed=mean_obs,
        mean_att=float(np.mean(col("att"))),
        mean_att_implied=float(np.mean(col("att_implied"))),
        mean_pt_gap=float(np.mean(col("pt_gap"))),
        mean_attenuation=float(np.mean(atten)) if np.isfinite(atten).all() else math.nan,
        max_decomposition_residual=float(np.nanmax(np.abs(resid))) if np.isfinite(resid).any() else math.nan,
        bounds_by_lambda={lam: att_bounds(mean_obs, lam) for lam in cfg.lambda_grid},
        sign_reversal_share=float(np.mean(np.sign(did_obs) != np.sign(did_true))),
        rep_dispersion=float(np.std(did_obs, ddof=1)) if cfg.reps > 1 else 0.0,
        reps=tuple(stats) if keep_reps else (),
    )


@dataclass(frozen=True)
class IndependenceDiagnostic:
    cov_gain_eps_given_dstar1: float
    cov_gain_eps_given_dstar0: float


def independence_diagnostic(latent: LatentPanel) -> IndependenceDiagnostic:
    """Within-arm covariance of the gain with eps; zero in expectation for nondifferential designs."""
    out = []
    for arm in (1, 0):
        mask = latent.d_star == arm
        if not mask.any():
            raise DegenerateError(f"no units with D*={arm}")
        g = latent.gain[mask]
        e = latent.eps[mask].astype(np.float64)
        out.append(float(np.mean((g - g.mean()) * (e - e.mean()))))
    return IndependenceDiagnostic(*out)


def run_table(mode, panel, rates: Sequence[float], n: int, reps: int, seed: int,
              lambda_grid: Sequence[float] = (0.4,), threads: int = 1,
              calibrated: bool = True) -> list[McResult]:
    """One McResult per overall error rate, in the layout of the simulation tables."""
    return [
        run_experiment(McConfig(n, reps, seed, MisclassDesign.from_rate(mode, panel, r, calibrated),
                                tuple(lambda_grid), threads))
        for r in rates
    ]
