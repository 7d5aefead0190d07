"""What the DID estimand identifies when the treatment indicator is misclassified.

Every population statement is evaluated here on empirical moments. Where the
population result needs parallel trends on the observed treatment, the
finite-sample residual of that assumption (``pt_gap``) is carried explicitly so
the identities hold exactly in samples, not only in the limit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .core import (
    AssumptionViolation,
    ConditionalRates,
    DegenerateError,
    InvalidInputError,
    JointTreatmentDist,
    LatentPanel,
    arm_mean,
    conditional_rates,
    observe,
)
from .estimators import estimate_did


@dataclass(frozen=True)
class Decomposition:
    att_cc: float
    att_mc: Optional[float]
    w_cc: float
    w_mc: float
    pt_gap: float
    theta_reconstructed: float
    theta_did: float

    @property
    def residual(self) -> float:
        return self.theta_did - self.theta_reconstructed


@dataclass(frozen=True)
class Prop2Relation:
    att_implied: float
    slope_a: float
    intercept: float
    theta_did: float
    att: float


class Branch(str, enum.Enum):
    # which end of the interval the raw DID estimate sits on
    THETA_IS_LOWER = "theta-lower"
    THETA_IS_UPPER = "theta-upper"


@dataclass(frozen=True)
class AttBounds:
    lower: float
    upper: float
    lambda_: float
    theta: float
    branch: Branch

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, value: float) -> bool:
        return self.lower <= value <= self.upper


class Region(str, enum.Enum):
    SIGN_REVERSAL = "SignReversal"
    ATTENUATION = "Attenuation"
    FIXED_POINT = "FixedPoint"
    EXPANSION = "Expansion"
    OUT_OF_RANGE = "OutOfCharacterizedRange"


@dataclass(frozen=True)
class BiasRegion:
    att: float
    a: float
    b: float
    c: float
    thresholds: tuple[float, float]
    region: Region


@dataclass(frozen=True)
class FixedPointCheck:
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class MonotonicityCheck:
    sum_d: float
    sum_dstar: float
    agree: bool


def _observed_arms(latent: LatentPanel):
    d = latent.d
    treated = d == 1
    if treated.all() or not treated.any():
        raise DegenerateError("both observed treatment arms must be populated")
    return treated, ~treated


def parallel_trends_gap(latent: LatentPanel) -> float:
    """Difference in untreated trends between observed-treated and observed-control units."""
    treated, control = _observed_arms(latent)
    gap1 = arm_mean(latent.y1_0, treated) - arm_mean(latent.y1_0, control)
    gap0 = arm_mean(latent.y0_0, treated) - arm_mean(latent.y0_0, control)
    return gap1 - gap0


def decompose(latent: LatentPanel) -> Decomposition:
    """Split the observed-treatment DID into correctly and wrongly classified treated groups.

    ``theta_did == att_cc * w_cc - att_mc * w_mc + pt_gap`` up to rounding.
    """
    treated, control = _observed_arms(latent)
    gain = latent.gain
    star = latent.d_star == 1
    mis = latent.eps == 1
    cc = star & ~mis
    mc = star & mis
    if not cc.any():
        raise DegenerateError("no correctly classified treated units; att_cc undefined")
    n_d1 = int(treated.sum())
    n_d0 = int(control.sum())
    att_cc = arm_mean(gain, cc)
    att_mc = arm_mean(gain, mc) if mc.any() else None
    w_cc = int(cc.sum()) / n_d1
    w_mc = int(mc.sum()) / n_d0
    pt_gap = parallel_trends_gap(latent)
    recon = att_cc * w_cc - (att_mc * w_mc if att_mc is not None else 0.0) + pt_gap
    theta = estimate_did(observe(latent)).theta_did
    return Decomposition(att_cc, att_mc, w_cc, w_mc, pt_gap, recon, theta)


def empirical_att(latent: LatentPanel) -> float:
    return arm_mean(latent.gain, latent.d_star == 1)


def prop2_relation(latent: LatentPanel) -> Prop2Relation:
    """ATT as a linear function of the DID estimand, from empirical moments.

    ``att_implied - att`` equals ``slope_a * pt_gap`` exactly, so it vanishes
    whenever untreated potential outcomes share a trend across observed arms.
    """
    treated, control = _observed_arms(latent)
    star = latent.d_star == 1
    n_star = int(star.sum())
    n = len(latent)
    slope_a = int(treated.sum()) / n_star
    p_d0 = int(control.sum()) / n
    b = float(np.sum((latent.gain * latent.eps)[star]) / n_star)
    intercept = b / p_d0
    theta = estimate_did(observe(latent)).theta_did
    return Prop2Relation(slope_a * theta + intercept, slope_a, intercept, theta, empirical_att(latent))


def att_bounds(theta: float, lambda_: float) -> AttBounds:
    """Interval for the ATT when the summed misclassification rates are at most ``lambda_``."""
    if not 0.0 <= lambda_ < 1.0:
        raise AssumptionViolation(
            f"lambda={lambda_!r} is outside [0, 1); the known-bound assumption requires λ < 1")
    scaled = theta / (1.0 - lambda_)
    if scaled >= theta:
        return AttBounds(theta, scaled, lambda_, theta, Branch.THETA_IS_LOWER)
    return AttBounds(scaled, theta, lambda_, theta, Branch.THETA_IS_UPPER)


def _rates(j: Union[JointTreatmentDist, ConditionalRates]) -> ConditionalRates:
    return j if isinstance(j, ConditionalRates) else conditional_rates(j)


def attenuation_factor(j: Union[JointTreatmentDist, ConditionalRates]) -> float:
    """``1 - P(eps=1|D=1) - P(eps=1|D=0)``; requires the sum of rates to be strictly below 1."""
    r = _rates(j)
    total = r.eps_given_d1 + r.eps_given_d0
    if not total < 1.0:
        raise AssumptionViolation(
            f"monotonicity fails: P(eps=1|D=1) + P(eps=1|D=0) = {total!r} is not < 1")
    return 1.0 - total


def corollary1_factor(j: JointTreatmentDist) -> float:
    """Attenuation factor P(eps=0|D=1) when there are no false negatives."""
    if j.p11 != 0:
        raise AssumptionViolation(f"false negatives present (P(D*=1, eps=1) = {j.p11!r})")
    return j.p10 / (j.p10 + j.p01)


def roy_lower_bound(theta: float, q: float, j: JointTreatmentDist) -> float:
    """Lower bound on the ATT when units are misclassified iff their gain exceeds ``q``."""
    r = conditional_rates(j)
    return (r.p_d1 / r.p_dstar1) * theta + q * r.fn_rate / (1.0 - r.p_d1)


def classify_bias_region(att: float, a: float, b: float, c: float, tol: float = 1e-9) -> BiasRegion:
    """Locate ``att`` on the line ATT = a * DID + b / c for 0 < a < 1 and b > 0."""
    if not 0.0 < a < 1.0:
        raise AssumptionViolation(f"slope a={a!r} outside (0, 1); regions are characterized only for a < 1")
    if not b > 0.0:
        raise AssumptionViolation(f"b={b!r} is not positive; regions are characterized only for b > 0")
    if not c > 0.0:
        raise InvalidInputError(f"c={c!r} must be a positive probability")
    low = b / c
    high = b / (c * (1.0 - a))
    if att <= 0.0:
        region = Region.OUT_OF_RANGE
    elif abs(att - high) <= tol:
        region = Region.FIXED_POINT
    elif att < low:
        region = Region.SIGN_REVERSAL
    elif att < high:
        region = Region.ATTENUATION
    else:
        region = Region.EXPANSION
    return BiasRegion(att, a, b, c, (low, high), region)


def fixed_point_check(j: JointTreatmentDist, tol: float = 1e-9) -> FixedPointCheck:
    if j.p11 == j.p01:
        raise AssumptionViolation("fixed-point condition needs P(D*=1) != P(D=1), i.e. p11 != p01")
    r = conditional_rates(j)
    lhs = 1.0 - r.eps_given_d1 - r.eps_given_d0
    rhs = j.p11 / ((1.0 - r.p_d1) * (j.p11 - j.p01))
    return FixedPointCheck(lhs, rhs, abs(lhs - rhs) <= tol)


@dataclass(frozen=True)
class FixedPointScan:
    step: float
    evaluated: int
    hits: int
    best: Optional[JointTreatmentDist]
    best_residual: float


def fixed_point_scan(step: float = 0.001, tol: float = 1e-6) -> FixedPointScan:
    """Brute-force the simplex of (p11, p10, p01, p00) at the given step.

    Points with an empty true or observed arm, or with p11 == p01, are skipped.
    """
    m = int(round(1.0 / step))
    if m < 2 or abs(m * step - 1.0) > 1e-12:
        raise InvalidInputError("step must be 1/m for an integer m >= 2")
    k = np.arange(m + 1, dtype=np.float64)
    k10, k01 = np.meshgrid(k, k, indexing="ij")
    evaluated = 0
    hits = 0
    best_res = np.inf
    best = None
    with np.errstate(divide="ignore", invalid="ignore"):
        for k11 in range(m + 1):
            k00 = m - k11 - k10 - k01
            valid = ((k00 >= 0) & (k01 != k11) & (k10 + k11 > 0) & (k00 + k01 > 0)
                     & (k10 + k01 > 0) & (k11 + k00 > 0))
            if not valid.any():
                continue
            n_d1 = k10 + k01
            n_d0 = k11 + k00
            lhs = 1.0 - k01 / n_d1 - k11 / n_d0
            rhs = k11 * m / (n_d0 * (k11 - k01))
            res = np.where(valid, np.abs(lhs - rhs), np.inf)
            evaluated += int(valid.sum())
            hits += int((res <= tol).sum())
            i = np.unravel_index(np.argmin(res), res.shape)
            if res[i] < best_res:
                best_res = float(res[i])
                a10, a01 = int(k10[i]), int(k01[i])
                best = JointTreatmentDist(k11 / m, a10 / m, a01 / m, (m - k11 - a10 - a01) / m)
    return FixedPointScan(step, evaluated, hits, best, best_res)


def _bayes_rates(p, alpha0, alpha1):
    e_d1 = alpha0 * (1 - p) / (alpha0 * (1 - p) + (1 - alpha1) * p)
    e_d0 = alpha1 * p / (alpha1 * p + (1 - alpha0) * (1 - p))
    return e_d1, e_d0


def monotonicity_equivalence(p: float, alpha0: float, alpha1: float) -> MonotonicityCheck:
    """Compare the sum of rates conditional on D with the sum conditional on D*.

    ``alpha0`` is P(eps=1|D*=0), ``alpha1`` is P(eps=1|D*=1). The comparison
    with 1 is done in exact rational arithmetic on the float inputs.
    """
    if not 0.0 < p < 1.0:
        raise InvalidInputError("p must lie in (0, 1)")
    if not (0.0 <= alpha0 < 1.0 and 0.0 <= alpha1 < 1.0):
        raise InvalidInputError("alpha0 and alpha1 must lie in [0, 1)")
    fp, f0, f1 = Fraction(p), Fraction(alpha0), Fraction(alpha1)
    mass_d1 = f0 * (1 - fp) + (1 - f1) * fp
    mass_d0 = f1 * fp + (1 - f0) * (1 - fp)
    if mass_d1 == 0 or mass_d0 == 0:
        raise DegenerateError("an observed treatment arm has zero mass")
    e_d1, e_d0 = _bayes_rates(fp, f0, f1)
    sum_d = e_d1 + e_d0
    sum_dstar = f0 + f1
    return MonotonicityCheck(float(sum_d), float(sum_dstar), (sum_d < 1) == (sum_dstar < 1))
