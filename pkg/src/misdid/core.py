"""Domain types for the two-period, two-group model with a misclassified treatment.

Panels are stored wide (one row per unit) as parallel numpy arrays. Binary
fields are ``int8`` 0/1 so the observation identity
``d = d_star * (1 - eps) + (1 - d_star) * eps`` can be checked literally.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np


class MisdidError(ValueError):
    """Base class for every error raised by this package."""


class InvalidInputError(MisdidError):
    pass


class DegenerateError(MisdidError):
    """A treatment arm (or a required subgroup) is empty."""


class AssumptionViolation(MisdidError):
    """An identifying assumption required by the requested quantity fails."""


def _as_binary(values, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise InvalidInputError(f"{name} must contain only 0/1 values")
    return arr.astype(np.int8)


def _as_real(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    if not np.isfinite(arr).all():
        raise InvalidInputError(f"{name} must be finite")
    return arr


def _freeze(*arrays: np.ndarray) -> None:
    for a in arrays:
        a.flags.writeable = False


@dataclass(frozen=True)
class LatentSample:
    y0_0: float
    y1_0: float
    y1_1: float
    d_star: int
    eps: int

    @property
    def gain(self) -> float:
        return self.y1_1 - self.y1_0


@dataclass(frozen=True)
class ObservedUnit:
    y0: float
    y1: float
    d: int


class LatentPanel:
    """Latent vectors ``(Y0(0), Y1(0), Y1(1), D*, eps)`` for ``n`` units.

    Both true-treatment arms must be populated.
    """

    __slots__ = ("y0_0", "y1_0", "y1_1", "d_star", "eps")

    def __init__(self, y0_0, y1_0, y1_1, d_star, eps):
        y0_0 = _as_real(y0_0, "y0_0")
        y1_0 = _as_real(y1_0, "y1_0")
        y1_1 = _as_real(y1_1, "y1_1")
        d_star = _as_binary(d_star, "d_star")
        eps = _as_binary(eps, "eps")
        n = y0_0.size
        if n == 0:
            raise InvalidInputError("latent panel is empty")
        if not all(a.size == n for a in (y1_0, y1_1, d_star, eps)):
            raise InvalidInputError("latent panel columns differ in length")
        n_treated = int(d_star.sum())
        if n_treated == 0 or n_treated == n:
            raise DegenerateError("latent panel needs both D*=1 and D*=0 units")
        _freeze(y0_0, y1_0, y1_1, d_star, eps)
        for name, value in zip(self.__slots__, (y0_0, y1_0, y1_1, d_star, eps)):
            object.__setattr__(self, name, value)

    def __setattr__(self, name, value):
        raise AttributeError("LatentPanel is immutable")

    @classmethod
    def from_units(cls, units: Iterable[LatentSample]) -> "LatentPanel":
        units = list(units)
        return cls(
            [u.y0_0 for u in units],
            [u.y1_0 for u in units],
            [u.y1_1 for u in units],
            [u.d_star for u in units],
            [u.eps for u in units],
        )

    def __len__(self) -> int:
        return int(self.y0_0.size)

    def __getitem__(self, i: int) -> LatentSample:
        return LatentSample(
            float(self.y0_0[i]), float(self.y1_0[i]), float(self.y1_1[i]),
            int(self.d_star[i]), int(self.eps[i]),
        )

    def __iter__(self) -> Iterator[LatentSample]:
        return (self[i] for i in range(len(self)))

    @property
    def gain(self) -> np.ndarray:
        return self.y1_1 - self.y1_0

    @property
    def d(self) -> np.ndarray:
        return self.d_star ^ self.eps

    def take(self, idx) -> "LatentPanel":
        return LatentPanel(self.y0_0[idx], self.y1_0[idx], self.y1_1[idx],
                           self.d_star[idx], self.eps[idx])


class ObservedPanel:
    """Observed ``(Y0, Y1, D)`` for ``n`` units; both D arms must be populated."""

    __slots__ = ("y0", "y1", "d")

    def __init__(self, y0, y1, d):
        y0 = _as_real(y0, "y0")
        y1 = _as_real(y1, "y1")
        d = _as_binary(d, "d")
        n = y0.size
        if n == 0:
            raise InvalidInputError("observed panel is empty")
        if y1.size != n or d.size != n:
            raise InvalidInputError("observed panel columns differ in length")
        n_treated = int(d.sum())
        if n_treated == 0 or n_treated == n:
            raise DegenerateError("observed panel needs both D=1 and D=0 units")
        _freeze(y0, y1, d)
        for name, value in zip(self.__slots__, (y0, y1, d)):
            object.__setattr__(self, name, value)

    def __setattr__(self, name, value):
        raise AttributeError("ObservedPanel is immutable")

    @classmethod
    def from_units(cls, units: Iterable[ObservedUnit]) -> "ObservedPanel":
        units = list(units)
        return cls([u.y0 for u in units], [u.y1 for u in units], [u.d for u in units])

    def __len__(self) -> int:
        return int(self.y0.size)

    def __getitem__(self, i: int) -> ObservedUnit:
        return ObservedUnit(float(self.y0[i]), float(self.y1[i]), int(self.d[i]))

    def __iter__(self) -> Iterator[ObservedUnit]:
        return (self[i] for i in range(len(self)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ObservedPanel):
            return NotImplemented
        return (np.array_equal(self.y0, other.y0) and np.array_equal(self.y1, other.y1)
                and np.array_equal(self.d, other.d))

    def take(self, idx) -> "ObservedPanel":
        return ObservedPanel(self.y0[idx], self.y1[idx], self.d[idx])


@dataclass(frozen=True)
class JointTreatmentDist:
    """Joint masses of (D*, eps). ``p11`` is P(D*=1, eps=1), and so on."""

    p11: float
    p10: float
    p01: float
    p00: float

    def __post_init__(self):
        masses = (self.p11, self.p10, self.p01, self.p00)
        if any(not (0.0 <= m <= 1.0) for m in masses):
            raise InvalidInputError(f"masses must lie in [0, 1], got {masses}")
        if abs(sum(masses) - 1.0) > 1e-12:
            raise InvalidInputError(f"masses sum to {sum(masses)!r}, not 1")
        if self.p10 + self.p11 <= 0 or self.p00 + self.p01 <= 0:
            raise DegenerateError("both true-treatment arms need positive mass")

    @classmethod
    def from_rates(cls, p: float, alpha0: float, alpha1: float) -> "JointTreatmentDist":
        """Build from P(D*=1)=p, P(eps=1|D*=0)=alpha0 and P(eps=1|D*=1)=alpha1."""
        p11 = p * alpha1
        p10 = p - p11
        p01 = (1.0 - p) * alpha0
        p00 = 1.0 - p11 - p10 - p01
        return cls(p11, p10, p01, p00)

    @property
    def p_d1(self) -> float:
        return self.p10 + self.p01

    @property
    def p_dstar1(self) -> float:
        return self.p10 + self.p11


@dataclass(frozen=True)
class ConditionalRates:
    fn_rate: float
    fp_rate: float
    eps_given_d1: float
    eps_given_d0: float
    p_d1: float
    p_dstar1: float


def observe(latent: LatentPanel) -> ObservedPanel:
    """Map latent vectors to the observed triple."""
    if len(latent) == 0:
        raise InvalidInputError("latent panel is empty")
    y1 = np.where(latent.d_star == 1, latent.y1_1, latent.y1_0)
    return ObservedPanel(latent.y0_0.copy(), y1, latent.d)


def joint_dist_from_latent(latent: LatentPanel) -> JointTreatmentDist:
    # Exact counts, one division each; the sum check runs on the rounded floats.
    n = len(latent)
    d_star = latent.d_star.astype(np.int64)
    eps = latent.eps.astype(np.int64)
    c11 = int(np.sum(d_star & eps))
    c10 = int(np.sum(d_star)) - c11
    c01 = int(np.sum(eps)) - c11
    c00 = n - c11 - c10 - c01
    return JointTreatmentDist(c11 / n, c10 / n, c01 / n, c00 / n)


def joint_counts(latent: LatentPanel) -> dict[str, Fraction]:
    """Same masses as :func:`joint_dist_from_latent`, in exact rational arithmetic."""
    n = len(latent)
    d_star, eps = latent.d_star, latent.eps
    return {
        f"p{a}{b}": Fraction(int(np.sum((d_star == a) & (eps == b))), n)
        for a in (1, 0) for b in (1, 0)
    }


def conditional_rates(j: JointTreatmentDist) -> ConditionalRates:
    p_d1 = j.p_d1
    p_d0 = j.p11 + j.p00
    if p_d1 <= 0 or p_d0 <= 0:
        raise DegenerateError("an observed treatment arm has zero mass")
    return ConditionalRates(
        fn_rate=j.p11 / (j.p10 + j.p11),
        fp_rate=j.p01 / (j.p00 + j.p01),
        eps_given_d1=j.p01 / p_d1,
        eps_given_d0=j.p11 / p_d0,
        p_d1=p_d1,
        p_dstar1=j.p_dstar1,
    )


def arm_mean(values: np.ndarray, mask: np.ndarray) -> float:
    """Mean of ``values`` over ``mask``; numpy's pairwise summation on the copy."""
    sel = values[mask.astype(bool)]
    if sel.size == 0:
        raise DegenerateError("empty group")
    return float(np.sum(sel) / sel.size)
