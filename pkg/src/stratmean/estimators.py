"""Point estimators of the population mean under stratified SRSWOR.

Every estimator combines the stratified sample means ``ybar_st`` and
``xbar_st`` with the known auxiliary population mean ``mean_x``.  Two
auxiliary transforms appear throughout:

* exponent family       f = 2 - (xbar_st / mean_x) ** w
* mixing-ratio family   f = ((xbar_st + a * (mean_x - xbar_st))
                             / (xbar_st + b * (mean_x - xbar_st))) ** p

The baselines are the plain stratified mean, the combined ratio estimator
``ybar_st * mean_x / xbar_st`` and the combined product estimator
``ybar_st * xbar_st / mean_x``.  T1 and T2 apply one transform to
``ybar_st``.  The dual-constant estimators rescale the study term by ``k1``
and add a difference term ``k2 * (mean_x - xbar_st)``: T3/T4 transform the
whole combination, T5/T6 transform only the scaled study term.

All functions are pure; scalar entry points raise typed errors while the
batch evaluator flags invalid draws instead.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NonPositiveBase, ZeroDenominator


class EstimatorKind(enum.Enum):
    UNBIASED = "unbiased"
    COMBINED_RATIO = "ratio"
    COMBINED_PRODUCT = "product"
    T1 = "t1"
    T2 = "t2"
    T3 = "t3"
    T4 = "t4"
    T5 = "t5"
    T6 = "t6"

    @property
    def is_dual(self) -> bool:
        """True for the four (k1, k2) estimators."""
        return self in (
            EstimatorKind.T3,
            EstimatorKind.T4,
            EstimatorKind.T5,
            EstimatorKind.T6,
        )

    @property
    def uses_exponent(self) -> bool:
        return self in (EstimatorKind.T1, EstimatorKind.T3, EstimatorKind.T5)

    @property
    def uses_mixing(self) -> bool:
        return self in (EstimatorKind.T2, EstimatorKind.T4, EstimatorKind.T6)

    @property
    def transforms_difference(self) -> bool:
        """True when the transform multiplies the whole k1/k2 combination."""
        return self in (EstimatorKind.T3, EstimatorKind.T4)


#: CLI / table row names, in the canonical comparison order.
KIND_BY_NAME = {k.value: k for k in EstimatorKind}


@dataclass(frozen=True)
class ShapeParams:
    """Shape constants of the two transform families.

    ``w`` is the exponent-family power; ``p``, ``a``, ``b`` parameterize the
    mixing-ratio family.  Only the fields the estimator kind needs have to
    be present.
    """

    w: float | None = None
    p: float | None = None
    a: float | None = None
    b: float | None = None

    @property
    def slope_num(self) -> float:
        """First-order coefficient contributed by the mixing numerator."""
        return self.p * (1.0 - self.a)  # type: ignore[operator]

    @property
    def slope_den(self) -> float:
        """First-order coefficient contributed by the mixing denominator."""
        return self.p * (1.0 - self.b)  # type: ignore[operator]

    @property
    def delta(self) -> float:
        """First-order coefficient p*(b-a) of the mixing transform.

        With (p, a, b) = (1, 1, 0) the transform is the ratio correction and
        delta = -1; with (1, 0, 1) it is the product correction and
        delta = +1.
        """
        return self.p * (self.b - self.a)  # type: ignore[operator]

    @property
    def curvature(self) -> float:
        """Second-order coefficient of the mixing transform."""
        p, a, b = self.p, self.a, self.b
        return (p * p * (a - b) ** 2 + p * (b * b - a * a + 2.0 * (a - b))) / 2.0  # type: ignore[operator]

    def require(self, kind: EstimatorKind) -> "ShapeParams":
        if kind.uses_exponent and self.w is None:
            raise ValueError(f"{kind.value} requires shape constant w")
        if kind.uses_mixing and None in (self.p, self.a, self.b):
            raise ValueError(f"{kind.value} requires shape constants (p, a, b)")
        return self


@dataclass(frozen=True)
class SampleStats:
    """Observed combined sample means, optionally with per-stratum means."""

    ybar_st: float
    xbar_st: float
    stratum_ybars: tuple[float, ...] | None = None
    stratum_xbars: tuple[float, ...] | None = None

    @classmethod
    def from_stratum_means(
        cls,
        weights: Sequence[float],
        ybars: Sequence[float],
        xbars: Sequence[float],
    ) -> "SampleStats":
        yb = sum(w * v for w, v in zip(weights, ybars))
        xb = sum(w * v for w, v in zip(weights, xbars))
        return cls(yb, xb, tuple(ybars), tuple(xbars))


@dataclass(frozen=True)
class EstimatorSpec:
    """An estimator kind plus its constants.

    ``shape`` may be None (resolve the shape constants optimally, or use
    the table defaults) and ``k1``/``k2`` may be None on dual kinds (resolve
    via the MSE-optimal constants).  Point evaluation requires every
    constant the kind uses to be resolved.
    """

    kind: EstimatorKind
    shape: ShapeParams | None = None
    k1: float | None = None
    k2: float | None = None

    @property
    def label(self) -> str:
        return self.kind.value

    def constants(self) -> dict[str, float]:
        """The constants the kind actually uses, keyed by their flag names."""
        out: dict[str, float] = {}
        if self.shape is not None:
            names: tuple[str, ...] = ()
            if self.kind.uses_exponent:
                names = ("w",)
            elif self.kind.uses_mixing:
                names = ("p", "a", "b")
            for name in names:
                value = getattr(self.shape, name)
                if value is not None:
                    out[name] = value
        if self.kind.is_dual:
            if self.k1 is not None:
                out["k1"] = self.k1
            if self.k2 is not None:
                out["k2"] = self.k2
        return out


def transform_coefficients(
    kind: EstimatorKind, shape: ShapeParams | None = None
) -> tuple[float, float]:
    """First- and second-order Taylor coefficients of the auxiliary transform.

    Writing e = xbar_st/mean_x - 1, the transform attached to ``kind``
    expands as 1 + phi1*e + phi2*e**2 + O(e**3).  The plain mean has
    (0, 0); the ratio correction mean_x/xbar_st gives (-1, 1); the product
    correction gives (1, 0).
    """
    if kind is EstimatorKind.UNBIASED:
        return 0.0, 0.0
    if kind is EstimatorKind.COMBINED_RATIO:
        return -1.0, 1.0
    if kind is EstimatorKind.COMBINED_PRODUCT:
        return 1.0, 0.0
    if shape is None:
        raise ValueError(f"{kind.value} requires shape constants")
    shape.require(kind)
    if kind.uses_exponent:
        w = shape.w
        return -w, -w * (w - 1.0) / 2.0  # type: ignore[operator]
    return shape.delta, shape.curvature


def _is_integer(value: float) -> bool:
    return float(value).is_integer()


def _exponent_parts(xbar, mean_x: float, w: float):
    """Transform value and validity masks for the exponent family.

    Returns (factor, bad_base) where bad_base marks draws whose power is
    not real-valued (negative base with fractional w, or zero base with
    negative w).
    """
    base = np.asarray(xbar, dtype=float) / mean_x
    if _is_integer(w):
        bad = (base == 0.0) & (w < 0)
    else:
        bad = base <= 0.0 if w != 0.0 else np.zeros_like(base, dtype=bool)
    with np.errstate(all="ignore"):
        powed = np.where(bad, np.nan, np.power(np.where(bad, 1.0, base), w))
    return 2.0 - powed, bad


def _mixing_parts(xbar, mean_x: float, p: float, a: float, b: float):
    """Transform value and validity masks for the mixing-ratio family.

    Returns (factor, zero_den, bad_base): zero_den marks a vanishing
    denominator bracket (or a zero base raised to a negative power);
    bad_base marks a negative base with fractional p.
    """
    xbar = np.asarray(xbar, dtype=float)
    diff = mean_x - xbar
    num = xbar + a * diff
    den = xbar + b * diff
    zero_den = den == 0.0
    # placeholder base of 1.0 where the denominator vanishes; masked below
    base = np.where(zero_den, 1.0, num) / np.where(zero_den, 1.0, den)
    if _is_integer(p):
        bad_base = np.zeros_like(base, dtype=bool)
        zero_den = zero_den | ((base == 0.0) & (p < 0))
    else:
        bad_base = ~zero_den & (base <= 0.0) if p != 0.0 else np.zeros_like(base, dtype=bool)
    invalid = zero_den | bad_base
    with np.errstate(all="ignore"):
        powed = np.where(invalid, np.nan, np.power(np.where(invalid, 1.0, base), p))
    return powed, zero_den, bad_base


def _combine(kind: EstimatorKind, ybar, diff, factor, k1: float, k2: float):
    if kind.transforms_difference:
        return (k1 * ybar + k2 * diff) * factor
    return k1 * ybar * factor + k2 * diff


@dataclass(frozen=True)
class BatchEstimates:
    """Vectorized estimates with per-draw validity and error tallies."""

    values: np.ndarray  # nan where invalid
    valid: np.ndarray
    error_counts: dict[str, int]


def estimate_many(
    spec: EstimatorSpec, ybar_st, xbar_st, mean_x: float
) -> BatchEstimates:
    """Evaluate one estimator on arrays of combined sample means.

    Invalid draws (zero denominators, non-real powers) are masked out and
    tallied by error code rather than raised; the scalar entry points below
    share this code path and raise instead.
    """
    kind = spec.kind
    ybar = np.asarray(ybar_st, dtype=float)
    xbar = np.asarray(xbar_st, dtype=float)
    if mean_x <= 0.0:
        raise ZeroDenominator("auxiliary population mean must be positive")
    k1 = 1.0 if spec.k1 is None else float(spec.k1)
    k2 = 0.0 if spec.k2 is None else float(spec.k2)
    if kind.is_dual and (spec.k1 is None or spec.k2 is None):
        raise ValueError(f"{kind.value} requires explicit (k1, k2)")

    zero_den = np.zeros(ybar.shape, dtype=bool)
    bad_base = np.zeros(ybar.shape, dtype=bool)
    if kind is EstimatorKind.UNBIASED:
        values = ybar + 0.0
    elif kind is EstimatorKind.COMBINED_RATIO:
        zero_den = xbar == 0.0
        with np.errstate(all="ignore"):
            values = np.where(zero_den, np.nan, ybar * mean_x / np.where(zero_den, 1.0, xbar))
    elif kind is EstimatorKind.COMBINED_PRODUCT:
        values = ybar * xbar / mean_x
    else:
        shape = (spec.shape or ShapeParams()).require(kind)
        if kind.uses_exponent:
            factor, bad_base = _exponent_parts(xbar, mean_x, shape.w)  # type: ignore[arg-type]
        else:
            factor, zero_den, bad_base = _mixing_parts(
                xbar, mean_x, shape.p, shape.a, shape.b  # type: ignore[arg-type]
            )
        values = _combine(kind, ybar, mean_x - xbar, factor, k1, k2)

    valid = ~(zero_den | bad_base)
    values = np.where(valid, values, np.nan)
    counts: dict[str, int] = {}
    if zero_den.any():
        counts["zero-denominator"] = int(zero_den.sum())
    if bad_base.any():
        counts["non-positive-base"] = int(bad_base.sum())
    return BatchEstimates(values=values, valid=valid, error_counts=counts)


def _scalar(spec: EstimatorSpec, stats: SampleStats, mean_x: float) -> float:
    batch = estimate_many(
        spec, np.array([stats.ybar_st]), np.array([stats.xbar_st]), mean_x
    )
    if "zero-denominator" in batch.error_counts:
        raise ZeroDenominator(
            f"{spec.kind.value}: denominator vanishes at xbar_st={stats.xbar_st!r}"
        )
    if "non-positive-base" in batch.error_counts:
        raise NonPositiveBase(
            f"{spec.kind.value}: fractional power of a non-positive base"
        )
    return float(batch.values[0])


def estimate_baseline(kind: EstimatorKind, stats: SampleStats, mean_x: float) -> float:
    """Plain stratified mean, combined ratio, or combined product estimate."""
    if kind not in (
        EstimatorKind.UNBIASED,
        EstimatorKind.COMBINED_RATIO,
        EstimatorKind.COMBINED_PRODUCT,
    ):
        raise ValueError(f"not a baseline estimator: {kind.value}")
    return _scalar(EstimatorSpec(kind), stats, mean_x)


def estimate_shape(
    kind: EstimatorKind, stats: SampleStats, mean_x: float, shape: ShapeParams
) -> float:
    """T1 or T2: one transform applied to the stratified mean."""
    if kind not in (EstimatorKind.T1, EstimatorKind.T2):
        raise ValueError(f"not a shape estimator: {kind.value}")
    return _scalar(EstimatorSpec(kind, shape=shape), stats, mean_x)


def estimate_dual(
    kind: EstimatorKind,
    stats: SampleStats,
    mean_x: float,
    shape: ShapeParams,
    k1: float,
    k2: float,
) -> float:
    """T3..T6: transform plus difference term with constants (k1, k2)."""
    if not kind.is_dual:
        raise ValueError(f"not a dual-constant estimator: {kind.value}")
    return _scalar(EstimatorSpec(kind, shape=shape, k1=k1, k2=k2), stats, mean_x)


def estimate(spec: EstimatorSpec, stats: SampleStats, mean_x: float) -> float:
    """Evaluate any estimator spec with fully resolved constants."""
    return _scalar(spec, stats, mean_x)
