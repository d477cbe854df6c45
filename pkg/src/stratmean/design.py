"""Stratified-design data model and combined design moments.

A design is described per stratum by the population size ``N``, the planned
sample size ``n``, the stratum means of the study variate y and auxiliary
variate x, and the stratum population variances/covariance with divisor
``N - 1``.  The sampling moments of the combined (weighted) sample means
under stratified SRSWOR are

    var_ybar  = sum_h  W_h^2 gamma_h var_y_h
    var_xbar  = sum_h  W_h^2 gamma_h var_x_h
    cov_xybar = sum_h  W_h^2 gamma_h cov_xy_h

with stratum weight ``W_h = N_h / N`` and finite-population factor
``gamma_h = 1/n_h - 1/N_h``.  All types are immutable and safe to share
across threads.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    CorrelationOutOfRange,
    DegenerateStratum,
    NonPositiveCount,
    SampleExceedsStratum,
    ValidationError,
    WeightSumViolation,
    ZeroAuxiliaryMean,
)

WEIGHT_SUM_TOL = 1e-12
CORRELATION_TOL = 1e-9


@dataclass(frozen=True)
class StratumSummary:
    """Per-stratum sizes and population moments (variance divisor N - 1)."""

    index: int
    N: int
    n: int
    mean_y: float
    mean_x: float
    var_y: float
    var_x: float
    cov_xy: float
    weight: float | None = None  # N_h / N, populated by validate_design

    @classmethod
    def from_correlation(
        cls,
        index: int,
        N: int,
        n: int,
        mean_y: float,
        mean_x: float,
        var_y: float,
        var_x: float,
        rho: float,
    ) -> "StratumSummary":
        """Build a summary from a correlation instead of a covariance.

        Converts via cov_xy = rho * sd_x * sd_y; both parameterizations
        populate the same field.
        """
        cov = rho * math.sqrt(var_x) * math.sqrt(var_y)
        return cls(index, N, n, mean_y, mean_x, var_y, var_x, cov)

    @property
    def gamma(self) -> float:
        """Finite-population sampling factor 1/n - 1/N."""
        return 1.0 / self.n - 1.0 / self.N

    @property
    def sd_y(self) -> float:
        return math.sqrt(self.var_y)

    @property
    def sd_x(self) -> float:
        return math.sqrt(self.var_x)

    @property
    def rho(self) -> float:
        """Within-stratum correlation; 0 by convention if either sd is 0."""
        denom = self.sd_x * self.sd_y
        if denom == 0.0:
            return 0.0
        return self.cov_xy / denom

    def cv_y(self, pop_mean_y: float) -> float:
        """Stratum sd of y relative to the population mean of y."""
        return self.sd_y / pop_mean_y

    def cv_x(self, pop_mean_x: float) -> float:
        """Stratum sd of x relative to the population mean of x."""
        return self.sd_x / pop_mean_x

    def check(self) -> None:
        """Raise if any stratum invariant is violated."""
        if self.N <= 0 or self.n <= 0:
            raise NonPositiveCount(
                f"stratum {self.index}: N={self.N}, n={self.n} must be positive"
            )
        if self.n > self.N:
            raise SampleExceedsStratum(
                f"stratum {self.index}: sample size {self.n} exceeds population {self.N}"
            )
        if self.var_y < 0 or self.var_x < 0:
            raise ValidationError(f"stratum {self.index}: negative variance")
        bound = self.var_x * self.var_y
        if self.cov_xy**2 > bound * (1.0 + CORRELATION_TOL) + CORRELATION_TOL**2:
            raise CorrelationOutOfRange(
                f"stratum {self.index}: |rho| = {abs(self.rho):.6g} exceeds 1"
            )


@dataclass(frozen=True)
class DesignSummary:
    """An ordered collection of stratum summaries plus design-level fields.

    ``known_mean_x``, when given, is used as the auxiliary population mean
    in place of the weighted stratum-mean aggregate (the estimators assume
    the auxiliary mean is known).
    """

    strata: tuple[StratumSummary, ...]
    known_mean_x: float | None = None
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "strata", tuple(self.strata))

    @property
    def N(self) -> int:
        return sum(s.N for s in self.strata)

    @property
    def n(self) -> int:
        return sum(s.n for s in self.strata)

    @property
    def sample_sizes(self) -> tuple[int, ...]:
        return tuple(s.n for s in self.strata)

    @property
    def weights(self) -> tuple[float, ...]:
        N = self.N
        return tuple(s.weight if s.weight is not None else s.N / N for s in self.strata)


@dataclass(frozen=True)
class CombinedMoments:
    """Aggregated design moments of the combined stratified sample means."""

    mean_y: float
    mean_x: float
    ratio: float  # mean_y / mean_x
    var_ybar: float
    var_xbar: float
    cov_xybar: float


@dataclass(frozen=True)
class MicrodataStratum:
    """Raw unit-level values of one stratum (full population)."""

    index: int
    y: np.ndarray
    x: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if y.ndim != 1 or x.ndim != 1 or y.size != x.size or y.size == 0:
            raise DegenerateStratum(
                f"stratum {self.index}: y and x must be equal-length nonempty vectors"
            )
        if not (np.isfinite(y).all() and np.isfinite(x).all()):
            raise DegenerateStratum(f"stratum {self.index}: non-finite values")
        y.flags.writeable = False
        x.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)

    @property
    def N(self) -> int:
        return int(self.y.size)


@dataclass(frozen=True)
class Microdata:
    """Unit-level (y, x) values for every stratum of a finite population."""

    strata: tuple[MicrodataStratum, ...]
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "strata", tuple(self.strata))


def validate_design(design: DesignSummary) -> DesignSummary:
    """Check all invariants and return the design with derived weights set.

    Strata are reordered ascending by index so downstream summations are
    reproducible.  Raises NonPositiveCount, SampleExceedsStratum,
    CorrelationOutOfRange, or WeightSumViolation.
    """
    if not design.strata:
        raise NonPositiveCount("design has no strata")
    strata = tuple(sorted(design.strata, key=lambda s: s.index))
    indexes = [s.index for s in strata]
    if len(set(indexes)) != len(indexes):
        raise ValidationError(f"duplicate stratum indexes: {indexes}")
    if indexes[0] < 1:
        raise ValidationError(f"stratum indexes must be positive: {indexes}")
    for s in strata:
        s.check()
    N = sum(s.N for s in strata)
    filled = tuple(
        s if s.weight is not None else dataclasses.replace(s, weight=s.N / N)
        for s in strata
    )
    total = 0.0
    for s in filled:
        total += s.weight  # type: ignore[operator]
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise WeightSumViolation(f"stratum weights sum to {total!r}, not 1")
    return dataclasses.replace(design, strata=filled)


def summarize_stratum(stratum: MicrodataStratum, n: int) -> StratumSummary:
    """Compute a StratumSummary from the raw values of one stratum.

    Means are arithmetic means; variances and the covariance use divisor
    N - 1.  ``n`` is the planned sample size for the stratum.
    """
    N = stratum.N
    if N < 2:
        raise DegenerateStratum(
            f"stratum {stratum.index}: needs at least 2 units, got {N}"
        )
    if n <= 0:
        raise NonPositiveCount(f"stratum {stratum.index}: n={n} must be positive")
    if n > N:
        raise SampleExceedsStratum(
            f"stratum {stratum.index}: sample size {n} exceeds population {N}"
        )
    mean_y = float(stratum.y.mean())
    mean_x = float(stratum.x.mean())
    dy = stratum.y - mean_y
    dx = stratum.x - mean_x
    var_y = float(dy @ dy) / (N - 1)
    var_x = float(dx @ dx) / (N - 1)
    cov = float(dx @ dy) / (N - 1)
    return StratumSummary(stratum.index, N, n, mean_y, mean_x, var_y, var_x, cov)


def design_from_microdata(
    data: Microdata,
    sample_sizes: Mapping[int, int] | Sequence[int],
    known_mean_x: float | None = None,
    label: str = "",
) -> DesignSummary:
    """Summarize every stratum of ``data`` and assemble a validated design.

    ``sample_sizes`` maps stratum index to n_h, or gives the n_h in stratum
    order.
    """
    if isinstance(sample_sizes, Mapping):
        lookup = dict(sample_sizes)
    else:
        lookup = {s.index: n for s, n in zip(data.strata, sample_sizes)}
    summaries = []
    for stratum in data.strata:
        try:
            n = lookup[stratum.index]
        except KeyError:
            raise DegenerateStratum(
                f"stratum {stratum.index}: no sample size given"
            ) from None
        summaries.append(summarize_stratum(stratum, n))
    return validate_design(
        DesignSummary(tuple(summaries), known_mean_x=known_mean_x, label=label or data.label)
    )


def aggregate_moments(design: DesignSummary) -> CombinedMoments:
    """Aggregate a design into the combined moments used by every formula.

    mean_y = sum W_h mean_y_h and mean_x = sum W_h mean_x_h (the latter
    overridden by ``known_mean_x`` when present); the variance/covariance
    sums run over strata in ascending index order.
    """
    design = validate_design(design)
    mean_y = 0.0
    mean_x_agg = 0.0
    var_ybar = 0.0
    var_xbar = 0.0
    cov_xybar = 0.0
    for s in design.strata:
        w = s.weight
        wwg = w * w * s.gamma  # type: ignore[operator]
        mean_y += w * s.mean_y  # type: ignore[operator]
        mean_x_agg += w * s.mean_x  # type: ignore[operator]
        var_ybar += wwg * s.var_y
        var_xbar += wwg * s.var_x
        cov_xybar += wwg * s.cov_xy
    mean_x = design.known_mean_x if design.known_mean_x is not None else mean_x_agg
    if mean_x == 0.0:
        raise ZeroAuxiliaryMean("auxiliary population mean is zero; ratio undefined")
    return CombinedMoments(
        mean_y=mean_y,
        mean_x=mean_x,
        ratio=mean_y / mean_x,
        var_ybar=var_ybar,
        var_xbar=var_xbar,
        cov_xybar=cov_xybar,
    )


def microdata_from_columns(
    stratum_labels: Iterable[int],
    y: Iterable[float],
    x: Iterable[float],
    label: str = "",
) -> Microdata:
    """Group parallel (stratum, y, x) columns into Microdata, ascending index."""
    by_stratum: dict[int, tuple[list[float], list[float]]] = {}
    for s, yv, xv in zip(stratum_labels, y, x):
        ys, xs = by_stratum.setdefault(int(s), ([], []))
        ys.append(float(yv))
        xs.append(float(xv))
    strata = tuple(
        MicrodataStratum(idx, np.array(ys), np.array(xs))
        for idx, (ys, xs) in sorted(by_stratum.items())
    )
    return Microdata(strata, label=label)
