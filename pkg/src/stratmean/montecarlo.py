"""Monte Carlo verification harness for the estimator formulas.

Synthesizes finite populations whose stratum moments match a target design
exactly, replicates stratified SRSWOR draws, and compares the empirical
bias/MSE of every estimator against the first-order formulas.  Exhaustive
enumeration of all samples is available where the combination count is
feasible, giving exact design moments instead of simulated ones.

Reproducibility: the random stream is split deterministically over fixed
replication blocks, so a report depends only on (population, sample sizes,
specs, reps, seed) and never on the worker count or schedule.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from . import mse as mse_mod
from .design import (
    CombinedMoments,
    DesignSummary,
    Microdata,
    MicrodataStratum,
    StratumSummary,
    aggregate_moments,
    design_from_microdata,
    validate_design,
)
from .errors import (
    DegenerateStratum,
    InfeasibleMoments,
    NonPositiveCount,
    SampleExceedsStratum,
)
from .estimators import EstimatorSpec, SampleStats, estimate_many

#: Replication block size; part of the random-stream definition.
_BLOCK = 4096

#: Agreement policy applied by ``replicate`` (recorded in every report).
AGREEMENT_POLICY = (
    "MSE: |empirical - theoretical| <= max(3*SE(MSE), 5% of theoretical); "
    "bias: |empirical - theoretical| <= max(3*SE(mean), "
    "10% of the stratified mean's MC standard error)"
)

MIN_REPS_FOR_VERDICT = 1000


@dataclass(frozen=True)
class FinitePopulation:
    """A fully enumerated stratified population with its provenance."""

    strata: tuple[MicrodataStratum, ...]
    seed: int | None = None
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "strata", tuple(self.strata))

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(s.N for s in self.strata)

    @property
    def weights(self) -> tuple[float, ...]:
        N = sum(self.sizes)
        return tuple(s.N / N for s in self.strata)

    def design(self, sample_sizes: Sequence[int]) -> DesignSummary:
        """Summarize the population for the given per-stratum sample sizes."""
        return design_from_microdata(
            Microdata(self.strata, label=self.label), tuple(sample_sizes), label=self.label
        )


@dataclass(frozen=True)
class RelativeDeviations:
    """Relative deviations of one draw's combined means from the truth."""

    e0: float  # ybar_st / mean_y - 1
    e1: float  # xbar_st / mean_x - 1

    @classmethod
    def from_sample(
        cls, stats: SampleStats, mean_y: float, mean_x: float
    ) -> "RelativeDeviations":
        return cls(stats.ybar_st / mean_y - 1.0, stats.xbar_st / mean_x - 1.0)


@dataclass(frozen=True)
class EstimatorOutcome:
    """Replication summary for one estimator."""

    label: str
    constants: dict[str, float]
    reps: int
    valid: int
    error_counts: dict[str, int]
    empirical_mean: float
    empirical_bias: float
    empirical_mse: float
    se_bias: float
    se_mse: float
    theoretical_bias: float
    theoretical_mse: float
    verdict: str

    @property
    def agrees(self) -> bool:
        return self.verdict == "ok"


@dataclass(frozen=True)
class EmpiricalReport:
    """Full replication report; identical for identical seeds."""

    label: str
    reps: int
    seed: int
    sample_sizes: tuple[int, ...]
    policy: str
    rows: tuple[EstimatorOutcome, ...]

    @property
    def all_ok(self) -> bool:
        return all(r.agrees for r in self.rows)


def _match_univariate(rng: np.random.Generator, count: int, mean: float, sd: float) -> np.ndarray:
    if sd == 0.0:
        return np.full(count, mean)
    for _ in range(16):
        z = rng.standard_normal(count)
        z = z - z.mean()
        scale = math.sqrt(float(z @ z) / (count - 1))
        if scale > 0.0:
            return z * (sd / scale) + mean
    raise InfeasibleMoments("could not draw a non-degenerate stratum")


def _match_bivariate(rng: np.random.Generator, s: StratumSummary) -> tuple[np.ndarray, np.ndarray]:
    """Values whose sample moments (divisor N-1) equal the targets exactly."""
    count = s.N
    sd_x, sd_y = s.sd_x, s.sd_y
    if sd_x == 0.0 or sd_y == 0.0:
        y = _match_univariate(rng, count, s.mean_y, sd_y)
        x = _match_univariate(rng, count, s.mean_x, sd_x)
        return y, x
    rho = s.cov_xy / (sd_x * sd_y)
    if 1.0 - min(rho * rho, 1.0) < 1e-12:
        # perfectly (or indistinguishably) correlated: exact affine relation
        y = _match_univariate(rng, count, s.mean_y, sd_y)
        x = s.mean_x + math.copysign(sd_x / sd_y, rho) * (y - s.mean_y)
        return y, x
    target = np.array([[s.var_x, s.cov_xy], [s.cov_xy, s.var_y]])
    color = np.linalg.cholesky(target)
    for _ in range(16):
        z = rng.standard_normal((count, 2))
        z = z - z.mean(axis=0)
        empirical = (z.T @ z) / (count - 1)
        try:
            chol = np.linalg.cholesky(empirical)
        except np.linalg.LinAlgError:
            continue
        white = np.linalg.solve(chol, z.T).T
        values = white @ color.T
        values = values - values.mean(axis=0)
        return values[:, 1] + s.mean_y, values[:, 0] + s.mean_x
    raise InfeasibleMoments("could not draw a full-rank stratum")


def synthesize_population(
    targets: DesignSummary, seed: int | None = None
) -> FinitePopulation:
    """Generate a population matching every stratum summary exactly.

    Bivariate normal draws are affinely transformed so that each stratum's
    recomputed means, variances, and covariance (divisor N-1) equal the
    targets to machine precision.  Deterministic per seed.
    """
    for s in targets.strata:
        if s.N < 3:
            raise DegenerateStratum(
                f"stratum {s.index}: population of {s.N} cannot match 5 moments"
            )
        bound = s.var_x * s.var_y
        if s.cov_xy**2 > bound * (1.0 + 1e-9) + 1e-18:
            raise InfeasibleMoments(
                f"stratum {s.index}: |rho| = {abs(s.rho):.6g} exceeds 1"
            )
    targets = validate_design(targets)
    rng = np.random.default_rng(seed)
    strata = []
    for s in targets.strata:
        y, x = _match_bivariate(rng, s)
        strata.append(MicrodataStratum(s.index, y, x))
    return FinitePopulation(tuple(strata), seed=seed, label=targets.label)


def _check_sample_sizes(pop: FinitePopulation, sample_sizes: Sequence[int]) -> tuple[int, ...]:
    n = tuple(int(v) for v in sample_sizes)
    if len(n) != len(pop.strata):
        raise SampleExceedsStratum(
            f"expected {len(pop.strata)} sample sizes, got {len(n)}"
        )
    for s, nh in zip(pop.strata, n):
        if nh <= 0:
            raise NonPositiveCount(f"stratum {s.index}: n={nh} must be positive")
        if nh > s.N:
            raise SampleExceedsStratum(
                f"stratum {s.index}: sample size {nh} exceeds population {s.N}"
            )
    return n


def draw_stratified_srswor(
    pop: FinitePopulation,
    sample_sizes: Sequence[int],
    seed: int | np.random.Generator | None = None,
) -> SampleStats:
    """One stratified SRSWOR draw; returns combined and per-stratum means."""
    n = _check_sample_sizes(pop, sample_sizes)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    ybars = []
    xbars = []
    for s, nh in zip(pop.strata, n):
        idx = rng.choice(s.N, size=nh, replace=False)
        ybars.append(float(s.y[idx].mean()))
        xbars.append(float(s.x[idx].mean()))
    return SampleStats.from_stratum_means(pop.weights, ybars, xbars)


def _draw_block(
    rng: np.random.Generator,
    pop: FinitePopulation,
    n: tuple[int, ...],
    weights: tuple[float, ...],
    count: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized SRSWOR block: random sort keys, take the n_h smallest."""
    yb = np.zeros(count)
    xb = np.zeros(count)
    for s, nh, w in zip(pop.strata, n, weights):
        if nh == s.N:
            yb += w * float(s.y.mean())
            xb += w * float(s.x.mean())
            continue
        keys = rng.random((count, s.N))
        idx = np.argpartition(keys, nh - 1, axis=1)[:, :nh]
        yb += w * s.y[idx].mean(axis=1)
        xb += w * s.x[idx].mean(axis=1)
    return yb, xb


def replicate(
    pop: FinitePopulation,
    sample_sizes: Sequence[int],
    specs: Sequence[EstimatorSpec],
    reps: int,
    seed: int,
    workers: int = 1,
) -> EmpiricalReport:
    """Measure empirical bias/MSE of every spec over seeded replications.

    Constants marked for optimal resolution are resolved once against the
    population's own moments; the same resolved constants feed both the
    replication and the theoretical comparison values.  Estimator errors on
    individual draws (zero denominators, non-real powers) are tallied per
    spec, not raised.  Agreement verdicts follow AGREEMENT_POLICY and
    require at least MIN_REPS_FOR_VERDICT replications.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    n = _check_sample_sizes(pop, sample_sizes)
    design = pop.design(n)
    m = aggregate_moments(design)
    weights = pop.weights

    resolved = [mse_mod.resolve_spec(spec, m) for spec in specs]
    theory = [mse_mod.analyze(spec, m) for spec in resolved]

    blocks = []
    start = 0
    while start < reps:
        blocks.append(min(_BLOCK, reps - start))
        start += _BLOCK
    children = np.random.SeedSequence(seed).spawn(len(blocks))

    def run_block(args):
        child, count = args
        rng = np.random.default_rng(child)
        yb, xb = _draw_block(rng, pop, n, weights, count)
        partials = []
        for spec in resolved:
            batch = estimate_many(spec, yb, xb, m.mean_x)
            v = batch.values[batch.valid]
            q = (v - m.mean_y) ** 2
            partials.append(
                (
                    int(batch.valid.sum()),
                    dict(batch.error_counts),
                    float(v.sum()),
                    float((v * v).sum()),
                    float(q.sum()),
                    float((q * q).sum()),
                )
            )
        return partials

    jobs = list(zip(children, blocks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            block_results = list(pool.map(run_block, jobs))
    else:
        block_results = [run_block(job) for job in jobs]

    rows = []
    for i, (spec, theo) in enumerate(zip(resolved, theory)):
        valid = 0
        errors: dict[str, int] = {}
        sum_v = sum_v2 = sum_q = sum_q2 = 0.0
        for partials in block_results:  # fixed block order: deterministic sums
            nv, errs, sv, sv2, sq, sq2 = partials[i]
            valid += nv
            for code, cnt in errs.items():
                errors[code] = errors.get(code, 0) + cnt
            sum_v += sv
            sum_v2 += sv2
            sum_q += sq
            sum_q2 += sq2
        if valid < 2:
            raise ValueError(
                f"{spec.label}: only {valid} valid replications; cannot summarize"
            )
        mean_v = sum_v / valid
        var_v = max(sum_v2 / valid - mean_v * mean_v, 0.0) * valid / (valid - 1)
        emp_bias = mean_v - m.mean_y
        emp_mse = sum_q / valid
        var_q = max(sum_q2 / valid - emp_mse * emp_mse, 0.0) * valid / (valid - 1)
        se_bias = math.sqrt(var_v / valid)
        se_mse = math.sqrt(var_q / valid)
        if reps < MIN_REPS_FOR_VERDICT:
            verdict = "insufficient-replications"
        else:
            mse_ok = abs(emp_mse - theo.mse) <= max(3.0 * se_mse, 0.05 * abs(theo.mse))
            bias_ok = abs(emp_bias - theo.bias) <= max(
                3.0 * se_bias, 0.10 * math.sqrt(m.var_ybar / reps)
            )
            if mse_ok and bias_ok:
                verdict = "ok"
            elif mse_ok:
                verdict = "bias-divergent"
            elif bias_ok:
                verdict = "mse-divergent"
            else:
                verdict = "mse+bias-divergent"
        rows.append(
            EstimatorOutcome(
                label=spec.label,
                constants=spec.constants(),
                reps=reps,
                valid=valid,
                error_counts=errors,
                empirical_mean=mean_v,
                empirical_bias=emp_bias,
                empirical_mse=emp_mse,
                se_bias=se_bias,
                se_mse=se_mse,
                theoretical_bias=theo.bias,
                theoretical_mse=theo.mse,
                verdict=verdict,
            )
        )
    return EmpiricalReport(
        label=pop.label,
        reps=reps,
        seed=seed,
        sample_sizes=n,
        policy=AGREEMENT_POLICY,
        rows=tuple(rows),
    )


def _combination_means(values: np.ndarray, nh: int) -> np.ndarray:
    idx = np.array(list(combinations(range(values.size), nh)))
    return values[idx].mean(axis=1)


def enumeration_count(pop: FinitePopulation, sample_sizes: Sequence[int]) -> int:
    """Number of distinct stratified samples for the given sizes."""
    n = _check_sample_sizes(pop, sample_sizes)
    total = 1
    for s, nh in zip(pop.strata, n):
        total *= math.comb(s.N, nh)
    return total


def enumerate_exact_moments(
    pop: FinitePopulation,
    sample_sizes: Sequence[int],
    limit: int = 10_000_000,
) -> CombinedMoments:
    """Design moments of (ybar_st, xbar_st) over every possible sample.

    Enumerates all per-stratum subsets, forms the full cross product of
    combined means by broadcasting, and returns the exact enumeration
    mean/variance/covariance (population divisor: every sample equally
    likely).  Raises ValueError when the combination count exceeds
    ``limit``; fall back to seeded replication in that case.
    """
    n = _check_sample_sizes(pop, sample_sizes)
    total = enumeration_count(pop, n)
    if total > limit:
        raise ValueError(
            f"enumeration of {total} samples exceeds the limit of {limit}"
        )
    weights = pop.weights
    dims = len(pop.strata)
    yb = np.zeros((1,) * dims)
    xb = np.zeros((1,) * dims)
    for h, (s, nh, w) in enumerate(zip(pop.strata, n, weights)):
        shape = [1] * dims
        my = _combination_means(s.y, nh)
        mx = _combination_means(s.x, nh)
        shape[h] = my.size
        yb = yb + w * my.reshape(shape)
        xb = xb + w * mx.reshape(shape)
    mean_y = float(yb.mean())
    mean_x = float(xb.mean())
    dy = yb - mean_y
    dx = xb - mean_x
    return CombinedMoments(
        mean_y=mean_y,
        mean_x=mean_x,
        ratio=mean_y / mean_x,
        var_ybar=float((dy * dy).mean()),
        var_xbar=float((dx * dx).mean()),
        cov_xybar=float((dx * dy).mean()),
    )
