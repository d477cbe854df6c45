"""Mean estimation for stratified SRSWOR designs with an auxiliary variate.

The package covers the full workflow: describe a stratified design
(``design``), evaluate the classical and dual-constant estimators of the
population mean (``estimators``), analyze first-order bias/MSE and solve
for optimal constants (``mse``), and verify every formula against seeded
Monte Carlo replication or exhaustive sample enumeration (``montecarlo``).
Two example designs from the survey-sampling literature ship in
``datasets``; ``cli`` exposes everything as the ``stratmean`` command.
"""

from .design import (
    CombinedMoments,
    DesignSummary,
    Microdata,
    MicrodataStratum,
    StratumSummary,
    aggregate_moments,
    design_from_microdata,
    microdata_from_columns,
    summarize_stratum,
    validate_design,
)
from .estimators import (
    BatchEstimates,
    EstimatorKind,
    EstimatorSpec,
    SampleStats,
    ShapeParams,
    estimate,
    estimate_baseline,
    estimate_dual,
    estimate_many,
    estimate_shape,
    transform_coefficients,
)
from .mse import (
    MseResult,
    QuadraticMseForm,
    analyze,
    default_table_specs,
    efficiency_table,
    first_order_bias,
    mse_baseline,
    mse_dual,
    mse_shape,
    optimal_dual,
    optimal_shape,
    pre,
    quadratic_form,
    resolve_spec,
)
from .montecarlo import (
    EmpiricalReport,
    EstimatorOutcome,
    FinitePopulation,
    RelativeDeviations,
    draw_stratified_srswor,
    enumerate_exact_moments,
    enumeration_count,
    replicate,
    synthesize_population,
)
from .datasets import dataset_1, dataset_2, get_dataset

__version__ = "0.1.0"

__all__ = [
    "BatchEstimates",
    "CombinedMoments",
    "DesignSummary",
    "EmpiricalReport",
    "EstimatorKind",
    "EstimatorOutcome",
    "EstimatorSpec",
    "FinitePopulation",
    "Microdata",
    "MicrodataStratum",
    "MseResult",
    "QuadraticMseForm",
    "RelativeDeviations",
    "SampleStats",
    "ShapeParams",
    "StratumSummary",
    "aggregate_moments",
    "analyze",
    "dataset_1",
    "dataset_2",
    "default_table_specs",
    "design_from_microdata",
    "draw_stratified_srswor",
    "efficiency_table",
    "enumerate_exact_moments",
    "enumeration_count",
    "estimate",
    "estimate_baseline",
    "estimate_dual",
    "estimate_many",
    "estimate_shape",
    "first_order_bias",
    "get_dataset",
    "microdata_from_columns",
    "mse_baseline",
    "mse_dual",
    "mse_shape",
    "optimal_dual",
    "optimal_shape",
    "pre",
    "quadratic_form",
    "replicate",
    "resolve_spec",
    "summarize_stratum",
    "synthesize_population",
    "transform_coefficients",
    "validate_design",
]
