"""Command-line front end: dataset ingestion, analysis commands, reports.

Commands
--------
moments    combined design moments of a dataset
estimate   point estimates from observed combined sample means
mse        first-order MSE/bias/PRE at given (or optimal) constants
optimize   MSE-optimal constants per estimator
table      the nine-row MSE/PRE comparison
simulate   Monte Carlo agreement report on a moment-matched population

Datasets are either embedded ids (``paper-1``, ``paper-2``) or files:
``summary-json`` (top-level ``{label?, known_mean_x?, strata: [...]}`` with
per-stratum ``{N, n, mean_y, mean_x, var_y, var_x, cov_xy | rho}``) or
``microdata-csv`` (header ``stratum,y,x``; per-stratum sample sizes in a
``<file>.n.json`` sidecar mapping stratum label to n).

Every failure prints one ``error:<code>: message`` line on stderr.  Exit
codes: 0 ok, 2 usage, 3 data, 4 computation, 5 failed strict verdict.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from . import montecarlo
from .datasets import get_dataset
from .design import (
    DesignSummary,
    aggregate_moments,
    design_from_microdata,
    microdata_from_columns,
    validate_design,
    StratumSummary,
)
from .errors import ParseError, SchemaError, StratmeanError
from .estimators import (
    KIND_BY_NAME,
    EstimatorKind,
    EstimatorSpec,
    SampleStats,
    ShapeParams,
    estimate as estimate_point,
)
from .mse import analyze, default_table_specs, efficiency_table, resolve_spec

DEFAULT_ESTIMATORS = "t1,t2,t3,t4,t5,t6,ratio,product,unbiased"


@dataclass
class RunConfig:
    """Everything one invocation needs; mirrors the CLI flags."""

    command: str
    data: str | None = None
    format: str = "summary-json"
    estimators: str = DEFAULT_ESTIMATORS
    w: float | None = None
    p: float | None = None
    a: float | None = None
    b: float | None = None
    k1: float | None = None
    k2: float | None = None
    optimal: bool = False
    ybar_st: float | None = None
    xbar_st: float | None = None
    reps: int = 200_000
    seed: int = 0
    workers: int = 1
    out: str | None = None
    output_format: str = "text"
    strict: bool = False
    paper_layout: bool = False
    full_precision: bool = False


# ---------------------------------------------------------------------------
# ingestion


def _summary_from_json(path: str) -> DesignSummary:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise ParseError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(payload, dict) or "strata" not in payload:
        raise SchemaError(f"{path}: top level must be an object with 'strata'")
    strata = []
    for pos, row in enumerate(payload["strata"], start=1):
        if not isinstance(row, dict):
            raise SchemaError(f"{path}: stratum {pos} is not an object")
        has_cov = "cov_xy" in row
        has_rho = "rho" in row
        if has_cov == has_rho:
            raise SchemaError(
                f"{path}: stratum {pos} needs exactly one of cov_xy or rho"
            )
        try:
            common = dict(
                index=int(row.get("index", pos)),
                N=int(row["N"]),
                n=int(row["n"]),
                mean_y=float(row["mean_y"]),
                mean_x=float(row["mean_x"]),
                var_y=float(row["var_y"]),
                var_x=float(row["var_x"]),
            )
            if has_rho:
                stratum = StratumSummary.from_correlation(
                    rho=float(row["rho"]), **common
                )
            else:
                stratum = StratumSummary(cov_xy=float(row["cov_xy"]), **common)
        except KeyError as exc:
            raise SchemaError(f"{path}: stratum {pos} missing field {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}: stratum {pos}: {exc}") from None
        strata.append(stratum)
    known = payload.get("known_mean_x")
    return validate_design(
        DesignSummary(
            tuple(strata),
            known_mean_x=None if known is None else float(known),
            label=str(payload.get("label", Path(path).stem)),
        )
    )


def _design_from_csv(path: str) -> DesignSummary:
    sidecar = Path(f"{path}.n.json")
    if not sidecar.exists():
        raise SchemaError(f"{sidecar}: sample-size sidecar not found")
    try:
        sizes_raw = json.loads(sidecar.read_text(encoding="utf-8"))
        sizes = {int(k): int(v) for k, v in sizes_raw.items()}
    except (json.JSONDecodeError, TypeError, ValueError, AttributeError):
        raise SchemaError(
            f"{sidecar}: must map stratum label to sample size"
        ) from None
    labels: list[int] = []
    ys: list[float] = []
    xs: list[float] = []
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise ParseError(f"{path}: file not found") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["stratum", "y", "x"]:
            raise SchemaError(f"{path}: header must be 'stratum,y,x'")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise ParseError(f"{path}: line {lineno}: expected 3 fields")
            try:
                labels.append(int(row[0]))
                ys.append(float(row[1]))
                xs.append(float(row[2]))
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from None
    if not labels:
        raise ParseError(f"{path}: no data rows")
    data = microdata_from_columns(labels, ys, xs, label=Path(path).stem)
    return design_from_microdata(data, sizes)


def ingest(source: str, fmt: str = "summary-json") -> DesignSummary:
    """Resolve a dataset id or file into a validated design."""
    from .datasets import EMBEDDED
    from .errors import UnknownDataset

    if source in EMBEDDED:
        return get_dataset(source)
    if not Path(source).exists():
        known = ", ".join(sorted(EMBEDDED))
        raise UnknownDataset(
            f"{source!r} is neither an embedded dataset id ({known}) nor an existing file"
        )
    if fmt == "summary-json":
        return _summary_from_json(source)
    if fmt == "microdata-csv":
        return _design_from_csv(source)
    raise SchemaError(f"unknown input format {fmt!r}")


# ---------------------------------------------------------------------------
# output


def _round6(value: float) -> float:
    return float(f"{value:.6g}")


class Emitter:
    """Renders row-oriented reports as text, csv, or json."""

    def __init__(self, output_format: str, full_precision: bool):
        self.format = output_format
        self.full = full_precision

    def _cell(self, value) -> str:
        if value is None:
            return ""
        if isinstance(value, float):
            return repr(value) if self.full else f"{value:.6g}"
        return str(value)

    def _json_value(self, value):
        if isinstance(value, float) and not self.full:
            return _round6(value)
        return value

    def render(self, rows: list[dict], header_lines: list[str] | None = None) -> str:
        fields = list(rows[0].keys()) if rows else []
        if self.format == "json":
            payload: dict = {"rows": [
                {k: self._json_value(v) for k, v in row.items()} for row in rows
            ]}
            if header_lines:
                payload["notes"] = header_lines
            return json.dumps(payload, indent=2) + "\n"
        if self.format == "csv":
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(fields)
            for row in rows:
                writer.writerow([self._cell(v) for v in row.values()])
            return buf.getvalue()
        # text
        table = [[self._cell(v) for v in row.values()] for row in rows]
        widths = [
            max(len(name), *(len(r[i]) for r in table)) if table else len(name)
            for i, name in enumerate(fields)
        ]
        lines = list(header_lines or [])
        lines.append("  ".join(n.ljust(w) for n, w in zip(fields, widths)).rstrip())
        for r in table:
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
        return "\n".join(lines) + "\n"


def _write(config: RunConfig, content: str) -> None:
    if config.out:
        Path(config.out).write_text(content, encoding="utf-8")
    else:
        sys.stdout.write(content)


# ---------------------------------------------------------------------------
# command implementations


def _shape_from_config(config: RunConfig) -> ShapeParams | None:
    if config.optimal:
        return None
    if all(v is None for v in (config.w, config.p, config.a, config.b)):
        return None
    return ShapeParams(w=config.w, p=config.p, a=config.a, b=config.b)


def _specs_from_config(config: RunConfig) -> list[EstimatorSpec]:
    shape = _shape_from_config(config)
    k1 = None if config.optimal else config.k1
    k2 = None if config.optimal else config.k2
    specs = []
    for name in config.estimators.split(","):
        name = name.strip().lower()
        if not name:
            continue
        try:
            kind = KIND_BY_NAME[name]
        except KeyError:
            known = ", ".join(k.value for k in EstimatorKind)
            raise SchemaError(f"unknown estimator {name!r}; one of: {known}") from None
        specs.append(EstimatorSpec(kind, shape=shape, k1=k1, k2=k2))
    if not specs:
        raise SchemaError("no estimators selected")
    return specs


def _result_row(result) -> dict:
    c = result.constants
    return {
        "estimator": result.label,
        "mse": result.mse,
        "pre": result.pre,
        "k1": c.get("k1"),
        "k2": c.get("k2"),
        "w": c.get("w"),
        "p": c.get("p"),
        "a": c.get("a"),
        "b": c.get("b"),
        "bias": result.bias,
    }


def _cmd_moments(config: RunConfig) -> int:
    design = ingest(config.data, config.format)  # type: ignore[arg-type]
    m = aggregate_moments(design)
    rows = [
        {
            "label": design.label,
            "N": design.N,
            "n": design.n,
            "mean_y": m.mean_y,
            "mean_x": m.mean_x,
            "ratio": m.ratio,
            "var_ybar": m.var_ybar,
            "var_xbar": m.var_xbar,
            "cov_xybar": m.cov_xybar,
        }
    ]
    _write(config, Emitter(config.output_format, config.full_precision).render(rows))
    return 0


def _cmd_estimate(config: RunConfig) -> int:
    if config.ybar_st is None or config.xbar_st is None:
        raise SchemaError("estimate requires --ybar-st and --xbar-st")
    design = ingest(config.data, config.format)  # type: ignore[arg-type]
    m = aggregate_moments(design)
    stats = SampleStats(config.ybar_st, config.xbar_st)
    rows = []
    for spec in _specs_from_config(config):
        resolved = resolve_spec(spec, m)
        value = estimate_point(resolved, stats, m.mean_x)
        c = resolved.constants()
        rows.append(
            {
                "estimator": resolved.label,
                "estimate": value,
                "k1": c.get("k1"),
                "k2": c.get("k2"),
                "w": c.get("w"),
                "p": c.get("p"),
                "a": c.get("a"),
                "b": c.get("b"),
            }
        )
    _write(config, Emitter(config.output_format, config.full_precision).render(rows))
    return 0


def _cmd_mse(config: RunConfig) -> int:
    design = ingest(config.data, config.format)  # type: ignore[arg-type]
    m = aggregate_moments(design)
    rows = [_result_row(analyze(spec, m)) for spec in _specs_from_config(config)]
    _write(config, Emitter(config.output_format, config.full_precision).render(rows))
    return 0


def _cmd_optimize(config: RunConfig) -> int:
    design = ingest(config.data, config.format)  # type: ignore[arg-type]
    m = aggregate_moments(design)
    rows = []
    for spec in _specs_from_config(config):
        # keep any explicit shape, drop explicit duals: optimize resolves them
        free = EstimatorSpec(spec.kind, shape=spec.shape)
        rows.append(_result_row(analyze(free, m)))
    _write(config, Emitter(config.output_format, config.full_precision).render(rows))
    return 0


def _cmd_table(config: RunConfig) -> int:
    emitter = Emitter(config.output_format, config.full_precision)
    if config.paper_layout:
        results = {
            name: efficiency_table(ingest(name), default_table_specs())
            for name in ("paper-1", "paper-2")
        }
        rows = []
        # the source table's Data-1 column carries the orchard-survey values
        # and Data-2 the cane-juice values; reproduced here for side-by-side
        # checking against the original layout
        for r1, r2 in zip(results["paper-2"], results["paper-1"]):
            rows.append(
                {
                    "estimator": r1.label,
                    "mse_data1": r1.mse,
                    "pre_data1": r1.pre,
                    "mse_data2": r2.mse,
                    "pre_data2": r2.pre,
                }
            )
        notes = [
            "# layout note: Data-1 columns hold paper-2 results and Data-2",
            "# columns hold paper-1 results, matching the original table.",
        ]
        _write(config, emitter.render(rows, header_lines=notes))
        return 0
    design = ingest(config.data, config.format)  # type: ignore[arg-type]
    customized = config.estimators != DEFAULT_ESTIMATORS or any(
        v is not None for v in (config.w, config.p, config.a, config.b, config.k1, config.k2)
    )
    specs = _specs_from_config(config) if customized else list(default_table_specs())
    rows = [_result_row(r) for r in efficiency_table(design, specs)]
    _write(config, emitter.render(rows))
    return 0


def _cmd_simulate(config: RunConfig) -> int:
    design = ingest(config.data, config.format)  # type: ignore[arg-type]
    pop = montecarlo.synthesize_population(design, seed=config.seed)
    report = montecarlo.replicate(
        pop,
        design.sample_sizes,
        _specs_from_config(config),
        reps=config.reps,
        seed=config.seed,
        workers=config.workers,
    )
    rows = []
    for r in report.rows:
        c = r.constants
        rows.append(
            {
                "estimator": r.label,
                "k1": c.get("k1"),
                "k2": c.get("k2"),
                "w": c.get("w"),
                "p": c.get("p"),
                "a": c.get("a"),
                "b": c.get("b"),
                "reps": r.reps,
                "valid": r.valid,
                "errors": ";".join(f"{k}:{v}" for k, v in sorted(r.error_counts.items())),
                "empirical_mean": r.empirical_mean,
                "empirical_bias": r.empirical_bias,
                "empirical_mse": r.empirical_mse,
                "se_mse": r.se_mse,
                "theoretical_bias": r.theoretical_bias,
                "theoretical_mse": r.theoretical_mse,
                "verdict": r.verdict,
            }
        )
    header = [
        f"# dataset: {report.label}",
        f"# reps: {report.reps}  seed: {report.seed}  sample sizes: "
        + ",".join(str(v) for v in report.sample_sizes),
        f"# policy: {report.policy}",
        f"# agreement: {'ok' if report.all_ok else 'FAILED'}",
    ]
    _write(config, Emitter(config.output_format, config.full_precision).render(rows, header))
    if config.strict and not report.all_ok:
        return 5
    return 0


_COMMANDS = {
    "moments": _cmd_moments,
    "estimate": _cmd_estimate,
    "mse": _cmd_mse,
    "optimize": _cmd_optimize,
    "table": _cmd_table,
    "simulate": _cmd_simulate,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stratmean",
        description="Stratified-sampling mean estimation and MSE analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, data_required: bool = True) -> None:
        p.add_argument(
            "--data",
            required=data_required,
            help="embedded dataset id (paper-1, paper-2) or input path",
        )
        p.add_argument(
            "--format",
            choices=("summary-json", "microdata-csv"),
            default="summary-json",
            help="input file format (ignored for embedded ids)",
        )
        p.add_argument("--out", help="write the report to this path instead of stdout")
        p.add_argument(
            "--output-format",
            choices=("text", "csv", "json"),
            default="text",
        )
        p.add_argument(
            "--full-precision",
            action="store_true",
            help="print shortest round-trip floats instead of 6 significant digits",
        )

    def estimator_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--estimators",
            default=DEFAULT_ESTIMATORS,
            help="comma-separated list (t1..t6, ratio, product, unbiased)",
        )
        p.add_argument("--w", type=float)
        p.add_argument("--p", type=float)
        p.add_argument("--a", type=float)
        p.add_argument("--b", type=float)
        p.add_argument("--k1", type=float)
        p.add_argument("--k2", type=float)
        p.add_argument(
            "--optimal",
            action="store_true",
            help="resolve all constants to their MSE-optimal values",
        )

    p = sub.add_parser("moments", help="combined design moments")
    common(p)

    p = sub.add_parser("estimate", help="point estimates from sample means")
    common(p)
    estimator_flags(p)
    p.add_argument("--ybar-st", type=float, required=True, dest="ybar_st")
    p.add_argument("--xbar-st", type=float, required=True, dest="xbar_st")

    p = sub.add_parser("mse", help="first-order MSE/bias/PRE")
    common(p)
    estimator_flags(p)

    p = sub.add_parser("optimize", help="MSE-optimal constants")
    common(p)
    estimator_flags(p)

    p = sub.add_parser("table", help="nine-row MSE/PRE comparison")
    common(p, data_required=False)
    estimator_flags(p)
    p.add_argument(
        "--paper-layout",
        action="store_true",
        help="both embedded datasets side by side in the original column layout",
    )

    p = sub.add_parser("simulate", help="Monte Carlo agreement report")
    common(p)
    estimator_flags(p)
    p.add_argument("--reps", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument(
        "--strict",
        action="store_true",
        help="exit 5 if any agreement verdict fails",
    )
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    known = {f.name for f in RunConfig.__dataclass_fields__.values()}  # type: ignore[attr-defined]
    payload = {k: v for k, v in vars(args).items() if k in known and v is not None}
    return RunConfig(**payload)


def run(config: RunConfig) -> int:
    """Dispatch a command; raises package errors for main() to report."""
    if config.command == "table" and not config.paper_layout and not config.data:
        raise SchemaError("table requires --data unless --paper-layout is given")
    try:
        handler = _COMMANDS[config.command]
    except KeyError:
        raise SchemaError(f"unknown command {config.command!r}") from None
    return handler(config)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    config = config_from_args(args)
    try:
        return run(config)
    except StratmeanError as exc:
        print(f"error:{exc.code}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error:computation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
