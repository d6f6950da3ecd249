"""CLI interface for MUSS Select."""

import json
import logging
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Iterator, NoReturn, Optional, TypeVar

import numpy as np
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from muss import __version__
from muss.bench import (
    BenchGrid,
    QualityModel,
    SyntheticSpec,
    generate,
    precision_at_k,
    run_benchmark,
)
from muss.clustering import kmeans_fit, max_radius, summarize_clusters
from muss.core import Criterion, Dataset
from muss.dataset_io import DatasetFormat, binary_size, load_dataset, save_dataset
from muss.errors import EnumerationCapError, MussError, PreconditionError
from muss.oracle import (
    DEFAULT_SUBSET_CAP,
    THEOREM4,
    THEOREM5,
    VerifySuite,
    verify_bounds,
    verify_lemma1_suite,
    verify_lemma8_suite,
)
from muss.plotting import stage_time_chart
from muss.presets import Preset, load_preset
from muss.reporting import ClusterReport, SelectionReport, VerifyFileReport
from muss.selectors.registry import (
    CLUSTERED,
    REQUIRED_SETTINGS,
    Method,
    MethodConfig,
    run_method,
)

app = typer.Typer(help="MUSS Select - quality and diversity subset selection")
console = Console()

EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_VIOLATION = 3

T = TypeVar("T")


class Suite(str, Enum):
    LEMMA1 = "lemma1"
    THEOREM4 = "theorem4"
    THEOREM5 = "theorem5"
    LEMMA8 = "lemma8"


@app.callback()
def main_callback(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Log debug detail"),
) -> None:
    """Quality and diversity subset selection over embedding datasets."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def fail(message: str, code: int) -> NoReturn:
    """Print an error and exit with `code`."""
    label = "Usage error" if code == EXIT_USAGE else "Error"
    console.print(f"[red]{label}:[/red] {message}")
    raise typer.Exit(code)


@contextmanager
def handle_errors() -> Iterator[None]:
    """Map toolkit exceptions onto exit codes."""
    try:
        yield
    except (PreconditionError, EnumerationCapError) as e:
        fail(str(e), EXIT_USAGE)
    except ValidationError as e:
        fail(f"Invalid settings: {e}", EXIT_USAGE)
    except json.JSONDecodeError as e:
        fail(f"Malformed JSON: {e}", EXIT_RUNTIME)
    except (MussError, OSError) as e:
        fail(str(e), EXIT_RUNTIME)


def pick(flag: Optional[T], preset_value: Optional[T], default: Optional[T] = None) -> Optional[T]:
    """Resolve a setting: explicit flag, then preset, then built-in default."""
    if flag is not None:
        return flag
    if preset_value is not None:
        return preset_value
    return default


def parse_list(text: str, cast: type) -> list:
    """Parse a comma-separated option value."""
    try:
        return [cast(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError:
        fail(f"Could not parse '{text}' as a comma-separated list", EXIT_USAGE)


def get_preset(name: Optional[str]) -> Optional[Preset]:
    if not name:
        return None
    try:
        preset = load_preset(name)
    except FileNotFoundError as e:
        fail(str(e), EXIT_USAGE)
    except (ValidationError, json.JSONDecodeError) as e:
        fail(f"Invalid preset '{name}': {e}", EXIT_USAGE)
    console.print(f"[green]Loaded preset:[/green] {preset.name}")
    return preset


def read_input(path: Path, l2_normalize: bool) -> Dataset:
    if not path.exists():
        fail(f"File not found: {path}", EXIT_RUNTIME)
    with handle_errors():
        with console.status("[bold green]Loading dataset..."):
            ds = load_dataset(path)
    if l2_normalize:
        ds = ds.l2_normalized()
    return ds


@app.command()
def gen(
    n: int = typer.Option(..., "--n", help="Number of items"),
    dim: int = typer.Option(8, "--dim", help="Embedding dimension"),
    blobs: int = typer.Option(4, "--blobs", help="Number of Gaussian components"),
    spread: float = typer.Option(1.0, "--spread", help="Within-blob standard deviation"),
    separation: float = typer.Option(10.0, "--separation", help="Scale of blob centers"),
    quality_model: QualityModel = typer.Option(
        QualityModel.UNIFORM, "--quality-model", help="Quality distribution"
    ),
    relevant_frac: float = typer.Option(0.0, "--relevant-frac", help="Fraction labeled relevant"),
    label_noise: float = typer.Option(0.1, "--label-noise", help="Label flip probability"),
    seed: int = typer.Option(0, "--seed", help="Random seed"),
    out: Path = typer.Option(..., "--out", "-o", help="Output dataset file"),
    fmt: Optional[DatasetFormat] = typer.Option(
        None, "--format", help="File format (default: from the file suffix)"
    ),
) -> None:
    """Generate a synthetic Gaussian-mixture dataset."""
    with handle_errors():
        spec = SyntheticSpec(
            n=n,
            dim=dim,
            blobs=blobs,
            blob_spread=spread,
            blob_separation=separation,
            quality_model=quality_model,
            relevant_fraction=relevant_frac,
            label_noise=label_noise,
            seed=seed,
        )
        with console.status("[bold green]Generating dataset..."):
            ds = generate(spec)
            save_dataset(ds, out, fmt)
    console.print(
        f"[green]Wrote[/green] {out}: n={ds.n}, d={ds.dim}, blobs={blobs}, labels={ds.has_labels}"
    )


@app.command()
def cluster(
    input_file: Path = typer.Option(..., "--input", "-i", help="Dataset file"),
    l: Optional[int] = typer.Option(None, "--l", help="Number of clusters"),
    quality_weight: Optional[float] = typer.Option(
        None, "--quality-weight", help="Weight of the quality deviation term"
    ),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed"),
    max_iters: Optional[int] = typer.Option(None, "--max-iters", help="Iteration cap"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Relative improvement to stop at"),
    model_out: Path = typer.Option(..., "--model-out", "-o", help="Model JSON output"),
    preset: Optional[str] = typer.Option(None, "--preset", help="Preset name or JSON path"),
    l2_normalize: bool = typer.Option(False, "--l2-normalize", help="Unit-normalize embeddings"),
) -> None:
    """Train k-means (optionally quality-augmented) and write the model."""
    loaded = get_preset(preset)
    l = pick(l, loaded.l if loaded else None)
    if l is None:
        fail("--l is required (or a preset that sets it)", EXIT_USAGE)
    ds = read_input(input_file, l2_normalize)

    with handle_errors():
        settings = {
            "l": l,
            "quality_weight": pick(quality_weight, loaded.quality_weight if loaded else None, 0.0),
            "seed": pick(seed, loaded.seed if loaded else None, 0),
            "max_iters": pick(max_iters, loaded.max_iters if loaded else None, 100),
            "tol": pick(tol, loaded.tol if loaded else None, 1e-6),
        }
        with console.status("[bold green]Clustering..."):
            model = kmeans_fit(ds, **settings)
            summaries = summarize_clusters(ds, model)
        report = ClusterReport(
            input=str(input_file),
            model=model,
            mean_sq_distance=model.mean_sq_distance,
            summaries=summaries,
            params={**settings, "l2_normalize": l2_normalize},
        )
        report.save(model_out)

    table = Table(title="Clustering Results")
    table.add_column("Property", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("Items", str(ds.n))
    table.add_row("Clusters", str(model.l))
    table.add_row("Iterations", str(model.iterations_run))
    table.add_row("Objective (WCSS)", f"{model.wcss:.6g}")
    table.add_row("Mean squared distance", f"{model.mean_sq_distance:.6g}")
    table.add_row("Max radius", f"{max_radius(summaries):.6g}")
    table.add_row("Smallest cluster", str(min(s.size for s in summaries)))
    console.print(table)
    console.print(f"[green]Model written to[/green] {model_out}")


@app.command()
def select(
    input_file: Path = typer.Option(..., "--input", "-i", help="Dataset file"),
    method: Method = typer.Option(..., "--method", help="Selection method"),
    k: Optional[int] = typer.Option(None, "--k", help="Number of items to select"),
    k_within: Optional[int] = typer.Option(None, "--kw", help="Items per cluster/partition"),
    lambda_: Optional[float] = typer.Option(None, "--lambda", help="Quality/diversity trade-off"),
    lambda_c: Optional[float] = typer.Option(None, "--lambda-c", help="Cluster-level trade-off"),
    lambda_within: Optional[float] = typer.Option(
        None, "--lambda-within", help="Trade-off inside clusters (default: --lambda)"
    ),
    lambda_final: Optional[float] = typer.Option(
        None, "--lambda-final", help="Trade-off of the final pass (default: --lambda)"
    ),
    l: Optional[int] = typer.Option(None, "--l", help="Number of clusters/partitions"),
    m: Optional[int] = typer.Option(None, "--m", help="Number of clusters to select"),
    model_path: Optional[Path] = typer.Option(None, "--model", help="Precomputed model JSON"),
    sigma_sweep: bool = typer.Option(False, "--sigma-sweep", help="Sweep the final quality scaler"),
    criterion: Optional[Criterion] = typer.Option(None, "--criterion", help="Greedy criterion"),
    normalize: Optional[bool] = typer.Option(
        None, "--normalize/--no-normalize", help="Divide summed distances by |S|"
    ),
    workers: Optional[int] = typer.Option(
        None, "--workers", envvar="MUSS_WORKERS", help="Parallel workers"
    ),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed"),
    quality_weight: Optional[float] = typer.Option(
        None, "--quality-weight", help="Quality weight for in-process clustering"
    ),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Result JSON output"),
    preset: Optional[str] = typer.Option(None, "--preset", help="Preset name or JSON path"),
    l2_normalize: bool = typer.Option(False, "--l2-normalize", help="Unit-normalize embeddings"),
) -> None:
    """Select k items with the chosen method."""
    loaded = get_preset(preset)
    k = pick(k, loaded.k if loaded else None)
    settings = {
        "k_within": pick(k_within, loaded.k_within if loaded else None),
        "l": pick(l, loaded.l if loaded else None),
        "m": pick(m, loaded.m if loaded else None),
    }
    flags = {"k_within": "--kw", "l": "--l", "m": "--m"}
    missing = [] if k is not None else ["--k"]
    missing += [flags[name] for name in REQUIRED_SETTINGS.get(method, ()) if settings[name] is None]
    if method in CLUSTERED and model_path is not None and "--l" in missing:
        missing.remove("--l")
    if missing:
        fail(f"Method '{method.value}' requires: {', '.join(missing)}", EXIT_USAGE)

    ds = read_input(input_file, l2_normalize)
    if k > ds.n:
        console.print(f"[yellow]Warning:[/yellow] k={k} exceeds n={ds.n}; selecting all {ds.n}")
        k = ds.n

    with handle_errors():
        model = None
        if model_path is not None:
            if method not in CLUSTERED:
                console.print(f"[yellow]Warning:[/yellow] --model is ignored by {method.value}")
            else:
                model = ClusterReport.load_model(model_path)
                settings["l"] = model.l
        config = MethodConfig(
            k=k,
            **settings,
            lambda_=pick(lambda_, loaded.lambda_ if loaded else None, 0.5),
            lambda_c=pick(lambda_c, loaded.lambda_c if loaded else None, 0.5),
            lambda_within=lambda_within,
            lambda_final=lambda_final,
            criterion=pick(criterion, loaded.criterion if loaded else None, Criterion.SUM_DISTANCE),
            normalize_by_size=pick(normalize, loaded.normalize if loaded else None, True),
            sigma_sweep=sigma_sweep,
            workers=pick(workers, loaded.workers if loaded else None, 1),
            seed=pick(seed, loaded.seed if loaded else None, 0),
            quality_weight=pick(quality_weight, loaded.quality_weight if loaded else None, 0.0),
        )
        with console.status(f"[bold green]Selecting with {method.value}..."):
            result = run_method(ds, method, config, model)
        precision = precision_at_k(ds, result) if ds.has_labels else None
        report = SelectionReport.from_result(result, input_file, precision)
        if out is not None:
            report.save(out)

    table = Table(title="Selection Results")
    table.add_column("Property", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("Method", result.method)
    table.add_row("Selected", str(len(result.selected)))
    table.add_row("Objective (mean-scaled)", f"{result.objective_mean_scaled:.4f}")
    table.add_row("Quality (mean)", f"{result.quality_mean:.4f}")
    table.add_row("Diversity (mean)", f"{result.diversity_mean:.4f}")
    if precision is not None:
        table.add_row("Precision", f"{precision:.4f}")
    table.add_row("Wall time", f"{result.wall_time_ms:.1f} ms")
    for stage, ms in result.stage_times.items():
        table.add_row(f"  {stage}", f"{ms:.1f} ms")
    console.print(table)
    for warning in result.warnings:
        console.print(f"[yellow]Warning:[/yellow] {warning}")
    if out is not None:
        console.print(f"[green]Result written to[/green] {out}")


@app.command()
def bench(
    input_file: Optional[Path] = typer.Option(None, "--input", "-i", help="Dataset file"),
    gen_spec: Optional[Path] = typer.Option(
        None, "--gen-spec", help="JSON generator settings to benchmark on"
    ),
    methods: str = typer.Option(..., "--methods", help="Comma-separated method names"),
    k: int = typer.Option(10, "--k", help="Number of items to select"),
    k_within: int = typer.Option(10, "--kw", help="Items per cluster/partition"),
    lambda_grid: str = typer.Option("0.5", "--lambda-grid", help="Comma-separated lambdas"),
    lambda_c_grid: str = typer.Option("0.5", "--lambda-c-grid", help="Comma-separated lambda_c"),
    l_grid: str = typer.Option("10", "--l", help="Cluster/partition count(s)"),
    m_grid: str = typer.Option("3", "--m", help="Selected cluster count(s)"),
    repeats: int = typer.Option(5, "--repeats", help="Runs per method and cell"),
    seed: int = typer.Option(0, "--seed", help="Master seed"),
    criterion: Criterion = typer.Option(
        Criterion.SUM_DISTANCE, "--criterion", help="Greedy criterion"
    ),
    normalize: bool = typer.Option(True, "--normalize/--no-normalize", help="Divide by |S|"),
    sigma_sweep: bool = typer.Option(False, "--sigma-sweep", help="Sweep the final quality scaler"),
    quality_weight: float = typer.Option(0.0, "--quality-weight", help="Clustering quality weight"),
    workers: int = typer.Option(1, "--workers", envvar="MUSS_WORKERS", help="Parallel workers"),
    out_csv: Optional[Path] = typer.Option(None, "--out-csv", help="Aggregated CSV output"),
    out_json: Optional[Path] = typer.Option(None, "--out-json", help="Rows and aggregate JSON"),
    out_plot: Optional[Path] = typer.Option(None, "--out-plot", help="Stage-time chart (PNG)"),
    l2_normalize: bool = typer.Option(False, "--l2-normalize", help="Unit-normalize embeddings"),
) -> None:
    """Benchmark methods over a parameter grid."""
    if (input_file is None) == (gen_spec is None):
        fail("Give exactly one of --input or --gen-spec", EXIT_USAGE)
    names = parse_list(methods, str)
    unknown = [name for name in names if name not in {m.value for m in Method}]
    if not names or unknown:
        fail(f"Unknown or missing methods: {', '.join(unknown) or '(none)'}", EXIT_USAGE)

    if input_file is not None:
        ds = read_input(input_file, l2_normalize)
    else:
        with handle_errors():
            with open(gen_spec, "r") as f:
                ds = generate(SyntheticSpec.model_validate(json.load(f)))
        if l2_normalize:
            ds = ds.l2_normalized()

    with handle_errors():
        grid = BenchGrid(
            k=k,
            k_within=k_within,
            lambdas=parse_list(lambda_grid, float),
            lambda_cs=parse_list(lambda_c_grid, float),
            ls=parse_list(l_grid, int),
            ms=parse_list(m_grid, int),
            criterion=criterion,
            normalize_by_size=normalize,
            sigma_sweep=sigma_sweep,
            quality_weight=quality_weight,
            workers=workers,
        )
        with console.status("[bold green]Benchmarking..."):
            report = run_benchmark(ds, names, grid, repeats=repeats, seed=seed)
        if out_csv is not None:
            report.save_csv(out_csv)
        if out_json is not None:
            report.save_json(out_json)
        if out_plot is not None and report.failures < len(report.rows):
            stage_time_chart(report, out_plot)

    aggregate = report.aggregate()
    table = Table(title="Benchmark Results")
    for column in ["method", "lambda", "l", "m", "runs", "failed"]:
        table.add_column(column, style="cyan")
    for column in ["objective_mean_scaled", "precision", "wall_time_ms"]:
        table.add_column(column, style="green")
    for record in aggregate.to_dict(orient="records"):
        table.add_row(
            *(str(record.get(c, "")) for c in ["method", "lambda", "l", "m", "runs", "failed"]),
            *(
                _mean_stderr(record, c)
                for c in ["objective_mean_scaled", "precision", "wall_time_ms"]
            ),
        )
    console.print(table)

    if report.failures:
        console.print(f"[yellow]Warning:[/yellow] {report.failures} run(s) failed")
    if report.rows and report.failures == len(report.rows):
        fail("Every benchmark run failed", EXIT_RUNTIME)


def _mean_stderr(record: dict, column: str) -> str:
    mean = record.get(f"{column}_mean")
    if mean is None or mean != mean:
        return "-"
    stderr = record.get(f"{column}_stderr")
    if stderr is None or stderr != stderr:
        return f"{mean:.4g}"
    return f"{mean:.4g} ± {stderr:.2g}"


@app.command()
def verify(
    suite: Suite = typer.Option(..., "--suite", help="Guarantee to check"),
    n: int = typer.Option(12, "--n", help="Items per instance"),
    k: int = typer.Option(3, "--k", help="Selection size"),
    m: int = typer.Option(2, "--m", help="Selected clusters"),
    l: int = typer.Option(3, "--l", help="Clusters/partitions"),
    k_within: int = typer.Option(3, "--kw", help="Items per cluster/partition"),
    lambda_: float = typer.Option(0.5, "--lambda", help="Quality/diversity trade-off"),
    lambda_c: float = typer.Option(0.5, "--lambda-c", help="Cluster-level trade-off"),
    trials: int = typer.Option(100, "--trials", help="Random instances"),
    seed: int = typer.Option(0, "--seed", help="Master seed"),
    dim: int = typer.Option(2, "--dim", help="Embedding dimension"),
    cap: int = typer.Option(DEFAULT_SUBSET_CAP, "--cap", help="Subset enumeration cap"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Report JSON output"),
) -> None:
    """Check an approximation guarantee on random instances against the exact optimum."""
    with handle_errors():
        settings = VerifySuite(
            n=n,
            k=k,
            m=m,
            l=l,
            k_within=k_within,
            lambda_=lambda_,
            lambda_c=lambda_c,
            trials=trials,
            seed=seed,
            dim=dim,
            cap=cap,
        )
        with console.status(f"[bold green]Verifying {suite.value}..."):
            if suite is Suite.LEMMA1:
                report = verify_lemma1_suite(settings)
            elif suite is Suite.LEMMA8:
                report = verify_lemma8_suite(settings)
            else:
                bound = THEOREM4 if suite is Suite.THEOREM4 else THEOREM5
                report = verify_bounds(settings, (bound,))
        file_report = VerifyFileReport.from_report(report)
        if out is not None:
            file_report.save(out)

    table = Table(title=f"Verification: {suite.value}")
    table.add_column("Check", style="cyan")
    table.add_column("Passed", style="green")
    table.add_column("Failed", style="red")
    table.add_column("Skipped")
    table.add_column("Min slack")
    for bound, row in file_report.summary.items():
        table.add_row(
            bound,
            str(int(row["passed"])),
            str(int(row["failed"])),
            str(int(row["skipped"])),
            f"{row['min_slack']:.4g}",
        )
    console.print(table)

    if not report.passed:
        fail(f"{len(report.violations)} violation(s) found", EXIT_VIOLATION)
    console.print(f"[green]All {trials} trial(s) passed[/green]")


@app.command()
def inspect(
    input_file: Path = typer.Argument(..., help="Dataset file"),
) -> None:
    """Show basic facts about a dataset file."""
    ds = read_input(input_file, l2_normalize=False)

    table = Table(title="Dataset")
    table.add_column("Property", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("File", str(input_file))
    table.add_row("Items", str(ds.n))
    table.add_row("Dimension", str(ds.dim))
    table.add_row("Labels", "yes" if ds.has_labels else "no")
    if ds.n:
        table.add_row("Quality range", f"{ds.qualities.min():.4g} - {ds.qualities.max():.4g}")
        table.add_row("Quality median", f"{float(np.median(ds.qualities)):.4g}")
    if ds.has_labels and ds.n:
        table.add_row("Relevant", f"{int(ds.labels.sum())} ({ds.labels.mean():.1%})")
    table.add_row("Binary size", f"{binary_size(ds.n, ds.dim, ds.has_labels)} bytes")
    console.print(table)


@app.command()
def version() -> None:
    """Show version information."""
    console.print(f"MUSS Select version {__version__}")


def main() -> None:
    """Main entry point."""
    app()


if __name__ == "__main__":
    main()
