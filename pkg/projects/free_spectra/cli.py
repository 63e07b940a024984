"""Command-line interface: ``freespec linearize | density | simulate | compare | example``."""

import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd
import typer

try:  # typer >= 0.20 vendors click and raises its own exception classes
    from typer import _click as click
except ImportError:
    import click
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from rich.console import Console
from rich.table import Table

from projects.free_spectra.algorithms.density import (
    GRID_GRAMMAR,
    DensityCurve,
    ProblemSpec,
    cdf_from_density,
    density_grid,
    moments_from_density,
    parse_grid,
)
from projects.free_spectra.algorithms.linearize import METHODS, selfadjoint_linearize, verify_linearization
from projects.free_spectra.algorithms.oracle import CumulantSpec, poly_moments
from projects.free_spectra.algorithms.rmt import (
    ENSEMBLE_GRAMMAR,
    EnsembleSpec,
    empirical_moments,
    empirical_spectrum,
    ks_distance,
    parse_ensemble,
)
from projects.free_spectra.algorithms.subordination import SolverConfig
from projects.free_spectra.errors import ArtifactError, ExitCode, FreeSpectraError
from projects.free_spectra.models.measures import MEASURE_GRAMMAR, measure_from_dict, parse_measure
from projects.free_spectra.models.ncpoly import NCPolynomial, parse
from projects.free_spectra.project import EXAMPLES, FreeSpectraProject, moment_table
from shared.artifacts import atomic_write, read_sidecar, sidecar_path, write_json, write_sidecar
from shared.base import to_jsonable
from shared.config import get_config
from shared.logging import get_logger, setup_logging

log = get_logger(__name__)

console = Console()
err_console = Console(stderr=True)

app = typer.Typer(
    name="freespec",
    help="Spectral distributions of self-adjoint polynomials in free random variables.",
    add_completion=False,
    no_args_is_help=True,
)

Command = Literal["linearize", "density", "simulate", "compare", "example"]

POLY_HELP = "Polynomial in x1..xn, e.g. 'x1*x2 + x2*x1 + 0.5*x1^2'."
VAR_HELP = f"Variable binding k=MEASURE, repeatable. MEASURE: {MEASURE_GRAMMAR}"
ENSEMBLE_HELP = f"Variable binding k=ENSEMBLE, repeatable. ENSEMBLE: {ENSEMBLE_GRAMMAR}"
GRID_HELP = f"Evaluation grid {GRID_GRAMMAR}; defaults to the operator-norm bound padded by 10%."


class RunConfig(BaseModel):
    """Validated arguments of one CLI invocation, echoed into every sidecar."""

    command: Command
    poly: Optional[str] = None
    nvars: Optional[int] = Field(None, ge=1)
    bindings: Dict[int, str] = Field(default_factory=dict)
    method: Literal["anderson", "compact"] = "compact"
    verify: int = Field(0, ge=0)
    grid: Optional[str] = None
    epsilon: Optional[float] = Field(None, gt=0)
    tol: Optional[float] = Field(None, gt=0)
    max_iter: Optional[int] = Field(None, ge=1)
    richardson: bool = False
    n: Optional[int] = Field(None, ge=2)
    reps: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = None
    threads: Optional[int] = Field(None, ge=1)
    progress: bool = False
    out: Optional[Path] = None
    curve: Optional[Path] = None
    eigs: Optional[Path] = None
    oracle: bool = False
    k_max: int = Field(4, ge=1)
    bins: int = Field(60, ge=1)
    overlay: Optional[Path] = None
    example: Optional[str] = None
    grid_points: Optional[int] = Field(None, ge=2)

    @field_validator("bindings", mode="before")
    @classmethod
    def _split_bindings(cls, value: Any) -> Any:
        if isinstance(value, dict):
            return value
        out: Dict[int, str] = {}
        for item in value or ():
            key, sep, spec = str(item).partition("=")
            if not sep or not key.strip().isdigit() or not spec.strip():
                raise ValueError(f"binding {item!r} is not of the form k=SPEC")
            index = int(key)
            if index in out:
                raise ValueError(f"variable x{index} bound twice")
            out[index] = spec.strip()
        return out

    @model_validator(mode="after")
    def _check_command(self) -> "RunConfig":
        if self.command in ("linearize", "density", "simulate"):
            if self.poly is None or self.nvars is None:
                raise ValueError(f"{self.command} needs --poly and --nvars")
        if self.command in ("density", "simulate"):
            if self.out is None:
                raise ValueError(f"{self.command} needs --out")
            expected = set(range(1, self.nvars + 1))
            if set(self.bindings) != expected:
                missing = sorted(expected - set(self.bindings))
                extra = sorted(set(self.bindings) - expected)
                raise ValueError(f"bindings must cover x1..x{self.nvars} exactly (missing {missing}, extra {extra})")
        if self.command == "compare":
            if self.curve is None or self.eigs is None:
                raise ValueError("compare needs --curve and --eigs")
            inputs = {p.resolve() for p in (self.curve, self.eigs)}
            inputs |= {sidecar_path(p).resolve() for p in (self.curve, self.eigs)}
            for target in (self.out, self.overlay):
                if target is not None and target.resolve() in inputs:
                    raise ValueError(f"compare would overwrite its input {target}")
        if self.command == "example" and self.example not in EXAMPLES:
            raise ValueError(f"unknown example {self.example!r}; available: {sorted(EXAMPLES)}")
        return self

    def solver(self) -> SolverConfig:
        overrides = {"tol": self.tol, "max_iter": self.max_iter}
        return SolverConfig(**{k: v for k, v in overrides.items() if v is not None})

    def polynomial(self) -> NCPolynomial:
        return parse(self.poly, self.nvars)

    def dump(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _cmd_linearize(cfg: RunConfig) -> int:
    p = cfg.polynomial()
    lin = selfadjoint_linearize(p, method=cfg.method)
    payload: Dict[str, Any] = {
        "config": cfg.dump(),
        "polynomial": str(p),
        "method": cfg.method,
        "linearization": lin.to_dict(),
    }
    code = ExitCode.OK
    if cfg.verify:
        report = verify_linearization(lin, p, trials=cfg.verify, rng_seed=cfg.seed)
        payload["verification"] = report.to_dict()
        if not report.passed:
            err_console.print(f"[red]verification failed[/red]: max residual {report.max_residual:.3e}")
            code = ExitCode.SOLVER

    if cfg.out is not None:
        write_json(cfg.out, payload)
        console.print(f"linearization of dimension {lin.dim} written to {cfg.out}")
    else:
        console.print_json(data=to_jsonable(payload))
    return code


def _write_curve(path: Path, curve: DensityCurve, meta: Dict[str, Any]) -> None:
    with atomic_write(path) as handle:
        curve.to_frame().to_csv(handle, index=False)
    write_sidecar(path, {**meta, "curve": curve.metadata})


def _write_eigenvalues(path: Path, eigenvalues: np.ndarray, meta: Dict[str, Any]) -> None:
    with atomic_write(path) as handle:
        pd.DataFrame({"eigenvalue": eigenvalues}).to_csv(handle, index=False)
    write_sidecar(path, meta)


def _cmd_density(cfg: RunConfig) -> int:
    p = cfg.polynomial()
    measures = tuple(parse_measure(cfg.bindings[k]) for k in range(1, p.n_vars + 1))
    spec_kwargs: Dict[str, Any] = dict(
        grid=parse_grid(cfg.grid) if cfg.grid else None,
        solver=cfg.solver(),
        method=cfg.method,
        richardson=cfg.richardson,
    )
    if cfg.epsilon is not None:
        spec_kwargs["epsilon"] = cfg.epsilon
    spec = ProblemSpec(p, measures, **spec_kwargs)

    curve = density_grid(spec, workers=cfg.threads, progress=cfg.progress)
    _write_curve(cfg.out, curve, {"config": cfg.dump()})

    table = Table(title="density")
    table.add_column("points")
    table.add_column("mass")
    table.add_column("gaps")
    table.add_column("runtime [s]")
    table.add_row(
        str(curve.t.size), f"{curve.mass:.6f}", str(len(curve.gaps)), f"{curve.metadata['runtime']:.2f}"
    )
    console.print(table)

    if not np.isfinite(curve.rho).any():
        err_console.print("[red]no grid point converged[/red]")
        return ExitCode.SOLVER
    return ExitCode.OK


def _cmd_simulate(cfg: RunConfig) -> int:
    p = cfg.polynomial()
    ensembles = tuple(parse_ensemble(cfg.bindings[k]) for k in range(1, p.n_vars + 1))
    overrides = {"n": cfg.n, "reps": cfg.reps, "seed": cfg.seed}
    spec = EnsembleSpec(ensembles, **{k: v for k, v in overrides.items() if v is not None})

    eigenvalues = empirical_spectrum(p, spec, workers=cfg.threads, progress=cfg.progress)
    meta = {
        "config": cfg.dump(),
        "polynomial": str(p),
        "ensembles": [e.spec_string() for e in ensembles],
        "n": spec.n,
        "reps": spec.reps,
        "seed": spec.seed,
        "count": int(eigenvalues.size),
    }
    _write_eigenvalues(cfg.out, eigenvalues, meta)
    console.print(f"{eigenvalues.size} eigenvalues in [{eigenvalues[0]:.4f}, {eigenvalues[-1]:.4f}] written to {cfg.out}")
    return ExitCode.OK


def _read_frame(path: Path, columns: Sequence[str]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise ArtifactError(f"cannot read {path}: {exc}") from exc
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise ArtifactError(f"{path} lacks column(s) {missing}")
    return frame


def _optional_sidecar(path: Path) -> Dict[str, Any]:
    if not sidecar_path(path).exists():
        log.warning("no sidecar next to {}; comparing without metadata", path)
        return {}
    return read_sidecar(path)


def _oracle_moments(curve_meta: Dict[str, Any], k_max: int) -> List[float]:
    if "polynomial" not in curve_meta or "measures" not in curve_meta:
        raise FreeSpectraError("--oracle needs the curve sidecar with its polynomial and measures")
    p = parse(curve_meta["polynomial"], int(curve_meta["n_vars"]))
    measures = [measure_from_dict(m) for m in curve_meta["measures"]]
    return poly_moments(p, CumulantSpec.from_measures(measures), k_max)


def overlay_rows(eigenvalues: np.ndarray, curve: DensityCurve, bins: int) -> np.ndarray:
    """Bin centre, normalised histogram and curve density over a common range."""
    t, rho = curve.finite
    lo = min(float(t[0]), float(eigenvalues.min()))
    hi = max(float(t[-1]), float(eigenvalues.max()))
    hist, edges = np.histogram(eigenvalues, bins=bins, range=(lo, hi), density=True)
    centres = 0.5 * (edges[:-1] + edges[1:])
    return np.column_stack([centres, hist, np.interp(centres, t, rho, left=0.0, right=0.0)])


def _cmd_compare(cfg: RunConfig) -> int:
    meta = _optional_sidecar(cfg.curve)
    curve = DensityCurve.from_frame(_read_frame(cfg.curve, ("t", "rho")), meta.get("curve"))
    eigenvalues = np.sort(_read_frame(cfg.eigs, ("eigenvalue",))["eigenvalue"].to_numpy(dtype=float))
    if eigenvalues.size == 0:
        raise ArtifactError(f"{cfg.eigs} holds no eigenvalues")

    ks = ks_distance(eigenvalues, cdf_from_density(curve))
    oracle = _oracle_moments(meta.get("curve", {}), cfg.k_max) if cfg.oracle else None
    moments = moment_table(
        moments_from_density(curve, cfg.k_max), empirical_moments(eigenvalues, cfg.k_max), oracle
    )
    report = {
        "config": cfg.dump(),
        "ks": ks,
        "eigenvalues": int(eigenvalues.size),
        "curve_mass": curve.mass,
        "moments": moments,
    }

    if cfg.overlay is not None:
        with atomic_write(cfg.overlay) as handle:
            np.savetxt(
                handle,
                overlay_rows(eigenvalues, curve, cfg.bins),
                fmt="%.10g",
                header="bin_centre histogram density",
            )
        report["overlay"] = str(cfg.overlay)

    table = Table(title=f"KS distance {ks:.4f}")
    for column in ("k", "pipeline", "empirical", "oracle"):
        table.add_column(column)
    for row in moments:
        table.add_row(*("-" if row[c] is None else f"{row[c]:.6g}" for c in ("k", "pipeline", "empirical", "oracle")))
    console.print(table)

    if cfg.out is not None:
        write_json(cfg.out, report)
    return ExitCode.OK


def _cmd_example(cfg: RunConfig) -> int:
    out_dir = cfg.out or Path(get_config().RESULTS_DIR) / cfg.example
    params = {
        "n": cfg.n,
        "reps": cfg.reps,
        "seed": cfg.seed,
        "grid_points": cfg.grid_points,
        "epsilon": cfg.epsilon,
        "k_max": cfg.k_max,
        "workers": cfg.threads,
    }
    result = FreeSpectraProject().run_experiment(cfg.example, **{k: v for k, v in params.items() if v is not None})
    output = result.artifacts["output"]
    meta = {"config": cfg.dump(), "experiment": result.to_dict()}

    _write_curve(out_dir / "curve.csv", output["curve"], meta)
    _write_eigenvalues(out_dir / "eigs.csv", output["eigenvalues"], meta)
    write_json(
        out_dir / "report.json",
        {
            **meta,
            "dimension": output["dimension"],
            "reference_check": output["reference_check"],
            "ks": output["ks"],
            "moments": output["moments"],
        },
    )
    console.print(f"{cfg.example}: KS {output['ks']:.4f}, mass {output['curve'].mass:.6f}, artifacts in {out_dir}")
    return ExitCode.OK


_COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "linearize": _cmd_linearize,
    "density": _cmd_density,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
    "example": _cmd_example,
}


def run(config: RunConfig) -> int:
    """Execute one validated invocation and map failures onto exit codes."""
    try:
        return int(_COMMANDS[config.command](config))
    except FreeSpectraError as exc:
        err_console.print(f"[red]error[/red]: {exc}")
        log.debug("{} failed: {!r}", config.command, exc)
        return int(exc.exit_code)
    except OSError as exc:
        err_console.print(f"[red]I/O error[/red]: {exc}")
        return int(ExitCode.IO)
    except np.linalg.LinAlgError as exc:
        err_console.print(f"[red]numerical error[/red]: {exc}")
        return int(ExitCode.SOLVER)
    except ValueError as exc:
        err_console.print(f"[red]invalid argument[/red]: {exc}")
        return int(ExitCode.USAGE)


def _execute(**fields: Any) -> None:
    try:
        config = RunConfig(**fields)
    except ValidationError as exc:
        for error in exc.errors():
            where = ".".join(str(x) for x in error["loc"]) or "arguments"
            err_console.print(f"[red]invalid {where}[/red]: {error['msg']}")
        raise typer.Exit(int(ExitCode.USAGE))
    code = run(config)
    if code:
        raise typer.Exit(code)


@app.callback()
def _configure(
    log_level: Optional[str] = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING or ERROR."),
    log_file: Optional[Path] = typer.Option(None, "--log-file", help="Also log to this rotating file."),
) -> None:
    setup_logging(log_level.upper() if log_level else None, log_file)


@app.command()
def linearize(
    poly: str = typer.Option(..., "--poly", help=POLY_HELP),
    nvars: int = typer.Option(..., "--nvars", help="Number of variables n."),
    verify: int = typer.Option(0, "--verify", help="Random Hermitian trials checking the Schur identity."),
    method: str = typer.Option("compact", "--method", help=f"One of {', '.join(METHODS)}."),
    seed: Optional[int] = typer.Option(None, "--seed"),
    out: Optional[Path] = typer.Option(None, "--out", help="JSON output; printed when omitted."),
) -> None:
    """Self-adjoint linearization of POLY as JSON coefficient matrices b_0..b_n."""
    _execute(command="linearize", poly=poly, nvars=nvars, verify=verify, method=method, seed=seed, out=out)


@app.command()
def density(
    poly: str = typer.Option(..., "--poly", help=POLY_HELP),
    nvars: int = typer.Option(..., "--nvars", help="Number of variables n."),
    var: List[str] = typer.Option([], "--var", help=VAR_HELP),
    grid: Optional[str] = typer.Option(None, "--grid", help=GRID_HELP),
    eps: Optional[float] = typer.Option(None, "--eps", help="Regularization epsilon."),
    tol: Optional[float] = typer.Option(None, "--tol", help="Fixed-point tolerance."),
    max_iter: Optional[int] = typer.Option(None, "--max-iter"),
    richardson: bool = typer.Option(False, "--richardson", help="Extrapolate 2*rho(eps) - rho(2*eps)."),
    method: str = typer.Option("compact", "--method", help=f"One of {', '.join(METHODS)}."),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker processes for the grid sweep."),
    progress: bool = typer.Option(False, "--progress"),
    out: Path = typer.Option(..., "--out", help="CSV with columns t,rho,raw_rho,iterations,residual."),
) -> None:
    """Density of POLY on a grid; writes OUT and OUT.json."""
    _execute(
        command="density",
        poly=poly,
        nvars=nvars,
        bindings=var,
        grid=grid,
        epsilon=eps,
        tol=tol,
        max_iter=max_iter,
        richardson=richardson,
        method=method,
        threads=threads,
        progress=progress,
        out=out,
    )


@app.command()
def simulate(
    poly: str = typer.Option(..., "--poly", help=POLY_HELP),
    nvars: int = typer.Option(..., "--nvars", help="Number of variables n."),
    ensemble: List[str] = typer.Option([], "--ensemble", help=ENSEMBLE_HELP),
    n: Optional[int] = typer.Option(None, "--n", help="Matrix size."),
    reps: Optional[int] = typer.Option(None, "--reps", help="Independent replications."),
    seed: Optional[int] = typer.Option(None, "--seed"),
    threads: Optional[int] = typer.Option(None, "--threads"),
    progress: bool = typer.Option(False, "--progress"),
    out: Path = typer.Option(..., "--out", help="CSV with one column 'eigenvalue'."),
) -> None:
    """Pooled eigenvalues of POLY at sampled random matrices."""
    _execute(
        command="simulate",
        poly=poly,
        nvars=nvars,
        bindings=ensemble,
        n=n,
        reps=reps,
        seed=seed,
        threads=threads,
        progress=progress,
        out=out,
    )


@app.command()
def compare(
    curve: Path = typer.Option(..., "--curve", help="Density CSV written by 'density'."),
    eigs: Path = typer.Option(..., "--eigs", help="Eigenvalue CSV written by 'simulate'."),
    oracle: bool = typer.Option(False, "--oracle", help="Add moments from non-crossing partitions."),
    k_max: int = typer.Option(4, "--k-max"),
    bins: int = typer.Option(60, "--bins"),
    overlay: Optional[Path] = typer.Option(None, "--overlay", help="Whitespace-separated histogram/density data."),
    out: Optional[Path] = typer.Option(None, "--out", help="JSON report."),
) -> None:
    """KS distance and moment table between a density curve and sampled eigenvalues."""
    _execute(
        command="compare", curve=curve, eigs=eigs, oracle=oracle, k_max=k_max, bins=bins, overlay=overlay, out=out
    )


@app.command()
def example(
    name: str = typer.Argument(..., help=f"One of {', '.join(EXAMPLES)}."),
    n: Optional[int] = typer.Option(None, "--n"),
    reps: Optional[int] = typer.Option(None, "--reps"),
    seed: Optional[int] = typer.Option(None, "--seed"),
    grid_points: Optional[int] = typer.Option(None, "--grid-points"),
    eps: Optional[float] = typer.Option(None, "--eps"),
    k_max: int = typer.Option(4, "--k-max"),
    threads: Optional[int] = typer.Option(None, "--threads"),
    out_dir: Optional[Path] = typer.Option(None, "--out-dir"),
) -> None:
    """Run a worked example: pipeline, Monte Carlo and moment oracle."""
    _execute(
        command="example",
        example=name,
        n=n,
        reps=reps,
        seed=seed,
        grid_points=grid_points,
        epsilon=eps,
        k_max=k_max,
        threads=threads,
        out=out_dir,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    command = typer.main.get_command(app)
    try:
        result = command.main(args=list(argv) if argv is not None else None, prog_name="freespec", standalone_mode=False)
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return int(ExitCode.USAGE)
    except click.exceptions.Abort:
        err_console.print("aborted")
        return int(ExitCode.USAGE)
    return result if isinstance(result, int) else int(ExitCode.OK)


def run_cli() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run_cli()
