"""Typer CLI for gammakit.

Every command reads JSON inputs (a path, or ``-`` for stdin), prints a rich
table or the JSON report, and exits with 0 on Pass, 2 on a mathematical
failure and 3 on bad input.
"""

import logging
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated, Any

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from gammakit import bipoly, decomp, dilation, opcore, reports
from gammakit.errors import GammaError
from gammakit.fixtures import all_fixtures
from gammakit.geometry import classify_point
from gammakit.models import Certificate, Point2, PolyTag, RunConfig, Verdict

app = typer.Typer(
    name="gammakit",
    help="Operator theory of the symmetrized bidisc at matrix scale.",
    no_args_is_help=True,
    rich_markup_mode="rich",
)

console = Console()
err_console = Console(stderr=True)

EXIT_FAIL = 2
EXIT_INPUT = 3

# ---------------------------------------------------------------------------
# Shared options
# ---------------------------------------------------------------------------

JsonFlag = Annotated[
    bool,
    typer.Option("--json", "-j", help="Output as JSON instead of a table."),
]
InputPath = Annotated[
    str,
    typer.Argument(help="JSON input file, or '-' for stdin."),
]


@app.callback()
def main(
    ctx: typer.Context,
    tol: Annotated[float, typer.Option(help="Operator tolerance.")] = 1e-9,
    rank_tol: Annotated[float, typer.Option(help="Relative rank cutoff.")] = 1e-8,
    samples: Annotated[int, typer.Option(help="Boundary samples for polynomials.")] = 512,
    seed: Annotated[int, typer.Option(help="Seed for every random choice.")] = 0,
    truncation: Annotated[int, typer.Option(help="Truncation depth n or N.")] = 6,
    probe_degree: Annotated[int, typer.Option(help="Highest probed degree.")] = 2,
    sampler_tol: Annotated[float, typer.Option(help="Boundary-sampler tolerance.")] = 1e-6,
    out: Annotated[
        Path | None, typer.Option("--out", "-o", help="Also write the JSON report here.")
    ] = None,
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging.")] = False,
) -> None:
    """Collect run settings shared by every command."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )
    try:
        ctx.obj = RunConfig(
            tol=tol,
            rank_tol=rank_tol,
            samples=samples,
            seed=seed,
            truncation=truncation,
            probe_degree=probe_degree,
            sampler_tol=sampler_tol,
            output_path=str(out) if out else None,
        )
    except ValidationError as exc:
        err_console.print(f"[red]Invalid settings: {escape(str(exc))}[/red]")
        raise typer.Exit(code=EXIT_INPUT)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


@contextmanager
def _guarded() -> Iterator[None]:
    """Map domain errors to exit 2 and input errors to exit 3."""
    try:
        yield
    except GammaError as exc:
        err_console.print(f"[red]{type(exc).__name__}: {escape(str(exc))}[/red]")
        raise typer.Exit(code=EXIT_FAIL)
    except (ValueError, OSError, KeyError) as exc:
        err_console.print(f"[red]Invalid input: {escape(str(exc))}[/red]")
        raise typer.Exit(code=EXIT_INPUT)


def _emit(
    cfg: RunConfig,
    result: Any,
    output_json: bool,
    render: Callable[[], None],
) -> None:
    payload = reports.build_payload(cfg, result)
    if cfg.output_path:
        with _guarded():
            reports.write_report(payload, cfg.output_path)
    if output_json:
        console.print_json(reports.dumps(payload))
    else:
        render()


def _exit_for(verdict: Verdict) -> None:
    if verdict is not Verdict.PASS:
        raise typer.Exit(code=EXIT_FAIL)


def _certificate_table(title: str, cert: Certificate) -> Table:
    table = Table(title=f"{title}: {cert.verdict}")
    table.add_column("Check", style="bold")
    table.add_column("Value", justify="right")
    table.add_column("Threshold", justify="right", style="dim")
    table.add_column("Status")
    for check in cert.checks:
        table.add_row(
            check.name,
            f"{check.value:.3e}",
            f"{check.threshold:.3e}",
            "[green]ok[/green]" if check.passed else "[red]fail[/red]",
        )
    return table


def _print_certificate(title: str, cert: Certificate) -> None:
    console.print(_certificate_table(title, cert))
    if cert.notes:
        console.print(f"[dim]{escape(cert.notes)}[/dim]")


def parse_point(text: str) -> Point2:
    """Parse ``"(s,p)"`` with Python complex literals, e.g. ``"(1+2j,0.5)"``.

    Raises:
        ValueError: If the text is not two comma-separated complex numbers.
    """
    body = text.strip()
    if body.startswith("(") and body.endswith(")"):
        body = body[1:-1]
    parts = [part.strip() for part in body.split(",")]
    if len(parts) != 2:
        raise ValueError(f"expected '(s,p)', got {text!r}")
    return Point2(complex(parts[0]), complex(parts[1]))


# ---------------------------------------------------------------------------
# classify-point
# ---------------------------------------------------------------------------


@app.command("classify-point")
def classify_point_cmd(
    ctx: typer.Context,
    point: Annotated[str, typer.Argument(help="Point as '(s,p)', e.g. '(1+2j,0.5)'.")],
    output_json: JsonFlag = False,
) -> None:
    """Locate a point relative to G2, Gamma and the distinguished boundary."""
    cfg: RunConfig = ctx.obj
    with _guarded():
        pt = parse_point(point)
        cls_ = classify_point(pt, cfg.tol)

    def render() -> None:
        console.print(f"[bold]Point:[/bold] ({pt.s}, {pt.p})")
        console.print(f"[bold]Tag:[/bold] [cyan]{cls_.tag}[/cyan]")
        console.print(f"[bold]Fiber:[/bold] {cls_.fiber[0]:.6g}, {cls_.fiber[1]:.6g}")
        console.print(f"[bold]Margin:[/bold] {cls_.margin:.3e}")

    _emit(cfg, {"point": pt.to_json(), **cls_.to_json()}, output_json, render)


# ---------------------------------------------------------------------------
# classify-poly
# ---------------------------------------------------------------------------


@app.command("classify-poly")
def classify_poly_cmd(
    ctx: typer.Context,
    path: InputPath,
    output_json: JsonFlag = False,
) -> None:
    """Sample the zero set of a polynomial against Gamma and its boundaries.

    Raises:
        typer.Exit: Exit 2 unless the zero set is (Gamma-)distinguished.
    """
    cfg: RunConfig = ctx.obj
    with _guarded():
        p = reports.load_poly(path)
        verdict = bipoly.classify_poly(p, cfg.sampler())

    def render() -> None:
        table = Table(title=f"Zero set of {p!r}")
        table.add_column("Property", style="bold")
        table.add_column("Value")
        table.add_row("tag", f"[cyan]{verdict.tag}[/cyan]")
        table.add_row("gamma-distinguished", str(verdict.gamma_distinguished))
        table.add_row("distinguished", str(verdict.distinguished))
        table.add_row("samples", str(verdict.samples_checked))
        table.add_row("boundary violations", str(verdict.boundary_violations))
        table.add_row("exterior violations", str(verdict.exterior_violations))
        table.add_row("degenerate slices", str(verdict.degenerate_slices))
        if verdict.worst_violation is not None:
            pt, cls_ = verdict.worst_violation
            table.add_row("worst violation", f"({pt.s:.4g}, {pt.p:.4g}) {cls_.tag}")
        if verdict.notes:
            table.add_row("notes", escape(verdict.notes))
        console.print(table)

    _emit(cfg, verdict.to_json(), output_json, render)
    if verdict.tag in (PolyTag.NEITHER_EVIDENCE, PolyTag.INCONCLUSIVE):
        raise typer.Exit(code=EXIT_FAIL)


# ---------------------------------------------------------------------------
# certify
# ---------------------------------------------------------------------------


@app.command()
def certify(
    ctx: typer.Context,
    path: InputPath,
    unitary: Annotated[
        bool, typer.Option("--unitary", "-u", help="Certify a Gamma-unitary instead.")
    ] = False,
    output_json: JsonFlag = False,
) -> None:
    """Certify a pair as a Gamma-contraction (or Gamma-unitary).

    Raises:
        typer.Exit: Exit 2 unless the certificate passes.
    """
    cfg: RunConfig = ctx.obj
    with _guarded():
        pair = reports.load_pair(path, cfg.tol)
        if unitary:
            cert = opcore.certify_gamma_unitary(pair, cfg.tol, cfg.seed)
        else:
            cert = opcore.certify_gamma_contraction(pair, cfg)

    title = "Gamma-unitary" if unitary else "Gamma-contraction"
    _emit(
        cfg,
        cert.model_dump(by_alias=True, mode="json"),
        output_json,
        lambda: _print_certificate(title, cert),
    )
    _exit_for(cert.verdict)


# ---------------------------------------------------------------------------
# fundamental
# ---------------------------------------------------------------------------


@app.command()
def fundamental(
    ctx: typer.Context,
    path: InputPath,
    output_json: JsonFlag = False,
) -> None:
    """Solve the fundamental equation ``S - S*P = D_P A D_P``."""
    cfg: RunConfig = ctx.obj
    with _guarded():
        pair = reports.load_pair(path, cfg.tol)
        solve = opcore.fundamental_operator(pair, cfg.rank_tol, cfg.tol)
        witnesses = opcore.fundamental_witnesses(solve)

    def render() -> None:
        console.print(f"[bold]Defect rank:[/bold] {solve.frame.dim}")
        console.print(f"[bold]Residual:[/bold] {solve.residual:.3e}")
        console.print(f"[bold]Numerical radius:[/bold] {solve.omega:.12f}")
        table = Table(title="Fundamental operator (defect frame)")
        for j in range(solve.A.shape[1]):
            table.add_column(str(j), justify="right")
        for row in solve.A:
            table.add_row(*(f"{z:.6g}" for z in row))
        console.print(table)

    _emit(cfg, {**solve.to_json(), "witnesses": witnesses}, output_json, render)


# ---------------------------------------------------------------------------
# dilate
# ---------------------------------------------------------------------------


@app.command()
def dilate(
    ctx: typer.Context,
    path: InputPath,
    poly: Annotated[
        str | None,
        typer.Option("--poly", "-p", help="Polynomial for the compression identity."),
    ] = None,
    output_json: JsonFlag = False,
) -> None:
    """Build ``(T_n, V_n)`` and check the compression identity.

    Without ``--poly`` the annihilating pencil of the pair is used. The
    report also classifies the minimal dilation.

    Raises:
        typer.Exit: Exit 2 unless the compression identity passes.
    """
    cfg: RunConfig = ctx.obj
    with _guarded():
        pair = reports.load_pair(path, cfg.tol)
        p = reports.load_poly(poly) if poly else opcore.annihilating_pencil(pair, cfg.rank_tol)
        td = dilation.build_truncated_dilation(pair, cfg.truncation, cfg)
        identity = dilation.verify_dilation_identity(td, p, cfg.tol)
        minimal = dilation.classify_minimal_dilation(pair, cfg)

    def render() -> None:
        console.print(
            f"[bold]Dilation:[/bold] n={td.n}, size {td.T.shape[0]} (H has dim {td.h_dim})"
        )
        _print_certificate("Validation", td.validation)
        _print_certificate("Compression identity", identity)
        _print_certificate("Minimal dilation distinguished", minimal)

    result = {
        "dilation": td.to_json(),
        "identity": identity.model_dump(by_alias=True, mode="json"),
        "minimal": minimal.model_dump(by_alias=True, mode="json"),
        "poly": p.to_json(),
    }
    _emit(cfg, result, output_json, render)
    _exit_for(identity.verdict)


# ---------------------------------------------------------------------------
# decompose
# ---------------------------------------------------------------------------


@app.command()
def decompose(
    ctx: typer.Context,
    path: InputPath,
    factors: Annotated[
        str, typer.Option("--factors", "-f", help="JSON file with {'factors': [...]}.")
    ],
    banded: Annotated[
        bool,
        typer.Option("--banded", help="Decompose the Toeplitz model of the fundamental operator."),
    ] = False,
    output_json: JsonFlag = False,
) -> None:
    """Split a Gamma-unitary (or a banded pure model) along polynomial factors."""
    cfg: RunConfig = ctx.obj
    with _guarded():
        pair = reports.load_pair(path, cfg.tol)
        factor_list = reports.load_factors(factors)
        if banded:
            solve = opcore.fundamental_operator(pair, cfg.rank_tol, cfg.tol)
            tm = dilation.de_model(solve.A, cfg.truncation)
            result = decomp.decompose_pure_isometry_banded(
                tm, factor_list, cfg.probe_degree, cfg.rank_tol
            )
        else:
            result = decomp.decompose_gamma_unitary(pair, factor_list, cfg.rank_tol)

    def render() -> None:
        table = Table(title="Decomposition" + (" (band-truncated)" if banded else ""))
        table.add_column("Part", style="bold")
        table.add_column("Dim", justify="right")
        table.add_column("Factor")
        table.add_column("Residual", justify="right")
        for part in result.parts:
            table.add_row(
                part.basis.label,
                str(part.basis.dim),
                repr(part.annihilator),
                f"{part.residual:.3e}",
            )
        console.print(table)
        console.print(f"[bold]Orthogonality:[/bold] {result.orthogonality:.3e}")
        console.print(f"[bold]Completeness defect:[/bold] {result.completeness_defect:.3e}")
        for note in result.notes:
            console.print(f"[dim]{escape(note)}[/dim]")

    _emit(cfg, result.to_json(), output_json, render)


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------


@app.command()
def fixtures(
    ctx: typer.Context,
    out_dir: Annotated[Path, typer.Argument(help="Directory for the fixture files.")],
    output_json: JsonFlag = False,
) -> None:
    """Write every named fixture to ``<out_dir>/<name>.json``.

    Each file keeps the fixture payload at the top level, so it loads as a
    command input, and records the settings under ``config``.
    """
    cfg: RunConfig = ctx.obj
    config = cfg.model_dump(by_alias=True, mode="json")
    written = []
    with _guarded():
        for fx in all_fixtures():
            target = reports.write_report(
                {**fx.to_json(), "config": config}, out_dir / f"{fx.name}.json"
            )
            written.append({"name": fx.name, "kind": fx.kind, "path": str(target)})

    def render() -> None:
        table = Table(title=f"Fixtures in {out_dir}")
        table.add_column("Name", style="bold cyan")
        table.add_column("Kind")
        table.add_column("Path", style="dim")
        for row in written:
            table.add_row(row["name"], row["kind"], row["path"])
        console.print(table)

    _emit(cfg, written, output_json, render)


if __name__ == "__main__":
    app()
