"""Shared options, error translation and result emission for the commands"""

from typing import Any, Callable, Dict, List, Optional

import click
from loguru import logger

from app.dependencies import get_sink
from utils.core.errors import ConfigError, CournotError, DomainError

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

FORMATS = ("json", "csv", "dot")


def config_options(func):
    """--config, --seed, --out and --format, shared by every command"""
    func = click.option(
        "--format", "fmt", type=click.Choice(FORMATS), default="json", show_default=True, help="Output format"
    )(func)
    func = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Output directory")(func)
    func = click.option("--seed", type=click.IntRange(min=0), default=None, help="Override the config seed")(func)
    func = click.option("--config", "config_path", required=True, help="Run config JSON")(func)
    return func


def eta_option(func):
    return click.option("--eta", type=click.FloatRange(min=1.0), default=None, help="Override noise.eta")(func)


def parse_sweep(ctx, param, value: Optional[str]) -> Optional[List[float]]:
    """'0.08,0.04,0.02' -> [0.08, 0.04, 0.02]"""
    if not value:
        return None
    try:
        sweep = [float(x) for x in value.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"not a comma-separated list of numbers: {value}")
    if any(not 0 < e < 1 for e in sweep):
        raise click.BadParameter("every epsilon must lie in (0, 1)")
    return sweep


def emit(
    name: str,
    payload: Dict[str, Any],
    fmt: str,
    out_dir: Optional[str],
    rows: Optional[List[Dict[str, Any]]] = None,
    dot: Optional[str] = None,
) -> None:
    """Rendered result to stdout and, with --out, to <out>/<name>.<ext>"""
    sink = get_sink(fmt, out_dir)
    if fmt == "csv":
        body: Any = rows if rows is not None else []
    elif fmt == "dot":
        if dot is None:
            raise click.UsageError(f"--format dot is not available for {name}")
        body = dot
    else:
        body = payload
    click.echo(sink.render(body), nl=False)
    path = sink.write(name, body)
    if path is not None:
        logger.info(f"💾 Wrote {path}")


def run_command(
    ctx: click.Context,
    make_service: Callable[[], Any],
    work: Callable[[Any], bool],
) -> None:
    """
    Build the service, then run it, translating errors into exit codes.

    Args:
        ctx: click context
        make_service: Loads and validates the config; errors here exit 2
        work: Runs the service and emits output; returns False on a failed check
    """
    try:
        service = make_service()
    except (ConfigError, DomainError) as e:
        logger.error(f"❌ Invalid configuration: {e}")
        click.echo(f"config error: {e}", err=True)
        ctx.exit(EXIT_CONFIG)

    try:
        ok = work(service)
    except CournotError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        click.echo(f"{type(e).__name__}: {e}", err=True)
        ctx.exit(EXIT_FAILED)
    ctx.exit(EXIT_OK if ok else EXIT_FAILED)


def echo_table(title: str, rows: List[List[Any]]) -> None:
    """Plain aligned table on stderr"""
    click.echo(title, err=True)
    if not rows:
        return
    widths = [max(len(str(row[k])) for row in rows) for k in range(len(rows[0]))]
    for row in rows:
        click.echo("  " + "  ".join(str(v).ljust(w) for v, w in zip(row, widths)), err=True)
