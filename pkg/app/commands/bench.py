"""bench: benchmark quantities, D(q) table, descent chains and LRE bounds"""

import click

from app.commands.common import config_options, echo_table, emit, run_command
from app.dependencies import load_run_config
from app.services.bench_service import BenchService


def _rows(payload: dict) -> list:
    return [
        {
            "q": row["q"]["decimal"],
            "lower": row["lower"]["decimal"],
            "upper": row["upper"]["decimal"],
            "grid_points": row["grid_points"],
        }
        for row in payload["advantage_sets"]
    ]


@click.command()
@config_options
@click.pass_context
def bench(ctx, config_path, seed, out_dir, fmt):
    """Benchmarks q^N, q^W, q^C with the relative-payoff tables"""

    def work(service: BenchService) -> bool:
        payload = service.run().model_dump(mode="json")
        summary = [[name, payload[name]["decimal"]] for name in ("nash", "walrasian", "collusive")]
        if payload["bounds"]:
            summary.append(["bounds", " .. ".join(b["decimal"] for b in payload["bounds"])])
        echo_table("Benchmarks", summary)
        for note in payload["notes"]:
            click.echo(f"  note: {note}", err=True)
        emit("bench", payload, fmt, out_dir, rows=_rows(payload))
        return True

    run_command(ctx, lambda: BenchService(load_run_config(config_path, seed=seed)), work)
