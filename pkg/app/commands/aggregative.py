"""aggregative: ATS, Nash and LRE of a symmetric aggregative game"""

import click

from app.commands.common import config_options, echo_table, emit, eta_option, run_command
from app.dependencies import load_run_config
from app.services.aggregative_service import AggregativeService


@click.command()
@config_options
@eta_option
@click.pass_context
def aggregative(ctx, config_path, seed, out_dir, fmt, eta):
    """Quasi-submodularity, aggregate-taking strategy and LRE on the embedding"""

    def work(service: AggregativeService) -> bool:
        payload = service.run().model_dump(mode="json")
        echo_table(
            "Aggregative game",
            [
                ["quasi-submodular", payload["quasi_submodularity"]["passed"]],
                ["ATS", payload["ats"]["decimal"] if payload["ats"] else "-"],
                ["Nash", payload["nash"]["decimal"] if payload["nash"] else "-"],
                ["LRE", ", ".join(n["label"] for n in payload["lre"]["lre"]) if payload["lre"] else "-"],
            ],
        )
        for item in payload["skipped"]:
            click.echo(f"  skipped: {item}", err=True)
        rows = [{"node": k, "tree_cost": v} for k, v in (payload["lre"] or {}).get("root_costs", {}).items()]
        emit("aggregative", payload, fmt, out_dir, rows=rows)
        return True

    run_command(ctx, lambda: AggregativeService(load_run_config(config_path, seed=seed, eta=eta)), work)
