"""analyze: long-run equilibria by minimum-cost trees"""

import click

from app.commands.common import config_options, echo_table, emit, eta_option, run_command
from app.dependencies import load_run_config
from app.services.analysis_service import AnalysisService


@click.command()
@config_options
@eta_option
@click.pass_context
def analyze(ctx, config_path, seed, out_dir, fmt, eta):
    """LRE set, minimal tree cost and witness trees"""

    def work(service: AnalysisService) -> bool:
        payload = service.run().model_dump(mode="json")
        echo_table(
            f"LRE (eta={payload['eta']:g}, tree cost {payload['min_cost']:g}, {len(payload['lre'])} members)",
            [[node["label"]] for node in payload["lre"]],
        )
        rows = [{"node": k, "tree_cost": v, "lre": k in payload["witness_trees"]} for k, v in payload["root_costs"].items()]
        emit("analyze", payload, fmt, out_dir, rows=rows, dot=service.dot())
        return True

    run_command(ctx, lambda: AnalysisService(load_run_config(config_path, seed=seed, eta=eta)), work)
