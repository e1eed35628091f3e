"""simulate: Monte Carlo occupancy of the absorbing patterns"""

import click

from app.commands.common import config_options, echo_table, emit, eta_option, parse_sweep, run_command
from app.dependencies import get_sink, load_run_config
from app.services.simulation_service import SimulationService


@click.command()
@config_options
@eta_option
@click.option("--epsilon-sweep", callback=parse_sweep, default=None, help="Comma-separated epsilon values")
@click.pass_context
def simulate(ctx, config_path, seed, out_dir, fmt, eta, epsilon_sweep):
    """Occupancy per (epsilon, pattern) with standard errors"""

    def work(service: SimulationService) -> bool:
        report = service.run(record_trajectory=out_dir is not None)
        payload = report.model_dump(mode="json")
        echo_table(
            "Predicted LRE occupancy",
            [[eps, f"{m:.4f} +/- {se:.4f}"] for eps, (m, se) in payload["predicted_mass"].items()],
        )
        emit("simulate", payload, fmt, out_dir, rows=payload["rows"])
        if out_dir is not None and service.trajectory:
            get_sink("csv", out_dir).write("trajectory", service.trajectory)
        return True

    run_command(
        ctx,
        lambda: SimulationService(
            load_run_config(config_path, seed=seed, eta=eta, epsilon_sweep=epsilon_sweep)
        ),
        work,
    )
