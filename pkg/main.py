import click
from dotenv import load_dotenv
from pathlib import Path

# Load environment
env_file = Path(".env")
if env_file.exists():
    load_dotenv(override=True)

# Import components
from app.core.log_setup import setup_logging
from app.commands.aggregative import aggregative
from app.commands.analyze import analyze
from app.commands.bench import bench
from app.commands.simulate import simulate
from app.commands.verify import verify


@click.group()
@click.option("--log-level", default=None, help="Override LOG_LEVEL")
def cli(log_level):
    """Cournot rule-revision dynamics: benchmarks, LRE analysis and simulation"""
    setup_logging(log_level)


# Register commands
cli.add_command(bench)
cli.add_command(analyze)
cli.add_command(simulate)
cli.add_command(verify)
cli.add_command(aggregative)


if __name__ == "__main__":
    cli()
