"""verify: pass/fail suite over the model, criteria and analytic results"""

import click

from app.commands.common import config_options, echo_table, emit, eta_option, run_command
from app.dependencies import load_run_config
from app.services.verification_service import VerificationService


@click.command()
@config_options
@eta_option
@click.pass_context
def verify(ctx, config_path, seed, out_dir, fmt, eta):
    """Exit 1 when any check fails"""

    def work(service: VerificationService) -> bool:
        report = service.run()
        payload = report.model_dump(mode="json")
        echo_table(
            "Checks",
            [
                [c["name"], "pass" if c["passed"] else ("expected fail" if c["expected_fail"] else "FAIL")]
                for c in payload["checks"]
            ],
        )
        for item in payload["skipped"]:
            click.echo(f"  skipped: {item}", err=True)
        rows = [{"name": c["name"], "passed": c["passed"], "expected_fail": c["expected_fail"]} for c in payload["checks"]]
        emit("verify", payload, fmt, out_dir, rows=rows)
        return report.passed

    run_command(ctx, lambda: VerificationService(load_run_config(config_path, seed=seed, eta=eta)), work)
