"""Command line entry point: ``boussitopo <subcommand> --config <path> [--out <dir>]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure. Failures
print one structured ``error:`` line on stderr.
"""
from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import SUBCOMMANDS, ConfigError, parse_config
from .harness import run

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _error(kind: str, message: str, code: int, **fields):
    parts = [f"kind={kind}"] + [f"{k}={v}" for k, v in fields.items() if v is not None]
    clean = message.replace('"', "'").replace("\n", " ")
    parts.append(f'message="{clean}"')
    click.echo("error: " + " ".join(parts), err=True)
    sys.exit(code)


def _runner(subcommand: str):
    @click.command(subcommand)
    @click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
                  help="Run configuration file.")
    @click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False),
                  help="Output directory (overrides the config's out key).")
    def command(config_path, out_dir):
        try:
            text = Path(config_path).read_text()
        except OSError as exc:
            _error("config", f"cannot read {config_path}: {exc.strerror}", EXIT_CONFIG)
        try:
            cfg = parse_config(text, subcommand)
            result = run(cfg, out_dir)
        except ConfigError as exc:
            _error("config", exc.message, EXIT_CONFIG, line=exc.line, key=exc.key)
        except (ValueError, RuntimeError, ArithmeticError) as exc:
            # solver, Newton, depth, positivity and blow-up failures
            _error("numerical", str(exc), EXIT_NUMERICAL, type=type(exc).__name__)
        for name in sorted(result.artifacts):
            click.echo(str(result.artifacts[name]))

    command.help = f"Run the {subcommand} study described by a config file."
    return command


@click.group()
def main():
    """Numerical lab for long-wave models over uneven bottoms."""


for _name in SUBCOMMANDS:
    main.add_command(_runner(_name))
