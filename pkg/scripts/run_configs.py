"""Run every shipped config (or the ones named) and list the artifacts written.

Usage: python3 scripts/run_configs.py [--out out/configs] [acc01 acc07 ...]
"""
import sys
import time
from pathlib import Path

import click

from boussitopo.config import parse_config
from boussitopo.harness import run

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@click.command()
@click.option("--out", default="out/configs", type=click.Path(file_okay=False))
@click.argument("names", nargs=-1)
def main(out, names):
    paths = sorted(CONFIGS.glob("*.cfg"))
    if names:
        paths = [p for p in paths if any(p.stem.startswith(n) for n in names)]
    if not paths:
        sys.exit("no matching configs")
    for path in paths:
        cfg = parse_config(path.read_text())
        start = time.perf_counter()
        res = run(cfg, Path(out) / path.stem)
        click.echo(f"{path.stem}: {cfg.subcommand}/{res.study} in {time.perf_counter() - start:.1f} s")
        for name in sorted(res.artifacts):
            click.echo(f"  {res.artifacts[name]}")


if __name__ == "__main__":
    main()
