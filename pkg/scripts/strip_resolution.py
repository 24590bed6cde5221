"""Error of the exact DN operator against the flat-bottom oracle as the strip is refined.

Prints one row per vertical resolution with the observed order between rows.
"""
import click
import numpy as np

from boussitopo.dn import Regime, RegimeParams, StripGrid, exact_dn
from boussitopo.fields import Grid


@click.command()
@click.option("--epsilon", default=0.04, show_default=True)
@click.option("--k", "mode", default=4, show_default=True)
@click.option("--n", default=32, show_default=True)
def main(epsilon, mode, n):
    grid = Grid(1, n)
    f = np.cos(mode * grid.x[0])
    oracle = np.sqrt(epsilon) * mode * np.tanh(np.sqrt(epsilon) * mode) * f
    params = RegimeParams(epsilon, Regime.SMALL)
    prev = None
    click.echo("nz,err_max,order")
    for nz in (16, 32, 64, 128, 256):
        err = np.abs(exact_dn(f, grid.zeros(), grid.zeros(), params, StripGrid(grid, nz)) - oracle).max()
        order = "" if prev is None else f"{np.log2(prev / err):.2f}"
        click.echo(f"{nz},{err:.3e},{order}")
        prev = err


if __name__ == "__main__":
    main()
