import numpy as np
import pytest

from boussitopo.fields import Grid


@pytest.fixture
def grid64():
    return Grid(1, 64)


def band_limited(grid, rng, kmax=6):
    """Random real trigonometric polynomial with modes below ``kmax``."""
    out = np.zeros(grid.shape)
    for k in range(1, kmax):
        for axis in range(grid.d):
            kx = 2 * np.pi / grid.length * k * grid.x[axis]
            out += rng.normal() * np.cos(kx) + rng.normal() * np.sin(kx)
    return out


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def verdict(request):
    """Record and print one ``PASS``/``FAIL`` line per acceptance criterion."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number: int, name: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {name}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
