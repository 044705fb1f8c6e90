import numpy as np
import pytest

from tsfuzz.channel import RadioParams
from tsfuzz.netstate import NetworkConfig, SimConfig, hex_sites, init_state


@pytest.fixture
def small_net():
    """A short, light network so whole evaluations run in milliseconds."""
    return NetworkConfig(n_ues=8, epochs_per_window=10, n_windows=3)


def make_state(positions, sites=None, active=None, radio=None, background=None, n_max=40, seed=0):
    positions = np.asarray(positions, dtype=float)
    sites = hex_sites(100.0, 250.0) if sites is None else np.asarray(sites, dtype=float)
    m = len(sites)
    radio = radio or RadioParams(shadowing_sigma_db=0.0)
    active = np.ones(m, dtype=bool) if active is None else np.asarray(active, dtype=bool)
    background = np.zeros(m) if background is None else np.asarray(background, dtype=float)
    cfg = SimConfig(positions=positions, background=background, radio=radio, sites=sites, box_side=250.0,
                    active=active, n_max=n_max)
    return init_state(cfg, seed)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict; all verdicts are repeated in the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
