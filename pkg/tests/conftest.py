import pytest

from densecell.analytic import NetworkConfig
from densecell.pathloss import dspm, sspm


@pytest.fixture
def ref_sspm():
    return sspm(4.0)


@pytest.fixture
def ref_dspm():
    return dspm(2.5, 4.0, 10.0)


@pytest.fixture
def ref_cfg():
    # 10 dB threshold, 2 m height difference, 100 BS/km^2
    return NetworkConfig(lam=1e-4, delta_h=2.0, tau=10.0)


@pytest.fixture
def report(capsys):
    """Print a line to the terminal even when output capture is on."""

    def _emit(line):
        with capsys.disabled():
            print(line)

    return _emit
