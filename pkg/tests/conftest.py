import warnings

import pytest

from framesim.fockops import TruncationWarning

# recentering at strongly driven benchmark points deliberately displaces near
# the truncation budget; the warning is informative, not a failure
warnings.filterwarnings("ignore", category=TruncationWarning)


def pytest_addoption(parser):
    parser.addoption(
        "--paper-scale",
        action="store_true",
        default=False,
        help="also run the full-scale (hours-long) reference transfer",
    )


@pytest.fixture(scope="session")
def paper_scale(request):
    return request.config.getoption("--paper-scale")
