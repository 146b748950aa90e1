import pytest

from busyvar.dist import parse_spec

ACCEPTANCE_LINES = []

# finite-mu2 families used throughout, all with mean 1
FAMILY_SPECS = {
    "exp": "exp:mean=1",
    "det": "det:mean=1",
    "erlang2": "erlang:k=2,mean=1",
    "uniform02": "uniform:low=0,high=2",
    "h2": "hyperexp:p=0.5|0.5,mean=0.5|1.5",
}


@pytest.fixture(params=sorted(FAMILY_SPECS))
def family(request):
    return request.param, parse_spec(FAMILY_SPECS[request.param])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
