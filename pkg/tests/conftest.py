import warnings

from hypothesis import HealthCheck, settings

settings.register_profile("desk", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("desk")

ACCEPTANCE_LINES = []


def pytest_configure(config):
    warnings.filterwarnings("ignore", category=RuntimeWarning, module="dwapprox")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
