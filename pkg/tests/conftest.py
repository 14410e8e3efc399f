import pytest

from clickrank import DetectorParams, SearchConfig, single_click_thresholds
from clickrank.reports import cached_boundaries, parse_lambda_grid

# (eta, T) -> published thresholds W_1.. and the W_max row
BALANCED_TABLE = {
    (1.0, 0.5): ([0.2979], 0.5000),
    (0.6, 0.5): ([0.2784, 0.3119], 0.3300),
    (0.4, 0.5): ([0.2696, 0.2810, 0.2881], 0.2960),
    (0.2, 0.5): ([0.2606, 0.2638, 0.2654, 0.2664, 0.2672, 0.2679], 0.2693),
}
ETA_HALF_TABLE = {
    (0.5, 0.4): ([0.2055, 0.2235], 0.2400),
    (0.5, 0.6): ([0.3535, 0.3732], 0.3900),
    (0.5, 0.8): ([0.5660, 0.5822, 0.5914], 0.6040),
    (0.5, 0.9): ([0.7234, 0.7345, 0.7403, 0.7449], 0.7520),
}

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def table_thresholds():
    """Computed thresholds for every published threshold column, with wall time."""
    import time

    out = {}
    for key, (published, _) in {**BALANCED_TABLE, **ETA_HALF_TABLE}.items():
        t0 = time.perf_counter()
        res = single_click_thresholds(DetectorParams(*key), range(1, len(published) + 1))
        out[key] = (res, time.perf_counter() - t0)
    return out


@pytest.fixture(scope="session")
def boundary_cache(tmp_path_factory):
    return tmp_path_factory.mktemp("boundary-cache")


@pytest.fixture(scope="session")
def default_boundaries(boundary_cache):
    """Full default-grid region boundaries, shared across test modules."""
    memo = {}

    def get(eta, T, max_rank):
        key = (eta, T)
        have = memo.get(key)
        if have is None or len(have) < max_rank:
            memo[key] = cached_boundaries(DetectorParams(eta, T), range(1, max_rank + 1),
                                          parse_lambda_grid("default"), SearchConfig(), boundary_cache)
        return memo[key][:max_rank]

    return get
