import numpy as np
import pytest


def random_instance(rng, n_max=12, n_min=2):
    """Random strictly positive p with a random budget 1 <= m < n."""
    n = int(rng.integers(n_min, n_max + 1))
    m = int(rng.integers(1, n))
    # mix of scales so heavy coordinates show up regularly
    p = rng.random(n) ** rng.choice([1.0, 3.0, 6.0])
    p = np.maximum(p, 1e-6)
    return p, m


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def scheme_table(scheme):
    """support tuple -> (probability, dense values) for comparisons."""
    return {s.key: (prob, s.to_dense()) for prob, s in scheme}


def assert_schemes_close(a, b, tol=1e-10):
    ta, tb = scheme_table(a), scheme_table(b)
    assert ta.keys() == tb.keys()
    for key, (prob, vals) in ta.items():
        assert abs(prob - tb[key][0]) <= tol
        assert np.max(np.abs(vals - tb[key][1]), initial=0.0) <= tol


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
