import numpy as np
import pytest


def seasonal_trend(n=1000, noise=0.02, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    return np.sin(2 * np.pi * t / 50) + 0.01 * t + rng.normal(0.0, noise, n)


def exponential_mixture(values, coeffs, n):
    """``sum_i c_i V_i^t`` for ``t = 0 .. n-1``."""
    t = np.arange(n)
    return (np.asarray(coeffs)[None, :] * np.asarray(values)[None, :] ** t[:, None]).sum(axis=1)


def hankel_window(x, rows, cols):
    """``rows x cols`` matrix with entry ``(i, j) = x[i + j]``, built by loops."""
    out = np.empty((rows, cols), dtype=np.result_type(x, float))
    for i in range(rows):
        for j in range(cols):
            out[i, j] = x[i + j]
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
