import numpy as np
import pytest

from hdphmm_lt.datagen import SynthHdpParams, gen_hdp_hmm
from hdphmm_lt.dataio import Dataset


def small_gaussian(seed=0, T=60, J=4):
    d = gen_hdp_hmm(SynthHdpParams(J=J, D=3, K=4, T=T, seed=seed))
    return Dataset(d.sequences, truth=d.truth, W=d.W)


def small_symbols(seed=0, n=3, T=20):
    d = gen_hdp_hmm(SynthHdpParams(J=4, emission="categorical", V=6, kernel="gaussian_euclidean",
                                   n_sequences=n, T=T, seed=seed))
    return Dataset(d.sequences)


@pytest.fixture
def gaussian_data():
    return small_gaussian()


@pytest.fixture
def symbol_data():
    return small_symbols()


def trace_equal(a, b):
    if len(a) != len(b):
        return False
    for ra, rb in zip(a, b):
        for k in ra:
            x, y = ra[k], rb[k]
            if isinstance(x, float) and isinstance(y, float) and np.isnan(x) and np.isnan(y):
                continue
            if x != y:
                return False
    return True


# one line per acceptance criterion, shown in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
