import numpy as np
import pytest

from repralign import _backend
from repralign.core import validate_dataset

BACKENDS = _backend.available()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def make_dataset(n=60, d=4, seed=0, prevalence=0.4, n_labels=2, shift=1.5):
    """Gaussian points whose first coordinate shifts with the label."""
    rng = np.random.default_rng(seed)
    while True:
        if n_labels == 2:
            y = (rng.random(n) < prevalence).astype(np.int64)
        else:
            y = rng.integers(0, n_labels, n)
        if 0 < np.count_nonzero(y == 1) < n:
            break
    X = rng.normal(size=(n, d))
    X[:, 0] += shift * y
    vocab = [f"c{i}" for i in range(n_labels)]
    return validate_dataset(X, y, vocab, 1)


@pytest.fixture
def small_ds():
    return make_dataset()


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
