"""Shared oracles and the acceptance summary printed at the end of a run."""

import math

import numpy as np
import pytest

from mlmeta.data import Dataset, Study, Trial


def dense_covariance(dataset, s2xi, s2zeta):
    """Full m x m marginal covariance, assembled entry by entry."""
    m = dataset.m
    M = np.zeros((m, m))
    idx = dataset.study_index
    for r in range(m):
        for c in range(m):
            if idx[r] == idx[c]:
                M[r, c] += s2xi
        M[r, r] += s2zeta + dataset.v[r]
    return M


def dense_restricted_nll(theta, v, s2, X):
    """Two-level restricted negative log-likelihood with dense algebra."""
    m, p = X.shape
    M = np.diag(v + s2)
    W = np.linalg.inv(M)
    A = X.T @ W @ X
    beta = np.linalg.solve(A, X.T @ W @ theta)
    r = theta - X @ beta
    _, ld_m = np.linalg.slogdet(M)
    _, ld_a = np.linalg.slogdet(A)
    return 0.5 * ((m - p) * math.log(2 * math.pi) + ld_m + ld_a + r @ W @ r)


def random_dataset(rng, h_max=8, m_max=6, n_range=(5, 400)):
    """Random small dataset with uneven study sizes and uneven n."""
    h = int(rng.integers(2, h_max + 1))
    studies = []
    for j in range(h):
        trials = []
        for i in range(int(rng.integers(1, m_max + 1))):
            n = int(rng.integers(*n_range))
            k = int(rng.integers(0, n + 1))
            trials.append(Trial.from_counts(str(i + 1), k, n))
        studies.append(Study(f"S{j + 1}", trials, {}))
    return Dataset(studies)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_dataset():
    records = [
        {"study_id": "A", "trial_id": "1", "k": 80, "n": 100},
        {"study_id": "A", "trial_id": "2", "k": 170, "n": 200},
        {"study_id": "B", "trial_id": "1", "k": 45, "n": 60},
        {"study_id": "C", "trial_id": "1", "k": 270, "n": 300},
        {"study_id": "C", "trial_id": "2", "k": 88, "n": 100},
        {"study_id": "C", "trial_id": "3", "k": 140, "n": 150},
        {"study_id": "D", "trial_id": "1", "k": 300, "n": 400},
        {"study_id": "D", "trial_id": "2", "k": 66, "n": 80},
    ]
    return Dataset.from_records(records)


# acceptance tests record ("acceptance", "ACn title") first, then an
# optional ("acceptance_detail", text) once the numbers are known
_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    props = dict(report.user_properties)
    if "acceptance" in props:
        line = props["acceptance"]
        if "acceptance_detail" in props:
            line += f": {props['acceptance_detail']}"
        _ACCEPTANCE.append((line, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line, outcome in sorted(_ACCEPTANCE, key=lambda t: int(t[0].split()[0][2:])):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {line}")
