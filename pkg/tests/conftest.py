"""Shared fixtures and data builders for the test suite."""

import os
import re
from pathlib import Path

import numpy as np
import pytest

from advbound import SampleSet

_ACCEPTANCE: dict[int, list[tuple[str, str]]] = {}
_AC_PATTERN = re.compile(r"test_acceptance\.py::test_ac(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    """Collect per-criterion outcomes from the acceptance gate."""
    match = _AC_PATTERN.search(report.nodeid)
    if not match:
        return
    if report.when != "call" and not (report.when == "setup" and
                                      (report.skipped or report.failed)):
        return
    number = int(match.group(1))
    leg = match.group(2).split("_")[0]
    outcome = "SKIP" if report.skipped else ("FAIL" if report.failed else "PASS")
    _ACCEPTANCE.setdefault(number, []).append((leg, outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        legs = _ACCEPTANCE[number]
        outcomes = {outcome for _, outcome in legs}
        if "FAIL" in outcomes:
            overall = "FAIL"
        elif outcomes == {"SKIP"}:
            overall = "SKIP"
        else:
            overall = "PASS"
        line = f"AC-{number} {overall}"
        partial = [leg for leg, outcome in legs if outcome == "SKIP"]
        if overall == "PASS" and partial:
            line += f" ({', '.join(partial)} leg skipped)"
        terminalreporter.write_line(line)


def make_clusters(centers, per_cluster, sigma, seed, nonnegative=True):
    """Gaussian blobs around the given centers, one label per cluster."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float)
    feats = np.vstack([
        c + sigma * rng.standard_normal((per_cluster, centers.shape[1]))
        for c in centers
    ])
    if nonnegative:
        feats = np.abs(feats)
    labels = np.repeat(np.arange(len(centers)), per_cluster)
    return SampleSet(features=feats, labels=labels)


def random_unit_vectors(rng, n, d, complex_valued=False):
    if complex_valued:
        v = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    else:
        v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def mnist_dir():
    """Directory holding the MNIST IDX files, or None when unavailable.

    Checked locations: $ADVBOUND_MNIST_DIR, ./data/mnist, ~/data/mnist.
    Needs train-images-idx3-ubyte and train-labels-idx1-ubyte (optionally
    gzipped).
    """
    candidates = []
    env = os.environ.get("ADVBOUND_MNIST_DIR")
    if env:
        candidates.append(Path(env))
    candidates.append(Path(__file__).resolve().parent.parent / "data" / "mnist")
    candidates.append(Path.home() / "data" / "mnist")
    for base in candidates:
        for suffix in ("", ".gz"):
            images = base / f"train-images-idx3-ubyte{suffix}"
            labels = base / f"train-labels-idx1-ubyte{suffix}"
            if images.exists() and labels.exists():
                return base
    return None


@pytest.fixture
def two_cluster_set():
    return make_clusters([[3.0, 1.0, 2.0], [1.0, 3.0, 2.0]], 30, 0.4, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(2026)
