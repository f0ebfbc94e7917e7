"""Slow, direct reference implementations used to cross-check the fast paths.

Everything here recomputes from scratch (scalar distance formulas, full
re-sorts, linear-scan counting) and rejects inputs above a small size
budget. These functions back the test suite and let users re-verify the
optimized pipeline on slices of their own data; none of them belong on a hot
path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import SampleSet
from .errors import BudgetExceeded, NotNormalized, NumericalError
from .metrics import CLAMP_TOL, MetricSpace, bures_angle, expand_radius
from .regions import CarveState, ErrorRegion


@dataclass(frozen=True)
class OracleBudget:
    """Size ceiling for oracle calls; they are quadratic-or-worse on purpose."""

    max_n: int = 64
    max_d: int = 8

    def check(self, n: int, d: int) -> None:
        if n > self.max_n or d > self.max_d:
            raise BudgetExceeded(
                f"oracle limited to n <= {self.max_n}, d <= {self.max_d}; got n={n}, d={d}"
            )


DEFAULT_BUDGET = OracleBudget()


def _direct_distance_matrix(metric: MetricSpace, features: np.ndarray) -> np.ndarray:
    dist = metric.cross_distances(features, features)
    # A sample is at distance 0 from itself; for trace metrics the recomputed
    # diagonal carries sqrt-of-rounding noise, so pin it.
    np.fill_diagonal(dist, 0.0)
    return dist


def direct_expansion_membership(samples: SampleSet, region: ErrorRegion, eps: float,
                                budget: OracleBudget = DEFAULT_BUDGET) -> np.ndarray:
    """Literal expansion membership, one scalar distance at a time.

    Two readings of "within eps of the error region" are computed: distance
    to some center at most the expanded radius, and distance at most eps to
    some sample that is itself inside the unexpanded region. The second can
    never exceed the first (triangle inequality), which is asserted; the
    returned mask is their union, i.e. the expanded-radius reading.
    """
    budget.check(samples.n, samples.d)
    if region.size == 0:
        return np.zeros(samples.n, dtype=bool)
    if region.center_points is None:
        raise ValueError("region has no resolved center coordinates; call resolve() first")
    metric = region.metric
    centers = region.center_points
    grown = [expand_radius(metric, float(r), float(eps)) for r in region.radii]

    by_radius = np.zeros(samples.n, dtype=bool)
    inside_raw = np.zeros(samples.n, dtype=bool)
    for j in range(samples.n):
        x = samples.features[j]
        for c in range(region.size):
            d = metric.distance(x, centers[c])
            if d <= float(region.radii[c]):
                inside_raw[j] = True
            if d <= grown[c]:
                by_radius[j] = True

    by_dilation = inside_raw.copy()
    members = np.flatnonzero(inside_raw)
    for j in range(samples.n):
        if by_dilation[j]:
            continue
        for idx in members:
            if metric.distance(samples.features[j], samples.features[idx]) <= eps:
                by_dilation[j] = True
                break
    stray = np.flatnonzero(by_dilation & ~by_radius)
    if stray.size:
        raise NumericalError(
            f"dilation membership exceeded expanded-radius membership at samples {stray[:5]}"
        )
    return by_radius


def exhaustive_greedy_step(samples: SampleSet, metric: MetricSpace, state: CarveState,
                           eps: float, k_l: int, k_u: int,
                           budget: OracleBudget = DEFAULT_BUDGET) -> tuple[int, int, int]:
    """Brute-force the best (center, k, delta) without any sorted index."""
    budget.check(samples.n, samples.d)
    dist = _direct_distance_matrix(metric, samples.features)
    n = samples.n
    keep = np.ones(n, dtype=bool)
    keep[np.asarray(state.absorbed, dtype=np.intp)] = False
    keep_expanded = np.ones(n, dtype=bool)
    keep_expanded[np.asarray(state.absorbed_expanded, dtype=np.intp)] = False

    best: tuple[int, int, int] | None = None
    for i in range(n):
        fresh = np.sort(dist[i][keep])
        fresh_expanded = np.sort(dist[i][keep_expanded])
        for k in range(k_l, k_u + 1):
            r = float(fresh[k - 1])
            grown = expand_radius(metric, r, eps)
            k_new = int(np.count_nonzero(fresh_expanded <= grown))
            candidate = (k_new - k, i, k)
            if best is None or candidate < best:
                best = candidate
    assert best is not None
    delta, center, k = best
    return center, k, delta


def naive_condense(dist, removed, budget: OracleBudget = DEFAULT_BUDGET) -> np.ndarray:
    """Re-sort each row over the surviving samples from scratch."""
    matrix = np.asarray(dist, dtype=float)
    budget.check(matrix.shape[0], 1)
    n = matrix.shape[0]
    keep = np.ones(n, dtype=bool)
    removed_arr = np.asarray(sorted(removed), dtype=np.intp)
    if removed_arr.size:
        keep[removed_arr] = False
    return np.sort(matrix[:, keep], axis=1)


def gram_determinant(v1, v2, v3) -> float:
    """Real part of det of the 3x3 Gram matrix of three unit state vectors.

    Nonnegativity of this determinant is what forces Bures angles to obey the
    triangle inequality.
    """
    vecs = [np.asarray(v, dtype=complex) for v in (v1, v2, v3)]
    for i, vec in enumerate(vecs):
        norm = float(np.sqrt(np.sum(vec.real**2 + vec.imag**2)))
        if abs(norm - 1.0) > CLAMP_TOL:
            raise NotNormalized(f"vector {i + 1} has norm {norm!r}, expected 1")
    gram = np.empty((3, 3), dtype=complex)
    for a in range(3):
        for b in range(3):
            gram[a, b] = np.vdot(vecs[a], vecs[b])
    det = complex(np.linalg.det(gram))
    if abs(det.imag) > 1e-9:
        raise NumericalError(f"Gram determinant has imaginary part {det.imag!r}")
    return float(det.real)


def expansion_witness(center, x, radius_angle: float) -> np.ndarray:
    """Construct a state inside the sphere that is close to the outside point.

    Given a sphere of Bures-angle radius radius_angle around center, and any
    state x with angle(center, x) <= radius_angle + theta_eps, the returned y
    lies on the geodesic from center to x with angle(center, y) <=
    radius_angle and angle(y, x) = angle(center, x) - radius_angle. Its
    existence is what justifies the trace-metric radius-expansion rule.
    """
    c = np.asarray(center, dtype=complex)
    xv = np.asarray(x, dtype=complex)
    theta = bures_angle(c, xv)
    if theta <= radius_angle:
        return xv.copy()
    overlap = complex(np.vdot(c, xv))
    mag = abs(overlap)
    aligned = xv * np.conj(overlap / mag) if mag > 0 else xv
    perp = aligned - mag * c
    norm = float(np.sqrt(np.sum(perp.real**2 + perp.imag**2)))
    return np.cos(radius_angle) * c + np.sin(radius_angle) * (perp / norm)
