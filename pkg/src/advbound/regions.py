"""Greedy construction of a T-sphere error region with minimal expansion.

Each round scores every candidate sphere (center i, member count k) by how
many extra samples its eps-expansion would swallow, picks the lexicographic
minimum of (extra count, center index, k), absorbs the sphere's members, and
condenses the distance rows before the next round. The absorbed-set budget
ceil(alpha * n) is spread over the remaining rounds through the k range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .datasets import SampleSet
from .distindex import CondensedView, SortedDistanceIndex, condense, find_rank
from .errors import AlphaTooSmall, BudgetExhausted, DimensionError, DomainError
from .metrics import MetricSpace


@dataclass(frozen=True)
class ErrorRegion:
    """A union of spheres centered on samples, plus its expansion strength.

    centers holds sample indices into the set the region was fitted on;
    center_points holds the matching coordinates once resolved, which
    membership evaluation requires.
    """

    centers: np.ndarray
    radii: np.ndarray
    metric: MetricSpace
    epsilon: float
    center_points: Optional[np.ndarray] = None

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.intp)
        radii = np.asarray(self.radii, dtype=float)
        if centers.ndim != 1 or radii.shape != centers.shape:
            raise DimensionError("centers and radii must be 1-D and the same length")
        if np.any(radii < 0):
            raise DomainError("radii must be nonnegative")
        if self.metric.is_trace and np.any(radii > 1.0 + 1e-12):
            raise DomainError("trace-distance radii must lie in [0, 1]")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "radii", radii)

    @property
    def size(self) -> int:
        return int(self.centers.shape[0])

    def resolve(self, features: np.ndarray) -> "ErrorRegion":
        """Attach center coordinates taken from the fitting feature matrix."""
        points = np.asarray(features, dtype=float)[self.centers]
        return replace(self, center_points=points)

    def expanded_radii(self) -> np.ndarray:
        return np.asarray(self.metric.expand(self.radii, self.epsilon), dtype=float)


@dataclass(frozen=True)
class CarveState:
    """Bookkeeping carried between rounds of the greedy search.

    absorbed is the set covered by the spheres placed so far; its expanded
    counterpart is covered by the eps-grown spheres and always contains it.
    The two condensed views exclude the respective sets from every row.
    """

    absorbed: np.ndarray
    absorbed_expanded: np.ndarray
    condensed: CondensedView
    condensed_expanded: CondensedView


class BestSphere(NamedTuple):
    center: int
    k: int
    delta: int
    r: float
    r_expanded: float


def initial_state(index: SortedDistanceIndex) -> CarveState:
    empty = np.empty(0, dtype=np.intp)
    view = condense(index, empty)
    return CarveState(absorbed=empty, absorbed_expanded=empty,
                      condensed=view, condensed_expanded=view)


def best_sphere(state: CarveState, metric: MetricSpace, eps: float,
                k_l: int, k_u: int) -> BestSphere:
    """Lowest-expansion candidate sphere over all centers and k in [k_l, k_u].

    For center i and member count k, the radius is the k-th smallest distance
    to a not-yet-absorbed sample; the score is how many samples outside the
    expanded absorbed set fall within the expanded radius, minus k. Ties are
    broken lexicographically on (score, center index, k), which makes the
    reduction order-independent and therefore safe to parallelize.
    """
    if k_l < 1 or k_u < k_l:
        raise DomainError(f"need 1 <= k_l <= k_u, got k_l={k_l}, k_u={k_u}")
    rows = state.condensed.rows
    if k_u > rows.shape[1]:
        raise BudgetExhausted(
            f"asked for spheres holding up to {k_u} samples but only "
            f"{rows.shape[1]} remain unabsorbed"
        )
    expanded_rows = state.condensed_expanded.rows
    radii = rows[:, k_l - 1:k_u]
    grown = np.asarray(metric.expand(radii, eps), dtype=float)
    counts = np.empty(radii.shape, dtype=np.int64)
    for i in range(rows.shape[0]):
        counts[i] = np.searchsorted(expanded_rows[i], grown[i], side="right")
    delta = counts - np.arange(k_l, k_u + 1, dtype=np.int64)[None, :]
    # Row-major argmin returns the first occurrence of the minimum, i.e. the
    # lexicographic minimum of (delta, center, k).
    flat = int(np.argmin(delta))
    i, j = divmod(flat, delta.shape[1])
    return BestSphere(center=int(i), k=int(k_l + j), delta=int(delta[i, j]),
                      r=float(radii[i, j]), r_expanded=float(grown[i, j]))


def _ceil_budget(x: float) -> int:
    # alpha * n picks up float noise (e.g. 0.1 * 30 -> 3.0000000000000004);
    # tolerate it rather than inflate the budget by a whole sample.
    return math.ceil(x - 1e-9)


def fit_error_region(index: SortedDistanceIndex, metric: MetricSpace, eps: float,
                     alpha: float, T: int) -> tuple[ErrorRegion, CarveState]:
    """Run up to T greedy rounds until the ceil(alpha * n) budget is spent.

    Stops early once less than one sample of budget remains, so the region
    may hold fewer than T spheres. The k range of round t spreads the
    remaining budget evenly over the remaining rounds.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if T < 1:
        raise DomainError(f"need at least one sphere, got T={T}")
    if eps < 0:
        raise DomainError(f"eps must be nonnegative, got {eps}")
    n = index.n
    if alpha * n < 1.0 - 1e-9:
        raise AlphaTooSmall(f"alpha * n = {alpha * n:.6g} < 1: budget holds no sample")

    state = initial_state(index)
    centers: list[int] = []
    radii: list[float] = []
    for t in range(T):
        budget = alpha * n - state.absorbed.shape[0]
        if budget < 1.0 - 1e-9:
            break
        k_l = max(1, _ceil_budget(budget / (T - t)))
        k_u = _ceil_budget(budget)
        pick = best_sphere(state, metric, eps, k_l, k_u)

        # absorb exactly the k chosen positions; boundary ties beyond k stay
        # unabsorbed so the ceil(alpha * n) budget can never overshoot
        new_members = state.condensed.survivors[pick.center, :pick.k]
        expanded_row = state.condensed_expanded.rows[pick.center]
        taken_expanded = find_rank(expanded_row, pick.r_expanded)
        new_expanded = state.condensed_expanded.survivors[pick.center, :taken_expanded]

        absorbed = np.union1d(state.absorbed, new_members)
        absorbed_expanded = np.union1d(state.absorbed_expanded, new_expanded)
        state = CarveState(
            absorbed=absorbed,
            absorbed_expanded=absorbed_expanded,
            condensed=condense(index, absorbed),
            condensed_expanded=condense(index, absorbed_expanded),
        )
        centers.append(pick.center)
        radii.append(pick.r)

    region = ErrorRegion(centers=np.asarray(centers, dtype=np.intp),
                         radii=np.asarray(radii, dtype=float),
                         metric=metric, epsilon=float(eps))
    return region, state


def evaluate_membership(region: ErrorRegion, samples: SampleSet,
                        expanded: bool) -> tuple[float, np.ndarray]:
    """Fraction and mask of samples inside the region (or its expansion).

    A sample is a member when its distance to some center is at most that
    sphere's radius; expanded=True uses the eps-grown radii instead.
    """
    if region.size == 0:
        return 0.0, np.zeros(samples.n, dtype=bool)
    if region.center_points is None:
        raise ValueError("region has no resolved center coordinates; call resolve() first")
    if region.center_points.shape[1] != samples.d:
        raise DimensionError(
            f"region centers have dimension {region.center_points.shape[1]}, samples have {samples.d}"
        )
    limits = region.expanded_radii() if expanded else region.radii
    dists = region.metric.cross_distances(samples.features, region.center_points)
    mask = np.any(dists <= limits[None, :], axis=1)
    return float(mask.mean()), mask
