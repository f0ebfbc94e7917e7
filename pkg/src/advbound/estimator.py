"""Bound estimation: repeated partition/carve/evaluate runs plus regression.

Each iteration nu targets a slightly different absorbed fraction alpha_nu,
fits an error region on a fresh random train split, and measures the raw and
expanded membership fractions of the held-out split. Ordinary least squares
over those (risk, adversarial risk) pairs, evaluated at the reference error
rate alpha, gives the lower bound c_adv on the adversarial error of any
classifier with that clean error rate.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .datasets import SampleSet
from .distindex import index_from_matrix
from .errors import BracketError, DomainError, PartitionError
from .metrics import L2 as L2_METRIC, MetricSpace
from .regions import ErrorRegion, evaluate_membership, fit_error_region

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class BoundConfig:
    """Knobs of the estimation procedure.

    alpha is the clean error rate the bound is evaluated at; alpha_lo and
    alpha_hi bound the absorbed-fraction grid and default to alpha and
    1.1 * alpha. iterations is the number of random partitions, spheres the
    region size cap per fit.
    """

    epsilon: float
    alpha: float
    metric: MetricSpace = L2_METRIC
    spheres: int = 20
    iterations: int = 10
    alpha_lo: Optional[float] = None
    alpha_hi: Optional[float] = None
    split_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise DomainError(f"epsilon must be nonnegative, got {self.epsilon}")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.spheres < 1:
            raise DomainError(f"spheres must be at least 1, got {self.spheres}")
        if self.iterations < 2:
            raise DomainError(f"regression needs at least 2 iterations, got {self.iterations}")
        if not 0.0 < self.split_fraction < 1.0:
            raise DomainError(f"split_fraction must lie in (0, 1), got {self.split_fraction}")
        lo, hi = self.alpha_range()
        if not (0.0 < lo <= hi < 1.0):
            raise DomainError(f"alpha range [{lo}, {hi}] must lie inside (0, 1) with lo <= hi")

    def alpha_range(self) -> tuple[float, float]:
        lo = self.alpha if self.alpha_lo is None else self.alpha_lo
        hi = min(1.1 * self.alpha, 1.0 - 1e-12) if self.alpha_hi is None else self.alpha_hi
        return float(lo), float(hi)


@dataclass(frozen=True)
class IterationPoint:
    alpha_nu: float
    train_risk: float
    train_advrisk: float
    test_risk: float
    test_advrisk: float
    region: ErrorRegion


@dataclass(frozen=True)
class BoundReport:
    points: tuple[IterationPoint, ...]
    slope: float
    intercept: float
    c_adv: float
    extrapolated: bool
    clamped: bool
    degenerate: bool
    warnings: tuple[str, ...]
    config: BoundConfig


@dataclass(frozen=True)
class SweepPoint:
    spheres: int
    train_expansion: float
    test_expansion: float


def fit_line(xs, ys) -> tuple[float, float]:
    """Unweighted ordinary least squares; returns (slope, intercept)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    x_mean = float(x.mean())
    y_mean = float(y.mean())
    denom = float(np.sum((x - x_mean) ** 2))
    if denom == 0.0:
        raise DomainError("regression inputs have zero spread")
    slope = float(np.sum((x - x_mean) * (y - y_mean))) / denom
    return slope, y_mean - slope * x_mean


def _split_sizes(n: int, split_fraction: float) -> int:
    n_train = int(round(split_fraction * n))
    if n_train < 2 or n - n_train < 2:
        raise PartitionError(
            f"split {split_fraction} of {n} samples leaves a side below 2 "
            f"(train {n_train}, test {n - n_train})"
        )
    return n_train


def _run_iteration(samples: SampleSet, config: BoundConfig, nu: int, alpha_nu: float,
                   dist: np.ndarray) -> IterationPoint:
    rng = np.random.default_rng(np.random.SeedSequence([config.seed & _MASK64, nu]))
    perm = rng.permutation(samples.n)
    n_train = _split_sizes(samples.n, config.split_fraction)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    train = samples.take(train_idx)
    test = samples.take(test_idx)

    index = index_from_matrix(dist[np.ix_(train_idx, train_idx)])
    region, state = fit_error_region(index, config.metric, config.epsilon,
                                     alpha_nu, config.spheres)
    region = region.resolve(train.features)
    # Report centers as indices into the full sample set, not the split.
    region = replace(region, centers=train_idx[region.centers])

    test_risk, _ = evaluate_membership(region, test, expanded=False)
    test_advrisk, _ = evaluate_membership(region, test, expanded=True)
    return IterationPoint(
        alpha_nu=float(alpha_nu),
        train_risk=state.absorbed.shape[0] / n_train,
        train_advrisk=state.absorbed_expanded.shape[0] / n_train,
        test_risk=test_risk,
        test_advrisk=test_advrisk,
        region=region,
    )


def _run_iterations(samples: SampleSet, config: BoundConfig, *, threads: int,
                    dist: Optional[np.ndarray]) -> tuple[IterationPoint, ...]:
    _split_sizes(samples.n, config.split_fraction)
    if dist is None:
        dist = config.metric.pairwise(samples.features)
    lo, hi = config.alpha_range()
    m = config.iterations
    alphas = [lo + nu * (hi - lo) / m for nu in range(m)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_iteration, samples, config, nu, alphas[nu], dist)
                       for nu in range(m)]
            return tuple(f.result() for f in futures)
    return tuple(_run_iteration(samples, config, nu, alphas[nu], dist) for nu in range(m))


def estimate_bound(samples: SampleSet, config: BoundConfig, *, threads: int = 1,
                   dist: Optional[np.ndarray] = None) -> BoundReport:
    """Estimate the adversarial-risk lower bound at config.alpha.

    dist may carry a precomputed full-set distance matrix (e.g. from the
    binary cache); otherwise it is computed once and sliced per iteration.
    The result is identical for any thread count.
    """
    points = _run_iterations(samples, config, threads=threads, dist=dist)
    risks = np.array([p.test_risk for p in points])
    advrisks = np.array([p.test_advrisk for p in points])

    warnings: list[str] = []
    degenerate = float(risks.max() - risks.min()) < 1e-15
    if degenerate:
        slope = 0.0
        intercept = float(advrisks.mean())
        warnings.append(
            "degenerate regression: all test risks identical; "
            "bound set to the mean adversarial risk"
        )
    else:
        slope, intercept = fit_line(risks, advrisks)

    raw = slope * config.alpha + intercept
    extrapolated = bool(config.alpha < risks.min() or config.alpha > risks.max())
    if extrapolated:
        warnings.append(
            f"alpha = {config.alpha:.6g} lies outside the observed test-risk range "
            f"[{risks.min():.6g}, {risks.max():.6g}]; the bound is extrapolated"
        )
    c_adv = min(max(raw, 0.0), 1.0)
    clamped = c_adv != raw
    if clamped:
        warnings.append(f"regression prediction {raw:.6g} clamped to [0, 1]")

    return BoundReport(
        points=points,
        slope=float(slope),
        intercept=float(intercept),
        c_adv=float(c_adv),
        extrapolated=extrapolated,
        clamped=clamped,
        degenerate=degenerate,
        warnings=tuple(warnings),
        config=config,
    )


def sweep_T(samples: SampleSet, config: BoundConfig, T_values, *, threads: int = 1,
            dist: Optional[np.ndarray] = None) -> tuple[SweepPoint, ...]:
    """Average train/test expansion fractions for each sphere count.

    The expansion fraction at small T shows how well few large spheres
    generalize; pushing T far past the data's cluster count overfits the
    train split and the test expansion climbs back up.
    """
    values = [int(t) for t in T_values]
    if not values:
        raise DomainError("T_values must be non-empty")
    if dist is None:
        dist = config.metric.pairwise(samples.features)
    records = []
    for t_value in values:
        points = _run_iterations(samples, replace(config, spheres=t_value),
                                 threads=threads, dist=dist)
        records.append(SweepPoint(
            spheres=t_value,
            train_expansion=float(np.mean([p.train_advrisk for p in points])),
            test_expansion=float(np.mean([p.test_advrisk for p in points])),
        ))
    return tuple(records)


def invert_bound(samples: SampleSet, config: BoundConfig, risk_budget: float,
                 eps_hi: float, tol: float, *, threads: int = 1,
                 probe_log: Optional[list] = None) -> float:
    """Largest attack strength whose (smoothed) bound stays within budget.

    Bisects over eps. The greedy estimator is only statistically monotone in
    eps, so probes are smoothed with a running max before comparison; the
    returned value is the largest accepted eps, within tol.
    """
    if eps_hi <= 0:
        raise DomainError(f"eps_hi must be positive, got {eps_hi}")
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    dist = config.metric.pairwise(samples.features)

    def probe(eps: float) -> float:
        value = estimate_bound(samples, replace(config, epsilon=eps),
                               threads=threads, dist=dist).c_adv
        if probe_log is not None:
            probe_log.append((float(eps), float(value)))
        return value

    at_zero = probe(0.0)
    if risk_budget < at_zero - 1e-12:
        raise BracketError(
            f"risk budget {risk_budget:.6g} is below the eps=0 bound {at_zero:.6g}"
        )
    at_hi = max(probe(eps_hi), at_zero)
    if risk_budget >= at_hi:
        return float(eps_hi)

    lo, hi = 0.0, float(eps_hi)
    smoothed_lo = at_zero
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        smoothed = max(probe(mid), smoothed_lo)
        if smoothed <= risk_budget:
            lo, smoothed_lo = mid, smoothed
        else:
            hi = mid
    return float(lo)
