"""Gradient attacks and empirical error rates.

pgd_l2 is projected gradient ascent in the ambient space with a closed
l2-ball constraint. td_pgd is its trace-distance counterpart: it walks the
unit sphere of normalized inputs in geodesic steps and projects back onto
the spherical cap of Bures angle arcsin(eps) around the clean state. Both
start from the clean input and keep a step only when it does not decrease
the loss, which pins adversarial error at or above clean error.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .datasets import SampleSet
from .errors import DomainError, InvalidSample, MetricMismatch, ZeroNormSample
from .metrics import (
    L2 as L2_METRIC,
    MetricKind,
    MetricSpace,
    amplitude_fidelity,
    l2_distance,
    trace_distance_from_fidelity,
)

CONSTRAINT_TOL = 1e-9
_LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class AttackConfig:
    epsilon: float
    steps: int = 40
    step_size: Optional[float] = None
    metric: MetricSpace = L2_METRIC
    clamp_nonnegative: bool = True

    def __post_init__(self):
        if self.epsilon < 0:
            raise DomainError(f"epsilon must be nonnegative, got {self.epsilon}")
        if self.steps < 1:
            raise DomainError(f"steps must be at least 1, got {self.steps}")
        if self.step_size is not None and not self.step_size > 0:
            raise DomainError(f"step_size must be positive, got {self.step_size}")

    def resolved_step_size(self) -> float:
        """Explicit step size, or a default crossing the ball in half the steps."""
        if self.step_size is not None:
            return float(self.step_size)
        if self.metric.is_trace:
            reach = math.asin(min(self.epsilon, 1.0))
        else:
            reach = self.epsilon
        default = 2.0 * reach / self.steps
        return default if default > 0 else 1e-3


def _loss(classifier, x, y: int) -> float:
    probs = np.asarray(classifier.predict_probs(x), dtype=float)
    return float(-np.log(max(float(probs[int(y)]), _LOG_FLOOR)))


def _clean_vector(x) -> np.ndarray:
    vec = np.array(x, dtype=float)
    if vec.ndim != 1 or not np.all(np.isfinite(vec)):
        raise InvalidSample("attack input must be a finite 1-D vector")
    return vec


def pgd_l2(classifier, x, y: int, config: AttackConfig) -> np.ndarray:
    """Ascend the loss in unit-gradient steps inside the l2 ball around x."""
    if config.metric.kind is not MetricKind.L2:
        raise MetricMismatch(f"pgd_l2 requires the l2 metric, got {config.metric.name}")
    origin = _clean_vector(x)
    eps = float(config.epsilon)
    if eps == 0.0:
        return origin.copy()
    step = config.resolved_step_size()
    cur = origin.copy()
    cur_loss = _loss(classifier, cur, y)
    for _ in range(config.steps):
        grad = np.asarray(classifier.loss_gradient(cur, y), dtype=float)
        norm = float(np.sqrt(np.sum(grad * grad)))
        if norm == 0.0 or not math.isfinite(norm):
            break
        cand = cur + (step / norm) * grad
        offset = cand - origin
        dist = float(np.sqrt(np.sum(offset * offset)))
        if dist > eps:
            cand = origin + offset * (eps / dist)
        cand_loss = _loss(classifier, cand, y)
        if cand_loss >= cur_loss:
            cur, cur_loss = cand, cand_loss
    return cur


def td_pgd(classifier, x, y: int, config: AttackConfig) -> np.ndarray:
    """Walk the unit sphere, staying within trace distance eps of x/||x||.

    Each step projects the loss gradient onto the tangent space at the
    current state and advances along that geodesic by the step size. If the
    nonnegativity clamp is on, negative coordinates are zeroed and the state
    renormalized. A state drifting past the Bures-angle cap arcsin(eps) is
    rotated back toward the clean state onto the cap boundary.
    """
    if config.metric.kind is not MetricKind.TRACE_AMPLITUDE:
        raise MetricMismatch(f"td_pgd requires the trace-amplitude metric, got {config.metric.name}")
    eps = float(config.epsilon)
    if eps >= 1.0:
        raise DomainError(f"trace-distance attack strength must be below 1, got {eps}")
    origin = _clean_vector(x)
    norm = float(np.sqrt(np.sum(origin * origin)))
    if norm == 0.0:
        raise ZeroNormSample("cannot attack the zero vector")
    unit = origin / norm
    if eps == 0.0:
        return unit
    cap = math.asin(eps)
    step = config.resolved_step_size()
    cur = unit.copy()
    cur_loss = _loss(classifier, cur, y)
    for _ in range(config.steps):
        grad = np.asarray(classifier.loss_gradient(cur, y), dtype=float)
        tangent = grad - float(grad @ cur) * cur
        tnorm = float(np.sqrt(np.sum(tangent * tangent)))
        if tnorm == 0.0 or not math.isfinite(tnorm):
            break
        cand = math.cos(step) * cur + math.sin(step) * (tangent / tnorm)
        if config.clamp_nonnegative:
            cand = np.maximum(cand, 0.0)
            cnorm = float(np.sqrt(np.sum(cand * cand)))
            if cnorm == 0.0:
                break
            cand = cand / cnorm
        dot = float(cand @ unit)
        if dot < 0.0:
            # Same pure state; use the representative on the near hemisphere.
            cand = -cand
            dot = -dot
        angle = math.acos(min(dot, 1.0))
        if angle > cap:
            perp = cand - dot * unit
            pnorm = float(np.sqrt(np.sum(perp * perp)))
            if pnorm == 0.0:
                break
            cand = math.cos(cap) * unit + math.sin(cap) * (perp / pnorm)
            cand = cand / float(np.sqrt(np.sum(cand * cand)))
        cand_loss = _loss(classifier, cand, y)
        if cand_loss >= cur_loss:
            cur, cur_loss = cand, cand_loss
    return cur


def clean_error(classifier, eval_set: SampleSet) -> float:
    """Fraction of samples whose argmax prediction differs from the label."""
    labels = eval_set.require_labels()
    probs = _batch_probs(classifier, eval_set.features)
    preds = np.argmax(probs, axis=1)  # ties resolve to the lowest class index
    return float(np.mean(preds != labels))


@dataclass(frozen=True)
class AttackOutcome:
    adversarial_error: float
    attacked: np.ndarray
    violations: int


def run_attack(classifier, eval_set: SampleSet, config: AttackConfig,
               threads: int = 1) -> AttackOutcome:
    """Attack every sample and measure the post-attack error rate.

    Also re-checks the metric constraint on every emitted sample; the
    violation count is part of the outcome rather than an assumption.
    Results do not depend on the worker count.
    """
    labels = eval_set.require_labels()
    if config.metric.kind is MetricKind.L2:
        attack_fn = pgd_l2
    elif config.metric.kind is MetricKind.TRACE_AMPLITUDE:
        attack_fn = td_pgd
    else:
        raise MetricMismatch(f"no attack implements the {config.metric.name} metric")

    def one(i: int) -> np.ndarray:
        return attack_fn(classifier, eval_set.features[i], int(labels[i]), config)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            attacked = np.stack(list(pool.map(one, range(eval_set.n))))
    else:
        attacked = np.stack([one(i) for i in range(eval_set.n)])

    violations = 0
    for i in range(eval_set.n):
        if config.metric.kind is MetricKind.L2:
            moved = l2_distance(attacked[i], eval_set.features[i])
        else:
            moved = trace_distance_from_fidelity(
                amplitude_fidelity(attacked[i], eval_set.features[i]))
        if moved > config.epsilon + CONSTRAINT_TOL:
            violations += 1

    probs = _batch_probs(classifier, attacked)
    preds = np.argmax(probs, axis=1)
    return AttackOutcome(
        adversarial_error=float(np.mean(preds != labels)),
        attacked=attacked,
        violations=violations,
    )


def adversarial_error(classifier, eval_set: SampleSet, attack: AttackConfig,
                      threads: int = 1) -> float:
    """Fraction of samples misclassified after the attack."""
    return run_attack(classifier, eval_set, attack, threads=threads).adversarial_error


def _batch_probs(classifier, features) -> np.ndarray:
    batch = getattr(classifier, "predict_batch", None)
    if batch is not None:
        return np.asarray(batch(features), dtype=float)
    return np.stack([np.asarray(classifier.predict_probs(row), dtype=float)
                     for row in np.asarray(features, dtype=float)])
