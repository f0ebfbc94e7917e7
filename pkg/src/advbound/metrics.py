"""Distance, fidelity, and radius-expansion primitives.

Three perturbation metrics are supported:

- ``L2``: plain Euclidean distance between feature vectors.
- ``TRACE_AMPLITUDE``: trace distance between the pure states obtained by
  amplitude-encoding two feature vectors (normalizing each into a state
  vector); equals sqrt(1 - F) with F the squared cosine similarity.
- ``TRACE_ANGLE``: trace distance under angle encoding, where each feature is
  rotated onto its own qubit and the joint fidelity is a product of
  per-feature cos^2 terms.

A sphere of radius r in any of these metrics, hit with perturbations of
strength eps, grows to the expanded radius returned by ``expand_radius``:
r + eps classically, and sin(arcsin r + arcsin eps) for trace metrics
(capped at 1, the diameter of state space).

All functions are pure; everything here is safe to call from concurrent
workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DimensionError,
    DomainError,
    InvalidSample,
    NotNormalized,
    NumericalError,
    ZeroNormSample,
)

# Tolerance for clamping quantities that are mathematically confined to [0, 1]
# but overshoot by rounding; violations beyond it raise NumericalError.
CLAMP_TOL = 1e-9

# Element cutoff below which cross-distance blocks use the explicit
# differences path (bitwise-identical to the scalar functions) instead of the
# faster matrix-product path.
_SMALL_BLOCK = 1 << 24


def _as_vector(x, name: str = "input") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidSample(f"{name} contains non-finite entries")
    return arr


def _clamp_unit(value: float, what: str) -> float:
    if not math.isfinite(value) or value < -CLAMP_TOL or value > 1.0 + CLAMP_TOL:
        raise NumericalError(f"{what} = {value!r} outside [0, 1] beyond tolerance")
    return min(max(value, 0.0), 1.0)


def l2_distance(a, b) -> float:
    """Euclidean distance between two equal-length feature vectors."""
    av = _as_vector(a, "a")
    bv = _as_vector(b, "b")
    if av.shape[0] != bv.shape[0]:
        raise DimensionError(f"dimension mismatch: {av.shape[0]} vs {bv.shape[0]}")
    diff = av - bv
    return float(np.sqrt(np.sum(diff * diff)))


def amplitude_fidelity(x1, x2) -> float:
    """Fidelity between the amplitude encodings of two vectors.

    Both vectors are normalized into state vectors, so only their directions
    matter: F = (x1 . x2 / (|x1| |x2|))^2.
    """
    a = _as_vector(x1, "x1")
    b = _as_vector(x2, "x2")
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = float(np.sqrt(np.sum(a * a)))
    nb = float(np.sqrt(np.sum(b * b)))
    if na == 0.0 or nb == 0.0:
        raise ZeroNormSample("amplitude encoding requires nonzero-norm inputs")
    c = float(np.sum(a * b)) / (na * nb)
    return _clamp_unit(c * c, "amplitude fidelity")


def angle_fidelity(x1, x2, *, scale: float = math.pi / 2) -> float:
    """Fidelity between the angle encodings of two vectors.

    One qubit per feature, each rotated by scale * feature; the joint fidelity
    factorizes as prod_i cos^2(scale * (x1_i - x2_i)).
    """
    a = _as_vector(x1, "x1")
    b = _as_vector(x2, "x2")
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    c = np.cos(scale * (a - b))
    return _clamp_unit(float(np.prod(c * c)), "angle fidelity")


def trace_distance_from_fidelity(fidelity) -> float:
    """Trace distance between two pure states with the given fidelity.

    For pure states the trace distance is sqrt(1 - F), the sine of the Bures
    angle between them.
    """
    f = float(fidelity)
    if not math.isfinite(f) or f < -CLAMP_TOL or f > 1.0 + CLAMP_TOL:
        raise NumericalError(f"fidelity = {f!r} outside [0, 1] beyond tolerance")
    f = min(max(f, 0.0), 1.0)
    return float(np.sqrt(1.0 - f))


def bures_angle(u, v) -> float:
    """Bures angle arccos |<u|v>| between two unit state vectors."""
    uv = np.asarray(u, dtype=complex)
    vv = np.asarray(v, dtype=complex)
    if uv.ndim != 1 or vv.ndim != 1 or uv.shape != vv.shape:
        raise DimensionError(f"expected equal-length vectors, got {uv.shape} and {vv.shape}")
    if not (np.all(np.isfinite(uv.real)) and np.all(np.isfinite(uv.imag))
            and np.all(np.isfinite(vv.real)) and np.all(np.isfinite(vv.imag))):
        raise InvalidSample("state vectors contain non-finite entries")
    for name, vec in (("u", uv), ("v", vv)):
        norm = float(np.sqrt(np.sum(vec.real**2 + vec.imag**2)))
        if abs(norm - 1.0) > CLAMP_TOL:
            raise NotNormalized(f"{name} has norm {norm!r}, expected 1 within {CLAMP_TOL}")
    overlap = abs(complex(np.vdot(uv, vv)))
    return float(np.arccos(min(overlap, 1.0)))


class MetricKind(Enum):
    L2 = "l2"
    TRACE_AMPLITUDE = "trace-amplitude"
    TRACE_ANGLE = "trace-angle"


@dataclass(frozen=True)
class MetricSpace:
    """A perturbation metric together with its radius-expansion rule."""

    kind: MetricKind
    angle_scale: float = math.pi / 2

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def is_trace(self) -> bool:
        """True for the quantum metrics, whose distances live in [0, 1]."""
        return self.kind is not MetricKind.L2

    def distance(self, a, b) -> float:
        """Scalar distance between two feature vectors under this metric."""
        if self.kind is MetricKind.L2:
            return l2_distance(a, b)
        if self.kind is MetricKind.TRACE_AMPLITUDE:
            return trace_distance_from_fidelity(amplitude_fidelity(a, b))
        return trace_distance_from_fidelity(angle_fidelity(a, b, scale=self.angle_scale))

    def expand(self, r, eps):
        """Expanded radius; accepts scalars or arrays of radii."""
        return expand_radius(self, r, eps)

    def cross_distances(self, left, right) -> np.ndarray:
        """Distance block between the rows of two feature matrices."""
        return _cross_distances(self, np.asarray(left, float), np.asarray(right, float))

    def pairwise(self, features) -> np.ndarray:
        """Full symmetric distance matrix with an exactly zero diagonal."""
        x = np.asarray(features, dtype=float)
        d = _cross_distances(self, x, x)
        d = (d + d.T) / 2.0
        np.fill_diagonal(d, 0.0)
        return d


L2 = MetricSpace(MetricKind.L2)
TRACE_AMPLITUDE = MetricSpace(MetricKind.TRACE_AMPLITUDE)
TRACE_ANGLE = MetricSpace(MetricKind.TRACE_ANGLE)

_BY_NAME = {m.name: m for m in (L2, TRACE_AMPLITUDE, TRACE_ANGLE)}


def metric_from_name(name: str) -> MetricSpace:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise DomainError(f"unknown metric {name!r}; expected one of {sorted(_BY_NAME)}") from None


def expand_radius(metric: MetricSpace, r, eps):
    """Radius of the eps-expansion of a metric sphere of radius r.

    L2 spheres grow additively. Trace-distance spheres grow on the Bures
    sphere: r' = sin(arcsin r + arcsin eps), written out as
    r * sqrt(1 - eps^2) + eps * sqrt(1 - r^2), and capped at 1 once the two
    angles sum to a quarter turn (a trace-distance sphere of radius 1 already
    covers every pure state). Accepts a scalar or array r.
    """
    rr = np.asarray(r, dtype=float)
    scalar = rr.ndim == 0
    e = float(eps)
    if not math.isfinite(e) or e < 0.0 or not np.all(np.isfinite(rr)) or np.any(rr < 0.0):
        raise DomainError("radius and strength must be finite and nonnegative")
    if metric.kind is MetricKind.L2:
        out = rr + e
        return float(out) if scalar else out
    if e > 1.0 + CLAMP_TOL or np.any(rr > 1.0 + CLAMP_TOL):
        raise DomainError("trace-distance radii and strengths must lie in [0, 1]")
    e = min(e, 1.0)
    rr = np.minimum(rr, 1.0)
    out = rr * np.sqrt(1.0 - e * e) + e * np.sqrt(1.0 - rr * rr)
    out = np.where(np.arcsin(rr) + math.asin(e) >= math.pi / 2, 1.0, out)
    out = np.maximum(out, rr)  # sin(a+b) >= sin(a); guard rounding undershoot
    return float(out) if scalar else out


def normalized_rows(features) -> np.ndarray:
    """Rows scaled to unit l2 norm; zero-norm rows are rejected."""
    x = np.asarray(features, dtype=float)
    if x.ndim != 2:
        raise DimensionError(f"expected a 2-D feature matrix, got shape {x.shape}")
    norms = np.sqrt(np.sum(x * x, axis=1))
    bad = np.flatnonzero(norms == 0.0)
    if bad.size:
        raise ZeroNormSample(f"row {int(bad[0])} has zero norm")
    return x / norms[:, None]


def _validate_features(x: np.ndarray) -> None:
    if x.ndim != 2:
        raise DimensionError(f"expected a 2-D feature matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidSample("feature matrix contains non-finite entries")


def _cross_distances(metric: MetricSpace, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _validate_features(a)
    _validate_features(b)
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    small = a.shape[0] * b.shape[0] * a.shape[1] <= _SMALL_BLOCK
    if metric.kind is MetricKind.L2:
        if small:
            diff = a[:, None, :] - b[None, :, :]
            return np.sqrt(np.sum(diff * diff, axis=-1))
        sq_a = np.sum(a * a, axis=1)
        sq_b = np.sum(b * b, axis=1)
        d2 = sq_a[:, None] + sq_b[None, :] - 2.0 * (a @ b.T)
        return np.sqrt(np.clip(d2, 0.0, None))
    if metric.kind is MetricKind.TRACE_AMPLITUDE:
        na = np.sqrt(np.sum(a * a, axis=1))
        nb = np.sqrt(np.sum(b * b, axis=1))
        for norms in (na, nb):
            bad = np.flatnonzero(norms == 0.0)
            if bad.size:
                raise ZeroNormSample(f"row {int(bad[0])} has zero norm")
        if small:
            dots = np.sum(a[:, None, :] * b[None, :, :], axis=-1)
        else:
            dots = a @ b.T
        c = dots / (na[:, None] * nb[None, :])
        fid = np.clip(c * c, 0.0, 1.0)
        return np.sqrt(1.0 - fid)
    # TRACE_ANGLE: accumulate the per-feature fidelity product to avoid an
    # n x n x d temporary at large n.
    fid = np.ones((a.shape[0], b.shape[0]))
    if small:
        c = np.cos(metric.angle_scale * (a[:, None, :] - b[None, :, :]))
        fid = np.prod(c * c, axis=-1)
    else:
        for j in range(a.shape[1]):
            c = np.cos(metric.angle_scale * (a[:, j][:, None] - b[:, j][None, :]))
            fid *= c * c
    np.clip(fid, 0.0, 1.0, out=fid)
    return np.sqrt(1.0 - fid)
