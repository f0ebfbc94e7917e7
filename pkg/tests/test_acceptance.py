"""Acceptance gate: one test per shipping criterion.

Each criterion gets a single test function (MNIST-dependent criteria carry a
separate leg that skips when the dataset is not installed); the conftest
terminal summary prints one PASS/FAIL/SKIP line per criterion number.
"""

import math
import time

import numpy as np
import pytest
from numpy.testing import assert_array_equal

import advbound.cli as cli
from advbound import (
    L2,
    TRACE_AMPLITUDE,
    TRACE_ANGLE,
    AttackConfig,
    BoundConfig,
    DatasetFormat,
    DatasetSource,
    SampleSet,
    best_sphere,
    bures_angle,
    clean_error,
    condense,
    estimate_bound,
    evaluate_membership,
    expand_radius,
    find_rank,
    fit_error_region,
    initial_state,
    load_dataset,
    pairwise_distances,
    run_attack,
    train_toy_classifier,
)
from advbound.diagnostics import (
    direct_expansion_membership,
    exhaustive_greedy_step,
    expansion_witness,
    gram_determinant,
    naive_condense,
)
from advbound.estimator import _split_sizes
from advbound.metrics import normalized_rows
from advbound.regions import _ceil_budget
from advbound.reports import parse_report, report_body_bytes

from conftest import mnist_dir, random_unit_vectors

ATTACK_TEMPERATURE = 1.0 / 50.0


def test_ac01_bures_triangle_inequality():
    # 1e5 random complex unit-vector triples across four dimensions: the
    # geodesic angle obeys the triangle inequality and the Gram determinant
    # stays nonnegative, both to 1e-9
    started = time.perf_counter()
    rng = np.random.default_rng(101)
    per_dim = 25_000
    failures = 0
    min_gram = np.inf
    for d in (2, 4, 8, 16):
        u = random_unit_vectors(rng, per_dim, d, complex_valued=True)
        v = random_unit_vectors(rng, per_dim, d, complex_valued=True)
        w = random_unit_vectors(rng, per_dim, d, complex_valued=True)
        for i in range(per_dim):
            uv = bures_angle(u[i], v[i])
            vw = bures_angle(v[i], w[i])
            uw = bures_angle(u[i], w[i])
            if uv + vw < uw - 1e-9:
                failures += 1
            det = gram_determinant(u[i], v[i], w[i])
            if det < min_gram:
                min_gram = det
    elapsed = time.perf_counter() - started
    assert failures == 0
    assert min_gram >= -1e-9
    assert elapsed < 30.0


def test_ac02_radius_expansion_geometry():
    # constructive witnesses on 1e4 random (center, radius, strength)
    # instances, plus the exact special cases of the expansion rule
    started = time.perf_counter()
    rng = np.random.default_rng(202)
    for _ in range(10_000):
        d = int(rng.integers(2, 9))
        c = random_unit_vectors(rng, 1, d, complex_valued=True)[0]
        theta_r = float(rng.uniform(0.0, math.pi / 2))
        theta_eps = float(rng.uniform(0.0, math.pi / 2 - theta_r))
        # a state at most theta_r + theta_eps away from the center
        q = random_unit_vectors(rng, 1, d, complex_valued=True)[0]
        q = q - np.vdot(c, q) * c
        norm = np.linalg.norm(q)
        if norm < 1e-12:
            continue
        q = q / norm
        t = float(rng.uniform(0.0, theta_r + theta_eps))
        x = math.cos(t) * c + math.sin(t) * q
        y = expansion_witness(c, x, theta_r)
        assert bures_angle(c, y) <= theta_r + 1e-9
        assert bures_angle(y, x) <= theta_eps + 1e-9
    # special cases: zero strength, zero radius, and the 3-4-5 right angle
    assert expand_radius(TRACE_AMPLITUDE, 0.37, 0.0) == 0.37
    assert expand_radius(L2, 0.37, 0.0) == 0.37
    assert expand_radius(TRACE_AMPLITUDE, 0.0, 0.22) == 0.22
    assert abs(expand_radius(TRACE_AMPLITUDE, 0.6, 0.8) - 1.0) <= 1e-12
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0


def test_ac03_index_operations_match_oracles():
    # 200 seeded random instances per metric (n <= 64, d <= 8): the sorted
    # index pipeline agrees with its brute-force counterparts
    started = time.perf_counter()
    for metric_id, metric in enumerate((L2, TRACE_AMPLITUDE, TRACE_ANGLE)):
        for instance in range(200):
            rng = np.random.default_rng(10_000 * (metric_id + 1) + instance)
            n = int(rng.integers(8, 65))
            d = int(rng.integers(2, 9))
            s = SampleSet(features=rng.standard_normal((n, d)))
            idx = pairwise_distances(s, metric)
            raw = metric.pairwise(s.features)

            removed = rng.choice(n, size=int(rng.integers(0, n // 2 + 1)),
                                 replace=False)
            view = condense(idx, tuple(int(i) for i in removed))
            assert_array_equal(view.rows, naive_condense(raw, removed))

            row = int(rng.integers(0, n))
            threshold = float(rng.uniform(0.0, raw.max() + 0.1))
            fast = find_rank(view.rows[row], threshold)
            assert fast == int(np.count_nonzero(view.rows[row] <= threshold))

            eps = float(rng.uniform(0.0, 0.5))
            if instance % 2 == 0:
                state = initial_state(idx)
            else:
                _, state = fit_error_region(idx, metric, eps, 0.3, 2)
            remaining = n - state.absorbed.size
            if remaining >= 2:
                k_u = int(rng.integers(1, min(remaining, 6) + 1))
                got = best_sphere(state, metric, eps, 1, k_u)
                oracle = exhaustive_greedy_step(s, metric, state, eps, 1, k_u)
                assert (got.center, got.k, got.delta) == oracle

            region, _ = fit_error_region(idx, metric, eps, 0.3, 3)
            resolved = region.resolve(s.features)
            _, mask = evaluate_membership(resolved, s, expanded=True)
            assert_array_equal(mask, direct_expansion_membership(s, resolved, eps))
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0


def test_ac04_budget_and_containment_invariants():
    # 50 random bound runs: the carve never overshoots its sample budget and
    # expansion never lowers a risk
    metrics = (L2, TRACE_AMPLITUDE, TRACE_ANGLE)
    violations = 0
    for run in range(50):
        rng = np.random.default_rng(40_000 + run)
        n = int(rng.integers(30, 91))
        d = int(rng.integers(2, 7))
        metric = metrics[run % 3]
        feats = rng.standard_normal((n, d))
        if metric is not L2:
            feats = np.abs(feats) + 0.05
        eps_hi = 0.8 if metric is L2 else 0.6
        config = BoundConfig(
            epsilon=float(rng.uniform(0.0, eps_hi)),
            alpha=float(rng.uniform(0.05, 0.4)),
            metric=metric,
            iterations=3,
            seed=run,
        )
        report = estimate_bound(SampleSet(features=feats), config)
        n_train = _split_sizes(n, config.split_fraction)
        for point in report.points:
            absorbed = round(point.train_risk * n_train)
            if absorbed > _ceil_budget(point.alpha_nu * n_train):
                violations += 1
            if point.train_advrisk < point.train_risk:
                violations += 1
            if point.test_advrisk < point.test_risk:
                violations += 1
    assert violations == 0


def _four_cluster_labeled(seed=500, sigma=0.30, per_cluster=500):
    rng = np.random.default_rng(seed)
    centers = np.ones((4, 8))
    for i in range(4):
        centers[i, i] += 1.0
    feats = np.abs(np.vstack([
        c + sigma * rng.standard_normal((per_cluster, 8)) for c in centers
    ]))
    labels = np.repeat([0, 0, 1, 1], per_cluster)
    return feats, labels


def _bound_versus_attack(samples, metric, eps, attack_config, seed):
    model = train_toy_classifier(samples, temperature=1.0,
                                 learning_rate=5.0, epochs=300)
    alpha_hat = clean_error(model, samples)
    assert 0.0 < alpha_hat < 1.0
    report = estimate_bound(samples, BoundConfig(epsilon=eps, alpha=alpha_hat,
                                                 metric=metric, iterations=5,
                                                 seed=seed))
    outcome = run_attack(model.with_temperature(ATTACK_TEMPERATURE), samples,
                         attack_config)
    assert outcome.violations == 0
    return report.c_adv, outcome.adversarial_error


def test_ac05_synthetic_error_exceeds_bound():
    # the certified lower bound on adversarial error, computed at the toy
    # classifier's own clean error rate, never exceeds the error an actual
    # attack inflicts on that classifier
    started = time.perf_counter()
    feats, labels = _four_cluster_labeled()
    raw = SampleSet(features=feats, labels=labels)
    c_adv, adv_err = _bound_versus_attack(
        raw, L2, 0.4,
        AttackConfig(epsilon=0.4, steps=60, metric=L2, clamp_nonnegative=False),
        seed=1)
    assert adv_err >= c_adv

    normalized = SampleSet(features=normalized_rows(feats), labels=labels)
    c_adv_t, adv_err_t = _bound_versus_attack(
        normalized, TRACE_AMPLITUDE, 0.1,
        AttackConfig(epsilon=0.1, steps=40, metric=TRACE_AMPLITUDE),
        seed=1)
    assert adv_err_t >= c_adv_t
    assert time.perf_counter() - started < 900.0


def _load_mnist_pair(base, keep_classes, count):
    suffix = ".gz" if not (base / "train-images-idx3-ubyte").exists() else ""
    source = DatasetSource(
        path=str(base / f"train-images-idx3-ubyte{suffix}"),
        format=DatasetFormat.IDX,
        labels_path=str(base / f"train-labels-idx1-ubyte{suffix}"),
    )
    full = load_dataset(source)
    mask = np.isin(full.labels, keep_classes)
    feats = full.features[mask][:count]
    labels = (np.asarray(full.labels)[mask][:count] == keep_classes[1]).astype(int)
    return feats, labels


def test_ac05_mnist_error_exceeds_bound():
    base = mnist_dir()
    if base is None:
        pytest.skip("MNIST IDX files not found under $ADVBOUND_MNIST_DIR, "
                    "./data/mnist, or ~/data/mnist")
    started = time.perf_counter()
    feats, labels = _load_mnist_pair(base, (3, 5), 4000)
    scaled = SampleSet(features=feats / 255.0, labels=labels)
    c_adv, adv_err = _bound_versus_attack(
        scaled, L2, 100.0 / 255.0,
        AttackConfig(epsilon=100.0 / 255.0, steps=60, metric=L2,
                     clamp_nonnegative=False),
        seed=1)
    assert adv_err >= c_adv

    normalized = SampleSet(features=normalized_rows(feats), labels=labels)
    c_adv_t, adv_err_t = _bound_versus_attack(
        normalized, TRACE_AMPLITUDE, 0.1,
        AttackConfig(epsilon=0.1, steps=40, metric=TRACE_AMPLITUDE),
        seed=1)
    assert adv_err_t >= c_adv_t
    assert time.perf_counter() - started < 900.0


def test_ac06_bound_monotone_in_strength():
    # raw fixed-seed bounds over a strength grid may dip only inside a 0.01
    # band; running-max smoothing must be flat or rising
    rng = np.random.default_rng(602)
    feats = np.abs(np.vstack([
        [1.0, 0.2, 0.2] + 0.15 * rng.standard_normal((200, 3)),
        [0.2, 1.0, 0.2] + 0.15 * rng.standard_normal((200, 3)),
    ]))
    data = SampleSet(features=feats)
    values = []
    for i in range(11):
        config = BoundConfig(epsilon=0.05 * i, alpha=0.2, metric=TRACE_AMPLITUDE,
                             alpha_lo=0.10, alpha_hi=0.30, iterations=10, seed=6)
        values.append(estimate_bound(data, config).c_adv)
    worst_dip = max(max(0.0, values[i] - values[i + 1]) for i in range(10))
    assert worst_dip < 0.01
    smoothed = np.maximum.accumulate(values)
    assert all(smoothed[i] <= smoothed[i + 1] for i in range(10))


def test_ac07_mnist_reproduction():
    base = mnist_dir()
    if base is None:
        pytest.skip("MNIST IDX files not found under $ADVBOUND_MNIST_DIR, "
                    "./data/mnist, or ~/data/mnist")
    started = time.perf_counter()
    suffix = ".gz" if not (base / "train-images-idx3-ubyte").exists() else ""
    source = DatasetSource(
        path=str(base / f"train-images-idx3-ubyte{suffix}"),
        format=DatasetFormat.IDX,
        labels_path=str(base / f"train-labels-idx1-ubyte{suffix}"),
        subsample=5000,
        subsample_seed=0,
    )
    full = load_dataset(source)
    data = SampleSet(features=normalized_rows(full.features))
    config = BoundConfig(epsilon=0.1, alpha=0.0772, metric=TRACE_AMPLITUDE, seed=0)
    report = estimate_bound(data, config)
    assert 0.04 <= report.c_adv <= 0.17
    assert time.perf_counter() - started < 1200.0


def test_ac08_quadratic_scaling():
    # doubling n must cost at most a factor 6 (the n^2 log n prediction is
    # about 4.4); a cubic path would show up as a factor near 8 or worse
    rng = np.random.default_rng(800)

    def make(n):
        half = n // 2
        feats = np.vstack([
            -1.0 + 0.4 * rng.standard_normal((half, 4)),
            1.0 + 0.4 * rng.standard_normal((n - half, 4)),
        ])
        return SampleSet(features=feats)

    small, large = make(1000), make(2000)
    config = BoundConfig(epsilon=0.3, alpha=0.1, metric=L2, spheres=10,
                         iterations=3, seed=0)
    estimate_bound(small, config)  # warmup

    def best_of_two(data):
        best = float("inf")
        for _ in range(2):
            tick = time.perf_counter()
            estimate_bound(data, config)
            best = min(best, time.perf_counter() - tick)
        return best

    ratio = best_of_two(large) / best_of_two(small)
    assert ratio <= 6.0


def test_ac09_thread_count_never_changes_reports(tmp_path):
    rng = np.random.default_rng(900)
    lo = np.abs(0.5 + 0.1 * rng.standard_normal((60, 2)))
    hi = np.abs(2.0 + 0.1 * rng.standard_normal((60, 2)))
    rows = [f"{p[0]},{p[1]},{label}"
            for label, block in ((0, lo), (1, hi)) for p in block]
    csv_path = tmp_path / "points.csv"
    csv_path.write_text("\n".join(rows) + "\n")

    def run(cmd):
        out = tmp_path / f"report-{len(list(tmp_path.iterdir()))}.json"
        assert cli.main(cmd + ["--output", str(out)]) == 0
        return report_body_bytes(parse_report(out.read_bytes()))

    bound_cmd = ["bound", "--input", str(csv_path), "--epsilon", "0.3",
                 "--alpha", "0.1", "--iterations", "4", "--seed", "17"]
    assert run(bound_cmd + ["--threads", "1"]) == run(bound_cmd + ["--threads", "8"])

    attack_cmd = ["attack", "--input", str(csv_path), "--label-column", "2",
                  "--attack", "pgd-l2", "--epsilon", "0.2", "--steps", "15",
                  "--train", "--seed", "17"]
    assert run(attack_cmd + ["--threads", "1"]) == run(attack_cmd + ["--threads", "8"])


def test_ac10_gradient_fidelity_and_constraints():
    # analytic loss gradients against central differences, then a zero
    # violation count across ten thousand attacked samples per attack
    rng = np.random.default_rng(1000)
    feats = np.abs(np.vstack([
        [1.2, 0.4, 0.4, 0.4] + 0.3 * rng.standard_normal((5000, 4)),
        [0.4, 1.2, 0.4, 0.4] + 0.3 * rng.standard_normal((5000, 4)),
    ]))
    labels = np.repeat([0, 1], 5000)
    raw = SampleSet(features=feats, labels=labels)
    model = train_toy_classifier(raw, epochs=120)

    h = 1e-4
    for _ in range(100):
        x = np.abs(rng.standard_normal(4)) + 0.2
        y = int(rng.integers(0, 2))
        grad = model.loss_gradient(x, y)
        numeric = np.empty(4)
        for i in range(4):
            step = np.zeros(4)
            step[i] = h
            numeric[i] = (model.loss(x + step, y) - model.loss(x - step, y)) / (2 * h)
        scale = max(np.linalg.norm(grad), np.linalg.norm(numeric), 1e-8)
        assert np.linalg.norm(grad - numeric) / scale < 1e-5

    out_l2 = run_attack(model.with_temperature(ATTACK_TEMPERATURE), raw,
                        AttackConfig(epsilon=0.3, metric=L2,
                                     clamp_nonnegative=False))
    assert out_l2.violations == 0

    normalized = SampleSet(features=normalized_rows(feats), labels=labels)
    model_n = train_toy_classifier(normalized, epochs=120)
    out_td = run_attack(model_n.with_temperature(ATTACK_TEMPERATURE), normalized,
                        AttackConfig(epsilon=0.2, metric=TRACE_AMPLITUDE))
    assert out_td.violations == 0
