import math

import numpy as np
import pytest

from pacp import DeltaProfile, from_rows, simulate
from pacp.errors import DomainError, NoInteriorRoot
from pacp.inference import localize_tau, lr_test, mle, plugin_lr_test, score
from pacp.likelihood import log_likelihood, log_lr


def test_score_worked_examples():
    g = from_rows(3, 1, {2: [0], 3: [1]})
    assert score(g, (3, 3), 0.0) == pytest.approx(0.25, abs=1e-14)
    g2 = from_rows(3, 1, {2: [0], 3: [0]})
    for d in (-0.9, -0.4, 0.0, 1.3, 11.0):
        expected = 1 / (2 + d) - 3 / (3 * d + 4)
        assert score(g2, (3, 3), d) == pytest.approx(expected, abs=1e-13)
        assert score(g2, (3, 3), d) < 0


def test_score_window_additivity():
    g = simulate(50, 2, DeltaProfile.constant(0.4), 30)
    for d in (-1.0, 0.0, 2.5):
        whole = score(g, (1, 50), d)
        split = score(g, (1, 20), d) + score(g, (21, 50), d)
        assert whole == pytest.approx(split, abs=1e-10)
    with pytest.raises(DomainError):
        score(g, (0, 10), 0.0)
    with pytest.raises(DomainError):
        score(g, (1, 10), -2.0)


def test_mle_no_interior_root():
    g = from_rows(3, 1, {2: [0], 3: [0]})
    fit = mle(g, 2)
    assert fit.post.status == "no_interior_root"
    assert fit.delta1_hat is None
    assert not fit.converged


def test_mle_score_at_root_small():
    g = simulate(800, 1, DeltaProfile.step(0.0, 2.0, 400), 31)
    fit = mle(g, 400)
    assert fit.converged
    assert abs(fit.pre.score_at_estimate) <= 1e-10
    assert abs(fit.post.score_at_estimate) <= 1e-10
    lo, hi = fit.post.bracket
    assert lo <= fit.delta1_hat <= hi


def test_mle_consistency_simulated():
    g = simulate(5000, 1, DeltaProfile.step(0.0, 2.0, 2500), 32)
    fit = mle(g, 2500)
    assert abs(fit.delta0_hat - 0.0) < 0.3
    assert abs(fit.delta1_hat - 2.0) < 0.5
    ci0, ci1 = fit.confidence_intervals(0.999)
    assert ci0[0] < 0.0 < ci0[1] or abs(fit.delta0_hat) < 0.2
    assert ci1[0] < 2.0 < ci1[1]


def test_mle_equal_deltas_consistent():
    g = simulate(10**4, 1, DeltaProfile.constant(1.0), 33)
    fit = mle(g, 5000)
    assert abs(fit.delta0_hat - 1.0) < 0.15
    assert abs(fit.delta1_hat - 1.0) < 0.15


def test_lr_test_examples():
    g = from_rows(3, 1, {2: [0], 3: [0]})
    v = lr_test(g, 2, 0.7, 0.7)
    assert v.statistic == pytest.approx(0.0, abs=1e-14) and not v.reject
    v2 = lr_test(g, 2, 0.0, 1.0)
    assert v2.statistic == pytest.approx(math.log(6 / 7))
    assert not v2.reject
    assert v2.mode == "known"


def test_lr_test_two_forms_same_verdict():
    rng = np.random.default_rng(34)
    for trial in range(20):
        n = int(rng.integers(10, 200))
        g = simulate(n, 1, DeltaProfile.constant(0.5), (35, trial))
        tau = int(rng.integers(1, n))
        d0, d1 = 0.2, 1.7
        tail = log_lr(g, tau, d0, d1, method="tail")
        seq = log_lr(g, tau, d0, d1, method="sequential")
        assert (tail > 0) == (seq > 0) or min(abs(tail), abs(seq)) < 1e-9


def test_plugin_statistic_consistent_with_estimates():
    g = simulate(1500, 1, DeltaProfile.step(0.0, 3.0, 1100), 36)
    verdict = plugin_lr_test(g, 1100)
    fit = mle(g, 1100)
    expected = log_lr(g, 1100, fit.delta0_hat, fit.delta1_hat)
    assert verdict.statistic == pytest.approx(expected, abs=1e-12)
    assert verdict.mode == "plugin"
    assert verdict.reject == (verdict.statistic > 0)


def test_plugin_raises_on_degenerate_window():
    g = from_rows(3, 1, {2: [0], 3: [0]})
    with pytest.raises(NoInteriorRoot) as exc:
        plugin_lr_test(g, 2)
    assert exc.value.window == "post"


def test_localize_matches_brute_force_small():
    rng = np.random.default_rng(37)
    d0, d1 = 0.5, 2.0
    for trial in range(40):
        n = int(rng.integers(2, 8))
        g = simulate(n, 1, DeltaProfile.constant(0.7), (38, trial))
        tau_hat, prof = localize_tau(g, d0, d1)
        brute = np.empty(n + 1)
        for tau in range(n + 1):
            if tau == 0:
                p = DeltaProfile.constant(d1)
            elif tau == n:
                p = DeltaProfile.constant(d0)
            else:
                p = DeltaProfile.step(d0, d1, tau)
            brute[tau] = log_likelihood(g, p).value
        assert np.max(np.abs(prof - brute)) < 1e-10
        # ties break toward the smallest tau attaining the max
        best = float(brute.max())
        smallest = int(np.flatnonzero(brute >= best - 1e-9)[0])
        assert tau_hat == smallest


def test_localize_spot_check_moderate():
    rng = np.random.default_rng(39)
    d0, d1 = 0.0, 3.0
    for trial in range(10):
        g = simulate(500, 1, DeltaProfile.step(d0, d1, 400), (40, trial))
        tau_hat, prof = localize_tau(g, d0, d1)
        spots = rng.integers(0, 501, size=25)
        for tau in spots:
            tau = int(tau)
            if tau == 0:
                p = DeltaProfile.constant(d1)
            elif tau == 500:
                p = DeltaProfile.constant(d0)
            else:
                p = DeltaProfile.step(d0, d1, tau)
            assert prof[tau] == pytest.approx(log_likelihood(g, p).value, abs=1e-10)


def test_localize_no_change_concentrates_at_boundary():
    # graph has no change; fitting a swapped pair pushes tau_hat to an edge
    # and the profile drifts monotonically in expectation
    hits = 0
    reps = 50
    drop = 0.0
    for r in range(reps):
        g = simulate(400, 1, DeltaProfile.constant(0.0), (41, r))
        tau_hat, prof = localize_tau(g, 3.0, 0.0)
        drop += (prof[0] - prof[-1]) / reps
        if tau_hat <= 40 or tau_hat >= 360:
            hits += 1
    assert hits >= 0.75 * reps
    assert drop > 0.0


def test_localize_recovers_change_point():
    g = simulate(5000, 1, DeltaProfile.step(0.0, 3.0, 4000), 42)
    tau_hat, _ = localize_tau(g, 0.0, 3.0)
    assert abs(tau_hat - 4000) <= math.log(5000) ** 3


def test_score_converges_to_its_limit():
    from pacp.theory import score_limit

    n, tau, reps = 2 * 10**4, 3 * 10**4 // 2, 20
    m, d0, d1 = 1, 0.0, 2.0
    width = n - tau
    grid = (-0.5, 0.5, 2.0, 3.5, 6.0)
    acc = np.zeros(len(grid))
    for r in range(reps):
        g = simulate(n, m, DeltaProfile.step(d0, d1, tau), (43, r))
        for j, d in enumerate(grid):
            acc[j] += score(g, (tau + 1, n), d) / width / reps
    for j, d in enumerate(grid):
        target = score_limit(d, d0, d1, m).value
        scale = max(abs(target), 0.02)
        assert abs(acc[j] - target) <= 0.05 * scale, (d, acc[j], target)
    # the limit is decreasing with its zero at d1
    vals = [score_limit(d, d0, d1, m).value for d in grid]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert abs(score_limit(d1, d0, d1, m).value) < 1e-12
