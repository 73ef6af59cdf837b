import math
from collections import Counter

import numpy as np
import pytest

from snakelab import excursion as ex
from oracles import dyck_paths, excursion_hit_probability


def test_two_step_path():
    e = ex.dyck_excursion(2, seed=3)
    assert e.steps.tolist() == [1, -1]
    assert e.max_height == e.height_step == math.sqrt(0.5)


def test_four_step_max_height_frequency():
    n = 20_000
    tall = sum(ex.dyck_excursion(4, seed=s).walk().max() == 2 for s in range(n))
    se = math.sqrt(0.25 / n)
    assert abs(tall / n - 0.5) < 3 * se


def test_six_step_uniformity():
    n = 100_000
    paths = set(dyck_paths(6))
    assert len(paths) == 5
    freq = Counter(tuple(ex.dyck_excursion(6, seed=s).steps.tolist()) for s in range(n))
    assert set(freq) == paths
    se = math.sqrt(0.2 * 0.8 / n)
    for p in paths:
        assert abs(freq[p] / n - 0.2) < 3 * se


def test_normalized_duration():
    e = ex.dyck_excursion(10**6, tau=1e-6, seed=1)
    assert e.sigma == 1.0
    assert e.length == 10**6
    assert e.is_valid()
    e2 = ex.dyck_excursion(1000, seed=1)
    assert e2.tau == 1e-3 and e2.sigma == 1.0


@pytest.mark.parametrize("n", [0, -2, 3, 7, 2.5])
def test_rejects_bad_lengths(n):
    with pytest.raises(ValueError):
        ex.dyck_excursion(n)


def test_rejects_bad_tau():
    with pytest.raises(ValueError):
        ex.dyck_excursion(4, tau=0.0)


def test_every_sample_is_a_dyck_path():
    for s in range(300):
        n = 2 * (1 + s % 60)
        e = ex.dyck_excursion(n, seed=s)
        assert e.is_valid()
        w = e.walk()
        assert w[0] == 0 and w[-1] == 0 and w.min() == 0
        np.testing.assert_allclose(e.heights(), w * e.height_step)


def test_deterministic():
    a = ex.dyck_excursion(5000, seed=99)
    b = ex.dyck_excursion(5000, seed=99)
    c = ex.dyck_excursion(5000, seed=100)
    assert a == b and a != c
    assert a.steps.tobytes() == b.steps.tobytes()


def test_steps_are_read_only():
    e = ex.dyck_excursion(10, seed=0)
    with pytest.raises(ValueError):
        e.steps[0] = -1


def test_n_excursions_boundaries():
    assert ex.n_excursions(0.01, 1e-2) == 1
    assert ex.n_excursions(1.0, 1e-6) == 501
    # exact multiples must still exceed r
    for r, tau in [(0.2, 1e-2), (1.0, 1e-4), (0.6, 0.0009)]:
        k = ex.n_excursions(r, tau)
        assert 2 * k * math.sqrt(tau) > r >= 2 * (k - 1) * math.sqrt(tau) - 1e-15


def test_reflected_walk_single_excursion():
    p = ex.reflected_walk_until_local_time(0.1, 1e-2, seed=5)
    assert len(p.local_time_marks) == 1
    assert p.local_time == pytest.approx(2 * p.height_step)


def test_reflected_walk_invariants():
    p = ex.reflected_walk_until_local_time(0.5, 1e-3, seed=2)
    w = np.concatenate([[0], np.cumsum(p.steps)])
    assert w.min() == 0 and w[-1] == 0
    lt = p.local_time_marks["local_time"]
    assert np.all(np.diff(lt) > 0) and lt[-1] > p.target_local_time
    np.testing.assert_allclose(np.diff(lt), 2 * p.height_step)
    zeros = np.flatnonzero(w[1:] == 0) + 1
    np.testing.assert_array_equal(zeros, p.local_time_marks["index"])
    for exc in p.excursions():
        assert exc.is_valid()
        assert exc.walk()[1:-1].min() > 0 if exc.length > 2 else True
    assert p.duration == pytest.approx(p.length * p.tau)


def test_reflected_walk_budget():
    with pytest.raises(ex.StepBudgetExceeded):
        ex.reflected_walk_until_local_time(5.0, 1e-4, seed=1, max_steps=1000)


def test_gamblers_ruin_heights():
    tau = 1e-2
    reps = 400
    k = ex.n_excursions(1.0, tau)
    eps = [0.1, 0.2, 0.3, 0.5]
    tot = np.sum([ex.count_high_excursions(1.0, tau, eps, seed=s) for s in range(reps)], axis=0)
    n = k * reps
    assert tot[0] == n
    for m, t in zip((2, 3, 5), tot[1:]):
        se = math.sqrt(n * (1 / m) * (1 - 1 / m))
        assert abs(t - n / m) < 3 * se


def test_poisson_count_mean():
    reps = 2000
    c = np.array([ex.count_high_excursions(1.0, 1e-6, 0.5, seed=s)[0] for s in range(reps)])
    se = c.std(ddof=1) / math.sqrt(reps)
    assert abs(c.mean() - 1.0) < 3 * se


def test_conditioned_hit_reaches_level():
    for s in range(30):
        sn = ex.excursion_conditioned_hit(0.5, 1e-3, seed=s)
        assert sn.head_labels.max() >= 0.5
        assert sn.contour.is_valid()
        assert sn.head_labels[0] == sn.head_labels[-1] == 0
        assert sn.snake_property_violations() == 0
    for s in range(10):
        assert ex.excursion_conditioned_hit(-0.5, 1e-3, seed=s).head_labels.min() <= -0.5


def test_conditioned_hit_errors():
    with pytest.raises(ValueError):
        ex.excursion_conditioned_hit(0.0, 1e-3)
    with pytest.raises(ex.AttemptCapExceeded):
        ex.excursion_conditioned_hit(50.0, 1e-2, seed=0, max_attempts=5)
    with pytest.raises(ex.StepBudgetExceeded):
        ex.excursion_conditioned_hit(50.0, 1e-4, seed=0, max_steps=1000)


def test_conditioned_hit_deterministic():
    a = ex.excursion_conditioned_hit(0.7, 1e-3, seed=8)
    b = ex.excursion_conditioned_hit(0.7, 1e-3, seed=8)
    assert a == b


def test_attempts_match_discrete_hitting_oracle():
    # attempts until the first hit are geometric with the exact per-excursion
    # hit probability
    from snakelab import _kernels
    from snakelab.seeding import kernel_seed
    tau = 1e-2
    sd = tau ** 0.25
    for h in (1.0, 2.0):
        p = excursion_hit_probability(tau, h)
        att = np.array([_kernels.conditioned_fresh(kernel_seed(s), sd, h, 10**7, 10**9)[1]
                        for s in range(1500)])
        se = att.std(ddof=1) / math.sqrt(att.size)
        assert abs(att.mean() - 1 / p) < 3 * se


def test_hit_ratio_approaches_inverse_square():
    # discarded-excursion counts scale as 1/p(h); p(1)/p(2) -> 4 as tau -> 0
    r = [excursion_hit_probability(t, 1.0) / excursion_hit_probability(t, 2.0) for t in (1e-2, 1e-3, 1e-4)]
    assert all(abs(b - 4) < abs(a - 4) for a, b in zip(r, r[1:]))
    assert all(x < 4 for x in r)
    # the gap shrinks by more than half over two decades of tau
    assert 4 - r[-1] < 0.5 * (4 - r[0])
