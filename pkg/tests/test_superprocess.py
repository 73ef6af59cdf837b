import math

import numpy as np
import pytest

from snakelab import superprocess as sp
from snakelab.excursion import StepBudgetExceeded, n_excursions, reflected_walk_until_local_time
from snakelab.upcross import count_components_above, count_upcrossings
from oracles import excursion_hit_probability


def test_forest_structure():
    f = sp.simulate_forest(0.3, 1e-3, seed=4)
    k = n_excursions(0.3, 1e-3)
    assert len(f.excursions) == k
    assert f.local_time == pytest.approx(2 * math.sqrt(1e-3) * k)
    for s in f.excursions:
        assert s.head_labels[0] == 0 and s.head_labels[-1] == 0
        assert s.contour.is_valid() and s.snake_property_violations() == 0
    assert f.duration == pytest.approx(f.tau * sum(s.length for s in f.excursions))
    # same contour as the reflected path of the same seed
    p = reflected_walk_until_local_time(0.3, 1e-3, seed=4)
    np.testing.assert_array_equal(np.concatenate([s.steps for s in f.excursions]), p.steps)
    assert [e.length for e in p.excursions()] == [s.length for s in f.excursions]


def test_forest_deterministic():
    a = sp.simulate_forest(0.2, 1e-3, seed=9)
    b = sp.simulate_forest(0.2, 1e-3, seed=9)
    assert all(x == y for x, y in zip(a.excursions, b.excursions))


def test_forest_budget():
    with pytest.raises(StepBudgetExceeded):
        sp.simulate_forest(3.0, 1e-4, seed=0, max_steps=100)


def test_counts_and_streams_agree():
    tau = 1e-4
    for seed in range(6):
        f = sp.simulate_forest(0.2, tau, seed=seed)
        eps = [0.2, 0.1, 0.05]
        res = sp.stream_upcross(0.2, tau, 0.1, eps, [0.02, 0.05], seed=seed)
        assert res.values.tolist() == [sp.count_script_N(f, 0.1, e) for e in eps]
        assert res.values.tolist() == [sum(count_components_above(s, 0.1, e) for s in f.excursions)
                                       for e in eps]
        assert res.extra.tolist() == [sp.sbm_local_time(f, 0.1, w).value for w in (0.02, 0.05)]
        assert res.steps == f.n_steps
        fr = sp.stream_fresh(0.2, tau, eps, seed=seed, prune=False)
        assert fr.values.tolist() == [sp.count_M(f, e) for e in eps]
        assert fr.steps == f.n_steps


def test_pruning_preserves_law():
    # a cap of 1e9 steps is exceeded with probability ~1e-4 per forest here
    tau = 1e-3
    eps = [0.4, 0.2]
    reps = 1500
    kw = dict(max_steps=10**9, redraw=True)
    a = np.array([sp.stream_fresh(0.3, tau, eps, seed=s, prune=True, **kw).values for s in range(reps)])
    b = np.array([sp.stream_fresh(0.3, tau, eps, seed=10**6 + s, prune=False, **kw).values
                  for s in range(reps)])
    for j in range(2):
        se = math.sqrt(a[:, j].var(ddof=1) / reps + b[:, j].var(ddof=1) / reps)
        assert abs(a[:, j].mean() - b[:, j].mean()) < 3.5 * se


def test_zero_when_nothing_reaches():
    f = sp.simulate_forest(0.05, 1e-3, seed=1)
    top = max(s.head_labels.max() for s in f.excursions)
    assert sp.count_M(f, top + 0.1) == 0
    assert sp.count_script_N(f, top + 0.1, 0.1) == 0
    assert sp.sbm_local_time(f, top + 1.0, 0.1).value == 0
    with pytest.raises(ValueError):
        sp.count_script_N(f, 0.0, 0.1)


def test_local_time_integrates_to_duration():
    f = sp.simulate_forest(0.3, 1e-3, seed=2)
    w = 0.01
    labels = np.concatenate([s.head_labels for s in f.excursions])
    hs = labels.min() - 0.37 * w + 2 * w * np.arange(int((labels.max() - labels.min()) / (2 * w)) + 3)
    total = sum(2 * w * sp.sbm_local_time(f, h, w).value for h in hs)
    assert total == pytest.approx(f.duration, rel=1e-9)


def test_stream_hits_against_exact_discrete_rate():
    tau = 1e-3
    levels = [0.5, 1.0]
    reps = 1500
    c = np.array([sp.stream_hits(1.0, tau, levels, seed=s).values for s in range(reps)])
    k = n_excursions(1.0, tau)
    for j, h in enumerate(levels):
        target = k * excursion_hit_probability(tau, h)
        se = c[:, j].std(ddof=1) / math.sqrt(reps)
        assert abs(c[:, j].mean() - target) < 3 * se


def test_stream_budget_and_redraw():
    with pytest.raises(StepBudgetExceeded):
        sp.stream_upcross(2.0, 1e-4, 0.5, [0.1], [0.05], seed=3, max_steps=50)
    r = sp.stream_upcross(0.5, 1e-3, 0.5, [0.1], [0.05], seed=3, max_steps=5000, redraw=True)
    assert r.steps <= 5000
    with pytest.raises(StepBudgetExceeded):
        sp.stream_hits(2.0, 1e-4, [0.5], seed=0, max_steps=10, redraw=True, max_redraws=3)


def test_stream_validation():
    with pytest.raises(ValueError):
        sp.stream_upcross(1.0, 1e-3, 0.0, [0.1], [0.1])
    with pytest.raises(ValueError):
        sp.stream_hits(1.0, 1e-3, [-0.5])
    with pytest.raises(ValueError):
        sp.stream_fresh(1.0, 1e-3, [0.0])


def test_conditioned_fresh_stream():
    r = sp.stream_conditioned_fresh(0.5, 1e-3, seed=1)
    assert r.values[0] >= 1 and r.extra[0] >= 1
    assert sp.stream_conditioned_fresh(0.5, 1e-3, seed=1).values == r.values


def test_count_M_scaling_with_eps():
    # doubling eps quarters the mean, up to discretization at this coarse tau
    tau = 1e-5
    reps = 400
    m = np.array([sp.stream_fresh(1.0, tau, [1.0, 0.5], seed=s).values for s in range(reps)])
    r = m[:, 1].mean() / m[:, 0].mean()
    assert 2.5 < r < 5.0


def test_upcross_per_excursion_identity():
    f = sp.simulate_forest(0.5, 1e-4, seed=11)
    for s in f.excursions:
        for h in (0.05, 0.2):
            assert count_upcrossings(s, h, 0.1).count == count_components_above(s, h, 0.1)
