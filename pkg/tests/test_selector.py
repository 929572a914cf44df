import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from hullscope.errors import ConfigError, DataError
from hullscope.geometry import directed_hull_distance
from hullscope.sampler import SamplerConfig, sample_cloud
from hullscope.selector import SelectorConfig, greedy_select, naive_greedy, pick_first


def test_pick_first():
    assert pick_first(np.array([[0.0, 0.0], [2.0, 0.0]]), [0.0, 0.0]) == 1
    assert pick_first(np.array([[-1.0, 0.0], [1.0, 0.0]]), [0.0, 0.0]) == 0
    with pytest.raises(DataError):
        pick_first(np.empty((0, 2)), [0.0, 0.0])


def test_pick_first_on_example_cloud(ex1_spec):
    cloud = sample_cloud(ex1_spec.model, ex1_spec, SamplerConfig(m=50))
    i = pick_first(cloud, ex1_spec.beta_star)
    dist = np.linalg.norm(cloud.betas - ex1_spec.beta_star, axis=1)
    assert np.all(dist[i] >= dist)


@pytest.mark.parametrize("select", [greedy_select, naive_greedy])
def test_collinear_hand_example(select):
    cloud = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    res = select(cloud, 0, SelectorConfig(k=3))
    assert res.selected == [0, 2, 1]
    assert res.step_distance == pytest.approx([2.0, 0.0])
    assert res.status == "ok"


def test_k_one():
    res = greedy_select(np.random.default_rng(0).normal(size=(5, 2)), 3, SelectorConfig(k=1))
    assert res.selected == [3] and res.step_distance == [] and res.eval_count == []


def test_naive_counts():
    cloud = np.random.default_rng(1).normal(size=(100, 60))
    res = naive_greedy(cloud, 0, SelectorConfig(k=50))
    assert res.eval_count == [100 - i for i in range(1, 50)]
    assert sum(res.eval_count) == 3675
    # with the closing pass that measures the finished selection
    assert sum(res.eval_count) + res.final_evals == 3725


def trial_clouds(n_trials, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(n_trials):
        yield rng.normal(size=(50, 5))


def test_lazy_equals_naive_random_clouds():
    strict = 0
    for cloud in trial_clouds(200):
        first = pick_first(cloud, np.zeros(5))
        cfg = SelectorConfig(k=10)
        lazy = greedy_select(cloud, first, cfg)
        ref = naive_greedy(cloud, first, cfg)
        assert lazy.selected == ref.selected
        assert lazy.step_distance == pytest.approx(ref.step_distance, abs=1e-9)
        assert lazy.total_evals <= ref.total_evals
        strict += lazy.total_evals < ref.total_evals
    assert strict == 200


@settings(max_examples=40, deadline=None)
@given(
    cloud=hnp.arrays(
        np.float64,
        st.tuples(st.integers(3, 25), st.integers(1, 4)),
        elements=st.integers(-3, 3).map(float),
    ),
    k=st.integers(1, 8),
)
def test_lazy_equals_naive_with_duplicates_and_ties(cloud, k):
    # small integer grids force exact ties, duplicates and covered points
    cfg = SelectorConfig(k=k)
    lazy = greedy_select(cloud, 0, cfg)
    ref = naive_greedy(cloud, 0, cfg)
    assert lazy.selected == ref.selected
    assert lazy.status == ref.status
    assert len(set(lazy.selected)) == len(lazy.selected)
    assert lazy.total_evals <= ref.total_evals


def test_step_distance_and_final_distance():
    rng = np.random.default_rng(3)
    for _ in range(10):
        cloud = rng.normal(size=(80, 4))
        res = greedy_select(cloud, 0, SelectorConfig(k=12))
        steps = np.array(res.step_distance)
        assert np.all(np.diff(steps) <= 1e-9)
        d, _ = directed_hull_distance(cloud, cloud[res.selected])
        assert abs(res.final_distance - d) <= 2e-9
        remaining = len(cloud) - 1
        for c in res.eval_count:
            assert 1 <= c <= remaining
            remaining -= 1


def test_keys_are_upper_bounds():
    rng = np.random.default_rng(4)
    cloud = rng.normal(size=(120, 3))
    res = greedy_select(cloud, 0, SelectorConfig(k=15, trace=True))
    assert res.trace
    for _size, _i, key, d in res.trace:
        assert key >= d - 1e-12


def test_exhausted_cloud():
    cloud = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [1.0, 1.0]])
    for select in (greedy_select, naive_greedy):
        res = select(cloud, 0, SelectorConfig(k=4))
        assert res.selected == [0, 1]
        assert res.status == "exhausted"


def test_covered_points_still_selectable():
    # the midpoint is inside the hull of the two ends; k = 3 still picks it
    cloud = np.array([[0.0], [2.0], [1.0]])
    for select in (greedy_select, naive_greedy):
        res = select(cloud, 0, SelectorConfig(k=3))
        assert res.selected == [0, 1, 2]
        assert res.step_distance[-1] == 0.0


def test_bad_arguments():
    with pytest.raises(ConfigError):
        SelectorConfig(k=0)
    with pytest.raises(DataError):
        greedy_select(np.zeros((3, 2)), 5, SelectorConfig(k=2))
