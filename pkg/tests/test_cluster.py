from hypothesis import given, settings, strategies as st

from solvers.cluster import greedy_cluster, greedy_cluster_by_radius


@st.composite
def ball_systems(draw):
    m = draw(st.integers(1, 8))
    n = draw(st.integers(0, 10))
    balls = [frozenset(draw(st.sets(st.integers(0, m - 1), min_size=1, max_size=m))) for _ in range(n)]
    priority = draw(st.lists(st.integers(-3, 3), min_size=n, max_size=n))
    return balls, priority


@settings(deadline=None, max_examples=300)
@given(ball_systems())
def test_greedy_cluster_properties(system):
    balls, priority = system
    clustering = greedy_cluster(balls, range(len(balls)), priority)
    reps = clustering.representatives

    for a in reps:
        for b in reps:
            if a != b:
                assert balls[a].isdisjoint(balls[b])
    assert set(clustering.assignment) == set(range(len(balls)))
    for j, rep in clustering.assignment.items():
        assert rep in reps
        assert not balls[j].isdisjoint(balls[rep])
        assert priority[rep] >= priority[j]


def test_ties_pick_smallest_index():
    balls = [frozenset({0}), frozenset({0, 1}), frozenset({1})]
    clustering = greedy_cluster(balls, [2, 1, 0], [1, 1, 1])
    assert clustering.representatives == (0, 2)
    assert clustering.assignment == {0: 0, 1: 0, 2: 2}


def test_cluster_weights_sum_members():
    balls = [frozenset({0}), frozenset({0}), frozenset({1})]
    clustering = greedy_cluster(balls, range(3), [0, 0, 0])
    assert clustering.weights([1.5, 2.0, 4.0]) == {0: 3.5, 2: 4.0}
    assert clustering.members(0) == [0, 1]


def test_radius_clustering_prefers_small_radii():
    balls = [frozenset({0, 1}), frozenset({1})]
    clustering = greedy_cluster_by_radius(balls, range(2), [5.0, 1.0])
    assert clustering.representatives == (1,)
    assert clustering.assignment == {0: 1, 1: 1}


def test_empty_client_set():
    clustering = greedy_cluster([], [], [])
    assert clustering.representatives == ()
    assert clustering.assignment == {}
