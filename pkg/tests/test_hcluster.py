"""Ward linkage: hand-traced merges, a centroid-formula oracle, scipy cross-checks."""

import numpy as np
import pytest
import scipy.cluster.hierarchy as sch
from sklearn.metrics import adjusted_rand_score

import htree
from htree.errors import DataError
from htree.hcluster import LinkageStep, _full_linkage


def reference_linkage(X):
    """Ward merges recomputed from scratch via the centroid formula.

    d2(A, B) = 2 |A||B| / (|A|+|B|) * ||cA - cB||^2, evaluated fresh each
    step with no recurrence, so it shares nothing with the production path
    beyond the tie-break contract (smallest (id_a, id_b) pair wins).
    """
    n = X.shape[0]
    clusters = {i: [i] for i in range(n)}
    steps = []
    for step in range(n - 1):
        best = None
        live = sorted(clusters)
        for ai in range(len(live)):
            for bi in range(ai + 1, len(live)):
                a, b = live[ai], live[bi]
                ca = X[clusters[a]].mean(axis=0)
                cb = X[clusters[b]].mean(axis=0)
                na, nb = len(clusters[a]), len(clusters[b])
                diff = ca - cb
                d2 = 2.0 * na * nb / (na + nb) * float(diff @ diff)
                key = (d2, a, b)
                if best is None or key < best:
                    best = key
        d2, a, b = best
        merged = clusters.pop(a) + clusters.pop(b)
        clusters[n + step] = merged
        steps.append((a, b, np.sqrt(d2), len(merged)))
    return steps


class TestLinkageTrace:
    def test_two_pairs_on_a_line(self):
        # points 0, 1, 10, 11: pairs merge at distance 1, then the pair of
        # pairs at sqrt(2*2*2/4 * 10^2) = sqrt(200)
        X = np.array([[0.0], [1.0], [10.0], [11.0]])
        steps = _full_linkage(X)
        assert [(s.merged_a, s.merged_b, s.new_size) for s in steps] == [
            (0, 1, 2),
            (2, 3, 2),
            (4, 5, 4),
        ]
        assert steps[0].distance == 1.0
        assert steps[1].distance == 1.0
        assert steps[2].distance == pytest.approx(np.sqrt(200.0), abs=1e-9)

    def test_tie_break_prefers_smallest_id_pair(self):
        # three congruent pairs tie at distance 1 each round; the lowest
        # (id_a, id_b) tuple must win every time
        X = np.array([[200.0], [201.0], [0.0], [1.0], [100.0], [101.0]])
        steps = _full_linkage(X)
        assert (steps[0].merged_a, steps[0].merged_b) == (0, 1)
        assert (steps[1].merged_a, steps[1].merged_b) == (2, 3)
        assert (steps[2].merged_a, steps[2].merged_b) == (4, 5)

    def test_matches_centroid_formula_oracle(self):
        rng = np.random.default_rng(314)
        for trial in range(10):
            n = int(rng.integers(5, 30))
            d = int(rng.integers(1, 5))
            X = rng.normal(size=(n, d))
            ours = _full_linkage(X)
            theirs = reference_linkage(X)
            for got, want in zip(ours, theirs):
                assert (got.merged_a, got.merged_b, got.new_size) == (
                    want[0],
                    want[1],
                    want[3],
                )
                assert got.distance == pytest.approx(want[2], rel=1e-9, abs=1e-9)

    def test_heights_monotone_nondecreasing(self):
        rng = np.random.default_rng(99)
        X = rng.normal(size=(120, 4))
        steps = _full_linkage(X)
        heights = [s.distance for s in steps]
        assert all(b >= a for a, b in zip(heights, heights[1:]))

    def test_matches_scipy_heights(self):
        # merge order can differ under ties, but generic data has none and
        # the sorted height sequence is a dendrogram invariant
        rng = np.random.default_rng(7)
        X = rng.normal(size=(60, 3))
        ours = sorted(s.distance for s in _full_linkage(X))
        scipy_heights = sorted(sch.linkage(X, method="ward")[:, 2])
        assert np.allclose(ours, scipy_heights, rtol=1e-8, atol=1e-10)


class TestCut:
    def test_labels_ordered_by_size_then_first_row(self):
        rng = np.random.default_rng(5)
        small = rng.normal(size=(4, 2)) * 0.05 + [50.0, 0.0]
        big = rng.normal(size=(12, 2)) * 0.05
        X = np.vstack([small, big])
        model = htree.cluster(X, k=2)
        assert model.member_counts == (12, 4)
        assert (model.assignments[:4] == 1).all()
        assert (model.assignments[4:] == 0).all()

    def test_size_tie_goes_to_earlier_row(self):
        X = np.array([[10.0], [10.5], [0.0], [0.5]])
        model = htree.cluster(X, k=2)
        # both clusters have 2 members; the one containing row 0 is label 0
        assert model.assignments.tolist() == [0, 0, 1, 1]

    def test_centroids_are_member_means(self):
        rng = np.random.default_rng(21)
        X = rng.normal(size=(40, 3))
        model = htree.cluster(X, k=4)
        for label in range(4):
            members = X[model.assignments == label]
            assert np.allclose(model.centroids[label], members.mean(axis=0), atol=1e-12)
            assert len(members) == model.member_counts[label]

    def test_k_equals_n_and_k_equals_one(self):
        X = np.array([[0.0], [5.0], [9.0]])
        singletons = htree.cluster(X, k=3)
        assert singletons.member_counts == (1, 1, 1)
        assert sorted(singletons.assignments.tolist()) == [0, 1, 2]
        lumped = htree.cluster(X, k=1)
        assert lumped.member_counts == (3,)
        assert (lumped.assignments == 0).all()

    def test_agrees_with_scipy_cut(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(80, 4)) + rng.integers(0, 4, size=(80, 1)) * 8.0
        for k in (2, 3, 5):
            ours = htree.cluster(X, k=k).assignments
            theirs = sch.fcluster(sch.linkage(X, method="ward"), k, criterion="maxclust")
            assert htree.adjusted_rand_index(ours, theirs) == pytest.approx(1.0)

    def test_input_validation(self):
        X = np.zeros((3, 2))
        with pytest.raises(DataError, match="positive"):
            htree.cluster(X, k=0)
        with pytest.raises(DataError, match="exceeds"):
            htree.cluster(X, k=4)
        with pytest.raises(DataError, match="finite"):
            htree.cluster(np.array([[0.0], [np.nan]]), k=1)
        with pytest.raises(DataError, match="2-d"):
            htree.cluster(np.zeros(3), k=1)
        with pytest.raises(DataError, match="empty"):
            htree.cluster(np.zeros((0, 2)), k=1)

    def test_model_dict_round_trip(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(15, 2))
        model = htree.cluster(X, k=3)
        back = htree.ClusterModel.from_dict(model.to_dict())
        assert back == model


class TestNearestCluster:
    def test_picks_closest_centroid(self):
        model = htree.ClusterModel(
            n_main_clusters=2,
            assignments=np.array([0, 0, 1]),
            centroids=np.array([[0.0, 0.0], [10.0, 0.0]]),
            member_counts=(2, 1),
            linkage=(),
        )
        label, dist = htree.nearest_cluster(np.array([9.0, 0.0]), model)
        assert label == 1
        assert dist == pytest.approx(1.0)

    def test_distance_tie_resolves_to_lowest_label(self):
        model = htree.ClusterModel(
            n_main_clusters=2,
            assignments=np.array([0, 1]),
            centroids=np.array([[-1.0, 0.0], [1.0, 0.0]]),
            member_counts=(1, 1),
            linkage=(),
        )
        label, dist = htree.nearest_cluster(np.array([0.0, 0.0]), model)
        assert label == 0
        assert dist == pytest.approx(1.0)

    def test_width_mismatch_rejected(self):
        model = htree.ClusterModel(
            n_main_clusters=1,
            assignments=np.array([0]),
            centroids=np.array([[0.0, 0.0]]),
            member_counts=(1,),
            linkage=(),
        )
        with pytest.raises(DataError, match="width"):
            htree.nearest_cluster(np.array([1.0, 2.0, 3.0]), model)


class TestAdjustedRandIndex:
    def test_identical_partitions(self):
        assert htree.adjusted_rand_index([0, 0, 1, 1, 2], [0, 0, 1, 1, 2]) == 1.0

    def test_relabeled_partition_still_perfect(self):
        assert htree.adjusted_rand_index([0, 0, 1, 1], [7, 7, 3, 3]) == 1.0

    def test_hand_computed_value(self):
        # contingency [[1,1],[0,2]]: index 1, expected 1, max 2.5 -> ARI 0
        assert htree.adjusted_rand_index([0, 0, 1, 1], [0, 1, 1, 1]) == 0.0

    def test_single_cluster_both_sides(self):
        assert htree.adjusted_rand_index([0, 0, 0], [5, 5, 5]) == 1.0

    def test_matches_sklearn_on_random_partitions(self):
        rng = np.random.default_rng(123)
        for _ in range(20):
            n = int(rng.integers(5, 200))
            a = rng.integers(0, rng.integers(1, 8), size=n)
            b = rng.integers(0, rng.integers(1, 8), size=n)
            ours = htree.adjusted_rand_index(a, b)
            theirs = adjusted_rand_score(a, b)
            assert ours == pytest.approx(theirs, abs=1e-12)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DataError, match="same number"):
            htree.adjusted_rand_index([0, 1], [0, 1, 2])

    def test_empty_rejected(self):
        with pytest.raises(DataError, match="empty"):
            htree.adjusted_rand_index([], [])


class TestLinkageStep:
    def test_dict_round_trip(self):
        step = LinkageStep(merged_a=3, merged_b=9, distance=1.25, new_size=4)
        assert LinkageStep.from_dict(step.to_dict()) == step
