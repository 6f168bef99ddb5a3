"""CART: impurity oracles, exhaustive split search, tie-breaks, importances."""

import numpy as np
import pytest
from sklearn.tree import DecisionTreeClassifier

import htree
from htree.dtree import decision_path, extract_rules, fit, rules_in_raw_units
from htree.errors import ConfigError, DataError


def exhaustive_best_split(X, y, measure="gini", min_leaf_size=1):
    """Scan every feature and midpoint with a from-scratch gain formula.

    Ties break toward (lower feature index, lower threshold) via strict >.
    """

    def node_impurity(labels):
        n = len(labels)
        p1 = sum(labels) / n
        p0 = 1.0 - p1
        if measure == "gini":
            return 1.0 - p0 * p0 - p1 * p1
        out = 0.0
        for p in (p0, p1):
            if p > 0.0:
                out -= p * np.log2(p)
        return out

    m = len(y)
    parent = node_impurity(y)
    best = None
    for f in range(X.shape[1]):
        vals = sorted(set(X[:, f]))
        for lo, hi in zip(vals, vals[1:]):
            thr = (lo + hi) / 2.0
            left = [y[i] for i in range(m) if X[i, f] <= thr]
            right = [y[i] for i in range(m) if X[i, f] > thr]
            if len(left) < min_leaf_size or len(right) < min_leaf_size:
                continue
            gain = (
                parent
                - (len(left) / m) * node_impurity(left)
                - (len(right) / m) * node_impurity(right)
            )
            if best is None or gain > best[0]:
                best = (gain, f, thr)
    return best


class TestImpurity:
    def test_gini_hand_values(self):
        assert htree.impurity((5, 5)) == 0.5
        assert htree.impurity((10, 0)) == 0.0
        assert htree.impurity((0, 7)) == 0.0
        assert htree.impurity((3, 1)) == pytest.approx(0.375, abs=1e-15)

    def test_entropy_hand_values(self):
        assert htree.impurity((5, 5), "entropy") == 1.0
        assert htree.impurity((10, 0), "entropy") == 0.0
        assert htree.impurity((3, 1), "entropy") == pytest.approx(
            0.8112781244591328, abs=1e-12
        )

    def test_zero_total_rejected(self):
        with pytest.raises(DataError, match="zero samples"):
            htree.impurity((0, 0))

    def test_negative_counts_rejected(self):
        with pytest.raises(DataError, match="non-negative"):
            htree.impurity((-1, 2))

    def test_unknown_measure_rejected(self):
        with pytest.raises(ConfigError, match="impurity"):
            htree.impurity((1, 1), "variance")


class TestSplitGain:
    def test_perfect_split(self):
        assert htree.split_gain((5, 5), (5, 0), (0, 5)) == 0.5
        assert htree.split_gain((5, 5), (5, 0), (0, 5), "entropy") == 1.0

    def test_useless_split_gains_nothing(self):
        assert htree.split_gain((4, 4), (2, 2), (2, 2)) == pytest.approx(0.0, abs=1e-15)

    def test_children_must_sum_to_parent(self):
        with pytest.raises(DataError, match="sum"):
            htree.split_gain((5, 5), (4, 0), (0, 5))

    def test_empty_child_rejected(self):
        with pytest.raises(DataError, match="non-empty"):
            htree.split_gain((5, 5), (5, 5), (0, 0))


class TestBestSplitAgainstOracle:
    def test_root_split_matches_exhaustive_search(self):
        rng = np.random.default_rng(77)
        for trial in range(25):
            m = int(rng.integers(4, 60))
            d = int(rng.integers(1, 5))
            # low-resolution grid values force plenty of exact gain ties
            X = np.round(rng.normal(size=(m, d)) * 2.0) / 2.0
            y = rng.integers(0, 2, size=m)
            if y.min() == y.max():
                y[0] = 1 - y[0]
            measure = "gini" if trial % 2 == 0 else "entropy"
            tree = fit(X, y, htree.TreeConfig(impurity=measure, max_depth=1))
            want = exhaustive_best_split(X, y, measure)
            if want is None or want[0] <= 1e-7:
                assert tree.root.is_leaf
                continue
            assert not tree.root.is_leaf
            assert tree.root.feature_index == want[1]
            assert tree.root.threshold == want[2]

    def test_within_feature_gain_tie_takes_lower_threshold(self):
        # both candidate cuts of [1, 2, 3] / [0, 1, 0] gain exactly 1/9
        X = np.array([[1.0], [2.0], [3.0]])
        y = np.array([0, 1, 0])
        tree = fit(X, y, htree.TreeConfig(max_depth=1))
        assert tree.root.threshold == 1.5

    def test_cross_feature_gain_tie_takes_lower_index(self):
        X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
        y = np.array([0, 0, 1, 1])
        tree = fit(X, y, htree.TreeConfig(max_depth=1))
        assert tree.root.feature_index == 0
        assert tree.root.threshold == 2.5

    def test_agrees_with_sklearn_on_generic_data(self):
        # continuous draws make gain ties measure-zero, so the chosen root
        # split is unambiguous and the two implementations must coincide
        rng = np.random.default_rng(8)
        for _ in range(10):
            X = rng.normal(size=(40, 3))
            y = (X[:, 1] + 0.3 * rng.normal(size=40) > 0).astype(int)
            tree = fit(X, y, htree.TreeConfig(max_depth=1))
            ref = DecisionTreeClassifier(max_depth=1, random_state=0).fit(X, y)
            assert tree.root.feature_index == ref.tree_.feature[0]
            # sklearn stores features as float32, so thresholds agree only
            # to single precision
            assert tree.root.threshold == pytest.approx(ref.tree_.threshold[0], abs=1e-6)


class TestGrowth:
    def test_depth_limit_respected(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(200, 4))
        y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)
        for depth in (0, 1, 2, 3):
            tree = fit(X, y, htree.TreeConfig(max_depth=depth))
            assert _max_depth(tree.root) <= depth

    def test_xor_defeats_greedy_splitting(self):
        # every single cut of balanced XOR has exactly zero gain, so even a
        # deep budget yields a lone leaf
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]] * 5)
        y = np.array([0, 1, 1, 0] * 5)
        for depth in (1, 3):
            assert fit(X, y, htree.TreeConfig(max_depth=depth)).root.is_leaf

    def test_conjunction_needs_two_levels(self):
        X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]] * 5)
        y = np.array([0, 0, 0, 1] * 5)  # x0 AND x1
        shallow = fit(X, y, htree.TreeConfig(max_depth=1))
        wrong = sum(
            decision_path(shallow, row)[0] != want for row, want in zip(X[:4], y[:4])
        )
        assert wrong > 0
        deep = fit(X, y, htree.TreeConfig(max_depth=2))
        for row, want in zip(X[:4], y[:4]):
            pred, _, _ = decision_path(deep, row)
            assert pred == want

    def test_min_leaf_size_blocks_thin_children(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([1, 0, 0, 0])
        tree = fit(X, y, htree.TreeConfig(max_depth=3, min_leaf_size=2))
        # the only informative cut (0.5) strands a single row on the left
        assert tree.root.is_leaf or tree.root.threshold != 0.5

    def test_pure_node_is_a_leaf(self):
        X = np.array([[0.0], [1.0], [2.0]])
        y = np.array([1, 1, 1])
        tree = fit(X, y, htree.TreeConfig())
        assert tree.root.is_leaf
        assert tree.root.predicted_class == 1

    def test_leaf_majority_tie_predicts_zero(self):
        X = np.array([[0.0], [0.0]])
        y = np.array([0, 1])
        tree = fit(X, y, htree.TreeConfig())
        assert tree.root.is_leaf
        assert tree.root.predicted_class == 0

    def test_constant_feature_never_split(self):
        X = np.ones((10, 1))
        y = np.array([0, 1] * 5)
        tree = fit(X, y, htree.TreeConfig(max_depth=3))
        assert tree.root.is_leaf

    def test_counts_at_every_node_match_training_subset(self):
        rng = np.random.default_rng(15)
        X = rng.normal(size=(80, 3))
        y = (X[:, 0] + 0.5 * X[:, 2] > 0.2).astype(int)
        tree = fit(X, y, htree.TreeConfig(max_depth=3))

        def check(node, rows, labels):
            assert node.class_counts == (
                int((labels == 0).sum()),
                int((labels == 1).sum()),
            )
            if node.is_leaf:
                return
            mask = rows[:, node.feature_index] <= node.threshold
            check(node.left, rows[mask], labels[mask])
            check(node.right, rows[~mask], labels[~mask])

        check(tree.root, X, y)

    def test_input_validation(self):
        with pytest.raises(DataError, match="zero rows"):
            fit(np.zeros((0, 2)), np.zeros(0), htree.TreeConfig())
        with pytest.raises(DataError, match="0 or 1"):
            fit(np.zeros((2, 1)), np.array([0, 2]), htree.TreeConfig())
        with pytest.raises(DataError, match="finite"):
            fit(np.array([[np.inf]]), np.array([0]), htree.TreeConfig())
        with pytest.raises(DataError, match="length"):
            fit(np.zeros((3, 1)), np.array([0, 1]), htree.TreeConfig())

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            htree.TreeConfig(impurity="mse")
        with pytest.raises(ConfigError):
            htree.TreeConfig(max_depth=-1)
        with pytest.raises(ConfigError):
            htree.TreeConfig(min_leaf_size=0)
        with pytest.raises(ConfigError):
            htree.TreeConfig(min_gain=-0.1)


def _max_depth(node):
    if node.is_leaf:
        return node.depth
    return max(_max_depth(node.left), _max_depth(node.right))


class TestImportances:
    def test_sum_to_one_and_nonnegative(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(150, 5))
        y = (X[:, 2] - X[:, 0] > 0.1).astype(int)
        tree = fit(X, y, htree.TreeConfig(max_depth=3))
        imp = tree.feature_importances
        assert imp.shape == (5,)
        assert (imp >= 0.0).all()
        assert imp.sum() == pytest.approx(1.0, abs=1e-9)

    def test_single_split_concentrates_everything(self):
        X = np.array([[0.0, 9.0], [1.0, 9.0], [2.0, 9.0], [3.0, 9.0]])
        y = np.array([0, 0, 1, 1])
        tree = fit(X, y, htree.TreeConfig(max_depth=1))
        assert tree.feature_importances[0] == 1.0
        assert tree.feature_importances[1] == 0.0

    def test_unsplit_tree_has_all_zero_importances(self):
        X = np.ones((6, 3))
        y = np.array([0, 1, 0, 1, 0, 1])
        tree = fit(X, y, htree.TreeConfig())
        assert (tree.feature_importances == 0.0).all()

    def test_matches_recomputation_from_structure(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(120, 4))
        y = ((X[:, 0] > 0) & (X[:, 3] < 0.5)).astype(int)
        tree = fit(X, y, htree.TreeConfig(max_depth=3))

        raw = np.zeros(4)

        def walk(node):
            if node.is_leaf:
                return
            gain = htree.split_gain(
                node.class_counts, node.left.class_counts, node.right.class_counts
            )
            raw[node.feature_index] += (sum(node.class_counts) / 120) * gain
            walk(node.left)
            walk(node.right)

        walk(tree.root)
        assert np.allclose(tree.feature_importances, raw / raw.sum(), atol=1e-12)


class TestDecisionPath:
    def test_path_predicates_hold_for_the_routed_row(self):
        rng = np.random.default_rng(31)
        X = rng.normal(size=(100, 3))
        y = (X[:, 1] > 0.2).astype(int)
        tree = fit(X, y, htree.TreeConfig(max_depth=3))
        for row in X[:20]:
            pred, counts, path = decision_path(tree, row)
            for f, op, thr in path:
                if op == "<=":
                    assert row[f] <= thr
                else:
                    assert row[f] > thr
            assert pred in (0, 1)
            assert pred == (1 if counts[1] > counts[0] else 0)

    def test_width_mismatch_rejected(self):
        tree = fit(np.array([[0.0], [1.0]]), np.array([0, 1]), htree.TreeConfig())
        with pytest.raises(DataError, match="width"):
            decision_path(tree, np.array([1.0, 2.0]))


class TestRules:
    def _tree(self):
        X = np.array(
            [[0.0, 0.0], [1.0, 0.0], [2.0, 1.0], [3.0, 1.0], [4.0, 0.0], [5.0, 1.0]]
        )
        y = np.array([0, 0, 1, 1, 0, 1])
        return fit(X, y, htree.TreeConfig(max_depth=2)), X, y

    def test_one_rule_per_leaf_in_dfs_order(self):
        tree, X, y = self._tree()
        rules = extract_rules(tree, ["alpha", "beta"])
        assert len(rules) == _leaf_count(tree.root)
        # every training row satisfies exactly one rule
        for row, label in zip(X, y):
            hits = [r for r in rules if _satisfies(row, r, {"alpha": 0, "beta": 1})]
            assert len(hits) == 1

    def test_rule_counts_and_rates_consistent(self):
        tree, _, _ = self._tree()
        for rule in extract_rules(tree, ["alpha", "beta"]):
            total = sum(rule.leaf_counts)
            assert rule.leaf_success_rate == rule.leaf_counts[1] / total

    def test_name_count_must_match(self):
        tree, _, _ = self._tree()
        with pytest.raises(DataError, match="names"):
            extract_rules(tree, ["only_one"])

    def test_raw_unit_conversion(self):
        rule = htree.Rule(
            predicates=(("alpha", "<=", 1.5), ("beta", ">", -0.5)),
            leaf_counts=(3, 1),
            leaf_success_rate=0.25,
        )
        stats = htree.StandardizationStats(
            means=np.array([10.0, 4.0]),
            stddevs=np.array([2.0, 0.5]),
            constant_mask=np.array([False, False]),
        )
        (raw,) = rules_in_raw_units([rule], ["alpha", "beta"], stats)
        assert raw.predicates[0] == ("alpha", "<=", 13.0)
        assert raw.predicates[1] == ("beta", ">", 3.75)
        assert raw.leaf_counts == rule.leaf_counts

    def test_rule_dict_round_trip(self):
        rule = htree.Rule(
            predicates=(("f0", "<=", 0.25),), leaf_counts=(2, 6), leaf_success_rate=0.75
        )
        assert htree.Rule.from_dict(rule.to_dict()) == rule


def _leaf_count(node):
    if node.is_leaf:
        return 1
    return _leaf_count(node.left) + _leaf_count(node.right)


def _satisfies(row, rule, index):
    for name, op, thr in rule.predicates:
        v = row[index[name]]
        if op == "<=" and not v <= thr:
            return False
        if op == ">" and not v > thr:
            return False
    return True


class TestSerialization:
    def test_tree_dict_round_trip_preserves_predictions(self):
        rng = np.random.default_rng(44)
        X = rng.normal(size=(90, 4))
        y = (X[:, 0] * X[:, 1] > 0).astype(int)
        tree = fit(X, y, htree.TreeConfig(max_depth=3))
        back = htree.DecisionTree.from_dict(tree.to_dict())
        assert back == tree
        for row in X[:15]:
            assert decision_path(back, row) == decision_path(tree, row)
