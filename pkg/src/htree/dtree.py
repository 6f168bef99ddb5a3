"""Depth-limited binary CART for two-class labels.

Candidate thresholds are midpoints between consecutive distinct sorted
values. The accepted split maximizes impurity gain with ties broken toward
the lower feature index, then the lower threshold. Gains are computed as
G(parent) - (Nl/N) * G(left) - (Nr/N) * G(right) in exactly that grouping
so results are bit-reproducible against an independent re-evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .tabular import StandardizationStats

MEASURE_GINI = "gini"
MEASURE_ENTROPY = "entropy"
_VALID_MEASURES = (MEASURE_GINI, MEASURE_ENTROPY)

MIN_GAIN_DEFAULT = 1e-7


@dataclass(frozen=True)
class TreeConfig:
    impurity: str = MEASURE_GINI
    max_depth: int = 3
    min_leaf_size: int = 1
    min_gain: float = MIN_GAIN_DEFAULT

    def __post_init__(self):
        if self.impurity not in _VALID_MEASURES:
            raise ConfigError(f"unknown impurity measure '{self.impurity}'")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be non-negative")
        if self.min_leaf_size < 1:
            raise ConfigError("min_leaf_size must be at least 1")
        if self.min_gain < 0:
            raise ConfigError("min_gain must be non-negative")

    def to_dict(self) -> dict:
        return {
            "impurity": self.impurity,
            "max_depth": self.max_depth,
            "min_leaf_size": self.min_leaf_size,
            "min_gain": self.min_gain,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeConfig":
        return cls(**d)


def impurity(class_counts, measure: str = MEASURE_GINI) -> float:
    """Gini or entropy (bits) of a two-class count pair; 0 * log(0) is 0."""
    if measure not in _VALID_MEASURES:
        raise ConfigError(f"unknown impurity measure '{measure}'")
    c0, c1 = int(class_counts[0]), int(class_counts[1])
    if c0 < 0 or c1 < 0:
        raise DataError("class counts must be non-negative")
    total = c0 + c1
    if total == 0:
        raise DataError("impurity undefined for zero samples")
    p0 = c0 / total
    p1 = c1 / total
    if measure == MEASURE_GINI:
        return 1.0 - p0 * p0 - p1 * p1
    out = 0.0
    if p0 > 0.0:
        out -= p0 * np.log2(p0)
    if p1 > 0.0:
        out -= p1 * np.log2(p1)
    return float(out)


def split_gain(parent_counts, left_counts, right_counts, measure: str = MEASURE_GINI) -> float:
    """Impurity decrease of a split: G(parent) - (Nl/N) G(left) - (Nr/N) G(right)."""
    pl = (int(left_counts[0]), int(left_counts[1]))
    pr = (int(right_counts[0]), int(right_counts[1]))
    pp = (int(parent_counts[0]), int(parent_counts[1]))
    if pl[0] + pr[0] != pp[0] or pl[1] + pr[1] != pp[1]:
        raise DataError("child class counts must sum to the parent's")
    n = pp[0] + pp[1]
    nl = pl[0] + pl[1]
    nr = pr[0] + pr[1]
    if nl == 0 or nr == 0:
        raise DataError("split children must both be non-empty")
    return (
        impurity(pp, measure)
        - (nl / n) * impurity(pl, measure)
        - (nr / n) * impurity(pr, measure)
    )


@dataclass
class TreeNode:
    """One node; internal nodes carry a split, leaves a predicted class."""

    class_counts: tuple[int, int]
    depth: int
    feature_index: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    predicted_class: int | None = None

    @property
    def is_leaf(self) -> bool:
        return self.feature_index is None

    def to_dict(self) -> dict:
        d = {"class_counts": list(self.class_counts), "depth": self.depth}
        if self.is_leaf:
            d["predicted_class"] = self.predicted_class
        else:
            d["feature_index"] = self.feature_index
            d["threshold"] = self.threshold
            d["left"] = self.left.to_dict()
            d["right"] = self.right.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        counts = (int(d["class_counts"][0]), int(d["class_counts"][1]))
        if "feature_index" in d:
            return cls(
                class_counts=counts,
                depth=int(d["depth"]),
                feature_index=int(d["feature_index"]),
                threshold=float(d["threshold"]),
                left=cls.from_dict(d["left"]),
                right=cls.from_dict(d["right"]),
            )
        return cls(
            class_counts=counts,
            depth=int(d["depth"]),
            predicted_class=int(d["predicted_class"]),
        )


@dataclass(eq=False)
class DecisionTree:
    root: TreeNode
    config: TreeConfig
    n_train: int
    feature_importances: np.ndarray

    def __post_init__(self):
        self.feature_importances = np.asarray(self.feature_importances, dtype=float)

    @property
    def n_features(self) -> int:
        return self.feature_importances.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, DecisionTree):
            return NotImplemented
        return (
            self.root == other.root
            and self.config == other.config
            and self.n_train == other.n_train
            and np.array_equal(self.feature_importances, other.feature_importances)
        )

    def to_dict(self) -> dict:
        return {
            "root": self.root.to_dict(),
            "config": self.config.to_dict(),
            "n_train": self.n_train,
            "feature_importances": self.feature_importances.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            root=TreeNode.from_dict(d["root"]),
            config=TreeConfig.from_dict(d["config"]),
            n_train=int(d["n_train"]),
            feature_importances=np.array(d["feature_importances"], dtype=float),
        )


@dataclass(frozen=True)
class Rule:
    """Conjunction of threshold predicates describing the path to one leaf."""

    predicates: tuple[tuple[str, str, float], ...]
    leaf_counts: tuple[int, int]
    leaf_success_rate: float

    def to_dict(self) -> dict:
        return {
            "predicates": [list(p) for p in self.predicates],
            "leaf_counts": list(self.leaf_counts),
            "leaf_success_rate": self.leaf_success_rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Rule":
        return cls(
            predicates=tuple((str(n), str(o), float(t)) for n, o, t in d["predicates"]),
            leaf_counts=(int(d["leaf_counts"][0]), int(d["leaf_counts"][1])),
            leaf_success_rate=float(d["leaf_success_rate"]),
        )


def _counts(y: np.ndarray) -> tuple[int, int]:
    ones = int(y.sum())
    return (y.shape[0] - ones, ones)


def _best_split(X: np.ndarray, y: np.ndarray, config: TreeConfig):
    """Return (gain, feature_index, threshold) of the best candidate, or None.

    Feature loop ascends and np.argmax keeps the first maximum within a
    feature's ascending thresholds, so gain ties resolve to the lowest
    feature index, then the lowest threshold.
    """
    m = X.shape[0]
    parent = _counts(y)
    parent_imp = impurity(parent, config.impurity)
    total_ones = parent[1]
    best = None

    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        sv = X[order, f]
        sy = y[order]
        cut = np.nonzero(sv[:-1] < sv[1:])[0]
        if cut.size == 0:
            continue
        nl = cut + 1
        nr = m - nl
        ok = (nl >= config.min_leaf_size) & (nr >= config.min_leaf_size)
        if not ok.any():
            continue
        cut, nl, nr = cut[ok], nl[ok], nr[ok]
        l1 = np.cumsum(sy)[cut]
        l0 = nl - l1
        r1 = total_ones - l1
        r0 = nr - r1
        if config.impurity == MEASURE_GINI:
            # spelled as explicit products to match impurity() bit-for-bit
            pl0, pl1 = l0 / nl, l1 / nl
            pr0, pr1 = r0 / nr, r1 / nr
            left_imp = 1.0 - pl0 * pl0 - pl1 * pl1
            right_imp = 1.0 - pr0 * pr0 - pr1 * pr1
        else:
            left_imp = _entropy_vec(l0, nl) + _entropy_vec(l1, nl)
            right_imp = _entropy_vec(r0, nr) + _entropy_vec(r1, nr)
        gains = parent_imp - (nl / m) * left_imp - (nr / m) * right_imp
        j = int(np.argmax(gains))
        if best is None or gains[j] > best[0]:
            thr = (sv[cut[j]] + sv[cut[j] + 1]) / 2.0
            best = (float(gains[j]), f, float(thr))
    return best


def _entropy_vec(count: np.ndarray, total: np.ndarray) -> np.ndarray:
    p = count / total
    return np.where(p > 0.0, -p * np.log2(np.where(p > 0.0, p, 1.0)), 0.0)


def _grow(X: np.ndarray, y: np.ndarray, depth: int, config: TreeConfig) -> TreeNode:
    counts = _counts(y)
    if depth < config.max_depth and counts[0] > 0 and counts[1] > 0:
        best = _best_split(X, y, config)
        if best is not None and best[0] > config.min_gain:
            _, f, thr = best
            mask = X[:, f] <= thr
            return TreeNode(
                class_counts=counts,
                depth=depth,
                feature_index=f,
                threshold=thr,
                left=_grow(X[mask], y[mask], depth + 1, config),
                right=_grow(X[~mask], y[~mask], depth + 1, config),
            )
    return TreeNode(
        class_counts=counts,
        depth=depth,
        predicted_class=1 if counts[1] > counts[0] else 0,
    )


def _accumulate_importances(node: TreeNode, raw: np.ndarray, n_total: int, measure: str) -> None:
    if node.is_leaf:
        return
    gain = split_gain(
        node.class_counts, node.left.class_counts, node.right.class_counts, measure
    )
    weight = (node.class_counts[0] + node.class_counts[1]) / n_total
    raw[node.feature_index] += weight * gain
    _accumulate_importances(node.left, raw, n_total, measure)
    _accumulate_importances(node.right, raw, n_total, measure)


def fit(rows: np.ndarray, labels: np.ndarray, config: TreeConfig) -> DecisionTree:
    """Grow a depth-limited CART on a feature matrix with {0, 1} labels.

    A split is accepted only when both children have at least min_leaf_size
    samples and the gain exceeds min_gain; otherwise the node becomes a
    leaf predicting the majority class (ties predict 0). Feature
    importances are sample-weighted gains, normalized to sum to 1 (all
    zeros for a single-leaf tree).
    """
    X = np.asarray(rows, dtype=float)
    y = np.asarray(labels, dtype=int)
    if X.ndim != 2:
        raise DataError("training rows must form a 2-d matrix")
    if X.shape[0] == 0:
        raise DataError("cannot fit a tree on zero rows")
    if y.shape != (X.shape[0],):
        raise DataError("labels length does not match row count")
    if not np.isin(y, (0, 1)).all():
        raise DataError("tree labels must be 0 or 1")
    if not np.isfinite(X).all():
        raise DataError("training rows must be finite")

    root = _grow(X, y, 0, config)
    raw = np.zeros(X.shape[1], dtype=float)
    _accumulate_importances(root, raw, X.shape[0], config.impurity)
    total = raw.sum()
    importances = raw / total if total > 0.0 else raw
    return DecisionTree(
        root=root, config=config, n_train=X.shape[0], feature_importances=importances
    )


def decision_path(tree: DecisionTree, x: np.ndarray):
    """Route one feature vector to its leaf.

    Returns (predicted_class, leaf_class_counts, path) where path is a list
    of (feature_index, op, threshold) with op "<=" for left turns and ">"
    for right turns, in root-to-leaf order.
    """
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.shape[0] != tree.n_features:
        raise DataError(
            f"input width {v.shape[0]} does not match tree feature count {tree.n_features}"
        )
    node = tree.root
    path: list[tuple[int, str, float]] = []
    while not node.is_leaf:
        if v[node.feature_index] <= node.threshold:
            path.append((node.feature_index, "<=", node.threshold))
            node = node.left
        else:
            path.append((node.feature_index, ">", node.threshold))
            node = node.right
    return node.predicted_class, node.class_counts, path


def extract_rules(tree: DecisionTree, feature_names) -> list[Rule]:
    """One Rule per leaf, in left-to-right leaf order, named by feature_names."""
    names = list(feature_names)
    if len(names) != tree.n_features:
        raise DataError(
            f"{len(names)} feature names supplied for a tree over {tree.n_features} features"
        )
    rules: list[Rule] = []

    def walk(node: TreeNode, preds: tuple):
        if node.is_leaf:
            total = node.class_counts[0] + node.class_counts[1]
            rules.append(
                Rule(
                    predicates=preds,
                    leaf_counts=node.class_counts,
                    leaf_success_rate=node.class_counts[1] / total,
                )
            )
            return
        walk(node.left, preds + ((names[node.feature_index], "<=", node.threshold),))
        walk(node.right, preds + ((names[node.feature_index], ">", node.threshold),))

    walk(tree.root, ())
    return rules


def rules_in_raw_units(rules, feature_names, stats: StandardizationStats) -> list[Rule]:
    """Convert rule thresholds from standardized to raw units (mean + z * stddev)."""
    names = list(feature_names)
    index = {n: i for i, n in enumerate(names)}
    out = []
    for rule in rules:
        converted = tuple(
            (name, op, float(stats.means[index[name]] + thr * stats.stddevs[index[name]]))
            for name, op, thr in rule.predicates
        )
        out.append(
            Rule(
                predicates=converted,
                leaf_counts=rule.leaf_counts,
                leaf_success_rate=rule.leaf_success_rate,
            )
        )
    return out
