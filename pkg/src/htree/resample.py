"""Minority-class oversampling toward a target success rate.

Only the success class (label 1) is ever added; no row is removed. The
added count is the smallest integer that lifts the success fraction to at
least the target. Synthetic rows are flagged and get "synth-<i>" ids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .tabular import (
    Dataset,
    fit_standardizer,
    inverse_transform_rows,
    transform_rows,
)

STRATEGY_DUPLICATE = "duplicate"
STRATEGY_INTERPOLATE = "interpolate"
_VALID_STRATEGIES = (STRATEGY_DUPLICATE, STRATEGY_INTERPOLATE)


@dataclass(frozen=True)
class ResampleConfig:
    target_success_rate: float
    strategy: str = STRATEGY_DUPLICATE
    seed: int = 0
    neighbor_count: int = 5

    def __post_init__(self):
        if not (0.0 < self.target_success_rate < 1.0):
            raise ConfigError(
                f"target_success_rate must lie in (0, 1), got {self.target_success_rate}"
            )
        if self.strategy not in _VALID_STRATEGIES:
            raise ConfigError(f"unknown resample strategy '{self.strategy}'")
        if self.neighbor_count < 1:
            raise ConfigError("neighbor_count must be at least 1")

    def to_dict(self) -> dict:
        return {
            "target_success_rate": self.target_success_rate,
            "strategy": self.strategy,
            "seed": self.seed,
            "neighbor_count": self.neighbor_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResampleConfig":
        return cls(**d)


def smallest_addition(success_count: int, total: int, target: float) -> int:
    """Smallest m >= 0 with (success_count + m) / (total + m) >= target."""
    if total <= 0:
        raise DataError("cannot resample an empty dataset")
    if success_count / total >= target:
        return 0
    # closed form, then nudge for float edge cases
    m = max(0, math.ceil((target * total - success_count) / (1.0 - target)))
    while (success_count + m) / (total + m) < target:
        m += 1
    while m > 0 and (success_count + m - 1) / (total + m - 1) >= target:
        m -= 1
    return m


def _canonical_minority_order(data: Dataset) -> np.ndarray:
    """Indices of success rows ordered by (id, row values).

    Sampling from this canonical order makes synthetic rows invariant to
    input row permutations, which the training pipeline promises.
    """
    minority = np.nonzero(data.labels == 1)[0]
    keyed = sorted(
        minority.tolist(), key=lambda i: (data.ids[i], tuple(data.rows[i].tolist()))
    )
    return np.array(keyed, dtype=int)


def _interpolated_rows(
    z_minority: np.ndarray, count: int, neighbor_count: int, rng: np.random.Generator
) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Sample `count` convex combinations of minority rows in standardized space.

    Each new row is z_a + u * (z_b - z_a) with u ~ U[0, 1], where b is drawn
    among a's `neighbor_count` nearest minority neighbors (Euclidean). Also
    returns the (a, b) index pairs for auditing.
    """
    n = z_minority.shape[0]
    if n < 2:
        raise DataError("interpolation needs at least 2 minority rows")
    diffs = z_minority[:, None, :] - z_minority[None, :, :]
    dist2 = (diffs**2).sum(axis=2)
    np.fill_diagonal(dist2, np.inf)
    k = min(neighbor_count, n - 1)
    neighbor_lists = np.argsort(dist2, axis=1, kind="stable")[:, :k]

    new_rows = np.empty((count, z_minority.shape[1]), dtype=float)
    pairs: list[tuple[int, int]] = []
    for j in range(count):
        a = int(rng.integers(n))
        b = int(neighbor_lists[a][int(rng.integers(k))])
        u = float(rng.random())
        new_rows[j] = z_minority[a] + u * (z_minority[b] - z_minority[a])
        pairs.append((a, b))
    return new_rows, pairs


def resample(data: Dataset, config: ResampleConfig) -> Dataset:
    """Oversample the success class until its fraction reaches the target.

    `duplicate` copies uniformly-sampled minority rows verbatim.
    `interpolate` blends nearest minority neighbors in standardized space,
    rounds binary indicators back to {0, 1}, and falls back to `duplicate`
    (with a warning recorded in result.meta) when fewer than 2 minority
    rows exist. A dataset already at or above the target passes through
    unchanged. Fixed seed means byte-identical output.
    """
    if data.n_rows == 0:
        raise DataError("cannot resample an empty dataset")
    successes = data.success_count
    if successes == 0 or successes == data.n_rows:
        raise DataError("resampling needs both classes present")
    if data.success_rate >= config.target_success_rate:
        return data

    m = smallest_addition(successes, data.n_rows, config.target_success_rate)
    rng = np.random.default_rng(config.seed)
    canon = _canonical_minority_order(data)
    meta = dict(data.meta)
    strategy = config.strategy

    if strategy == STRATEGY_INTERPOLATE and canon.size < 2:
        strategy = STRATEGY_DUPLICATE
        meta["resample_warning"] = "interpolate fell back to duplicate: fewer than 2 minority rows"

    if strategy == STRATEGY_DUPLICATE:
        picks = rng.integers(0, canon.size, size=m)
        new_rows = data.rows[canon[picks]].copy()
    else:
        stats = fit_standardizer(data)
        z_min = transform_rows(data.rows[canon], stats)
        z_new, _ = _interpolated_rows(z_min, m, config.neighbor_count, rng)
        new_rows = inverse_transform_rows(z_new, stats)
        binary = data.schema.binary_mask()
        if binary.any():
            new_rows[:, binary] = np.where(new_rows[:, binary] >= 0.5, 1.0, 0.0)

    meta["resample"] = {
        "strategy": strategy,
        "requested_strategy": config.strategy,
        "added": int(m),
        "seed": config.seed,
        "target_success_rate": config.target_success_rate,
    }
    return Dataset(
        schema=data.schema,
        rows=np.vstack([data.rows, new_rows]),
        labels=np.concatenate([data.labels, np.ones(m, dtype=int)]),
        ids=data.ids + tuple(f"synth-{i}" for i in range(m)),
        synthetic=np.concatenate([data.synthetic, np.ones(m, dtype=bool)]),
        meta=meta,
    )
