"""Synthetic founder-style datasets with planted, recoverable structure.

Rows fall into K well-separated Gaussian blobs. Each blob j is elevated on
its own trait_j feature; within blob j the success probability depends on
the sign of driver_j, so trees fit inside a recovered blob should split on
that driver. One blob carries a success rate well above the base rate (the
rest sit below so the overall rate stays near the base), giving resampling
experiments a high-contrast segment. The sidecar truth dict records blob
assignments, planted rates, and the planted driver per blob.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ConfigError
from .tabular import Dataset, FeatureSchema, KIND_BINARY, KIND_CONTINUOUS

SEPARATION = 10.0
BLOB_STD = 1.0
HIGH_BLOB_WEIGHT = 0.05
RATE_SPREAD = 10.0
N_NOISE = 2
N_FLAGS = 2


def _blob_sizes(n_rows: int, n_personas: int) -> list[int]:
    if n_personas == 1:
        return [n_rows]
    weights = [HIGH_BLOB_WEIGHT] + [(1.0 - HIGH_BLOB_WEIGHT) / (n_personas - 1)] * (
        n_personas - 1
    )
    sizes = [max(1, int(round(w * n_rows))) for w in weights]
    # largest-remainder style fixup so sizes sum exactly to n_rows
    while sum(sizes) > n_rows:
        sizes[sizes.index(max(sizes))] -= 1
    while sum(sizes) < n_rows:
        sizes[sizes.index(min(sizes))] += 1
    return sizes


def _blob_rates(n_personas: int, base_rate: float, sizes: list[int], n_rows: int) -> list[float]:
    """Planted per-blob success rates averaging (size-weighted) to base_rate."""
    if n_personas == 1:
        return [base_rate]
    high = min(0.5, RATE_SPREAD * base_rate)
    weights = [s / n_rows for s in sizes]
    budget = base_rate - weights[0] * high
    if budget <= 0:
        high = base_rate / (2.0 * weights[0])
        budget = base_rate - weights[0] * high
    shape = [0.85**i for i in range(n_personas - 1)]
    denom = sum(w * g for w, g in zip(weights[1:], shape))
    scale = budget / denom
    return [high] + [scale * g for g in shape]


def generate_dataset(
    n_personas: int,
    n_rows: int,
    base_rate: float = 0.019,
    seed: int = 0,
) -> tuple[Dataset, dict]:
    """Generate (dataset, truth) with K planted blobs and driver-linked labels.

    Column layout: trait_0..trait_{K-1}, driver_0..driver_{K-1},
    noise_0..noise_1 (all continuous), flag_0..flag_1 (binary), plus an id
    column and a "success" label. Rows are shuffled; truth["assignments"]
    matches the shuffled order. Fixed seed means byte-identical output.
    """
    if n_personas < 1:
        raise ConfigError("persona count must be at least 1")
    if n_rows < n_personas:
        raise ConfigError("row count must be at least the persona count")
    if not 0.0 < base_rate < 1.0:
        raise ConfigError("base rate must lie in (0, 1)")

    rng = np.random.default_rng(seed)
    K = n_personas
    sizes = _blob_sizes(n_rows, K)
    rates = _blob_rates(K, base_rate, sizes, n_rows)
    flag_probs = rng.uniform(0.1, 0.9, size=(K, N_FLAGS))

    feature_names = (
        [f"trait_{j}" for j in range(K)]
        + [f"driver_{j}" for j in range(K)]
        + [f"noise_{j}" for j in range(N_NOISE)]
        + [f"flag_{j}" for j in range(N_FLAGS)]
    )
    kinds = [KIND_CONTINUOUS] * (2 * K + N_NOISE) + [KIND_BINARY] * N_FLAGS
    d = len(feature_names)

    rows = np.empty((n_rows, d), dtype=float)
    labels = np.empty(n_rows, dtype=int)
    assignments = np.empty(n_rows, dtype=int)
    start = 0
    for j in range(K):
        size = sizes[j]
        block = rng.normal(0.0, BLOB_STD, size=(size, d))
        block[:, j] += SEPARATION
        block[:, 2 * K + N_NOISE :] = (
            rng.random(size=(size, N_FLAGS)) < flag_probs[j]
        ).astype(float)
        driver = block[:, K + j]
        p_hi = min(0.95, 1.8 * rates[j])
        p_lo = max(0.0, 2.0 * rates[j] - p_hi)
        prob = np.where(driver > 0.0, p_hi, p_lo)
        rows[start : start + size] = block
        labels[start : start + size] = (rng.random(size) < prob).astype(int)
        assignments[start : start + size] = j
        start += size

    order = rng.permutation(n_rows)
    rows = rows[order]
    labels = labels[order]
    assignments = assignments[order]

    schema = FeatureSchema(
        feature_names=tuple(feature_names),
        feature_kinds=tuple(kinds),
        label_name="success",
        id_name="id",
    )
    data = Dataset(
        schema=schema,
        rows=rows,
        labels=labels,
        ids=tuple(f"r{i}" for i in range(n_rows)),
    )
    truth = {
        "seed": seed,
        "n_personas": K,
        "n_rows": n_rows,
        "base_rate": base_rate,
        "assignments": assignments.tolist(),
        "blobs": [
            {
                "label": j,
                "size": sizes[j],
                "planted_success_rate": rates[j],
                "trait_feature": f"trait_{j}",
                "driver_feature": f"driver_{j}",
                "flag_rates": flag_probs[j].tolist(),
            }
            for j in range(K)
        ],
    }
    return data, truth


def write_truth(truth: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
        fh.write("\n")
