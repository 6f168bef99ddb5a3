"""Shared fixtures: small handcrafted datasets and a session-scoped trained model."""

import numpy as np
import pytest

import htree


def make_schema(n_continuous=2, n_binary=0, label="success", id_name="id"):
    names = tuple(f"f{i}" for i in range(n_continuous)) + tuple(
        f"b{i}" for i in range(n_binary)
    )
    kinds = ("continuous",) * n_continuous + ("binary",) * n_binary
    return htree.FeatureSchema(names, kinds, label, id_name)


def make_dataset(rows, labels, schema=None, ids=None):
    rows = np.asarray(rows, dtype=float)
    if schema is None:
        schema = make_schema(n_continuous=rows.shape[1])
    if ids is None:
        ids = tuple(str(i) for i in range(rows.shape[0]))
    return htree.Dataset(schema=schema, rows=rows, labels=np.asarray(labels), ids=ids)


@pytest.fixture(scope="session")
def planted():
    data, truth = htree.generate_dataset(5, 600, base_rate=0.03, seed=42)
    return data, truth


@pytest.fixture(scope="session")
def trained_model(planted):
    data, _ = planted
    config = htree.TrainConfig(n_main_clusters=5, seed=42)
    return htree.train(data, config)
