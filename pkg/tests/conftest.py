"""Shared fixtures: small deterministic embedding fixtures and on-disk
dataset builders used by the CLI and alignment tests."""

import json

import numpy as np
import pytest

import radialign as ra


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def random_unit(rng, dim):
    return unit(rng.standard_normal(dim))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def toy_dataset():
    """Small planted hierarchy: 24 records over a (2,2,2) pool, varied paths."""
    spec = ra.HierarchySpec(
        n_records=24, branching=(2, 2, 2), noise=0.05, seed=3
    )
    return ra.make_hierarchy_dataset(spec)


def write_hierarchy_file(path, records):
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(
                json.dumps(
                    {
                        "image_id": r.image_id,
                        "image_key": r.image_key,
                        "positives": [
                            {"text": c.text, "key": c.key} for c in r.positives
                        ],
                        "negatives": [
                            {"text": c.text, "key": c.key} for c in r.negatives
                        ],
                    }
                )
                + "\n"
            )


@pytest.fixture
def toy_files(tmp_path, toy_dataset):
    """toy_dataset serialized to disk: (store path, hierarchy path, records, store)."""
    records, store = toy_dataset
    store_path = tmp_path / "toy.remb"
    hier_path = tmp_path / "hier.jsonl"
    ra.write_store(store_path, store)
    write_hierarchy_file(hier_path, records)
    return store_path, hier_path, records, store
