"""Session fixtures for the acceptance tests.

The standard dataset is generated by the inference-side package; it is a
test dependency only, never imported by magtrain itself.
"""

import pytest


@pytest.fixture(scope="session")
def canon_dataset(tmp_path_factory):
    from magwire.dataset import DatasetSpec, generate

    out = tmp_path_factory.mktemp("canon")
    manifest = generate(DatasetSpec(), out)
    return manifest


@pytest.fixture(scope="session")
def trained_classifier(canon_dataset, tmp_path_factory):
    from magtrain.model import Head
    from magtrain.train import TrainConfig, train

    out = tmp_path_factory.mktemp("weights") / "axis.mirw"
    cfg = TrainConfig(manifest=canon_dataset, out_weights=out,
                      head=Head.CLASSIFICATION, epochs=15, seed=0)
    train(cfg)
    return cfg


@pytest.fixture(scope="session")
def trained_regressor(canon_dataset, tmp_path_factory):
    from magtrain.model import Head
    from magtrain.train import TrainConfig, train

    out = tmp_path_factory.mktemp("weights") / "beta.mirw"
    cfg = TrainConfig(manifest=canon_dataset, out_weights=out,
                      head=Head.REGRESSION, seed=0)
    train(cfg)
    return cfg
