"""Shared small-scale pipeline fixtures: one modest dataset, a quick
predictor and a quick generator, reused across test modules."""

import numpy as np
import pytest

from linksynth import dataset as ds
from linksynth import cgan
from linksynth.neuralnet import TrainingConfig


@pytest.fixture(scope="session")
def corpus():
    return ds.generate(3000, n_steps=360, seed=11)


@pytest.fixture(scope="session")
def predictor(corpus):
    pred, report = cgan.train_predictor(
        corpus, TrainingConfig(learning_rate=1e-3, steps=30000, seed=1)
    )
    assert report.r2_d > 0.9, "small-corpus predictor unexpectedly weak"
    return pred


@pytest.fixture(scope="session")
def generator(corpus, predictor):
    config = cgan.GanTrainingConfig(steps=2000, seed=2)
    gen, _, history = cgan.train_cgan(corpus, predictor, config)
    assert np.isfinite(history.l_gps).all()
    return gen
