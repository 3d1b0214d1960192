import os
from datetime import timedelta

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=timedelta(milliseconds=2000),
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def labeled_blobs():
    """Two separable 2-D Gaussian blobs: class 0 in, class 1 out, 50+50."""
    from oodkit import EmbeddingSet

    r = np.random.default_rng(7)
    in_rows = r.normal(size=(50, 2)) + [6.0, 0.0]
    out_rows = r.normal(size=(50, 2)) - [6.0, 0.0]
    in_set = EmbeddingSet(
        data=in_rows.astype(np.float32), labels=np.zeros(50, dtype=np.uint32)
    )
    out_set = EmbeddingSet(
        data=out_rows.astype(np.float32), labels=np.ones(50, dtype=np.uint32)
    )
    return in_set, out_set
