import numpy as np
import pytest

from noiseprop.network import NoiseConfig

REF_NOISE = NoiseConfig(d_add_uncorr=1e-4, d_add_corr=1e-4, d_mult_uncorr=1e-3, d_mult_corr=1e-3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ref_noise():
    return REF_NOISE
