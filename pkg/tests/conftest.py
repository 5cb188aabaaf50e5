import numpy as np
import pytest
from scipy.signal import lfilter

from emgds.data import SynthConfig, synth_corpus
from emgds.features import FeatureConfig, extract_corpus


@pytest.fixture(scope="session")
def small_corpus():
    """3 subjects x 6 activities x 12 reps at 500 Hz / 2 s: fast but separable."""
    return synth_corpus(SynthConfig(subjects=3, reps_per_activity=12, rate_hz=500.0,
                                    duration_s=2.0, seed=7))


@pytest.fixture(scope="session")
def small_rows(small_corpus):
    return extract_corpus(small_corpus, FeatureConfig())


def random_segment(rng: np.random.Generator, n: int) -> np.ndarray:
    """Mixed-flavor random segment used by the oracle-equivalence suites."""
    kind = rng.integers(0, 3)
    if kind == 0:
        x = rng.standard_normal(n)
    elif kind == 1:
        x = rng.uniform(-2.0, 3.0, size=n)
    else:
        # smooth-ish AR(1) so slope-sign statistics differ from white noise
        x = lfilter([1.0], [1.0, -0.7], rng.standard_normal(n))
    return x + rng.uniform(-1.0, 1.0)
