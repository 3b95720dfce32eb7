import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from actdetect import default_config, generate

T0 = datetime(2021, 6, 1, tzinfo=timezone.utc)


def hours(n):
    return [T0 + timedelta(hours=k) for k in range(n)]


@pytest.fixture(scope="session")
def small_corpus():
    """Five clean days of the default household (shared, read-only)."""
    config = default_config(seed=11, days=5)
    config.noise_std_kw = 0.0
    return generate(config)


@pytest.fixture(scope="session")
def acceptance_corpus():
    """The standard 60-day corpus: seed 42, 1.5 kW cycling cooling signature,
    0.05 kW meter noise, temperature coupling on."""
    return generate(default_config(seed=42, days=60))


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
