import math

import numpy as np
import pytest

from hamident.bloch import HamiltonianModel
from hamident.measurement import EXACT, SamplingConfig, TimeSeries

BENCH_D0 = (0.2, 0.0, 0.1)
BENCH_D1 = (1.0, 1.0, 0.0)
BENCH_D2 = (0.0, 0.0, 1.0)


@pytest.fixture
def benchmark_model():
    return HamiltonianModel(BENCH_D0, [BENCH_D1, BENCH_D2])


def make_series(values_fn, dt, n, ne=EXACT, readout_error=0.0):
    """Uniform series ``values_fn(t)`` on ``t = 0, dt, ..., (n-1) dt``."""
    t = dt * np.arange(n)
    cfg = SamplingConfig(dt=dt, tf=dt * (n - 1) if n > 1 else dt, ne=ne, readout_error=readout_error)
    return TimeSeries(t, np.asarray(values_fn(t), dtype=float), cfg)


OMEGA_FIG2 = math.sqrt(0.08)  # |(0.2, 0, 0.2)|
PERIOD_FIG2 = 2 * math.pi / OMEGA_FIG2
