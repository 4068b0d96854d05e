import time

import numpy as np
import pytest

from pnpmri.core import SamplingMask, SensitivityMaps
from pnpmri.operators import EncodingOperator


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_image(rng, rows, cols):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_maps(rng, coils, rows, cols):
    raw = rng.standard_normal((coils, rows, cols)) + 1j * rng.standard_normal((coils, rows, cols))
    return SensitivityMaps.from_raw(raw)


def random_mask(rng, rows, cols, keep=0.5):
    kept = rng.random((rows, cols)) < keep
    kept[rows // 2, cols // 2] = True
    return SamplingMask(kept, 1, 1, "uniform-2d", (1, 1))


def row_mask(rows, cols, factor):
    kept = np.zeros((rows, cols), dtype=bool)
    kept[(np.arange(rows) - rows // 2) % factor == 0] = True
    return SamplingMask(kept, 1, cols, "uniform-1d", (factor, 1))


def random_operator(rng, coils, rows, cols, keep=0.5):
    return EncodingOperator(random_maps(rng, coils, rows, cols), random_mask(rng, rows, cols, keep))


def dense_matrix(apply, shape):
    """Assemble a linear map column by column from canonical basis images."""
    n = shape[0] * shape[1]
    cols = []
    for j in range(n):
        e = np.zeros(n, dtype=np.complex128)
        e[j] = 1.0
        cols.append(np.ravel(apply(e.reshape(shape))))
    return np.stack(cols, axis=1)


class BenchmarkRun:
    """Results of one timed benchmark run (training included)."""

    def __init__(self, cfg):
        from pnpmri.benchmark import run_benchmark

        self.cfg = cfg
        start = time.perf_counter()
        self.results, self.summary, self.denoiser = run_benchmark(cfg)
        self.seconds = time.perf_counter() - start

    def row(self, method):
        return next(r for r in self.summary if r["method"] == method)


@pytest.fixture(scope="session")
def r4_benchmark():
    from pnpmri.benchmark import BenchmarkConfig

    return BenchmarkRun(BenchmarkConfig())


@pytest.fixture(scope="session")
def r2x2_benchmark():
    from pnpmri.benchmark import BenchmarkConfig

    return BenchmarkRun(BenchmarkConfig(factors=(2, 2), tikhonov=1e-3))
