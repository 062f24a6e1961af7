import numpy as np
import pytest

from fdastream import RawPanel, ScenarioSpec, StreamingEngine, generate_synthetic


def series_ids(n):
    return [f"s{i}" for i in range(n)]


def random_panel(rng, n, t):
    return RawPanel(series_ids(n), rng.normal(0.0, 1.0, (n, t)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture
def constant_panel():
    """Three constant series; per-column median 2 and MAD 1."""
    return RawPanel(["a", "b", "c"], [[1.0] * 4, [2.0] * 4, [3.0] * 4])


@pytest.fixture
def fitted_constant_engine(constant_panel):
    engine = StreamingEngine()
    engine.batch_fit(constant_panel)
    return engine


@pytest.fixture
def scenario_panel():
    """Fig-2-style clusters: 20 central, 2 magnitude, 2 shape outliers."""
    return generate_synthetic(
        ScenarioSpec(n_central=20, n_magnitude_outliers=2, n_shape_outliers=2, t_points=200, noise_sd=0.1, seed=42)
    )


def msplot_arrays(view):
    mo = np.array([p.mo for p in view.points])
    vo = np.array([p.vo for p in view.points])
    return mo, vo


def assert_close(actual, expected, tol=1e-9):
    """The spec's exactness tolerance: 1e-9 relative with an absolute floor."""
    assert np.allclose(actual, expected, rtol=tol, atol=tol), (
        f"max abs diff {np.max(np.abs(np.asarray(actual) - np.asarray(expected)))}"
    )
