import numpy as np
import pytest

from radargan.dataset import Dataset, DatasetSpec
from radargan.fdtd import ClassLabel, ScenarioParams, SimConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_scenario(label=ClassLabel.NO_OBJECT, jacket=2.0, shirt=0.5, airgap=2.6,
                  center=10.0, seed=0):
    """Mid-range scenario for the requested class."""
    if label == ClassLabel.NO_OBJECT:
        return ScenarioParams(label, jacket, shirt, airgap, rng_seed=seed)
    from radargan.fdtd import (LARGE_OBJECT_HEIGHT_CM, LAYER_PERMITTIVITY,
                               OBJECT_PERMITTIVITY, OBJECT_THICKNESS_CM,
                               SMALL_OBJECT_HEIGHT_CM)
    height = (LARGE_OBJECT_HEIGHT_CM if label == ClassLabel.LARGE_OBJECT
              else SMALL_OBJECT_HEIGHT_CM)
    return ScenarioParams(label, jacket, shirt, airgap,
                          object_thickness=OBJECT_THICKNESS_CM, object_height=height,
                          object_center_y=center,
                          permittivities={**LAYER_PERMITTIVITY,
                                          "object": OBJECT_PERMITTIVITY},
                          rng_seed=seed)


def synthetic_dataset(n=64, length=128, seed=0, amplitude=0.8):
    """In-memory dataset of smooth random traces (no FDTD), for service and
    ranking tests that only need trace plumbing."""
    gen = np.random.default_rng(seed)
    base = gen.standard_normal((n, length))
    kernel = np.hamming(9)
    traces = amplitude * np.apply_along_axis(
        lambda r: np.convolve(r, kernel / kernel.sum(), mode="same"), 1, base)
    scenarios = [make_scenario(seed=i) for i in range(n)]
    spec = DatasetSpec(counts=(n, 0, 0), global_seed=seed,
                       sim_cfg=SimConfig(dx_mm=5.0, record_len=length))
    return Dataset(traces=traces, labels=np.zeros(n, dtype=np.uint8),
                   scenarios=scenarios, spec=spec, dt_record=1e-11,
                   normalization=float(np.abs(traces).max()))
