import numpy as np
import pytest

from facecue import accel, affect, synth, vision


def pytest_addoption(parser):
    parser.addoption(
        "--kernel-backend",
        default=None,
        help="Force a kernel backend (numba|numpy) for the whole run.",
    )


@pytest.fixture(scope="session", autouse=True)
def _backend(request):
    forced = request.config.getoption("--kernel-backend")
    if forced:
        accel.use_backend(forced)
    # touch every kernel once so numba compilation never lands inside a timed test
    kern = accel.kernels()
    pts = np.random.default_rng(0).normal(size=(4, 68, 2)) + np.array([320.0, 240.0])
    canon, _ = kern.normalize_batch(pts)
    kern.features_batch(canon, None)
    sm, _ = kern.ema_batch(np.full((4, 8), 0.125), 0.3, None)
    state = (
        np.zeros(8, dtype=np.bool_),
        np.zeros(8, dtype=np.int64),
        np.zeros(8, dtype=np.int64),
        np.zeros(8, dtype=np.float64),
    )
    kern.segment_batch(np.arange(4, dtype=np.int64), sm, 0.65, 0.45, 1, *state)
    return accel.backend_name()


@pytest.fixture(scope="session")
def reference_model():
    return vision.load_reference_model()


@pytest.fixture(scope="session")
def templates(reference_model):
    return synth.load_templates(reference_model)


@pytest.fixture(scope="session")
def training_set(templates):
    return synth.make_training_set(50, 0.005, seed=123, templates=templates)


@pytest.fixture(scope="session")
def trained_model(training_set):
    return affect.train(training_set)


@pytest.fixture(scope="session")
def neutral_baseline(templates):
    return templates.neutral_baseline_distances()
