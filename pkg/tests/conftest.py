import numpy as np
import pytest

from hullscope.data import DEMO_DEFAULTS, SyntheticSpec, gen_synthetic
from hullscope.model import LossModel, fit
from hullscope.sampler import LevelSetSpec

EPS = 1.0 / 40.0


def demo_model(family: str) -> LossModel:
    ds, _ = gen_synthetic(SyntheticSpec(family))
    d = DEMO_DEFAULTS[family]
    return LossModel(d["kind"], d["lam"], ds, scale=d["scale"])


def demo_spec(family: str, offset: float = EPS) -> LevelSetSpec:
    model = demo_model(family)
    return LevelSetSpec.from_fit(model, fit(model), offset=offset)


def correlated_spec(p: int = 100, lam: float = 0.1, factor: float = 1.01, seed: int = 0) -> LevelSetSpec:
    ds, _ = gen_synthetic(SyntheticSpec("correlated", p=p, seed=seed))
    model = LossModel("squared", lam, ds)
    return LevelSetSpec.from_fit(model, fit(model), factor=factor)


def separable_toy(n: int = 40, seed: int = 3):
    """Two Gaussian blobs on either side of the line x1 + x2 = 0."""
    rng = np.random.default_rng(seed)
    y = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    X = rng.normal(scale=0.3, size=(n, 2)) + np.outer(y, [1.0, 1.0])
    return X, y


@pytest.fixture(scope="session")
def ex1_spec():
    return demo_spec("example2d")


@pytest.fixture(scope="session")
def ex2_spec():
    return demo_spec("example3d")


@pytest.fixture(scope="session")
def corr_spec():
    return correlated_spec()


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
