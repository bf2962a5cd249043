import numpy as np
import pytest

from mmd import PhaseTrack, ShapeTable, UniformSignal, shape_norm


def rel_l2(got, want):
    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    denom = np.linalg.norm(want)
    if denom == 0.0:
        return float(np.linalg.norm(got))
    return float(np.linalg.norm(got - want) / denom)


def random_shape_table(rng, size=128, n_harmonics=6, decay=0.5):
    """Smooth random zero-mean unit-norm table (band-limited)."""
    theta = 2.0 * np.pi * np.arange(size) / size
    vals = np.zeros(size)
    for k in range(1, n_harmonics + 1):
        amp = np.exp(-decay * k)
        vals += amp * (rng.standard_normal() * np.cos(k * theta)
                       + rng.standard_normal() * np.sin(k * theta))
    vals -= vals.mean()
    vals /= shape_norm(vals)
    return ShapeTable(vals, normalized=True)


def linear_phase(n_cycles, length):
    t = np.arange(length) / length
    return PhaseTrack(n_cycles * t, n_cycles)


def warped_phase(n_cycles, length, amount=0.006, kind="sin"):
    t = np.arange(length) / length
    warp = np.sin if kind == "sin" else np.cos
    return PhaseTrack(n_cycles * (t + amount * warp(2.0 * np.pi * t)), n_cycles)


def single_mimf(shape, phase):
    return UniformSignal(shape.eval_at(phase.values))


@pytest.fixture(scope="session")
def rng_factory():
    def make(seed):
        return np.random.default_rng(seed)
    return make
