import numpy as np
import pytest

from guesslab import Command, HilbertSpace, MeasurementFn, Model, StateFn, UnitaryFn
from guesslab.linalg import random_state, random_unitary


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)


def _random_measurement(rng: np.random.Generator, commands, dim: int) -> MeasurementFn:
    """Rank-one spectral family in a random basis, distinct integer values."""
    spectra = {}
    for b in commands:
        q = random_unitary(rng, dim)
        terms = []
        for j in range(dim):
            vec = q[:, j:j + 1]
            terms.append((float(j), vec @ vec.conj().T))
        spectra[b] = terms
    return MeasurementFn(spectra)


@pytest.fixture
def make_model(rng):
    """Factory for fully random models over a shared command set."""

    def _make(dim: int = 2, n_commands: int = 2) -> Model:
        commands = tuple(
            Command(format(i, f"0{max(1, (n_commands - 1).bit_length())}b"))
            for i in range(n_commands)
        )
        return Model(
            HilbertSpace(dim),
            StateFn({b: random_state(rng, dim) for b in commands}),
            UnitaryFn({b: random_unitary(rng, dim) for b in commands}),
            _random_measurement(rng, commands, dim),
            commands,
        )

    return _make


@pytest.fixture
def basis_model():
    """Deterministic two-command model measured in the computational basis."""
    b0, b1 = Command("0"), Command("1")
    hadamard = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
    return Model(
        HilbertSpace(2),
        StateFn({b0: np.array([1.0, 0.0]), b1: np.array([0.0, 1.0])}),
        UnitaryFn({b0: hadamard, b1: np.eye(2)}),
        MeasurementFn.diagonal({b0: [0.0, 1.0], b1: [0.0, 1.0]}, 2),
        (b0, b1),
    )
