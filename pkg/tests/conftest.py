import json

import numpy as np
import pytest
from click.testing import CliRunner

from app import create_cli
from models import DensityMatrix, PhysicalConstants


@pytest.fixture
def natural():
    return PhysicalConstants.preset("natural")


@pytest.fixture
def si_planck():
    return PhysicalConstants.preset("si-planck")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def qubit():
    """Two levels one unit apart with a full-size coherence."""
    return DensityMatrix(energies=[1.0, 0.0], coeffs=[[0.5, 0.5], [0.5, 0.5]])


@pytest.fixture
def dm_file(tmp_path):
    path = tmp_path / "rho.json"
    path.write_text(json.dumps({
        "energies": [0.0, 0.25, 1.0],
        "re": [[0.5, 0.1, 0.0], [0.1, 0.3, 0.05], [0.0, 0.05, 0.2]],
        "im": [[0.0, 0.1, 0.0], [-0.1, 0.0, 0.0], [0.0, 0.0, 0.0]],
        "energy_unit": None,
    }))
    return path


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def cli():
    return create_cli()
