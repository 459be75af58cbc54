import pathlib

import numpy as np
import pytest

DATA_DIR = pathlib.Path(__file__).resolve().parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> pathlib.Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def fixture_panel_path() -> str:
    return str(DATA_DIR / "fixture_panel.csv")


@pytest.fixture(scope="session")
def fixture_panel(fixture_panel_path):
    from splitenc.inflation import load_panel

    return load_panel(fixture_panel_path)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
