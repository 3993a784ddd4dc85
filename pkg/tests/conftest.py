import sys
from pathlib import Path

SRC = str(Path(__file__).resolve().parents[1] / "src")
if SRC not in sys.path:
    sys.path.insert(0, SRC)

import numpy as np
import pytest

from aggdec import Vocab


@pytest.fixture
def vocab() -> Vocab:
    return Vocab(["a", "b", "c", "d", "X"])


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
