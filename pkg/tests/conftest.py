# tests/conftest.py
import os
import random
import sys

import pytest

# ensure project root on path
HERE = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.dirname(HERE))


@pytest.fixture
def rng():
    """Deterministic random source shared by property tests."""
    return random.Random(1729)
