"""Pytest configuration and shared fixtures."""

import pytest

from wsdict.meters import CostMeters
from wsdict.models import Parameters


@pytest.fixture
def params() -> Parameters:
    """Return the default parameters (c=5, d=24, k=3)."""
    return Parameters()


@pytest.fixture
def meters() -> CostMeters:
    """Return fresh cost meters."""
    return CostMeters()


@pytest.fixture
def trace_file(tmp_path):
    """Return a writer that stores trace text in a temporary file."""

    def write(text: str, name: str = "trace.txt"):
        path = tmp_path / name
        path.write_text(text)
        return path

    return write
