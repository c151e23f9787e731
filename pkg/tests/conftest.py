from __future__ import annotations

import pytest

from artifact.grammar import builtin_hazel
from artifact.molder import machinery


@pytest.fixture(scope="session")
def hazel():
    return builtin_hazel()


@pytest.fixture(scope="session")
def mach(hazel):
    return machinery(hazel)
