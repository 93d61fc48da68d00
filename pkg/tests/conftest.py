"""Shared fixtures.

The production eigenfunction table takes ~12 s to build from scratch;
a disk cache keeps repeated test runs at ~0.4 s.
"""

import pytest

from corotwave import eigenbasis


@pytest.fixture(scope="session")
def eigen_table():
    return eigenbasis.build_table(cache_dir=eigenbasis.default_cache_dir())
