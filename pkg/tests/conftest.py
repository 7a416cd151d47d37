"""Shared fixtures: closed-form norm tables are cheap but reused everywhere."""

from __future__ import annotations

import pytest

from rzl import geometry, szego


@pytest.fixture(scope="session")
def circle_profile():
    return geometry.circle()


@pytest.fixture(scope="session")
def sphere_profile():
    return geometry.sphere(2)


@pytest.fixture(scope="session")
def circle_table_200(circle_profile):
    return szego.compute_norms(circle_profile, 200)


@pytest.fixture(scope="session")
def sphere_table_200(sphere_profile):
    return szego.compute_norms(sphere_profile, 200)
