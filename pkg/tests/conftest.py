"""Shared fixtures: a few small waves reused across modules (built once per session)."""
import math

import pytest

from stratwave import Grid, StreamlineProfiles, continue_from_laminar, solve_laminar

G = 9.81
TWO_PI = 2 * math.pi


def build_wave(rho, beta, Q, amplitude, Nq=32, Np=17, steps=2):
    profiles = StreamlineProfiles.polynomial(rho, beta, -1.0)
    grid = Grid(TWO_PI, -1.0, Nq, Np)
    lam = solve_laminar(profiles, G, Q, Np)
    return continue_from_laminar(lam, grid, amplitude, steps)


@pytest.fixture(scope="session")
def irrotational_wave():
    return build_wave([1.0], [0.0], 14.0, 1e-3)


@pytest.fixture(scope="session")
def stratified_wave():
    return build_wave([1.0, -0.1], [0.0], 15.0, 1e-3)


@pytest.fixture(scope="session")
def vortical_wave():
    return build_wave([1.0, -0.1], [0.5], 22.0, 1e-3)


@pytest.fixture(scope="session")
def still_water():
    return build_wave([1.0], [0.0], 2 * G + 1, 0.0)
