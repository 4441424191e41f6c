import math

import numpy as np
import pytest

from cuspidal_atlas.app_config import RunConfig
from cuspidal_atlas.kinematics import DesignParams, axial_lines
from cuspidal_atlas.references import REFERENCES


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


@pytest.fixture
def run_config(tmp_path):
    return RunConfig(output_dir=str(tmp_path), threads=2)


def ref_params(key):
    return REFERENCES[key].params


def orientation_roots(params: DesignParams):
    """
    θ3 of cusps from the closed form: real roots of
    E(θ3) = d4·u(u² - sin²θ3) + r2·(d3 + d4 cosθ3), u = r2 cosθ3 - d3 sinθ3,
    restricted to |u| > |sinθ3|. Each root is a mirror pair of cusps (±z).
    """
    theta = np.linspace(-math.pi, math.pi, 200001)

    def e(t):
        u = params.r2 * np.cos(t) - params.d3 * np.sin(t)
        return params.d4 * u * (u * u - np.sin(t) ** 2) + params.r2 * (params.d3 + params.d4 * np.cos(t))

    values = e(theta)
    roots = []
    for k in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0):
        t = 0.5 * (theta[k] + theta[k + 1])
        u = params.r2 * math.cos(t) - params.d3 * math.sin(t)
        if abs(u) > abs(math.sin(t)):
            roots.append(t)
    return roots


def crossing_axial_lines(params: DesignParams):
    """Axial lines θ3 = ±β that meet an orientation curve (|sinβ| <= |u(β)|)."""
    crossing = []
    for beta in axial_lines(params):
        u = params.r2 * math.cos(beta) - params.d3 * math.sin(beta)
        if abs(math.sin(beta)) <= abs(u):
            crossing.append(beta)
    return crossing
