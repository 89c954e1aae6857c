"""Shared fixtures and independent numerical oracles.

The oracles here recompute quantities from their definitions (dense matrix
exponentials, direct quadrature, finite differences) and deliberately avoid
the library's fast paths.
"""

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.special import comb

from difisher.spin import SpinState


def dense_j(n_particles, axis):
    """Dense collective-spin matrix built straight from ladder operators."""
    j = n_particles / 2
    n = np.arange(-j, j + 1)
    jp = np.zeros((n_particles + 1, n_particles + 1))
    for i in range(n_particles):
        jp[i + 1, i] = np.sqrt(j * (j + 1) - n[i] * (n[i] + 1))
    if axis == "x":
        return (jp + jp.T) / 2
    if axis == "y":
        return (jp - jp.T) / 2j
    return np.diag(n.astype(complex))


def dense_rotation(n_particles, axis, angle):
    """exp(-i angle J_axis) via scipy's dense matrix exponential."""
    return expm(-1j * angle * dense_j(n_particles, axis))


def random_state(n_particles, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=n_particles + 1) + 1j * rng.normal(size=n_particles + 1)
    return SpinState(n_particles, amps / np.linalg.norm(amps))


def noon_single_prob(n_particles, phi):
    """Closed-form beam-splitter count distribution of a two-component probe."""
    mu = np.arange(-(n_particles // 2), n_particles // 2 + 1)
    w = comb(n_particles, n_particles // 2 + mu) / 2**n_particles
    return w * (1 + (-1.0) ** mu * np.cos(n_particles * phi))


def _grid_weights(dist, mesh):
    if dist.is_singular:
        return dist.atoms()
    eps = -np.pi + (np.arange(mesh) + 0.5) * (2 * np.pi / mesh)
    return eps, dist.density(eps) * (2 * np.pi / mesh)


def noon_joint_prob_oracle(n_particles, theta, noise, mesh=512):
    """Double quadrature of the defining integral over both noise phases."""
    ep, wp = _grid_weights(noise.total, mesh)
    em, wm = _grid_weights(noise.relative, mesh)
    out = np.zeros((n_particles + 1, n_particles + 1))
    for e1, w1 in zip(ep, wp):
        acc = np.zeros_like(out)
        for e2, w2 in zip(em, wm):
            acc += w2 * np.outer(
                noon_single_prob(n_particles, theta + e1 + e2),
                noon_single_prob(n_particles, e1 - e2),
            )
        out += w1 * acc
    return out


def noon_fisher_oracle(n_particles, theta, noise, mesh=512, h=None):
    """Finite-difference Fisher information from the quadrature oracle."""
    if h is None:
        h = 1e-6 / n_particles
    p0 = noon_joint_prob_oracle(n_particles, theta, noise, mesh)
    pp = noon_joint_prob_oracle(n_particles, theta + h, noise, mesh)
    pm = noon_joint_prob_oracle(n_particles, theta - h, noise, mesh)
    dp = (pp - pm) / (2 * h)
    keep = p0 > 1e-15
    return float(np.sum(dp[keep] ** 2 / p0[keep]))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
