"""Collective-spin linear algebra for N-particle two-mode states.

States live in the Jz eigenbasis of a single spin j = N/2, with amplitudes
ordered by ascending eigenvalue n = -N/2 ... N/2.  Only even N is supported,
so all eigenvalues are integers.
"""

import functools

import numpy as np
from dataclasses import dataclass
from scipy.linalg import eigh_tridiagonal

NORM_TOL = 1e-12

# entries below this are flushed to zero: denormals slow large-N matmuls
_FLUSH = 1e-300


def check_even_n(n_particles):
    if n_particles <= 0 or n_particles % 2 != 0:
        raise ValueError(
            f"particle number must be a positive even integer, got {n_particles!r}"
        )


def jz_values(n_particles):
    """Eigenvalues of Jz (ascending), as a float array of length N+1."""
    check_even_n(n_particles)
    half = n_particles // 2
    return np.arange(-half, half + 1, dtype=float)


def _ladder_factors(n_particles):
    # sqrt(j(j+1) - n(n+1)) for n = -j .. j-1; these are the Jx off-diagonals * 2
    j = n_particles / 2
    n = jz_values(n_particles)[:-1]
    return np.sqrt(j * (j + 1) - n * (n + 1))


def jx_matrix(n_particles):
    """Dense Jx in the Jz basis (real symmetric tridiagonal)."""
    f = _ladder_factors(n_particles) / 2
    m = np.zeros((n_particles + 1, n_particles + 1))
    idx = np.arange(n_particles)
    m[idx + 1, idx] = f
    m[idx, idx + 1] = f
    return m


def jy_matrix(n_particles):
    """Dense Jy in the Jz basis (imaginary antisymmetric tridiagonal)."""
    f = _ladder_factors(n_particles) / 2
    m = np.zeros((n_particles + 1, n_particles + 1), dtype=complex)
    idx = np.arange(n_particles)
    m[idx + 1, idx] = -1j * f
    m[idx, idx + 1] = 1j * f
    return m


def jz_matrix(n_particles):
    """Dense Jz in its own basis."""
    return np.diag(jz_values(n_particles))


@functools.lru_cache(maxsize=32)
def _jx_eigensystem(n_particles):
    """Eigenvalues (rounded to exact integers) and eigenvectors of Jx.

    Jx is unitarily equivalent to Jz, so the spectrum is exactly
    -N/2 ... N/2; rounding removes solver noise and keeps downstream
    phase factors exactly periodic.
    """
    f = _ladder_factors(n_particles) / 2
    vals, vecs = eigh_tridiagonal(np.zeros(n_particles + 1), f)
    rounded = np.rint(vals)
    if np.max(np.abs(vals - rounded)) > 1e-8:
        raise ArithmeticError(
            f"Jx eigensolver failed for N={n_particles}: spectrum not integer "
            f"(max deviation {np.max(np.abs(vals - rounded)):.3e})"
        )
    vecs = np.where(np.abs(vecs) < _FLUSH, 0.0, vecs)
    vecs.setflags(write=False)
    rounded.setflags(write=False)
    return rounded, vecs


def _z_half_turn_phases(n_particles):
    # diag of exp(-i (pi/2) Jz); conjugating Jx by it gives Jy
    return np.exp(-0.5j * np.pi * jz_values(n_particles))


@dataclass(frozen=True)
class SpinState:
    """Unit-norm amplitude vector over the Jz eigenbasis, ascending n."""

    n_particles: int
    amplitudes: np.ndarray

    def __post_init__(self):
        check_even_n(self.n_particles)
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.n_particles + 1,):
            raise ValueError(
                f"expected {self.n_particles + 1} amplitudes, got shape {amps.shape}"
            )
        norm = np.sum(np.abs(amps) ** 2)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: sum |a|^2 = {norm!r}")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_values(self):
        return jz_values(self.n_particles)

    def overlap(self, other):
        """Inner product <self|other>."""
        if other.n_particles != self.n_particles:
            raise ValueError("particle numbers differ")
        return np.vdot(self.amplitudes, other.amplitudes)


@dataclass(frozen=True)
class RotationMatrix:
    """Matrix of exp(-i angle J_axis) in the Jz basis."""

    n_particles: int
    axis: str
    angle: float
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def apply(self, state):
        return SpinState(state.n_particles, self.entries @ state.amplitudes)


def rotation(n_particles, axis, angle):
    """exp(-i angle J_axis) as a dense (N+1)x(N+1) table; axis in {x, y, z}."""
    check_even_n(n_particles)
    if not np.isfinite(angle):
        raise ValueError(f"rotation angle must be finite, got {angle!r}")
    if axis == "z":
        entries = np.diag(np.exp(-1j * angle * jz_values(n_particles)))
    elif axis in ("x", "y"):
        lam, q = _jx_eigensystem(n_particles)
        entries = (q * np.exp(-1j * angle * lam)) @ q.T
        if axis == "y":
            d = _z_half_turn_phases(n_particles)
            entries = (d[:, None] * entries) * d.conj()[None, :]
    else:
        raise ValueError(f"axis must be one of x, y, z; got {axis!r}")
    entries = np.where(np.abs(entries) < _FLUSH, 0.0, entries)
    return RotationMatrix(n_particles, axis, float(angle), entries)


def apply_rotation(state, axis, angle):
    """Apply exp(-i angle J_axis) without materializing the full matrix."""
    psi = state.amplitudes
    if axis == "z":
        out = np.exp(-1j * angle * state.n_values) * psi
    elif axis in ("x", "y"):
        lam, q = _jx_eigensystem(state.n_particles)
        if axis == "y":
            d = _z_half_turn_phases(state.n_particles)
            out = d * (q @ (np.exp(-1j * angle * lam) * (q.T @ (d.conj() * psi))))
        else:
            out = q @ (np.exp(-1j * angle * lam) * (q.T @ psi))
    else:
        raise ValueError(f"axis must be one of x, y, z; got {axis!r}")
    return SpinState(state.n_particles, out)


def apply_phase_z(state, phi):
    """Phase evolution exp(-i phi Jz): amplitude at n picks up exp(-i phi n)."""
    return SpinState(
        state.n_particles, np.exp(-1j * phi * state.n_values) * state.amplitudes
    )


def apply_one_axis_twist(state, tau):
    """One-axis twisting exp(-i tau Jz^2)."""
    return SpinState(
        state.n_particles,
        np.exp(-1j * tau * state.n_values**2) * state.amplitudes,
    )


def to_axis_basis(state, axis):
    """Amplitudes of `state` in the eigenbasis of J_axis, ascending eigenvalue."""
    if axis == "z":
        return state.amplitudes.copy()
    if axis not in ("x", "y"):
        raise ValueError(f"axis must be one of x, y, z; got {axis!r}")
    _, q = _jx_eigensystem(state.n_particles)
    psi = state.amplitudes
    if axis == "y":
        psi = _z_half_turn_phases(state.n_particles).conj() * psi
    return q.T @ psi
