"""Probe states for the differential interferometer.

Covers the maximally entangled two-component superposition (NOON), the spin
coherent and twin-Fock states, ground states of the two-mode Josephson
Hamiltonian  chi Jz^2 - Omega Jx  (adiabatic preparation), one-axis-twisted
coherent states with an optimizing rotation (diabatic preparation), and the
jointly entangled pair states that live entirely inside one
decoherence-free block.
"""

import numpy as np
from dataclasses import dataclass
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from . import engine
from .noise import Delta
from .spin import (
    SpinState,
    _ladder_factors,
    apply_one_axis_twist,
    apply_rotation,
    check_even_n,
    jz_values,
)


@dataclass(frozen=True)
class JointState:
    """Pure state of both interferometers: amplitude table over (n1, n2)."""

    n1: int
    n2: int
    amplitudes: np.ndarray

    def __post_init__(self):
        check_even_n(self.n1)
        check_even_n(self.n2)
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.n1 + 1, self.n2 + 1):
            raise ValueError(
                f"expected amplitude table ({self.n1 + 1}, {self.n2 + 1}), "
                f"got {amps.shape}"
            )
        norm = np.sum(np.abs(amps) ** 2)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"joint state not normalized: sum |a|^2 = {norm!r}")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)


@dataclass(frozen=True)
class PreparationConfig:
    """Knobs of the adiabatic/diabatic preparation stage.

    lam is the interaction-to-tunneling ratio N chi / Omega; tau the
    dimensionless twisting time chi t; delta the optimizing rotation angle.
    """

    lam: float = 0.0
    tau: float = 0.0
    delta: float | None = None
    rotation_axis: str = "x"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam!r}")
        if not 0 <= self.tau <= np.pi:
            raise ValueError(f"tau must lie in [0, pi], got {self.tau!r}")
        if self.rotation_axis not in ("x", "y", "z"):
            raise ValueError(f"bad rotation axis {self.rotation_axis!r}")


def noon_state(n_particles):
    """(|N/2> + |-N/2>)/sqrt(2)."""
    check_even_n(n_particles)
    amps = np.zeros(n_particles + 1, dtype=complex)
    amps[0] = amps[-1] = 1 / np.sqrt(2)
    return SpinState(n_particles, amps)


def coherent_x_state(n_particles):
    """Spin coherent state along +x: binomial amplitudes in the Jz basis."""
    check_even_n(n_particles)
    half = n_particles // 2
    n = jz_values(n_particles)
    # sqrt(C(N, N/2+n)) / 2^(N/2), computed in log space for large N
    log_amp = 0.5 * (
        gammaln(n_particles + 1)
        - gammaln(half + n + 1)
        - gammaln(half - n + 1)
    ) - half * np.log(2)
    return SpinState(n_particles, np.exp(log_amp))


def twin_fock_state(n_particles):
    """Equal occupation of both modes: |n = 0>."""
    check_even_n(n_particles)
    amps = np.zeros(n_particles + 1, dtype=complex)
    amps[n_particles // 2] = 1.0
    return SpinState(n_particles, amps)


def adiabatic_ground_state(n_particles, lam):
    """Ground state of (lam/N) Jz^2 - Jx.

    Solved as a real symmetric tridiagonal eigenproblem (bisection plus
    inverse iteration, O(N) memory).  In the deep interaction regime the two
    lowest levels are nearly degenerate; the even-parity combination is
    selected, matching the twin-Fock limit, and the phase is fixed so the
    n = 0 amplitude is real nonnegative.
    """
    check_even_n(n_particles)
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam!r}")
    diag = (lam / n_particles) * jz_values(n_particles) ** 2
    offdiag = -_ladder_factors(n_particles) / 2
    try:
        _, vecs = eigh_tridiagonal(diag, offdiag, select="i", select_range=(0, 1))
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(
            f"ground-state eigensolver failed for N={n_particles}, lam={lam!r}: {exc}"
        ) from exc
    # parity-project both candidates; the even one is the physical ground state
    even0 = vecs[:, 0] + vecs[::-1, 0]
    even1 = vecs[:, 1] + vecs[::-1, 1]
    g = even0 if np.linalg.norm(even0) >= np.linalg.norm(even1) else even1
    g = g / np.linalg.norm(g)
    mid = g[n_particles // 2]
    anchor = mid if abs(mid) > 1e-300 else g[np.argmax(np.abs(g))]
    if anchor < 0:
        g = -g
    return SpinState(n_particles, g)


def _noiseless_mz_fisher_max(state, grid=256):
    # inner objective for the rotation scan: single-interferometer Fisher
    # information with number measurement, no noise, maximized over the phase
    probe = engine.single_probability_fourier(state, "mz-y")
    table = engine.joint_fourier(
        probe, engine.constant_probe(state.n_particles),
        engine.noise_kernel(Delta(), state.n_particles),
    )
    period = engine.inferred_period(table)
    return engine.maximize_fisher(
        lambda t: engine.fisher_from_fourier(table, t), period, grid=grid, xtol=1e-8
    ).fisher


def _best_rotation(n_particles, tau, axis, grid, xtol=1e-6):
    # scan [0, pi) then golden-refine the noiseless objective
    base = apply_one_axis_twist(coherent_x_state(n_particles), tau)
    objective = lambda d: _noiseless_mz_fisher_max(apply_rotation(base, axis, -d))
    deltas = np.arange(grid) * (np.pi / grid)
    values = np.array([objective(d) for d in deltas])
    best = int(np.argmax(values))
    step = np.pi / grid
    d_star, f_star = engine._golden_max(
        objective, deltas[best] - step, deltas[best] + step, xtol
    )
    if f_star < values[best]:
        d_star, f_star = deltas[best], values[best]
    return float(d_star), float(f_star)


def optimal_twist_rotation(n_particles, tau, axis="x", grid=720, xtol=1e-6):
    """Rotation angle maximizing the noiseless Fisher information of the
    twisted coherent state, scanned over [0, pi) and refined by golden
    section."""
    return _best_rotation(n_particles, tau, axis, grid, xtol)[0]


def diabatic_state(n_particles, tau, axis="x", delta=None, rotation_grid=720):
    """One-axis-twisted coherent state with the optimizing rotation applied.

    exp(i delta J_axis) exp(-i tau Jz^2) |N/2>_x; when `delta` is omitted it
    is chosen to maximize the noiseless differential Fisher information with
    number measurement.  axis "auto" also optimizes over the rotation axis:
    the mean-spin direction x serves the squeezing regime, while the cat
    states of the long-time dynamics need an equatorial (z) rotation.
    """
    check_even_n(n_particles)
    if not 0 <= tau <= np.pi:
        raise ValueError(f"tau must lie in [0, pi], got {tau!r}")
    if axis == "auto":
        if delta is not None:
            raise ValueError("axis='auto' chooses delta itself")
        (dx, fx), (dz, fz) = (
            _best_rotation(n_particles, tau, ax, rotation_grid) for ax in ("x", "z")
        )
        axis, delta = ("x", dx) if fx >= fz else ("z", dz)
    elif delta is None:
        delta = optimal_twist_rotation(n_particles, tau, axis, grid=rotation_grid)
    twisted = apply_one_axis_twist(coherent_x_state(n_particles), tau)
    return apply_rotation(twisted, axis, -delta)


def prepared_state(n_particles, config):
    """Probe from a PreparationConfig: twisted-and-rotated when tau > 0,
    otherwise the Josephson ground state at the configured lam."""
    if config.tau > 0 or config.delta is not None:
        return diabatic_state(
            n_particles, config.tau, config.rotation_axis, config.delta
        )
    return adiabatic_ground_state(n_particles, config.lam)


def optimal_entangled_state(n_particles, variant):
    """Jointly entangled pair state confined to one decoherence-free block.

    variant "relative-delta": (|N/2,-N/2> + |-N/2,N/2>)/sqrt(2), protected
    when the relative noise is a point mass; "total-delta":
    (|N/2,N/2> + |-N/2,-N/2>)/sqrt(2), protected for point-mass total noise.
    """
    check_even_n(n_particles)
    amps = np.zeros((n_particles + 1, n_particles + 1), dtype=complex)
    if variant == "relative-delta":
        amps[-1, 0] = amps[0, -1] = 1 / np.sqrt(2)
    elif variant == "total-delta":
        amps[-1, -1] = amps[0, 0] = 1 / np.sqrt(2)
    else:
        raise ValueError(f"variant must be relative-delta or total-delta, got {variant!r}")
    return JointState(n_particles, n_particles, amps)
