"""Effective density matrices, decoherence-free blocks, and quantum Fisher
information bounds for the two-interferometer system.

All joint operators are written in the eigenbasis of the phase generator of
each interferometer; basis labels n_i run over -N_i/2 ... N_i/2 and joint
indices are row-major over (n1, n2).  Averaging over factorized phase noise
multiplies each coherence elementwise by a kernel that depends only on the
index differences, which erases everything outside fixed-M blocks when one
noise component is a point mass and the other is flat.
"""

import numpy as np
from dataclasses import dataclass

from .noise import fourier_coefficients

# exact QFI diagonalizes the full joint matrix, which grows as (N+1)^4;
# guard against accidental large-N use (bounds and the spectral pipeline
# cover that regime)
QFI_PARTICLE_GUARD = 12

_HERM_TOL = 1e-12
_TRACE_TOL = 1e-12
_PSD_TOL = 1e-10


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian unit-trace operator on the joint (N1+1)(N2+1) basis."""

    n1: int
    n2: int
    matrix: np.ndarray

    def __post_init__(self):
        dim = (self.n1 + 1) * (self.n2 + 1)
        m = np.ascontiguousarray(self.matrix, dtype=complex)
        if m.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > _HERM_TOL:
            raise ValueError("matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > _TRACE_TOL:
            raise ValueError(f"trace is {np.trace(m)!r}, not 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dimension(self):
        return self.matrix.shape[0]

    def basis_labels(self):
        """(n1, n2) eigenvalue pair for every joint index."""
        h1, h2 = self.n1 // 2, self.n2 // 2
        n1 = np.repeat(np.arange(-h1, h1 + 1), self.n2 + 1)
        n2 = np.tile(np.arange(-h2, h2 + 1), self.n1 + 1)
        return n1, n2

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)


def density_from_amplitudes(amplitudes):
    """Pure joint state |psi><psi| from an (N1+1, N2+1) amplitude table."""
    amps = np.asarray(amplitudes, dtype=complex)
    n1, n2 = amps.shape[0] - 1, amps.shape[1] - 1
    vec = amps.ravel()
    return DensityMatrix(n1, n2, np.outer(vec, vec.conj()))


def density_from_product(amps1, amps2):
    """Pure product state of the two interferometers."""
    return density_from_amplitudes(np.outer(np.asarray(amps1), np.asarray(amps2)))


@dataclass(frozen=True)
class DecoherenceKernel:
    """Factorized coherence attenuation C(d1, d2) = F+(d1+d2) F-(d1-d2),
    where F is the characteristic function <exp(-i k eps)> of each noise
    component and d_i = n_i - m_i."""

    n_particles: int
    char_total: np.ndarray
    char_relative: np.ndarray

    def __post_init__(self):
        for name in ("char_total", "char_relative"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=complex)
            if arr.shape != (2 * self.n_particles + 1,):
                raise ValueError(f"{name} must cover k = 0 .. 2N")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def _lookup(self, char, k):
        # negative frequencies by conjugation: F(-k) = conj F(k)
        k = np.asarray(k)
        vals = char[np.abs(k)]
        return np.where(k < 0, vals.conj(), vals)

    def value(self, d1, d2):
        return self._lookup(self.char_total, d1 + d2) * self._lookup(
            self.char_relative, d1 - d2
        )

    def matrix(self, n1, n2):
        """Elementwise kernel aligned with the joint density-matrix indexing."""
        h1, h2 = n1 // 2, n2 // 2
        lbl1 = np.repeat(np.arange(-h1, h1 + 1), n2 + 1)
        lbl2 = np.tile(np.arange(-h2, h2 + 1), n1 + 1)
        d1 = lbl1[:, None] - lbl1[None, :]
        d2 = lbl2[:, None] - lbl2[None, :]
        return self.value(d1, d2)


def decoherence_kernel(noise, n_particles):
    """Kernel of a factorized NoisePair, from moments up to 2N."""
    ft = fourier_coefficients(noise.total, 2 * n_particles)
    fr = fourier_coefficients(noise.relative, 2 * n_particles)
    return DecoherenceKernel(n_particles, ft.V - 1j * ft.W, fr.V - 1j * fr.W)


def effective_density_matrix(rho, kernel):
    """Noise-averaged state: elementwise product of rho with the kernel.

    Hermiticity and trace are preserved exactly; positivity can only fail
    for a non-physical kernel, which is reported.
    """
    if max(rho.n1, rho.n2) > kernel.n_particles:
        raise ValueError("kernel frequency range too small for this state")
    out = rho.matrix * kernel.matrix(rho.n1, rho.n2)
    eff = DensityMatrix(rho.n1, rho.n2, out)
    lowest = eff.eigenvalues()[0]
    if lowest < -1e-8:
        raise ValueError(
            f"effective state has eigenvalue {lowest:.3e}: noise kernel is not "
            "positive definite"
        )
    return eff


@dataclass(frozen=True)
class BlockDecomposition:
    """Fixed-M decomposition of a block-diagonal joint state.

    convention "sum" uses M = n1 + n2 (point-mass relative noise);
    "difference" uses M = n1 - n2 (point-mass total noise).  weights[M] is
    the population of block M; blocks[M] the renormalized state restricted
    to the block's index set.
    """

    convention: str
    weights: dict
    blocks: dict
    index_sets: dict

    def weight(self, m):
        return self.weights.get(m, 0.0)


def block_decomposition(rho, convention="sum"):
    if convention not in ("sum", "difference"):
        raise ValueError(f"convention must be sum or difference, got {convention!r}")
    n1, n2 = rho.basis_labels()
    m_vals = n1 + n2 if convention == "sum" else n1 - n2
    weights, blocks, index_sets = {}, {}, {}
    for m in np.unique(m_vals):
        idx = np.flatnonzero(m_vals == m)
        sub = rho.matrix[np.ix_(idx, idx)]
        q = float(np.trace(sub).real)
        if q <= 1e-15:
            continue
        weights[int(m)] = q
        blocks[int(m)] = sub / q
        index_sets[int(m)] = idx
    return BlockDecomposition(convention, weights, blocks, index_sets)


def qfi_exact(rho, generator=None, max_particles=QFI_PARTICLE_GUARD):
    """Quantum Fisher information 4 (Delta R)^2 by full diagonalization.

    The symmetric-logarithmic-derivative sum runs over eigenpair indices
    with p_i + p_j above 1e-12 of the largest eigenvalue (removable
    singularities excluded).  `generator` defaults to J1 x 1, diagonal in
    the chosen basis.
    """
    if max(rho.n1, rho.n2) > max_particles:
        raise ValueError(
            f"qfi_exact is an exact small-system oracle (N <= {max_particles}); "
            f"got N1={rho.n1}, N2={rho.n2}"
        )
    if generator is None:
        n1, _ = rho.basis_labels()
        generator = np.diag(n1.astype(float))
    generator = np.asarray(generator, dtype=complex)
    if generator.shape != rho.matrix.shape:
        raise ValueError("generator dimension mismatch")
    p, u = np.linalg.eigh(rho.matrix)
    if p[0] < -_PSD_TOL:
        raise ValueError(f"state has eigenvalue {p[0]:.3e} < -{_PSD_TOL}")
    p = np.clip(p, 0.0, None)
    cut = 1e-12 * p[-1]
    g = u.conj().T @ generator @ u
    psum = p[:, None] + p[None, :]
    pdif = p[:, None] - p[None, :]
    mask = psum > cut
    terms = np.zeros_like(psum)
    terms[mask] = pdif[mask] ** 2 / psum[mask]
    return float(2 * np.sum(terms * np.abs(g) ** 2))


def qfi_block_bounds(decomp, n_particles, which="general"):
    """Upper bounds on the effective-state QFI from block populations.

    general:    N^2 - sum_{M>=1} (Q_M + Q_-M) (2N - M) M
    separable:  N   - sum_{M>=Mt} (Q_M + Q_-M) [N - (N - M)^2],
                Mt the smallest M with (N - M)^2 <= N (ties included).

    Both are maximized by confining the state to the M = 0 block.
    """
    total = sum(decomp.weights.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"block weights sum to {total!r}, not 1")
    n = n_particles
    paired = lambda m: decomp.weight(m) + decomp.weight(-m)
    if which == "general":
        return float(n**2 - sum(paired(m) * (2 * n - m) * m for m in range(1, n + 1)))
    if which == "separable":
        m_tilde = int(np.ceil(n - np.sqrt(n)))
        while (n - m_tilde) ** 2 > n:  # guard against float-boundary slip
            m_tilde += 1
        return float(
            n - sum(paired(m) * (n - (n - m) ** 2) for m in range(m_tilde, n + 1))
        )
    raise ValueError(f"which must be general or separable, got {which!r}")


def cramer_rao(fisher, repetitions=1):
    """Phase uncertainty bound 1 / sqrt(m F)."""
    if fisher <= 0:
        raise ValueError(f"Fisher information must be positive, got {fisher!r}")
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions!r}")
    return 1.0 / np.sqrt(repetitions * fisher)
