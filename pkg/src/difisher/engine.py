"""Spectral computation of differential-interferometer Fisher information.

Pipeline: outcome probabilities of each interferometer are trigonometric
polynomials of degree <= N in the phase, so they are represented exactly by
Fourier coefficients extracted on a power-of-two mesh.  Contracting the two
coefficient tables with trigonometric moment matrices of the total-noise
density yields the joint outcome distribution analytically in the signal
phase; its derivative, and hence the Fisher information, follow term by term.

The relative noise between the interferometers is assumed perfectly
correlated (a point mass); arbitrary relative noise is handled by the
closed-form NOON module or by brute force.
"""

import hashlib
import math

import numpy as np
from dataclasses import dataclass, field
from scipy.linalg import eigh, expm

from . import spin
from .noise import fourier_coefficients

# outcome terms with P below this are dropped unless their derivative is
# significant, in which case the phase sits on a probability zero crossing
PROB_FLOOR = 1e-15
DERIV_FLOOR = 1e-12
_CROSSING_SHIFT = 1e-9
_NEGATIVE_PROB = -1e-9
_PRUNE_TOL = 1e-14

TABLE_CACHE_VERSION = 1


class EngineError(RuntimeError):
    """Numerical-consistency failure in the spectral pipeline."""


@dataclass(frozen=True)
class FisherResult:
    """Maximized Fisher information with the sampled curve that produced it."""

    theta: float
    fisher: float
    curve_thetas: np.ndarray | None = None
    curve_values: np.ndarray | None = None

    def write_curve_csv(self, path):
        """Emit the sampled curve as two-column CSV (theta, F)."""
        if self.curve_thetas is None:
            raise ValueError("no sampled curve attached to this result")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("theta,F\n")
            for t, f in zip(self.curve_thetas, self.curve_values):
                fh.write(f"{t:.17g},{f:.17g}\n")


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit F = beta * N**alpha on log-log axes."""

    beta: float
    alpha: float
    rms_residual: float


@dataclass(frozen=True)
class ConditionalProbabilityFourier:
    """Per-outcome expansion P(mu|x) = sum_k a_k(mu) cos kx + b_k(mu) sin kx.

    `a` and `b` have shape (N+1, n_outcomes): rows are frequencies k = 0..N,
    columns are measurement outcomes.
    """

    n_particles: int
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.a, dtype=float)
        b = np.ascontiguousarray(self.b, dtype=float)
        if a.ndim != 2 or a.shape != b.shape or a.shape[0] != self.n_particles + 1:
            raise ValueError(
                f"coefficient tables must be (N+1, n_outcomes), got {a.shape}/{b.shape}"
            )
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n_outcomes(self):
        return self.a.shape[1]

    def evaluate(self, x):
        """P(mu|x) for scalar or 1-d x; returns (n_outcomes,) or (n_outcomes, len(x))."""
        x = np.asarray(x, dtype=float)
        k = np.arange(self.n_particles + 1)
        kx = np.multiply.outer(k, x)
        out = np.tensordot(self.a, np.cos(kx), axes=(0, 0)) + np.tensordot(
            self.b, np.sin(kx), axes=(0, 0)
        )
        return out


def probability_mesh_size(n_particles):
    """Power-of-two mesh with margin over the 2N+1 points Shannon requires."""
    return 1 << int(np.ceil(np.log2(4 * n_particles + 4)))


def single_probability_fourier(probe, interferometer):
    """Exact Fourier table of P(mu|x) for one interferometer.

    interferometer:
      "mz-y"        -- U(x) = exp(-i x Jy), number measurement
      "bs-after-z"  -- U(x) = exp(-i pi/2 Jx) exp(-i x Jz), number measurement

    The outcome amplitudes are evaluated on a uniform mesh large enough that
    the discrete transform recovers the trigonometric coefficients exactly;
    residual energy above frequency N signals a model bug and raises.
    """
    n = probe.n_particles
    psi = probe.amplitudes
    if interferometer == "mz-y":
        lam, q = spin._jx_eigensystem(n)
        d = np.exp(-0.5j * np.pi * spin.jz_values(n))
        mmat = d[:, None] * q
        coeff = q.T @ (d.conj() * psi)
        freqs = lam.astype(int)
    elif interferometer == "bs-after-z":
        mmat = spin.rotation(n, "x", np.pi / 2).entries
        coeff = psi
        freqs = spin.jz_values(n).astype(int)
    else:
        raise ValueError(f"unknown interferometer {interferometer!r}")

    mesh = probability_mesh_size(n)
    buf = np.zeros((n + 1, mesh), dtype=complex)
    buf[:, freqs % mesh] = mmat * coeff[None, :]
    amps = np.fft.fft(buf, axis=1)  # A(mu, x_j) at x_j = 2 pi j / mesh
    prob = np.abs(amps) ** 2
    coef = np.fft.rfft(prob, axis=1) / mesh

    tail = np.max(np.abs(coef[:, n + 1 :])) * 2 if coef.shape[1] > n + 1 else 0.0
    if tail > 1e-10:
        raise EngineError(
            f"aliasing check failed for {interferometer!r} at N={n}: "
            f"energy {tail:.3e} above frequency N"
        )

    a = 2 * coef[:, : n + 1].real
    a[:, 0] /= 2
    b = -2 * coef[:, : n + 1].imag
    b[:, 0] = 0.0
    return ConditionalProbabilityFourier(n, a.T, b.T)


def constant_probe(n_particles):
    """Single-outcome dummy probe with P(mu|x) = 1; reduces a joint table to
    the noise-smeared distribution of the other interferometer."""
    a = np.zeros((n_particles + 1, 1))
    a[0, 0] = 1.0
    return ConditionalProbabilityFourier(n_particles, a, np.zeros_like(a))


@dataclass(frozen=True)
class NoiseKernelMatrices:
    """Trigonometric moment matrices of the total-noise density.

    C[k,k'] = <cos k eps cos k' eps>, S[k,k'] = <cos k eps sin k' eps>,
    SS[k,k'] = <sin k eps sin k' eps>, for k, k' = 0..N.  All are assembled
    from the moments V, W up to 2N through product-to-sum identities
    (Toeplitz-plus-Hankel structure), so no quadrature per entry is needed.
    """

    n_particles: int
    C: np.ndarray
    S: np.ndarray
    SS: np.ndarray

    def __post_init__(self):
        for name in ("C", "S", "SS"):
            m = np.ascontiguousarray(getattr(self, name), dtype=float)
            if m.shape != (self.n_particles + 1, self.n_particles + 1):
                raise ValueError(f"kernel matrix {name} has shape {m.shape}")
            m.setflags(write=False)
            object.__setattr__(self, name, m)


def noise_kernel(noise_total, n_particles):
    """Moment matrices of the total-noise density up to frequency N."""
    fc = fourier_coefficients(noise_total, 2 * n_particles)
    v, w = fc.V, fc.W
    k = np.arange(n_particles + 1)
    diff = k[:, None] - k[None, :]
    tot = k[:, None] + k[None, :]
    c = (v[np.abs(diff)] + v[tot]) / 2
    s = (w[tot] - np.sign(diff) * w[np.abs(diff)]) / 2
    ss = (v[np.abs(diff)] - v[tot]) / 2
    return NoiseKernelMatrices(n_particles, c, s, ss)


@dataclass(frozen=True)
class JointFourierTable:
    """Joint-outcome distribution, analytic in the signal phase.

    Stored in factored form: the first interferometer's coefficient tables
    plus the second's tables smeared by the noise kernel,

        cos_smear[k, mu2] = <cos(k eps) P2(mu2|eps)>,
        sin_smear[k, mu2] = <sin(k eps) P2(mu2|eps)>,

    so that the cos/sin coefficients of P(mu1, mu2|theta) are elementwise
    products.  Memory stays O(N^2) where the expanded tensor would be O(N^3).
    Frequency rows that vanish identically are pruned from the evaluation
    path (exact for definite-parity probes, which carry only every other k).
    """

    n_particles: int
    a1: np.ndarray
    b1: np.ndarray
    cos_smear: np.ndarray
    sin_smear: np.ndarray
    _k: np.ndarray = field(init=False, repr=False, compare=False)
    _use_b1: bool = field(init=False, repr=False, compare=False)
    _use_sin: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.n_particles
        for name in ("a1", "b1", "cos_smear", "sin_smear"):
            m = np.ascontiguousarray(getattr(self, name), dtype=float)
            if m.ndim != 2 or m.shape[0] != n + 1:
                raise ValueError(f"{name} must have N+1 frequency rows")
            object.__setattr__(self, name, m)
        if self.a1.shape != self.b1.shape:
            raise ValueError("a1/b1 shape mismatch")
        if self.cos_smear.shape != self.sin_smear.shape:
            raise ValueError("smear-table shape mismatch")

        # row k contributes only if probe 1 and the smeared probe 2 both
        # carry it; row 0 holds the normalization and is always kept
        row_mag = lambda m: np.max(np.abs(m), axis=1)
        probe_live = np.maximum(row_mag(self.a1), row_mag(self.b1)) > _PRUNE_TOL
        smear_live = (
            np.maximum(row_mag(self.cos_smear), row_mag(self.sin_smear)) > _PRUNE_TOL
        )
        live = probe_live & smear_live
        live[0] = True
        keep = np.flatnonzero(live)
        object.__setattr__(self, "_k", keep.astype(float))
        for name in ("a1", "b1", "cos_smear", "sin_smear"):
            full = getattr(self, name)
            full.setflags(write=False)
            object.__setattr__(self, "_" + name, np.ascontiguousarray(full[keep]))
        object.__setattr__(
            self, "_use_b1", bool(np.max(np.abs(self._b1), initial=0) > _PRUNE_TOL)
        )
        object.__setattr__(
            self, "_use_sin", bool(np.max(np.abs(self._sin_smear), initial=0) > _PRUNE_TOL)
        )

    @property
    def n_outcomes(self):
        return self.a1.shape[1], self.cos_smear.shape[1]

    def active_frequencies(self):
        return self._k.astype(int)

    def coefficients(self, mu1, mu2):
        """Full cos/sin coefficient vectors A_k, B_k of P(mu1, mu2|theta)."""
        a_k = self.a1[:, mu1] * self.cos_smear[:, mu2] + self.b1[:, mu1] * self.sin_smear[:, mu2]
        b_k = self.b1[:, mu1] * self.cos_smear[:, mu2] - self.a1[:, mu1] * self.sin_smear[:, mu2]
        return a_k, b_k

    def probability(self, theta):
        """Joint table P(mu1, mu2|theta), shape (n_outcomes1, n_outcomes2)."""
        c = np.cos(self._k * theta)[:, None]
        s = np.sin(self._k * theta)[:, None]
        if self._use_sin:
            x = self._cos_smear * c - self._sin_smear * s
            y = self._cos_smear * s + self._sin_smear * c
        else:
            x = self._cos_smear * c
            y = self._cos_smear * s
        p = self._a1.T @ x
        if self._use_b1:
            p += self._b1.T @ y
        return p

    def probability_and_derivative(self, theta):
        """P and dP/dtheta at one phase, both (n_outcomes1, n_outcomes2)."""
        kcol = self._k[:, None]
        c = np.cos(kcol * theta)
        s = np.sin(kcol * theta)
        if self._use_sin:
            x = self._cos_smear * c - self._sin_smear * s
            y = self._cos_smear * s + self._sin_smear * c
        else:
            x = self._cos_smear * c
            y = self._cos_smear * s
        p = self._a1.T @ x
        dp = self._a1.T @ (-kcol * y)
        if self._use_b1:
            p += self._b1.T @ y
            dp += self._b1.T @ (kcol * x)
        return p, dp


def joint_fourier(probe1, probe2, kernel):
    """Contract two single-interferometer tables with the noise kernel.

    The kernel matmuls against probe 2 are the only O(N^3) step; they are
    reused across every outcome of probe 1.
    """
    n = kernel.n_particles
    if probe1.n_particles != n or probe2.n_particles != n:
        raise ValueError(
            f"dimension mismatch: probes N={probe1.n_particles},{probe2.n_particles} "
            f"vs kernel N={n}"
        )
    a2, b2 = probe2.a, probe2.b
    live2 = np.flatnonzero(
        np.maximum(np.max(np.abs(a2), axis=1), np.max(np.abs(b2), axis=1)) > _PRUNE_TOL
    )
    cos_smear = kernel.C[:, live2] @ a2[live2]
    sin_smear = kernel.S.T[:, live2] @ a2[live2]
    if np.max(np.abs(b2), initial=0) > _PRUNE_TOL:
        cos_smear += kernel.S[:, live2] @ b2[live2]
        sin_smear += kernel.SS[:, live2] @ b2[live2]
    return JointFourierTable(n, probe1.a, probe1.b, cos_smear, sin_smear)


def build_joint_table(state1, state2, interferometer, noise_total):
    """Probe expansion + kernel contraction for a pair of spin states."""
    p1 = single_probability_fourier(state1, interferometer)
    p2 = single_probability_fourier(state2, interferometer)
    kern = noise_kernel(noise_total, state1.n_particles)
    return joint_fourier(p1, p2, kern)


def inferred_period(table):
    """Smallest period 2 pi / gcd(active frequencies) of the joint table."""
    k = table.active_frequencies()
    k = k[k > 0]
    if k.size == 0:
        return 2 * np.pi
    return 2 * np.pi / np.gcd.reduce(k)


def _fisher_sum(p, dp, exact=False):
    """Outcome sum of (dP)^2 / P with the small-probability rule.

    Returns (fisher, crossing): `crossing` is set when some outcome has
    vanishing probability but non-vanishing derivative, i.e. the phase sits
    on a probability zero.
    """
    p = p.ravel()
    dp = dp.ravel()
    small = p < PROB_FLOOR
    crossing = bool(np.any(small & (np.abs(dp) >= DERIV_FLOOR)))
    keep = ~small
    terms = dp[keep] ** 2 / p[keep]
    if exact:
        return math.fsum(terms.tolist()), crossing
    return float(np.sum(terms)), crossing


def fisher_from_fourier(table, theta):
    """Fisher information of the joint table at one phase.

    The derivative is analytic (frequency-weighted series).  At probability
    zero crossings the value is the average of evaluations at
    theta +- 1e-9.  Outcome sums use exact (compensated) summation for
    N >= 500.
    """
    exact = table.n_particles >= 500
    p, dp = table.probability_and_derivative(theta)
    if p.min() < _NEGATIVE_PROB:
        raise EngineError(
            f"reconstructed probability {p.min():.3e} < {_NEGATIVE_PROB} at theta={theta}"
        )
    f, crossing = _fisher_sum(p, dp, exact)
    if not crossing:
        return f
    vals = []
    for shifted in (theta - _CROSSING_SHIFT, theta + _CROSSING_SHIFT):
        ps, dps = table.probability_and_derivative(shifted)
        vals.append(_fisher_sum(ps, dps, exact)[0])
    return 0.5 * (vals[0] + vals[1])


def fisher_curve(table, thetas):
    """fisher_from_fourier evaluated over an array of phases."""
    return np.array([fisher_from_fourier(table, t) for t in np.asarray(thetas)])


def _golden_max(f, lo, hi, xtol):
    invphi = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def maximize_fisher(curve, period, grid=512, xtol=1e-10):
    """Coarse scan of one period plus golden-section refinement.

    `curve` maps theta -> F(theta); the grid is offset by half a step so the
    scan never lands exactly on trigonometric zeros.
    """
    if not period > 0:
        raise ValueError(f"period hint must be positive, got {period!r}")
    step = period / grid
    thetas = (np.arange(grid) + 0.5) * step
    values = np.array([curve(t) for t in thetas])
    best = int(np.argmax(values))
    theta_star, f_star = _golden_max(
        curve, thetas[best] - step, thetas[best] + step, xtol
    )
    if f_star < values[best]:
        theta_star, f_star = thetas[best], values[best]
    return FisherResult(float(theta_star), float(f_star), thetas, values)


def differential_fisher_max(state1, state2, interferometer, noise_total,
                            period=None, grid=512):
    """End-to-end maximized Fisher information for a probe pair."""
    table = build_joint_table(state1, state2, interferometer, noise_total)
    if period is None:
        period = inferred_period(table)
    return maximize_fisher(lambda t: fisher_from_fourier(table, t), period, grid)


# ---------------------------------------------------------------------------
# brute-force oracle: direct quadrature of the defining integral, sharing no
# code with the Fourier pipeline


def _oracle_spin_ops(n_particles):
    j = n_particles / 2
    n = np.arange(-j, j + 1)
    jp = np.zeros((n_particles + 1, n_particles + 1))
    for i in range(n_particles):
        jp[i + 1, i] = np.sqrt(j * (j + 1) - n[i] * (n[i] + 1))
    jx = (jp + jp.T) / 2
    jy = (jp - jp.T) / 2j
    return jx, jy, n


def _oracle_prob_fn(state, interferometer):
    """Returns mu-probability table as a function of the phase x."""
    n_part = state.n_particles
    psi = state.amplitudes
    jx, jy, nvals = _oracle_spin_ops(n_part)
    if interferometer == "mz-y":
        w, u = eigh(jy)

        def prob(x):
            return np.abs(u @ (np.exp(-1j * x * w) * (u.conj().T @ psi))) ** 2

    elif interferometer == "bs-after-z":
        bs = expm(-1j * (np.pi / 2) * jx)

        def prob(x):
            return np.abs(bs @ (np.exp(-1j * x * nvals) * psi)) ** 2

    else:
        raise ValueError(f"unknown interferometer {interferometer!r}")
    return prob


def _oracle_noise_weights(noise_total, mesh):
    if noise_total.is_singular:
        return noise_total.atoms()
    eps = -np.pi + (np.arange(mesh) + 0.5) * (2 * np.pi / mesh)
    return eps, noise_total.density(eps) * (2 * np.pi / mesh)


def bruteforce_joint_probability(state1, state2, interferometer, noise_total,
                                 theta, mesh):
    """P(mu1, mu2|theta) by direct quadrature over the shared noise phase."""
    if not noise_total.is_singular and mesh < 4 * state1.n_particles + 4:
        raise ValueError(f"mesh {mesh} too coarse, need >= 4N+4")
    prob1 = _oracle_prob_fn(state1, interferometer)
    prob2 = _oracle_prob_fn(state2, interferometer)
    eps, w = _oracle_noise_weights(noise_total, mesh)
    out = np.zeros((state1.n_particles + 1, state2.n_particles + 1))
    for e, we in zip(eps, w):
        out += we * np.outer(prob1(theta + e), prob2(e))
    return out


def fisher_bruteforce(state1, state2, interferometer, noise_total, theta,
                      mesh=None):
    """Fisher information by quadrature plus central finite differences.

    Independent oracle for the spectral pipeline: probabilities come from
    dense unitaries, the derivative from a finite difference with step
    1e-6/N (the distribution oscillates at frequency N).
    """
    if mesh is None:
        mesh = 4 * state1.n_particles + 4
    h = 1e-6 / state1.n_particles
    args = (state1, state2, interferometer, noise_total)
    p0 = bruteforce_joint_probability(*args, theta, mesh)
    pp = bruteforce_joint_probability(*args, theta + h, mesh)
    pm = bruteforce_joint_probability(*args, theta - h, mesh)
    dp = (pp - pm) / (2 * h)
    keep = p0 > PROB_FLOOR
    return float(np.sum(dp[keep] ** 2 / p0[keep]))


# ---------------------------------------------------------------------------
# scaling-law fits


def fit_power_law(n_values, fisher_values, tail_from=None):
    """Fit F = beta * N**alpha by least squares on (log N, log F).

    tail_from restricts the fit to N >= tail_from.
    """
    n = np.asarray(n_values, dtype=float)
    f = np.asarray(fisher_values, dtype=float)
    if n.shape != f.shape or n.ndim != 1:
        raise ValueError("need matching 1-d N and F arrays")
    if np.any(f <= 0) or np.any(n <= 0):
        raise ValueError("power-law fit requires positive N and F")
    if tail_from is not None:
        keep = n >= tail_from
        n, f = n[keep], f[keep]
    if n.size < 3:
        raise ValueError("need at least three points to fit")
    alpha, logbeta = np.polyfit(np.log(n), np.log(f), 1)
    resid = np.log(f) - (alpha * np.log(n) + logbeta)
    return PowerLawFit(float(np.exp(logbeta)), float(alpha), float(np.sqrt(np.mean(resid**2))))


# ---------------------------------------------------------------------------
# binary cache of joint tables


def cache_key(state1, state2, noise_total, interferometer):
    """Content hash identifying a joint table build."""
    h = hashlib.sha256()
    h.update(f"v{TABLE_CACHE_VERSION}:{interferometer}:{state1.n_particles}".encode())
    h.update(state1.amplitudes.tobytes())
    h.update(state2.amplitudes.tobytes())
    h.update(noise_total.descriptor().encode())
    return h.hexdigest()


def save_joint_table(table, path):
    np.savez_compressed(
        path,
        version=np.array([TABLE_CACHE_VERSION]),
        n_particles=np.array([table.n_particles]),
        a1=table.a1,
        b1=table.b1,
        cos_smear=table.cos_smear,
        sin_smear=table.sin_smear,
    )


def load_joint_table(path):
    with np.load(path) as payload:
        version = int(payload["version"][0])
        if version != TABLE_CACHE_VERSION:
            raise EngineError(
                f"cache version {version} incompatible with {TABLE_CACHE_VERSION}"
            )
        return JointFourierTable(
            int(payload["n_particles"][0]),
            payload["a1"],
            payload["b1"],
            payload["cos_smear"],
            payload["sin_smear"],
        )
