"""Phase-noise densities on [-pi, pi] and their trigonometric moments.

Every distribution exposes cosine/sine moments V_K = <cos(K eps)> and
W_K = <sin(K eps)>, which are the only noise data entering the analytic
interferometer formulas.  Point-mass variants (Delta, PointMasses) are kept
symbolic: they have exact moments but no pointwise density.
"""

import hashlib

import numpy as np
from dataclasses import dataclass, field
from scipy.special import ive

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class FourierCoefficients:
    """Trigonometric moments V_0..V_Kmax and W_0..W_Kmax of one density."""

    V: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.V, dtype=float)
        w = np.asarray(self.W, dtype=float)
        if v.shape != w.shape or v.ndim != 1:
            raise ValueError("V and W must be 1-d arrays of equal length")
        if abs(v[0] - 1.0) > 1e-12 or abs(w[0]) > 1e-12:
            raise ValueError("moment arrays must start with V_0 = 1, W_0 = 0")
        if np.max(np.abs(v)) > 1 + 1e-9 or np.max(np.abs(w)) > 1 + 1e-9:
            raise ValueError("trigonometric moments must lie in [-1, 1]")
        v.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "V", v)
        object.__setattr__(self, "W", w)

    @property
    def kmax(self):
        return len(self.V) - 1


class NoiseDistribution:
    """Base class; subclasses implement moments and (if finite) a density."""

    #: point-mass distributions have no finite density; callers must branch
    is_singular = False

    def fourier_coefficients(self, kmax):
        if kmax < 1:
            raise ValueError(f"kmax must be >= 1, got {kmax}")
        k = np.arange(kmax + 1)
        return FourierCoefficients(self._cos_moments(k), self._sin_moments(k))

    def density(self, eps):
        eps = np.asarray(eps, dtype=float)
        if np.any(eps < -np.pi - 1e-12) or np.any(eps > np.pi + 1e-12):
            raise ValueError("eps outside [-pi, pi]")
        if self.is_singular:
            raise ValueError(
                f"{type(self).__name__} is a point-mass distribution and has no "
                "pointwise density; use .atoms() instead"
            )
        return self._density(eps)

    def descriptor(self):
        """Stable text form used for hashing/caching."""
        raise NotImplementedError


@dataclass(frozen=True)
class Delta(NoiseDistribution):
    """Point mass at eps = 0 (no noise)."""

    is_singular = True

    def _cos_moments(self, k):
        return np.ones_like(k, dtype=float)

    def _sin_moments(self, k):
        return np.zeros_like(k, dtype=float)

    def atoms(self):
        return np.array([0.0]), np.array([1.0])

    def descriptor(self):
        return "delta"


@dataclass(frozen=True)
class Flat(NoiseDistribution):
    """Uniform density 1/(2 pi)."""

    def _cos_moments(self, k):
        return (np.asarray(k) == 0).astype(float)

    def _sin_moments(self, k):
        return np.zeros(len(k))

    def _density(self, eps):
        return np.broadcast_to(1 / (2 * np.pi), np.shape(eps)).copy()

    def descriptor(self):
        return "flat"


def _bessel_ratio(k, kappa):
    # I_k(kappa)/I_0(kappa) via exponentially scaled Bessel functions; safe
    # for kappa up to ~1e6 (widths down to 1e-3)
    if kappa == 0.0:
        return (np.asarray(k) == 0).astype(float)
    return ive(k, kappa) / ive(0, kappa)


@dataclass(frozen=True)
class VonMises(NoiseDistribution):
    """Periodic bell exp(cos(eps)/sigma^2), normalized on [-pi, pi].

    Interpolates between a Gaussian of width sigma (sigma << 1) and the
    flat density (sigma >> 1).
    """

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")

    @property
    def concentration(self):
        return 1.0 / self.sigma**2

    def _cos_moments(self, k):
        return _bessel_ratio(k, self.concentration)

    def _sin_moments(self, k):
        return np.zeros(len(k))

    def _density(self, eps):
        kappa = self.concentration
        # exp is taken relative to the peak so large kappa cannot overflow
        return np.exp(kappa * (np.cos(eps) - 1.0)) / (2 * np.pi * ive(0, kappa))

    def descriptor(self):
        return f"vonmises:{self.sigma!r}"


@dataclass(frozen=True)
class MultiPeak(NoiseDistribution):
    """Equal-weight sum of periodic bells of width sigma at given centers."""

    sigma: float
    positions: np.ndarray

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        pos = np.atleast_1d(np.asarray(self.positions, dtype=float))
        if pos.size < 1:
            raise ValueError("need at least one peak position")
        if np.any(np.abs(pos) > np.pi + 1e-12):
            raise ValueError("peak positions must lie in [-pi, pi]")
        pos = pos.copy()
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    def _cos_moments(self, k):
        # shifting a peak by x multiplies its K-th moment by exp(i K x)
        r = _bessel_ratio(k, 1.0 / self.sigma**2)
        return r * np.mean(np.cos(np.outer(k, self.positions)), axis=1)

    def _sin_moments(self, k):
        r = _bessel_ratio(k, 1.0 / self.sigma**2)
        return r * np.mean(np.sin(np.outer(k, self.positions)), axis=1)

    def _density(self, eps):
        kappa = 1.0 / self.sigma**2
        eps = np.asarray(eps, dtype=float)
        lobes = np.exp(kappa * (np.cos(eps[..., None] - self.positions) - 1.0))
        return lobes.mean(axis=-1) / (2 * np.pi * ive(0, kappa))

    def descriptor(self):
        return f"multipeak:{self.sigma!r}:" + ",".join(
            repr(x) for x in self.positions
        )


@dataclass(frozen=True)
class PointMasses(NoiseDistribution):
    """Discrete distribution: weighted Dirac atoms at given positions."""

    positions: np.ndarray
    weights: np.ndarray

    is_singular = True

    def __post_init__(self):
        pos = np.atleast_1d(np.asarray(self.positions, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if pos.shape != w.shape:
            raise ValueError("positions and weights must have equal length")
        if np.any(np.abs(pos) > np.pi + 1e-12):
            raise ValueError("atom positions must lie in [-pi, pi]")
        if np.any(w < 0) or abs(w.sum() - 1.0) > _NORM_TOL:
            raise ValueError("weights must be nonnegative and sum to 1")
        pos = pos.copy()
        w = w.copy()
        pos.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", w)

    def _cos_moments(self, k):
        return np.cos(np.outer(k, self.positions)) @ self.weights

    def _sin_moments(self, k):
        return np.sin(np.outer(k, self.positions)) @ self.weights

    def atoms(self):
        return self.positions, self.weights

    def descriptor(self):
        return (
            "atoms:"
            + ",".join(repr(x) for x in self.positions)
            + ";"
            + ",".join(repr(x) for x in self.weights)
        )


@dataclass(frozen=True)
class Tabulated(NoiseDistribution):
    """Density sampled on a uniform mesh covering [-pi, pi)."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != vals.shape or grid.size < 8:
            raise ValueError("grid and values must be equal-length 1-d arrays")
        steps = np.diff(grid)
        h = steps[0]
        if np.max(np.abs(steps - h)) > 1e-9 * abs(h):
            raise ValueError("tabulated density requires a uniform mesh")
        if abs(grid.size * h - 2 * np.pi) > 1e-6:
            raise ValueError("mesh must tile [-pi, pi) exactly (spacing 2pi/n)")
        if np.any(vals < 0):
            raise ValueError("density values must be nonnegative")
        total = vals.sum() * h
        if abs(total - 1.0) > _NORM_TOL:
            raise ValueError(f"tabulated density integrates to {total!r}, not 1")
        grid = grid.copy()
        vals = vals.copy()
        grid.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", vals)

    @property
    def spacing(self):
        return self.grid[1] - self.grid[0]

    @classmethod
    def from_file(cls, path, normalize=False):
        """Load a two-column (eps, density) text table on a uniform mesh."""
        data = np.loadtxt(path)
        if data.ndim != 2 or data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns (eps, density)")
        grid, vals = data[:, 0], data[:, 1]
        # a closing duplicate of the first mesh point (at +pi) is tolerated
        if grid.size > 2 and abs((grid[-1] - grid[0]) - 2 * np.pi) < 1e-9:
            grid, vals = grid[:-1], vals[:-1]
        if normalize:
            vals = vals / (vals.sum() * (grid[1] - grid[0]))
        return cls(grid, vals)

    def _cos_moments(self, k):
        # rectangle rule; exact for band-limited periodic densities
        return (np.cos(np.outer(k, self.grid)) @ self.values) * self.spacing

    def _sin_moments(self, k):
        return (np.sin(np.outer(k, self.grid)) @ self.values) * self.spacing

    def _density(self, eps):
        idx = np.rint((np.asarray(eps) - self.grid[0]) / self.spacing).astype(int)
        return self.values[idx % self.grid.size]

    def descriptor(self):
        digest = hashlib.sha256(self.values.tobytes()).hexdigest()[:16]
        return f"tabulated:{self.grid.size}:{digest}"


@dataclass(frozen=True)
class NoisePair:
    """Factorized noise: total (eps_plus) and relative (eps_minus) densities."""

    total: NoiseDistribution = field(default_factory=Delta)
    relative: NoiseDistribution = field(default_factory=Delta)


def fourier_coefficients(dist, kmax):
    """Moments V_K = int P cos(K eps), W_K = int P sin(K eps) for K = 0..kmax."""
    return dist.fourier_coefficients(kmax)


def density(dist, eps):
    """Pointwise density; raises for point-mass variants (branch on is_singular)."""
    return dist.density(eps)


def sample_multi_peak(n_peaks, sigma, seed):
    """MultiPeak with n_peaks centers drawn uniformly from [-pi, pi].

    `seed` may be an int or an int sequence; identical seeds give identical
    positions.
    """
    if n_peaks < 1:
        raise ValueError(f"need at least one peak, got {n_peaks}")
    rng = np.random.default_rng(seed)
    return MultiPeak(sigma, rng.uniform(-np.pi, np.pi, size=n_peaks))


def comb_at_cos_zeros(n_particles):
    """Equal-weight atoms at the zeros of cos(N eps): eps = (2k+1) pi / (2N).

    This is the pathological total noise that suppresses every moment the
    interferometer formulas depend on (V_N = W_N = W_2N = 0, V_2N = -1).
    """
    k = np.arange(2 * n_particles)
    pos = (2 * k + 1) * np.pi / (2 * n_particles) - np.pi
    w = np.full(2 * n_particles, 1 / (2 * n_particles))
    return PointMasses(pos, w)
