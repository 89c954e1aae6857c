"""Closed-form outcome statistics for product two-component probes.

For a maximally entangled two-component probe in each interferometer
(beam-splitter readout), the joint outcome distribution depends on the two
noise densities only through their cosine/sine moments at frequencies N and
2N.  Outcome dependence enters through the parities of the two counts, so
the Fisher information collapses to four parity classes and is O(1) in N
once the moments are known.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from dataclasses import dataclass
from scipy.special import gammaln

from .engine import (
    DERIV_FLOOR,
    PROB_FLOOR,
    FisherResult,
    maximize_fisher,
)
from .noise import Delta, NoisePair, fourier_coefficients, sample_multi_peak

_CROSSING_SHIFT = 1e-9
_SYMMETRY_TOL = 1e-14


@dataclass(frozen=True)
class NoonCoefficients:
    """Noise moments at frequencies N and 2N, total (+) and relative (-)."""

    n_particles: int
    vn_total: float
    v2n_total: float
    wn_total: float
    w2n_total: float
    vn_rel: float
    v2n_rel: float
    wn_rel: float
    w2n_rel: float

    @classmethod
    def from_noise(cls, n_particles, noise):
        ft = fourier_coefficients(noise.total, 2 * n_particles)
        fr = fourier_coefficients(noise.relative, 2 * n_particles)
        n = n_particles
        return cls(
            n,
            ft.V[n], ft.V[2 * n], ft.W[n], ft.W[2 * n],
            fr.V[n], fr.V[2 * n], fr.W[n], fr.W[2 * n],
        )

    @property
    def is_symmetric(self):
        return max(
            abs(self.wn_total), abs(self.w2n_total),
            abs(self.wn_rel), abs(self.w2n_rel),
        ) < _SYMMETRY_TOL

    def amp(self, parity2):
        """Phase-independent part of the parity-class distribution."""
        sign = -1.0 if parity2 else 1.0
        return 1.0 + sign * (
            self.vn_total * self.vn_rel + self.wn_total * self.wn_rel
        )

    def cos_coef(self, parity2):
        """cos(N theta) weight of the class (up to the mu1-parity sign)."""
        sign = -1.0 if parity2 else 1.0
        return (
            self.vn_total * self.vn_rel
            - self.wn_total * self.wn_rel
            + sign * (self.v2n_total + self.v2n_rel) / 2
        )

    def sin_coef(self, parity2):
        """sin(N theta) weight of the class; vanishes for even noise."""
        sign = -1.0 if parity2 else 1.0
        return (
            self.vn_total * self.wn_rel
            + self.wn_total * self.vn_rel
            + sign * (self.w2n_total + self.w2n_rel) / 2
        )

    # symmetric-noise shorthands
    @property
    def a_plus(self):
        return self.amp(0)

    @property
    def a_minus(self):
        return self.amp(1)

    @property
    def b_plus(self):
        return self.cos_coef(0)

    @property
    def b_minus(self):
        return self.cos_coef(1)


def _log_binomial_weights(n_particles):
    half = n_particles // 2
    n = np.arange(-half, half + 1)
    return (
        gammaln(n_particles + 1)
        - gammaln(half + n + 1)
        - gammaln(half - n + 1)
        - n_particles * np.log(2)
    )


def noon_coefficients(n_particles, noise):
    return NoonCoefficients.from_noise(n_particles, noise)


def noon_joint_probability(n_particles, theta, noise):
    """Joint count distribution P(mu1, mu2|theta), shape (N+1, N+1)."""
    co = NoonCoefficients.from_noise(n_particles, noise)
    weights = np.exp(_log_binomial_weights(n_particles))
    parity = np.arange(-(n_particles // 2), n_particles // 2 + 1) % 2
    sign1 = np.where(parity == 0, 1.0, -1.0)
    amp = np.array([co.amp(p) for p in (0, 1)])[parity]
    ccoef = np.array([co.cos_coef(p) for p in (0, 1)])[parity]
    scoef = np.array([co.sin_coef(p) for p in (0, 1)])[parity]
    shape = amp[None, :] + np.outer(
        sign1, ccoef * np.cos(n_particles * theta) - scoef * np.sin(n_particles * theta)
    )
    return np.outer(weights, weights) * shape


def _class_terms(co, theta):
    """Per parity class: (probability mass, its theta derivative)."""
    n = co.n_particles
    c, s = np.cos(n * theta), np.sin(n * theta)
    out = []
    for p2 in (0, 1):
        amp = co.amp(p2)
        x = co.cos_coef(p2) * c - co.sin_coef(p2) * s
        dx = -n * (co.cos_coef(p2) * s + co.sin_coef(p2) * c)
        for sign1 in (1.0, -1.0):
            out.append(((amp + sign1 * x) / 4, sign1 * dx / 4))
    return out


def _fisher_plain(co, theta):
    total = 0.0
    for p, dp in _class_terms(co, theta):
        if p >= PROB_FLOOR:
            total += dp * dp / p
    return total


def noon_fisher(n_particles, theta, noise):
    """Fisher information of the joint count distribution at one phase.

    Parity classes with vanishing probability are dropped unless their
    derivative is significant, in which case the phase sits on a zero
    crossing and the value is averaged over theta +- 1e-9.
    """
    co = noise if isinstance(noise, NoonCoefficients) else NoonCoefficients.from_noise(
        n_particles, noise
    )
    terms = _class_terms(co, theta)
    if all(p < PROB_FLOOR for p, _ in terms):
        raise ArithmeticError(
            "all outcome probabilities vanish: malformed noise distribution"
        )
    crossing = any(p < PROB_FLOOR and abs(dp) >= DERIV_FLOOR for p, dp in terms)
    if crossing:
        return 0.5 * (
            _fisher_plain(co, theta - _CROSSING_SHIFT)
            + _fisher_plain(co, theta + _CROSSING_SHIFT)
        )
    return _fisher_plain(co, theta)


def noon_fisher_optimal(n_particles, noise):
    """max_theta F.  Even noise has the closed form

        F = (N^2/2) [B-^2/A- + B+^2/A+]   at cos(N theta) = 0;

    general noise is maximized numerically over one period 2 pi / N.
    """
    co = noise if isinstance(noise, NoonCoefficients) else NoonCoefficients.from_noise(
        n_particles, noise
    )
    if co.is_symmetric:
        total = 0.0
        for a, b in ((co.a_minus, co.b_minus), (co.a_plus, co.b_plus)):
            if a < 1e-30:
                # positivity forces |B| <= A, so a vanishing class carries no
                # information
                if abs(b) > 1e-12:
                    raise ArithmeticError(f"inconsistent moments: A={a!r}, B={b!r}")
                continue
            total += b * b / a
        fisher = n_particles**2 / 2 * total
        return FisherResult(np.pi / (2 * n_particles), fisher)
    return maximize_fisher(
        lambda t: noon_fisher(n_particles, t, co),
        2 * np.pi / n_particles,
    )


def zero_fi_check(noise_total, n_particles):
    """Detect total noise that extinguishes the information entirely.

    Returns (is_zero, residual) with residual = <cos^2(N eps)>; the
    information vanishes for every phase iff the moments satisfy
    V_N = W_N = W_2N = 0 and V_2N = -1 (support on the zeros of cos N eps),
    assuming point-mass relative noise.
    """
    fc = fourier_coefficients(noise_total, 2 * n_particles)
    n = n_particles
    residual = (1.0 + fc.V[2 * n]) / 2
    is_zero = (
        residual < 1e-10
        and abs(fc.V[n]) < 1e-10
        and abs(fc.W[n]) < 1e-10
        and abs(fc.W[2 * n]) < 1e-10
    )
    return is_zero, float(residual)


@dataclass(frozen=True)
class HistogramStudy:
    """Distribution of F / N^2 over randomized multi-peak total noise."""

    n_particles: int
    bin_edges: np.ndarray
    counts: np.ndarray
    ratios: np.ndarray

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("bin_left,bin_right,count\n")
            for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
                fh.write(f"{lo:.17g},{hi:.17g},{int(c)}\n")


def fisher_histogram_study(n_particles, peaks, sigma, trials, seed,
                           workers=None, bins=50):
    """Sample multi-peak total noise and histogram max_theta F / N^2.

    Each trial draws peak centers from an independent generator derived from
    (seed, trial index), so the result does not depend on worker count.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")

    def one(trial):
        pair = NoisePair(
            total=sample_multi_peak(peaks, sigma, [seed, trial]),
            relative=Delta(),
        )
        return noon_fisher_optimal(n_particles, pair).fisher / n_particles**2

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ratios = np.array(list(pool.map(one, range(trials))))
    else:
        ratios = np.array([one(t) for t in range(trials)])
    counts, edges = np.histogram(ratios, bins=bins, range=(0.0, 1.0))
    return HistogramStudy(n_particles, edges, counts, ratios)
