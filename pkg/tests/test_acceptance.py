"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Criteria 4 and 9 carry wall-clock budgets stated for a four-core desktop;
on smaller machines the budget is scaled by 4 / cpu_count.
"""

import os
import resource
import time

import numpy as np
import pytest

from difisher.engine import (
    build_joint_table,
    differential_fisher_max,
    fisher_bruteforce,
    fisher_from_fourier,
    fit_power_law,
    inferred_period,
    maximize_fisher,
)
from difisher.noise import (
    Delta,
    Flat,
    NoisePair,
    VonMises,
    comb_at_cos_zeros,
    fourier_coefficients,
    sample_multi_peak,
)
from difisher.noon import fisher_histogram_study, noon_fisher, noon_fisher_optimal
from difisher.qfi import (
    block_decomposition,
    decoherence_kernel,
    density_from_amplitudes,
    density_from_product,
    effective_density_matrix,
    qfi_block_bounds,
    qfi_exact,
)
from difisher.spin import apply_rotation, to_axis_basis
from difisher.states import (
    adiabatic_ground_state,
    coherent_x_state,
    diabatic_state,
    noon_state,
    optimal_entangled_state,
    twin_fock_state,
)

from conftest import random_state


def _budget_seconds(minutes):
    cores = os.cpu_count() or 1
    return minutes * 60 * max(1.0, 4.0 / cores)


def _report(name, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return ok


class TestCriterion1NoonClosedFormLimits:
    @pytest.mark.parametrize("n", [2, 10, 100])
    def test_limits(self, n):
        ok = True
        ideal = noon_fisher_optimal(n, NoisePair(Delta(), Delta())).fisher
        ok &= _report(
            "c1 delta x delta", abs(ideal - n**2) < 1e-10 * n**2,
            f"N={n} F={float(ideal)!r} vs N^2={n**2}",
        )
        protected = noon_fisher_optimal(n, NoisePair(Flat(), Delta())).fisher
        ok &= _report(
            "c1 flat total, delta relative", abs(protected - n**2 / 4) < 1e-10 * n**2,
            f"N={n} F={float(protected)!r} vs N^2/4={n**2 / 4}",
        )
        # flat total with finite-width relative noise: the optimum follows
        # the 2N-th cosine moment of the relative density as N^2 V^2 / 4
        rel = VonMises(1 / (2 * n))
        v2n = fourier_coefficients(rel, 2 * n).V[2 * n]
        got = noon_fisher_optimal(n, NoisePair(Flat(), rel)).fisher
        want = n**2 * v2n**2 / 4
        ok &= _report(
            "c1 flat total, general relative", abs(got - want) < 1e-10 * n**2,
            f"N={n} F={float(got)!r} vs N^2 V_2N^2/4={float(want)!r}",
        )
        assert ok


class TestCriterion2OracleEquivalence:
    def test_matrix(self):
        start = time.monotonic()
        noises = [Delta(), Flat(), VonMises(0.5), sample_multi_peak(3, 0.5, seed=7)]
        worst = 0.0
        checks = 0
        for n in (2, 4, 8):
            probes = [
                ("coherent", coherent_x_state(n), "mz-y"),
                ("twin-fock", twin_fock_state(n), "mz-y"),
                ("noon", noon_state(n), "bs-after-z"),
                ("diabatic", diabatic_state(n, 0.3), "mz-y"),
                ("adiabatic", adiabatic_ground_state(n, float(n)), "mz-y"),
            ]
            thetas = np.linspace(0.03, 2 * np.pi - 0.03, 11)
            for _, probe, interf in probes:
                for noise in noises:
                    table = build_joint_table(probe, probe, interf, noise)
                    for theta in thetas:
                        f_fast = fisher_from_fourier(table, theta)
                        f_ref = fisher_bruteforce(
                            probe, probe, interf, noise, theta, mesh=512
                        )
                        worst = max(worst, abs(f_fast - f_ref) / max(f_ref, 1.0))
                        checks += 1
        elapsed = time.monotonic() - start
        ok = worst < 1e-6 and elapsed < _budget_seconds(1)
        assert _report(
            "c2 spectral vs quadrature oracle", ok,
            f"{checks} comparisons, worst rel err {worst:.2e}, {elapsed:.0f}s",
        )


class TestCriterion3TwinFockNoiseless:
    @pytest.mark.parametrize("n", [10, 100, 500])
    def test_closed_form(self, n):
        tf = twin_fock_state(n)
        res = differential_fisher_max(tf, tf, "mz-y", Delta())
        want = n**2 / 2 + n
        ok = abs(res.fisher - want) / want < 1e-3
        assert _report(
            "c3 twin-Fock noiseless", ok, f"N={n} F={res.fisher:.6f} vs {want}"
        )


SCALING_GRID = [100, 140, 200, 280, 400, 600]


def _flat_noise_series(make_probe):
    values = []
    for n in SCALING_GRID:
        probe = make_probe(n)
        res = differential_fisher_max(probe, probe, "mz-y", Flat(), grid=4 * n + 4)
        values.append(res.fisher)
    return values


@pytest.mark.slow
class TestCriterion4ScalingFits:
    @pytest.mark.parametrize(
        "family,make_probe,alpha_win,beta_win",
        [
            ("twin-fock", twin_fock_state, (1.17, 0.05), (0.39, 0.06)),
            ("coherent", coherent_x_state, (1.00, 0.02), (0.5, 0.05)),
            ("adiabatic-opt", lambda n: adiabatic_ground_state(n, float(n)),
             (1.5, 0.08), None),
            ("diabatic-opt", lambda n: diabatic_state(n, n**-0.75, axis="auto"),
             (1.4, 0.08), None),
        ],
        ids=["twin-fock", "coherent", "adiabatic-opt", "diabatic-opt"],
    )
    def test_engine_families(self, family, make_probe, alpha_win, beta_win):
        start = time.monotonic()
        values = _flat_noise_series(make_probe)
        fit = fit_power_law(SCALING_GRID, values)
        elapsed = time.monotonic() - start
        ok = abs(fit.alpha - alpha_win[0]) <= alpha_win[1]
        detail = f"alpha={fit.alpha:.4f} (want {alpha_win[0]}+-{alpha_win[1]})"
        if beta_win is not None:
            ok &= abs(fit.beta - beta_win[0]) <= beta_win[1]
            detail += f", beta={fit.beta:.4f} (want {beta_win[0]}+-{beta_win[1]})"
        ok &= elapsed < _budget_seconds(15)
        detail += f", {elapsed:.0f}s"
        assert _report(f"c4 {family} scaling", ok, detail)

    def test_noon_analytic_family(self):
        values = [
            noon_fisher_optimal(n, NoisePair(Flat(), Delta())).fisher
            for n in SCALING_GRID
        ]
        fit = fit_power_law(SCALING_GRID, values)
        ok = abs(fit.alpha - 2.0) < 1e-10 and abs(fit.beta - 0.25) < 1e-10
        assert _report(
            "c4 noon analytic scaling", ok,
            f"alpha={float(fit.alpha)!r} beta={float(fit.beta)!r}",
        )


class TestCriterion5QfiSandwich:
    @pytest.mark.parametrize("n", [4, 6, 8])
    def test_random_probes(self, n):
        kernel = decoherence_kernel(NoisePair(Flat(), Delta()), n)
        worst_meas, worst_block = np.inf, np.inf
        for trial in range(20):
            s1 = random_state(n, 1000 + 31 * n + trial)
            s2 = random_state(n, 2000 + 31 * n + trial)
            fisher = differential_fisher_max(s1, s2, "mz-y", Flat()).fisher
            rho = density_from_product(to_axis_basis(s1, "y"), to_axis_basis(s2, "y"))
            rho_eff = effective_density_matrix(rho, kernel)
            fq = qfi_exact(rho_eff)
            bound = qfi_block_bounds(block_decomposition(rho_eff, "sum"), n, "general")
            worst_meas = min(worst_meas, fq - fisher)
            worst_block = min(worst_block, bound - fq)
        ok = worst_meas >= -1e-8 and worst_block >= -1e-8
        assert _report(
            "c5 F <= QFI <= block bound", ok,
            f"N={n}, min(QFI-F)={worst_meas:.3e}, min(bound-QFI)={worst_block:.3e}",
        )

    @pytest.mark.parametrize("n", [4, 8])
    def test_separable_chain_for_coherent_probes(self, n):
        kernel = decoherence_kernel(NoisePair(Flat(), Delta()), n)
        rng = np.random.default_rng(17)
        worst = np.inf
        for _ in range(6):
            angles = rng.uniform(0, np.pi, 4)
            s1 = apply_rotation(
                apply_rotation(coherent_x_state(n), "z", angles[0]), "y", angles[1]
            )
            s2 = apply_rotation(
                apply_rotation(coherent_x_state(n), "z", angles[2]), "y", angles[3]
            )
            rho = density_from_product(to_axis_basis(s1, "y"), to_axis_basis(s2, "y"))
            rho_eff = effective_density_matrix(rho, kernel)
            fq = qfi_exact(rho_eff)
            sep = qfi_block_bounds(block_decomposition(rho_eff, "sum"), n, "separable")
            worst = min(worst, sep - fq, n - sep)
        ok = worst >= -1e-8
        assert _report(
            "c5 separable bound on coherent pairs", ok, f"N={n}, min margin {worst:.3e}"
        )


class TestCriterion6OptimalStateProtection:
    @pytest.mark.parametrize("total", [VonMises(0.1), VonMises(1.0), Flat()],
                             ids=["sigma=0.1", "sigma=1", "flat"])
    def test_protected_qfi(self, total):
        n = 8
        rho = density_from_amplitudes(
            optimal_entangled_state(n, "relative-delta").amplitudes
        )
        kernel = decoherence_kernel(NoisePair(total=total, relative=Delta()), n)
        fq = qfi_exact(effective_density_matrix(rho, kernel))
        ok = abs(fq - n**2) < 1e-8
        assert _report(
            "c6 protected optimal state", ok, f"N={n} QFI={float(fq)!r} vs N^2={n**2}"
        )


class TestCriterion7PathologicalNoise:
    @pytest.mark.parametrize("n", [2, 10, 100])
    def test_comb_extinguishes_information(self, n):
        comb = comb_at_cos_zeros(n)
        pair = NoisePair(total=comb, relative=Delta())
        best = noon_fisher_optimal(n, pair).fisher
        curve = max(
            noon_fisher(n, t, pair)
            for t in np.linspace(0, 2 * np.pi / n, 65)[:-1]
        )
        ok = max(best, curve) < 1e-8 * n**2
        assert _report(
            "c7 delta comb at cosine zeros", ok,
            f"N={n} max F={max(best, curve):.3e} < 1e-8 N^2={1e-8 * n**2:.1e}",
        )


class TestCriterion8HistogramConcentration:
    def test_multi_peak_concentration(self):
        n, sigma, trials = 100, 2 * np.pi / 100, 500
        shares = {}
        for peaks in (5, 20):
            study = fisher_histogram_study(n, peaks, sigma, trials, seed=0)
            inside = np.mean((study.ratios >= 0.2) & (study.ratios <= 0.3))
            shares[peaks] = inside
        ok = shares[20] >= 0.6
        assert _report(
            "c8 F/N^2 concentration near 1/4", ok,
            f"share in [0.2, 0.3]: M=5 -> {shares[5]:.2f}, M=20 -> {shares[20]:.2f}",
        )


@pytest.mark.slow
class TestCriterion9Performance:
    def test_large_system_pipeline(self):
        # one converged information curve: 2N+2 points over the inferred
        # period match the distribution's frequency content
        n = 1000
        start = time.monotonic()
        tf = twin_fock_state(n)
        table = build_joint_table(tf, tf, "mz-y", Flat())
        res = maximize_fisher(
            lambda t: fisher_from_fourier(table, t),
            inferred_period(table),
            grid=2 * n + 2,
        )
        elapsed = time.monotonic() - start
        peak_gb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024**2
        ok = elapsed < _budget_seconds(5) and peak_gb < 2.0
        assert _report(
            "c9 N=1000 pipeline", ok,
            f"F={res.fisher:.2f}, {elapsed:.0f}s "
            f"(budget {_budget_seconds(5):.0f}s), peak RSS {peak_gb:.2f} GB",
        )
