"""Phase-estimation sensitivity of differential two-interferometer schemes
with entangled probes under correlated phase noise."""

__version__ = "0.1.0"

from .spin import (
    SpinState,
    RotationMatrix,
    apply_one_axis_twist,
    apply_phase_z,
    apply_rotation,
    rotation,
    to_axis_basis,
)
from .noise import (
    Delta,
    Flat,
    FourierCoefficients,
    MultiPeak,
    NoisePair,
    PointMasses,
    Tabulated,
    VonMises,
    comb_at_cos_zeros,
    density,
    fourier_coefficients,
    sample_multi_peak,
)
from .states import (
    JointState,
    PreparationConfig,
    adiabatic_ground_state,
    coherent_x_state,
    diabatic_state,
    noon_state,
    optimal_entangled_state,
    optimal_twist_rotation,
    twin_fock_state,
)
from .engine import (
    ConditionalProbabilityFourier,
    EngineError,
    FisherResult,
    JointFourierTable,
    NoiseKernelMatrices,
    PowerLawFit,
    build_joint_table,
    differential_fisher_max,
    fisher_bruteforce,
    fisher_curve,
    fisher_from_fourier,
    fit_power_law,
    joint_fourier,
    maximize_fisher,
    noise_kernel,
    single_probability_fourier,
)
from .noon import (
    NoonCoefficients,
    fisher_histogram_study,
    noon_fisher,
    noon_fisher_optimal,
    noon_joint_probability,
    zero_fi_check,
)
from .qfi import (
    BlockDecomposition,
    DecoherenceKernel,
    DensityMatrix,
    block_decomposition,
    cramer_rao,
    decoherence_kernel,
    density_from_amplitudes,
    density_from_product,
    effective_density_matrix,
    qfi_block_bounds,
    qfi_exact,
)
from .experiments import ConfigError, ExperimentConfig, NumericalError, run, validate

__all__ = [name for name in dir() if not name.startswith("_")]
