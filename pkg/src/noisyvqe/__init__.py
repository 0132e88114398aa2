"""noisyvqe: a desk-scale noisy VQE simulator for the H2 ground-state energy.

Dense statevector and density-matrix simulation of small circuits, Kraus
noise channels (readout, depolarizing, amplitude and phase damping), six
classical optimizers, and drivers for noise-intensity sweeps, curve fits,
noiseless trace recalculation, and final-energy splitting analysis.
"""

__version__ = "0.1.0"

from .ansatz import ParametrizedCircuit, bind, build_ansatz, hartree_fock_prep
from .core import (
    DensityMatrix,
    GateOp,
    KrausChannel,
    Statevector,
    apply_channel,
    apply_gate,
    jacobi_eigh,
    sample_counts,
)
from .estimator import BackendConfig, EnergyEstimate, EnergyEstimator, estimate_energy
from .experiment import (
    FitResult,
    SweepConfig,
    SweepResult,
    detect_level_splitting,
    fit_noise_curve,
    recalculate_trace,
    run_noise_sweep,
    run_vqe,
)
from .hamiltonian import (
    Hamiltonian,
    PauliTerm,
    exact_spectrum,
    expectation_exact,
    h2_hamiltonian,
    term_matrix,
)
from .noise import (
    NoiseModel,
    RelaxationTimes,
    amplitude_damping_channel,
    attach_noise,
    decay_probabilities,
    depolarizing_channel,
    phase_damping_channel,
    readout_flip_channel,
)
from .optimize import (
    AdamConfig,
    BayesianConfig,
    NelderMeadConfig,
    NftConfig,
    OptimizationTrace,
    SpsaConfig,
    SpsaReoptConfig,
    adam_minimize,
    bayesian_minimize,
    nelder_mead_minimize,
    nft_minimize,
    spsa_minimize,
    spsa_reopt_minimize,
)
