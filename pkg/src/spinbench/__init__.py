"""spinbench: pilot-wave Stern-Gerlach workbench and Bell/LHV laboratory."""

__version__ = "0.1.0"

from .quantum import (
    Direction,
    OutcomeValue,
    SpinCoefficients,
    born_probability,
    rotate_basis,
    sequential_chain_probability,
    singlet_correlation,
)
from .solver import (
    DensityCurrent,
    FieldProfile,
    Grid1D,
    SpinorField,
    density_current,
    evolve,
    init_gaussian_packet,
    step,
)
from .guidance import (
    Trajectory,
    check_equivariance,
    classify_outcome,
    expectation_description_A,
    expectation_description_B,
    integrate_trajectories,
    spin_projection,
)
from .ensembles import (
    EnsemblePartition,
    HiddenJointTable,
    HiddenSample,
    build_partition,
    compare_hidden_vs_sequential,
    intersect_partitions,
    sample_hidden,
    sequential_measurement,
    single_probability,
    stratified_hidden,
)
from .bell import (
    Behavior,
    DeterministicStrategy,
    JointDistribution16,
    LocalModel,
    behavior_from_model,
    bell_toy_model,
    chsh,
    coincidence,
    correlation,
    deterministic_bound,
    fine_equivalence_scan,
    fine_feasibility,
    hidden_joint_per_particle,
    singlet_behavior,
)
from .scenario import MeasurementResult, ScenarioConfig, run_measurement
