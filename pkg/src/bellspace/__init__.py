"""Two probability spaces for one generalized polarization measurement.

A photon meets a beam splitter whose outputs are polarization-analyzed and
detected by four detectors. Relabelling the detector clicks gives either a
random choice between two sharp observables (space 1) or a noisy joint
measurement of three observables (space 2). The package computes POVMs,
probability tables, Bell quantities, noise inversion, tomography and
parameter scans for arbitrary two-qubit states.
"""
from .errors import (
    BellspaceError,
    ConditionalUndefinedError,
    ConfigError,
    DomainError,
    GammaFormError,
    PreconditionError,
    SingularInversionError,
)
from .optics import ArmConfig, BeamSplitter, PolarizationSetting, detector_states, fock_output_oracle
from .qcore import PureQubit, product_state, singlet, werner
from .space1 import BellChoice, bell_quantity, joint_table_space1, povm_space1
from .space2 import povm_space2, quasi_joint, tomography_reconstruct
from .stats import ProbTable, sample_counts

__version__ = "0.1.0"

__all__ = [
    "ArmConfig",
    "BeamSplitter",
    "BellChoice",
    "BellspaceError",
    "ConditionalUndefinedError",
    "ConfigError",
    "DomainError",
    "GammaFormError",
    "PolarizationSetting",
    "PreconditionError",
    "ProbTable",
    "PureQubit",
    "SingularInversionError",
    "bell_quantity",
    "detector_states",
    "fock_output_oracle",
    "joint_table_space1",
    "povm_space1",
    "povm_space2",
    "product_state",
    "quasi_joint",
    "sample_counts",
    "singlet",
    "tomography_reconstruct",
    "werner",
]
