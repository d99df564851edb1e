"""Exact centre-of-mass decoupling of harmonically coupled particle clusters."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DomainError,
    ImaginaryEffectiveFrequency,
    InconsistentShift,
    InvalidTrap,
    NegativeSquaredFrequency,
    NonHarmonicInGroup,
    NotDecoupled,
    StepSizeUnderflow,
    UnstableMode,
    UnsupportedOrder,
)
from .model import (  # noqa: E402
    ClusterSpec,
    InGroup,
    InterClusterCoupling,
    SystemSpec,
    total_mass_and_com_weights,
    validate_system,
)
from .separation import (  # noqa: E402
    build_transformation,
    check_decoupling,
    effective_frequency,
    separate,
    transform_coupling,
)
from .normal_modes import (  # noqa: E402
    brute_force_full_harmonic,
    build_cm_stiffness,
    cm_energy,
    diagonalize,
    separated_spectrum,
)
from .quench import FrequencyProtocol, QuenchScenario, run_quench  # noqa: E402
