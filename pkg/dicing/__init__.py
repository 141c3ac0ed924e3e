"""
DICING stream cipher
Projector-based keystream generator over binary extension fields
"""

from .engine import (
    EngineState,
    KeystreamGenerator,
    ReferenceEngine,
    VariantMode,
    reference_keystream,
)
from .exceptions import (
    BadFactorizationError,
    ContractViolation,
    DicingError,
    FieldMismatchError,
    ModeMismatchError,
    OracleDisagreementError,
    StatisticalInputError,
    UnsupportedKeySizeError,
)
from .ivsetup import InitializedState
from .ivsetup import ivsetup as run_ivsetup
from .keyschedule import KeyMaterial, build_key_material

__all__ = [
    # Cipher
    "build_key_material",
    "run_ivsetup",
    "KeystreamGenerator",
    "ReferenceEngine",
    "reference_keystream",
    "EngineState",
    "InitializedState",
    "KeyMaterial",
    "VariantMode",
    # Errors
    "DicingError",
    "ContractViolation",
    "FieldMismatchError",
    "ModeMismatchError",
    "StatisticalInputError",
    "UnsupportedKeySizeError",
    "BadFactorizationError",
    "OracleDisagreementError",
]
