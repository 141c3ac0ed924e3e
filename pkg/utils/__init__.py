"""
Utils package for the DICING toolchain
Observability is re-exported here; randomness, benchmark and file_io depend on
the cipher package and are imported from their modules directly
"""

from .observability import (
    ComponentType,
    OperationType,
    configure_logging,
    get_logger,
    get_observability_manager,
    timed_operation,
)

__all__ = [
    # Observability
    "ComponentType",
    "OperationType",
    "configure_logging",
    "get_logger",
    "get_observability_manager",
    "timed_operation",
]
