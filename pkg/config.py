"""
Configuration settings for the DICING toolchain
Centralized place for all configuration options
"""

import os
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

LOG_LEVEL_ENV = "DICING_LOG_LEVEL"


class CipherConfig:
    """Configuration class for the cipher tools and the verification harness"""

    # Default settings
    DEFAULT_SETTINGS = {
        # Cipher settings
        "mode": "standard",  # Options: "standard", "r1", "r2", "r3", "big"
        "chunk_size": 64 * 1024,  # bytes per read in encrypt/decrypt, multiple of 16
        # Logging
        "log_level": "WARNING",
        # Statistical battery (fixed bounds, about a 1e-4 tail under the null)
        "monobit_tolerance": 1e-3,
        "byte_chi_square_limit": 340.0,
        "runs_z_limit": 4.0,
        "serial_sigma_limit": 5.0,
        "min_stream_bytes": 1 << 20,
        "linear_complexity_bits": 4096,
        # Avalanche
        "avalanche_trials": 200,
        "avalanche_sample_bytes": 128,
        "avalanche_band": (0.47, 0.53),
        # Step-value distribution
        "step_distribution_cycles": 1_000_000,
        "step_distribution_sigma": 5.0,
        # Self-test sample sizes
        "selftest_stream_bytes": 1 << 20,
        "selftest_sbox_keys": 50,
        "selftest_mini_params": [(5, 3, 8)],
        "selftest_engine_blocks": 8,
        # Long-form verification
        "mini_params": [(7, 5, 8), (5, 3, 8), (7, 5, 7)],
        "statistics_pairs": 10,
        "sbox_keys": 1000,
        # Benchmark
        "bench_repetitions": 3,
        "bench_setup_iterations": 5,
        "assumed_clock_hz": 3.0e9,  # used when the OS reports no frequency
        "target_mb_per_s": 100.0,
        "target_cycles_per_byte": 40.0,
    }

    def __init__(self, custom_settings: Optional[Dict[str, Any]] = None):
        """Initialize configuration with optional custom settings"""
        self.settings = self.DEFAULT_SETTINGS.copy()

        if custom_settings:
            self.settings.update(custom_settings)

    def get(self, key: str, default=None):
        """Get a configuration value"""
        return self.settings.get(key, default)

    def set(self, key: str, value: Any):
        """Set a configuration value"""
        self.settings[key] = value

    def get_log_level(self) -> str:
        """Log level from the environment (or .env) first, then the settings"""
        load_dotenv()
        return os.environ.get(LOG_LEVEL_ENV) or self.get("log_level", "WARNING")

    def get_statistical_thresholds(self) -> Dict[str, float]:
        keys = (
            "monobit_tolerance",
            "byte_chi_square_limit",
            "runs_z_limit",
            "serial_sigma_limit",
            "min_stream_bytes",
            "linear_complexity_bits",
        )
        return {key: self.get(key) for key in keys}

    def get_mini_params(self, selftest: bool = False) -> List[tuple]:
        return list(self.get("selftest_mini_params" if selftest else "mini_params"))


# Pre-defined configurations for different use cases
SELFTEST_CONFIG = CipherConfig(
    {
        "avalanche_trials": 40,
        "step_distribution_cycles": 20_000,
        "statistics_pairs": 1,
        "sbox_keys": 50,
    }
)

FULL_CONFIG = CipherConfig(
    {
        "statistics_pairs": 10,
        "sbox_keys": 1000,
        "avalanche_trials": 200,
        "step_distribution_cycles": 1_000_000,
    }
)

QUICK_CONFIG = CipherConfig(
    {
        "avalanche_trials": 20,
        "step_distribution_cycles": 5_000,
        "statistics_pairs": 1,
        "sbox_keys": 10,
        "bench_repetitions": 1,
        "bench_setup_iterations": 1,
    }
)

# Configuration presets
CONFIG_PRESETS = {
    "selftest": SELFTEST_CONFIG,
    "full": FULL_CONFIG,
    "quick": QUICK_CONFIG,
    "standard": CipherConfig(),  # Default
}


def get_config(preset_name: str = "standard") -> CipherConfig:
    """Get a configuration preset"""
    return CONFIG_PRESETS.get(preset_name, CipherConfig())


def create_custom_config(**kwargs) -> CipherConfig:
    """Create a custom configuration"""
    return CipherConfig(kwargs)
