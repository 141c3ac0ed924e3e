"""
Statistical randomness battery for keystream samples
Monobit, byte chi-square, runs and 16-bit serial tests with fixed pass bounds,
plus a Berlekamp-Massey linear complexity figure that is reported only
"""

from dataclasses import dataclass, field
import math
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy import special, stats

from dicing.exceptions import StatisticalInputError
from utils.observability import (
    ComponentType,
    OperationType,
    get_logger,
    get_observability_manager,
)

logger = get_logger(ComponentType.RANDOMNESS)

MIN_STREAM_BYTES = 1 << 20

DEFAULT_THRESHOLDS: Dict[str, float] = {
    "monobit_tolerance": 1e-3,
    "byte_chi_square_limit": 340.0,
    "runs_z_limit": 4.0,
    "serial_sigma_limit": 5.0,
    "min_stream_bytes": MIN_STREAM_BYTES,
    "linear_complexity_bits": 4096,
}


@dataclass
class TestResult:
    """Outcome of one statistical test"""

    __test__ = False  # not a pytest class

    name: str
    statistic: float
    p_value: float
    passed: bool
    bound: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "passed": self.passed,
            "bound": self.bound,
        }


@dataclass
class StatisticalReport:
    """Results of the battery on one stream"""

    n_bytes: int
    results: List[TestResult] = field(default_factory=list)
    linear_complexity: Optional[int] = None
    linear_complexity_bits: int = 0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[str]:
        return [r.name for r in self.results if not r.passed]

    def get(self, name: str) -> TestResult:
        for result in self.results:
            if result.name == name:
                return result
        raise KeyError(name)


def to_bits(stream: bytes) -> np.ndarray:
    """Bits in stream order, least significant bit of each byte first"""
    return np.unpackbits(np.frombuffer(stream, dtype=np.uint8), bitorder="little")


def monobit_test(bits: np.ndarray, tolerance: float = 1e-3) -> TestResult:
    n = bits.size
    ones = int(np.count_nonzero(bits))
    fraction = ones / n
    s_obs = abs(2 * ones - n) / math.sqrt(n)
    return TestResult(
        name="monobit",
        statistic=fraction,
        p_value=float(special.erfc(s_obs / math.sqrt(2))),
        passed=abs(fraction - 0.5) < tolerance,
        bound=f"|f - 0.5| < {tolerance:g}",
    )


def byte_chi_square_test(stream: bytes, limit: float = 340.0) -> TestResult:
    counts = np.bincount(np.frombuffer(stream, dtype=np.uint8), minlength=256)
    expected = len(stream) / 256
    statistic = float(np.sum((counts - expected) ** 2) / expected)
    return TestResult(
        name="byte_chi_square",
        statistic=statistic,
        p_value=float(stats.chi2.sf(statistic, 255)),
        passed=statistic < limit,
        bound=f"chi2 < {limit:g} (df 255)",
    )


def runs_test(bits: np.ndarray, z_limit: float = 4.0) -> TestResult:
    """Total number of runs against its expectation, as a normal z-score"""
    n = bits.size
    pi = np.count_nonzero(bits) / n
    spread = pi * (1 - pi)
    if spread == 0:
        return TestResult("runs", float("inf"), 0.0, False, f"|z| < {z_limit:g}")
    runs = 1 + int(np.count_nonzero(bits[1:] != bits[:-1]))
    z = (runs - 2 * n * spread) / (2 * math.sqrt(2 * n) * spread)
    return TestResult(
        name="runs",
        statistic=z,
        p_value=float(special.erfc(abs(z) / math.sqrt(2))),
        passed=abs(z) < z_limit,
        bound=f"|z| < {z_limit:g}",
    )


def serial16_test(stream: bytes, sigma_limit: float = 5.0) -> TestResult:
    """Chi-square over non-overlapping little-endian 16-bit words"""
    usable = len(stream) - len(stream) % 2
    words = np.frombuffer(stream[:usable], dtype="<u2")
    counts = np.bincount(words, minlength=65536)
    expected = words.size / 65536
    statistic = float(np.sum((counts - expected) ** 2) / expected)
    df = 65535
    deviation = abs(statistic - df) / math.sqrt(2 * df)
    return TestResult(
        name="serial16",
        statistic=statistic,
        p_value=float(stats.chi2.sf(statistic, df)),
        passed=deviation < sigma_limit,
        bound=f"|chi2 - {df}| < {sigma_limit:g} sigma",
    )


def linear_complexity(bits: Sequence[int]) -> int:
    """Length of the shortest LFSR generating the bit sequence (Berlekamp-Massey)

    The discrepancies are tracked as whole integers s*B and s*C shifted along
    the sequence instead of being recomputed bit by bit.
    """
    length = len(bits)
    s = 0
    for i, bit in enumerate(bits):
        if bit:
            s |= 1 << i
    sb, sc = s, s
    deg_c = 0
    m = 0
    for n in range(length):
        disc = sc & (1 << m)
        m += 1
        if disc:
            sc >>= m
            m = 0
            if 2 * deg_c <= n:
                sb, sc = sc, sb
                deg_c = n + 1 - deg_c
            sc ^= sb
    return deg_c


def statistical_suite(
    stream: bytes, thresholds: Optional[Dict[str, float]] = None
) -> StatisticalReport:
    """Run the full battery on one keystream sample"""
    limits = {**DEFAULT_THRESHOLDS, **(thresholds or {})}
    minimum = int(limits["min_stream_bytes"])
    if len(stream) < minimum:
        raise StatisticalInputError(
            f"statistical suite needs at least {minimum} bytes, got {len(stream)}"
        )

    obs = get_observability_manager()
    with obs.operation_context(
        OperationType.STATISTICS, ComponentType.RANDOMNESS, "statistical_suite"
    ):
        bits = to_bits(stream)
        report = StatisticalReport(n_bytes=len(stream))
        report.results = [
            monobit_test(bits, limits["monobit_tolerance"]),
            byte_chi_square_test(stream, limits["byte_chi_square_limit"]),
            runs_test(bits, limits["runs_z_limit"]),
            serial16_test(stream, limits["serial_sigma_limit"]),
        ]

        lc_bits = int(limits["linear_complexity_bits"])
        if lc_bits:
            report.linear_complexity = linear_complexity(bits[:lc_bits].tolist())
            report.linear_complexity_bits = lc_bits

    if not report.passed:
        logger.warning("Statistical tests failed", failed=report.failures)
    logger.debug(
        "Statistical suite finished",
        n_bytes=len(stream),
        passed=report.passed,
        linear_complexity=report.linear_complexity,
    )
    return report


def step_value_chi_square(counts: Sequence[int]) -> float:
    """Chi-square of observed counts against the uniform distribution"""
    observed = np.asarray(counts, dtype=np.float64)
    expected = observed.sum() / observed.size
    return float(np.sum((observed - expected) ** 2) / expected)


def within_sigma(statistic: float, df: int, sigma: float) -> bool:
    """|chi2 - df| within sigma standard deviations of the chi-square law"""
    return abs(statistic - df) < sigma * math.sqrt(2 * df)


def flipped_bit_fraction(a: bytes, b: bytes) -> float:
    """Fraction of differing bits between two equally long strings"""
    if len(a) != len(b):
        raise ValueError("strings to compare differ in length")
    if not a:
        return 0.0
    x = np.frombuffer(a, dtype=np.uint8) ^ np.frombuffer(b, dtype=np.uint8)
    return int(np.unpackbits(x).sum()) / (8 * len(a))
