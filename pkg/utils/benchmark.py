"""
Throughput benchmark for the keystream generator
Times keystream generation over a few repetitions and reports bytes/second,
one-shot keysetup/ivsetup durations and an estimated cycles/byte figure
"""

from dataclasses import dataclass, field
import os
from pathlib import Path
import re
import time
from typing import Any, Dict, List, Optional

from dicing.engine import KeystreamGenerator, VariantMode
from dicing.exceptions import ContractViolation
from dicing.ivsetup import IV_LENGTH, ivsetup
from dicing.keyschedule import build_key_material
from utils.observability import (
    ComponentType,
    OperationType,
    get_logger,
    get_observability_manager,
)

logger = get_logger(ComponentType.BENCHMARK)

CPUINFO_PATH = Path("/proc/cpuinfo")
_MHZ_PATTERN = re.compile(r"^cpu MHz\s*:\s*([0-9.]+)", re.MULTILINE)


def measured_clock_hz(cpuinfo: Path = CPUINFO_PATH) -> Optional[float]:
    """Current core frequency reported by the kernel, if any"""
    try:
        text = cpuinfo.read_text()
    except OSError:
        return None
    match = _MHZ_PATTERN.search(text)
    if not match:
        return None
    return float(match.group(1)) * 1e6


@dataclass
class BenchReport:
    """Outcome of one benchmark run"""

    megabytes: float
    mode: str
    throughputs: List[float] = field(default_factory=list)
    keysetup_ms: float = 0.0
    ivsetup_ms: float = 0.0
    clock_hz: float = 0.0
    clock_source: str = "assumed"
    target_mb_per_s: float = 100.0
    target_cycles_per_byte: float = 40.0

    @property
    def best_bytes_per_second(self) -> float:
        return max(self.throughputs) if self.throughputs else 0.0

    @property
    def cycles_per_byte(self) -> float:
        """Estimate only: the clock figure is nominal, not a cycle counter"""
        best = self.best_bytes_per_second
        return self.clock_hz / best if best else float("inf")

    @property
    def spread(self) -> float:
        """(max - min) / max over the repetitions"""
        if not self.throughputs:
            return 0.0
        top = max(self.throughputs)
        return (top - min(self.throughputs)) / top

    @property
    def meets_targets(self) -> bool:
        return (
            self.best_bytes_per_second >= self.target_mb_per_s * 1e6
            and self.cycles_per_byte <= self.target_cycles_per_byte
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "megabytes": self.megabytes,
            "mode": self.mode,
            "throughputs": self.throughputs,
            "keysetup_ms": self.keysetup_ms,
            "ivsetup_ms": self.ivsetup_ms,
            "clock_hz": self.clock_hz,
            "clock_source": self.clock_source,
            "cycles_per_byte_estimate": self.cycles_per_byte,
            "spread": self.spread,
        }


class Benchmark:
    """Keystream throughput harness"""

    def __init__(
        self,
        repetitions: int = 3,
        setup_iterations: int = 5,
        assumed_clock_hz: float = 3.0e9,
        target_mb_per_s: float = 100.0,
        target_cycles_per_byte: float = 40.0,
    ):
        self.repetitions = repetitions
        self.setup_iterations = setup_iterations
        self.assumed_clock_hz = assumed_clock_hz
        self.target_mb_per_s = target_mb_per_s
        self.target_cycles_per_byte = target_cycles_per_byte

    def _random_key_iv(self):
        return os.urandom(16), os.urandom(IV_LENGTH)

    def _time_setups(self) -> None:
        """Keysetup and ivsetup on fresh random inputs; timings land in the metrics"""
        for _ in range(self.setup_iterations):
            key, iv = self._random_key_iv()
            ivsetup(build_key_material(key), iv)

    def run(
        self, megabytes: float, mode: VariantMode = VariantMode.STANDARD
    ) -> BenchReport:
        if megabytes <= 0:
            raise ContractViolation("benchmark size must be positive")
        mode = VariantMode(mode)
        n_bytes = int(megabytes * 1_000_000)

        obs = get_observability_manager()
        metrics = obs.metrics
        report = BenchReport(
            megabytes=megabytes,
            mode=mode.value,
            target_mb_per_s=self.target_mb_per_s,
            target_cycles_per_byte=self.target_cycles_per_byte,
        )

        with obs.operation_context(
            OperationType.BENCHMARK, ComponentType.BENCHMARK, "bench", mode=mode.value
        ):
            self._time_setups()

            for repetition in range(self.repetitions):
                key, iv = self._random_key_iv()
                generator = KeystreamGenerator.from_key_iv(key, iv, mode)
                start = time.perf_counter()
                generator.keystream(n_bytes)
                elapsed = time.perf_counter() - start
                report.throughputs.append(n_bytes / elapsed)
                logger.debug(
                    "Benchmark repetition",
                    repetition=repetition,
                    bytes_per_second=round(n_bytes / elapsed),
                )

        keysetup = metrics.get("keysetup")
        ivsetup_metrics = metrics.get("ivsetup")
        report.keysetup_ms = keysetup.min_duration * 1000 if keysetup else 0.0
        report.ivsetup_ms = ivsetup_metrics.min_duration * 1000 if ivsetup_metrics else 0.0

        clock = measured_clock_hz()
        if clock:
            report.clock_hz, report.clock_source = clock, "cpuinfo"
        else:
            report.clock_hz, report.clock_source = self.assumed_clock_hz, "assumed"

        if not report.meets_targets:
            logger.info(
                "Throughput below the performance target",
                bytes_per_second=round(report.best_bytes_per_second),
                cycles_per_byte=round(report.cycles_per_byte, 1),
            )
        return report
