"""
Desk-scale verification of the cipher's claims
Mini-DICING period experiments, exact big-integer identities behind the period
formula, primitivity and S-box checks, statistical batteries, avalanche and
step-value distribution, and the self-test that bundles a fast subset of them
"""

from dataclasses import dataclass, field
from math import gcd
import random
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

import sympy

from config import CipherConfig, get_config
from dicing.engine import (
    KeystreamGenerator,
    ReferenceEngine,
    VariantMode,
    step_sizes,
)
from dicing.exceptions import ContractViolation, DicingError, OracleDisagreementError
from dicing.gf2x import (
    CIPHER_FIELDS,
    FIELD_E1,
    FIELD_E_HAT,
    FIELD_K,
    factor_group_order,
    is_irreducible_by_trial_division,
    mul_x_pow,
    multiplicative_order,
    naive_mul,
    power,
    verify_primitive,
)
from dicing.ivsetup import IV_LENGTH, ivsetup, verify_constant_c
from dicing.keyschedule import KeyMaterial, Q_apply, build_key_material, sbox0
from dicing.mini import MiniParams, PeriodReport, run_period_experiment
from utils.observability import (
    ComponentType,
    OperationType,
    get_logger,
    get_observability_manager,
)
from utils.randomness import (
    StatisticalReport,
    flipped_bit_fraction,
    statistical_suite,
    step_value_chi_square,
    within_sigma,
)

logger = get_logger(ComponentType.VERIFICATION)

KeyMaterialFactory = Callable[[bytes], KeyMaterial]


@dataclass
class CheckResult:
    """One named verification check"""

    name: str
    passed: bool
    detail: str = ""
    informational: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "detail": self.detail,
            "informational": self.informational,
        }


@dataclass
class SelftestReport:
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)

    @property
    def failures(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed and not c.informational]

    def get(self, name: str) -> CheckResult:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)


# Period structure of the full-size cipher


def full_scale_periods() -> Dict[str, int]:
    """Exact period figures of the full-size generator"""
    e1 = FIELD_E1.group_order
    e2 = (1 << 126) - 1
    e3 = (1 << 128) - 1
    controller = e1 * e2
    return {
        "alpha": e1,
        "beta": e2,
        "dice": controller,
        "omega": controller * e3 // 3,
        "memorizer_lower_bound": controller * e3 // 3,
    }


def check_period_identities() -> List[CheckResult]:
    """Exact identities behind the omega period formula"""
    n = ((1 << 127) - 1) * ((1 << 126) - 1)
    order = (1 << 128) - 1
    base = (1 << 249) - (1 << 123) - (1 << 122)
    m = base * 136 + 1

    # Every step value occurs base times in one controller period, value 1 once more
    total_steps = 16 * base + 1
    reduced = (1 - 85 * (1 << 124)) % order
    short_exponent = (1 - 85 * (1 << 24)) % order
    divisor = gcd(order, 85 * (1 << 124) - 1)

    results = [
        CheckResult(
            "period_step_count",
            total_steps == n,
            "16 * (2^249 - 2^123 - 2^122) + 1 = (2^127 - 1)(2^126 - 1)",
        ),
        CheckResult(
            "period_sum_congruence",
            m % order == reduced,
            "m = 1 - 5 * 17 * 2^124 (mod 2^128 - 1)",
        ),
        CheckResult(
            "period_gcd",
            divisor == 3,
            f"gcd(2^128 - 1, 5 * 17 * 2^124 - 1) = {divisor}",
        ),
        CheckResult(
            "period_short_exponent",
            m % order != short_exponent,
            "the congruence does not hold with 2^24 in place of 2^124",
            informational=True,
        ),
    ]
    if m % order != short_exponent:
        logger.info("Congruence holds only with the exponent 124, not 24")
    return results


def mini_period_experiment(params: MiniParams) -> PeriodReport:
    obs = get_observability_manager()
    with obs.operation_context(
        OperationType.VERIFICATION,
        ComponentType.VERIFICATION,
        "mini_period_experiment",
        params=params.label(),
    ):
        return run_period_experiment(params)


def mini_params_from_tuple(degrees: Sequence[int]) -> MiniParams:
    """(d1, d2, d3) with the second built-in degree-7 combiner modulus for d3 = 7"""
    d1, d2, d3 = degrees
    p3 = 0x89 if d3 == 7 else None
    return MiniParams(d1=d1, d2=d2, d3=d3, p3=p3)


# Fields and S-box


def check_primitivity() -> List[CheckResult]:
    results = []
    mersenne = (1 << 127) - 1
    results.append(
        CheckResult(
            "primitive_E1",
            sympy.isprime(mersenne) and verify_primitive(FIELD_E1, {mersenne: 1}),
            "2^127 - 1 is prime and x has full order",
        )
    )
    for name in ("E2", "E3", "E4"):
        spec = CIPHER_FIELDS[name]
        ok = verify_primitive(spec, factor_group_order(spec.degree))
        results.append(
            CheckResult(f"primitive_{name}", ok, f"x has order 2^{spec.degree} - 1")
        )

    results.append(
        CheckResult(
            "irreducible_K",
            is_irreducible_by_trial_division(FIELD_K),
            "p(x) has no factor of degree 1..4",
        )
    )
    order_k = multiplicative_order(FIELD_K.x())
    results.append(
        CheckResult(
            "order_x_K", True, f"order of x in K is {order_k}", informational=True
        )
    )
    results.append(check_variant_polynomial())
    return results


def check_variant_polynomial() -> CheckResult:
    """Primitivity of the degree-256 polynomial; reported, never required"""
    primitive = verify_primitive(FIELD_E_HAT, factor_group_order(256))
    return CheckResult(
        "primitive_E_hat",
        primitive,
        "x primitive modulo the degree-256 variant polynomial: "
        + ("yes" if primitive else "no"),
        informational=True,
    )


def check_field_arithmetic(rng: random.Random, samples: int = 20) -> CheckResult:
    """Table-driven x^k multiplication against schoolbook multiplication"""
    for spec in CIPHER_FIELDS.values():
        for _ in range(samples):
            e = spec.element(rng.getrandbits(spec.degree))
            k = rng.randint(1, 16)
            if mul_x_pow(e, k) != naive_mul(e, power(spec.x(), k)):
                return CheckResult(
                    "field_shift", False, f"mismatch in {spec.name} for k={k}"
                )
    return CheckResult("field_shift", True, "x^k tables agree with naive products")


def check_constant_c() -> CheckResult:
    try:
        c = verify_constant_c()
    except OracleDisagreementError as e:
        return CheckResult("constant_c", False, str(e))
    ok = c.bit_length() == 256 and c % 2 == 0
    return CheckResult(
        "constant_c",
        ok,
        f"embedded value matches the series and interval oracles, "
        f"{c.bit_length()} bits, even",
    )


def check_sbox0() -> CheckResult:
    ok = sbox0(0x03) == 0x00 and sbox0(0x02) == 0x05
    return CheckResult("sbox0_values", ok, "S0(0x03) = 0x00 and S0(0x02) = 0x05")


def edge_keys() -> List[bytes]:
    return [bytes(16), b"\xff" * 16, bytes(32), b"\xff" * 32]


def check_sbox_permutation(
    keys: Iterable[bytes], factory: KeyMaterialFactory = build_key_material
) -> CheckResult:
    checked = 0
    for key in keys:
        km = factory(key)
        if sorted(km.sbox) != list(range(256)):
            return CheckResult(
                "sbox_permutation", False, f"S is not a permutation for key #{checked}"
            )
        checked += 1
    return CheckResult("sbox_permutation", True, f"S is a permutation for {checked} keys")


def check_q_tables(
    key: bytes,
    rng: random.Random,
    factory: KeyMaterialFactory = build_key_material,
    samples: int = 32,
) -> CheckResult:
    km = factory(key)
    for _ in range(samples):
        block = rng.getrandbits(128).to_bytes(16, "little")
        fast = km.q_block(int.from_bytes(block, "little")).to_bytes(16, "little")
        if fast != Q_apply(km, block):
            return CheckResult("q_tables", False, "table Q disagrees with definitional Q")
    return CheckResult("q_tables", True, f"{samples} blocks agree")


def check_l_invertibility(keys: Iterable[bytes], factory: KeyMaterialFactory) -> CheckResult:
    keys = list(keys)
    invertible = sum(1 for key in keys if factory(key).lmap.is_invertible())
    return CheckResult(
        "l_invertible",
        True,
        f"L invertible for {invertible} of {len(keys)} keys",
        informational=True,
    )


def check_engine_reference(key: bytes, iv: bytes, blocks: int = 8) -> CheckResult:
    """Fast generator against the table-free reference engine in every mode"""
    for mode in VariantMode:
        fast = KeystreamGenerator.from_key_iv(key, iv, mode).keystream(16 * blocks)
        slow = b"".join(ReferenceEngine(key, iv, mode).blocks(blocks))
        if fast != slow:
            return CheckResult(
                "engine_reference", False, f"streams differ in mode {mode.value}"
            )
    return CheckResult("engine_reference", True, f"{blocks} blocks agree in all modes")


# Statistics


def random_key_iv(rng: random.Random, key_bytes: int = 16):
    return rng.randbytes(key_bytes), rng.randbytes(IV_LENGTH)


def keystream_statistics(
    key: bytes,
    iv: bytes,
    n_bytes: int,
    mode: VariantMode = VariantMode.STANDARD,
    thresholds: Optional[Dict[str, float]] = None,
) -> StatisticalReport:
    stream = KeystreamGenerator.from_key_iv(key, iv, mode).keystream(n_bytes)
    return statistical_suite(stream, thresholds)


@dataclass
class AvalancheReport:
    trials: int
    fractions: List[float]
    band: tuple = (0.47, 0.53)

    @property
    def mean_fraction(self) -> float:
        return sum(self.fractions) / len(self.fractions) if self.fractions else 0.0

    @property
    def passed(self) -> bool:
        low, high = self.band
        return low <= self.mean_fraction <= high


def avalanche_test(
    keys: Sequence[bytes],
    trials: int,
    rng: random.Random,
    sample_bytes: int = 128,
    flip: bool = True,
    band: tuple = (0.47, 0.53),
    mode: VariantMode = VariantMode.STANDARD,
) -> AvalancheReport:
    """Flip one random IV bit per trial and compare the first sample_bytes

    With flip=False both engines get the same IV and the fraction must be 0.
    """
    if not keys:
        raise ContractViolation("avalanche test needs at least one key")
    materials = [build_key_material(key) for key in keys]
    fractions = []
    for trial in range(trials):
        km = materials[trial % len(materials)]
        iv = rng.randbytes(IV_LENGTH)
        other = bytearray(iv)
        if flip:
            bit = rng.randrange(8 * IV_LENGTH)
            other[bit >> 3] ^= 1 << (bit & 7)
        a = KeystreamGenerator(km, ivsetup(km, iv), mode).keystream(sample_bytes)
        b = KeystreamGenerator(km, ivsetup(km, bytes(other)), mode).keystream(sample_bytes)
        fractions.append(flipped_bit_fraction(a, b))
    report = AvalancheReport(trials=trials, fractions=fractions, band=band)
    logger.debug("Avalanche finished", trials=trials, mean=report.mean_fraction)
    return report


@dataclass
class StepDistributionReport:
    counts: List[int]
    statistic: float
    sigma: float

    @property
    def passed(self) -> bool:
        return within_sigma(self.statistic, len(self.counts) - 1, self.sigma)


def step_distribution_from_dices(dices: Iterable[int], sigma: float = 5.0) -> StepDistributionReport:
    counts = [0] * 16
    for d in dices:
        counts[step_sizes(d)[0] - 1] += 1
    return StepDistributionReport(counts, step_value_chi_square(counts), sigma)


def full_scale_step_distribution(
    n_cycles: int,
    key: bytes,
    iv: bytes,
    sigma: float = 5.0,
    mode: VariantMode = VariantMode.STANDARD,
) -> StepDistributionReport:
    """Count the step values a in 1..16 chosen by the running engine"""
    generator = KeystreamGenerator.from_key_iv(key, iv, mode)
    counts = [0] * 16
    for _ in range(n_cycles):
        a, _b = generator.clock()
        counts[a - 1] += 1
    report = StepDistributionReport(counts, step_value_chi_square(counts), sigma)
    logger.debug(
        "Step distribution measured",
        cycles=n_cycles,
        statistic=round(report.statistic, 2),
        passed=report.passed,
    )
    return report


# Self-test


def _guarded(name: str, check: Callable[[], Any]) -> List[CheckResult]:
    """Run a check; a raised DicingError becomes a failed result of that name"""
    try:
        outcome = check()
    except DicingError as e:
        logger.error("Check raised", error=e, check=name)
        return [CheckResult(name, False, str(e))]
    if isinstance(outcome, CheckResult):
        return [outcome]
    return list(outcome)


def run_selftest(
    config: Optional[CipherConfig] = None,
    key_material_factory: KeyMaterialFactory = build_key_material,
    seed: int = 0x5EED,
) -> SelftestReport:
    """Fast subset of the verification suite

    key_material_factory is the seam through which tests feed corrupted key
    material and watch the named check fail.
    """
    config = config or get_config("selftest")
    rng = random.Random(seed)
    report = SelftestReport()
    obs = get_observability_manager()

    with obs.operation_context(
        OperationType.VERIFICATION, ComponentType.VERIFICATION, "selftest", command="selftest"
    ):
        sbox_keys = edge_keys() + [
            rng.randbytes(rng.choice((16, 32))) for _ in range(config.get("selftest_sbox_keys"))
        ]
        key, iv = random_key_iv(rng)
        stream_bytes = config.get("selftest_stream_bytes")
        band = tuple(config.get("avalanche_band"))

        steps = [
            ("constant_c", check_constant_c),
            ("sbox0_values", check_sbox0),
            ("sbox_permutation", lambda: check_sbox_permutation(sbox_keys, key_material_factory)),
            ("q_tables", lambda: check_q_tables(key, rng, key_material_factory)),
            ("l_invertible", lambda: check_l_invertibility(sbox_keys[:8], key_material_factory)),
            ("field_shift", lambda: check_field_arithmetic(rng)),
            ("primitivity", check_primitivity),
            ("period_identities", check_period_identities),
            (
                "engine_reference",
                lambda: check_engine_reference(key, iv, config.get("selftest_engine_blocks")),
            ),
        ]
        for name, check in steps:
            report.checks.extend(_guarded(name, check))

        for degrees in config.get_mini_params(selftest=True):
            params = mini_params_from_tuple(degrees)

            def mini_check(params=params):
                period = mini_period_experiment(params)
                return CheckResult(
                    f"mini_period{params.label()}",
                    period.match and period.u_period_consistent,
                    f"controller {period.measured_controller_period}, "
                    f"omega {period.measured_omega_period} "
                    f"(formula {period.formula_period})",
                )

            report.checks.extend(_guarded(f"mini_period{params.label()}", mini_check))

        def statistics_check():
            stats = keystream_statistics(
                key, iv, stream_bytes, thresholds=config.get_statistical_thresholds()
            )
            return [
                CheckResult(f"stat_{r.name}", r.passed, f"{r.statistic:.4g} ({r.bound})")
                for r in stats.results
            ] + [
                CheckResult(
                    "linear_complexity",
                    True,
                    f"{stats.linear_complexity} over {stats.linear_complexity_bits} bits",
                    informational=True,
                )
            ]

        report.checks.extend(_guarded("statistics", statistics_check))

        def avalanche_check():
            result = avalanche_test(
                [key],
                config.get("avalanche_trials"),
                rng,
                config.get("avalanche_sample_bytes"),
                band=band,
            )
            return CheckResult(
                "avalanche", result.passed, f"mean flipped fraction {result.mean_fraction:.4f}"
            )

        report.checks.extend(_guarded("avalanche", avalanche_check))

        def step_check():
            result = full_scale_step_distribution(
                config.get("step_distribution_cycles"),
                key,
                iv,
                config.get("step_distribution_sigma"),
            )
            return CheckResult(
                "step_distribution", result.passed, f"chi2 {result.statistic:.2f} (df 15)"
            )

        report.checks.extend(_guarded("step_distribution", step_check))

    if report.passed:
        logger.info("Self-test passed", checks=len(report.checks))
    else:
        logger.warning("Self-test failed", failed=report.failures)
    return report
