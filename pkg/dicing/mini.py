"""
Mini-DICING: the cipher's projector structure with every field shrunk until
whole orbits can be walked one cycle at a time

Controller projectors live in fields of coprime degrees d1 and d2 and advance
by x^4 each cycle; the dice is the low dice_width bits of alpha xor beta; the
combiner projectors live in a field of degree d3 and advance by x^a and x^b
with a from the dice's low half and b from its high half.
"""

from collections import Counter
from dataclasses import dataclass, field
from math import gcd, lcm
from typing import Dict, Iterator, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, model_validator
import sympy

from utils.observability import ComponentType, get_logger

from .exceptions import ContractViolation
from .gf2x import FieldSpec, factor_group_order, verify_primitive

logger = get_logger(ComponentType.VERIFICATION)

# Primitive trinomials/pentanomials by degree
MINI_MODULI: Dict[int, int] = {
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x83,
    8: 0x11D,
    9: 0x211,
    10: 0x409,
    11: 0x805,
}

MAX_CONTROLLER_STATES = 10**7


class MiniParams(BaseModel):
    """Degrees, moduli and starting states of one mini-DICING instance"""

    model_config = ConfigDict(frozen=True)

    d1: int = 7
    d2: int = 5
    d3: int = 8
    controller_step: int = 4
    dice_width: int = 4
    p1: Optional[int] = None
    p2: Optional[int] = None
    p3: Optional[int] = None
    alpha0: int = 1
    beta0: int = 1
    omega0: int = 1
    tau0: int = 1

    @model_validator(mode="after")
    def _check_shape(self) -> "MiniParams":
        for name in ("d1", "d2", "d3"):
            degree = getattr(self, name)
            if degree not in MINI_MODULI and getattr(self, "p" + name[1]) is None:
                raise ValueError(f"{name}={degree}: no built-in modulus, pass p{name[1]}")
        if gcd(self.d1, self.d2) != 1:
            raise ValueError(f"controller degrees {self.d1} and {self.d2} are not coprime")
        if (2**self.d1 - 1) * (2**self.d2 - 1) > MAX_CONTROLLER_STATES:
            raise ValueError("controller orbit too long to brute-force")
        if self.dice_width % 2 or not 2 <= self.dice_width <= 8:
            raise ValueError("dice width must be even and between 2 and 8")
        if not 1 <= self.controller_step <= 8:
            raise ValueError("controller step must be between 1 and 8")
        for name, degree in (("alpha0", self.d1), ("beta0", self.d2),
                             ("omega0", self.d3), ("tau0", self.d3)):
            value = getattr(self, name)
            if not 0 < value < (1 << degree):
                raise ValueError(f"{name} must be a nonzero element of degree < {degree}")
        return self

    def label(self) -> str:
        return f"({self.d1},{self.d2},{self.d3})"

    def fields(self) -> Tuple[FieldSpec, FieldSpec, FieldSpec]:
        return (
            FieldSpec("mini_E1", self.d1, self.p1 or MINI_MODULI[self.d1], True),
            FieldSpec("mini_E2", self.d2, self.p2 or MINI_MODULI[self.d2], True),
            FieldSpec("mini_E3", self.d3, self.p3 or MINI_MODULI[self.d3], True),
        )

    def steps(self, d: int) -> Tuple[int, int]:
        half = self.dice_width // 2
        return 1 + (d & ((1 << half) - 1)), 1 + (d >> half)


@dataclass
class MiniState:
    alpha: int
    beta: int
    omega: int
    tau: int
    u: int = 0
    v: int = 0
    t: int = 0


class MiniDicing:
    """The mini generator; clocks in the same order as the full engine"""

    def __init__(self, params: MiniParams):
        self.params = params
        self.f1, self.f2, self.f3 = params.fields()
        self.dice_mask = (1 << params.dice_width) - 1
        self.state = MiniState(params.alpha0, params.beta0, params.omega0, params.tau0)

    def check_primitive(self) -> None:
        for spec in (self.f1, self.f2, self.f3):
            if not verify_primitive(spec, factor_group_order(spec.degree)):
                raise ContractViolation(
                    f"mini modulus {spec.modulus:#x} of degree {spec.degree} is not primitive"
                )

    def dice(self) -> int:
        return (self.state.alpha ^ self.state.beta) & self.dice_mask

    def clock(self) -> Tuple[int, int]:
        s = self.state
        a, b = self.params.steps((s.alpha ^ s.beta) & self.dice_mask)
        s.omega = self.f3.shift(s.omega, a)
        s.tau = self.f3.shift(s.tau, b)
        s.u ^= s.omega
        s.v ^= s.tau
        step = self.params.controller_step
        s.alpha = self.f1.shift(s.alpha, step)
        s.beta = self.f2.shift(s.beta, step)
        s.t += 1
        return a, b

    def dice_sequence(self, length: int) -> Iterator[int]:
        for _ in range(length):
            yield self.dice()
            self.clock()


@dataclass
class PeriodReport:
    """Measured orbit periods against their closed forms"""

    params: MiniParams
    formula_controller_period: int
    measured_controller_period: int
    measured_dice_period: int
    a_counts: Dict[int, int]
    b_counts: Dict[int, int]
    m: int
    m_mod: int
    divisor: int
    formula_period: int
    measured_omega_period: int
    formula_tau_period: int
    measured_tau_period: int
    measured_u_period: int
    notes: List[str] = field(default_factory=list)

    @property
    def match(self) -> bool:
        return (
            self.measured_controller_period == self.formula_controller_period
            and self.measured_omega_period == self.formula_period
            and self.measured_tau_period == self.formula_tau_period
        )

    @property
    def u_period_consistent(self) -> bool:
        """u returns only after omega does, so its period is a multiple"""
        return self.measured_u_period % self.measured_omega_period == 0

    @property
    def one_occurs_once_more(self) -> bool:
        """Step value 1 appears exactly once more than every other value"""
        others = {count for value, count in self.a_counts.items() if value != 1}
        return len(others) == 1 and self.a_counts.get(1) == others.pop() + 1


def _projector_period(order: int, step: int) -> int:
    """Orbit length of x^step acting on a field whose x has this order"""
    return order // gcd(order, step)


def _shortest_period(sequence: List[int], bound: int) -> int:
    for candidate in sympy.divisors(bound):
        if all(
            sequence[i] == sequence[i % candidate] for i in range(candidate, bound)
        ):
            return candidate
    return bound


def _first_return(gen: MiniDicing, limit: int, track_u: bool) -> Tuple[int, int, int]:
    """Cycles until (alpha, beta, omega), (alpha, beta, tau) and, optionally,
    (alpha, beta, omega, u) first return to their starting values"""
    s = gen.state
    start = (s.alpha, s.beta, s.omega, s.tau, s.u)
    omega_period = tau_period = u_period = 0
    for t in range(1, limit + 1):
        gen.clock()
        if s.alpha != start[0] or s.beta != start[1]:
            continue
        if not omega_period and s.omega == start[2]:
            omega_period = t
        if not tau_period and s.tau == start[3]:
            tau_period = t
        if track_u and not u_period and s.omega == start[2] and s.u == start[4]:
            u_period = t
        if omega_period and tau_period and (u_period or not track_u):
            break
    return omega_period, tau_period, u_period


def run_period_experiment(params: MiniParams, measure_u: bool = True) -> PeriodReport:
    """Walk the orbits of one mini instance and derive the closed-form periods

    Over one controller period n the combiner projector advances by
    x^m with m the sum of the step sizes, so omega_{kn} = omega_0 x^{km} and
    the joint orbit has length n * (2^d3 - 1) / gcd(2^d3 - 1, m).
    """
    gen = MiniDicing(params)
    gen.check_primitive()

    order1 = gen.f1.group_order
    order2 = gen.f2.group_order
    order3 = gen.f3.group_order
    n = lcm(
        _projector_period(order1, params.controller_step),
        _projector_period(order2, params.controller_step),
    )

    dices = list(MiniDicing(params).dice_sequence(n))
    a_counts: Counter = Counter()
    b_counts: Counter = Counter()
    for d in dices:
        a, b = params.steps(d)
        a_counts[a] += 1
        b_counts[b] += 1
    m = sum(value * count for value, count in a_counts.items())
    m_tau = sum(value * count for value, count in b_counts.items())

    divisor = gcd(order3, m)
    formula_period = n * (order3 // divisor)
    formula_tau_period = n * (order3 // gcd(order3, m_tau))

    controller = MiniDicing(params)
    measured_controller = 0
    s = controller.state
    for t in range(1, n + 1):
        controller.clock()
        if s.alpha == params.alpha0 and s.beta == params.beta0:
            measured_controller = t
            break

    limit = 2 * max(formula_period, formula_tau_period)
    omega_period, tau_period, u_period = _first_return(
        MiniDicing(params), limit, measure_u
    )

    report = PeriodReport(
        params=params,
        formula_controller_period=n,
        measured_controller_period=measured_controller,
        measured_dice_period=_shortest_period(dices, n),
        a_counts=dict(sorted(a_counts.items())),
        b_counts=dict(sorted(b_counts.items())),
        m=m,
        m_mod=m % order3,
        divisor=divisor,
        formula_period=formula_period,
        measured_omega_period=omega_period,
        formula_tau_period=formula_tau_period,
        measured_tau_period=tau_period,
        measured_u_period=u_period if measure_u else omega_period,
    )
    if report.measured_dice_period != n:
        report.notes.append(
            f"dice sequence repeats after {report.measured_dice_period} < {n} cycles"
        )

    logger.info(
        "Mini period experiment finished",
        params=params.label(),
        controller_period=n,
        omega_period=omega_period,
        formula_period=formula_period,
        match=report.match,
    )
    return report
