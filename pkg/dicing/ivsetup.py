"""
IV setup: turns key material and a 32-byte IV into the engine's initial state
"""

from dataclasses import dataclass, field
import math
from typing import Tuple

import mpmath

from utils.observability import (
    ComponentType,
    OperationType,
    get_logger,
    timed_operation,
)

from .exceptions import ContractViolation, OracleDisagreementError
from .gf2x import FIELD_E1, FIELD_E2, FIELD_E3, FIELD_E4, FieldElem
from .keyschedule import KeyMaterial, Q_apply

logger = get_logger(ComponentType.IV_SETUP)

IV_LENGTH = 32
C_FACTORIAL = 57
INTERVAL_PRECISION_BITS = 320

XiChain = Tuple[bytes, bytes, bytes, bytes]

# floor(e * 57!); verify_constant_c re-derives it from both oracles
C_VALUE = 0xF38E61B5_92B993BF_A5399EC6_A3959404_E1412528_50C08765_28F9812C_CC4D049A


def constant_c_series() -> int:
    """floor(e * 57!) as the exact partial sum of 57!/k!

    The dropped tail is below 1/57, and every kept term is an integer.
    """
    top = math.factorial(C_FACTORIAL)
    return sum(top // math.factorial(k) for k in range(C_FACTORIAL + 1))


def constant_c_interval() -> int:
    """floor(e * 57!) from a 320-bit evaluation of e with an explicit error bracket"""
    with mpmath.workprec(INTERVAL_PRECISION_BITS):
        scaled = mpmath.e * math.factorial(C_FACTORIAL)
        # e and the product each carry at most an ulp of relative error
        slack = abs(scaled) * mpmath.ldexp(1, -(INTERVAL_PRECISION_BITS - 16))
        low = int(mpmath.floor(scaled - slack))
        high = int(mpmath.floor(scaled + slack))
    if low != high:
        raise OracleDisagreementError(
            "interval for e * 57! straddles an integer; raise the precision"
        )
    return low


def verify_constant_c() -> int:
    """Check the embedded constant against both oracles and return it"""
    series = constant_c_series()
    interval = constant_c_interval()
    if not series == interval == C_VALUE:
        raise OracleDisagreementError(
            f"constant c mismatch: embedded={C_VALUE:#x} "
            f"series={series:#x} interval={interval:#x}"
        )
    return C_VALUE


def constant_c_int() -> int:
    return C_VALUE


def compute_c() -> bytes:
    """c = floor(e * 57!) as 32 little-endian bytes"""
    return C_VALUE.to_bytes(32, "little")


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def phi(zeta: bytes) -> bytes:
    """Byte permutation zeta^phi[i] = zeta[4i mod 31]; byte 31 stays put"""
    if len(zeta) != 32:
        raise ContractViolation(f"phi acts on 32 bytes, got {len(zeta)}")
    return bytes(zeta[(4 * i) % 31] for i in range(31)) + zeta[31:32]


def _q32(km: KeyMaterial, data: bytes, reference: bool) -> bytes:
    if reference:
        return Q_apply(km, data)
    low = km.q_block(int.from_bytes(data[:16], "little"))
    high = km.q_block(int.from_bytes(data[16:], "little"))
    return low.to_bytes(16, "little") + high.to_bytes(16, "little")


def F(km: KeyMaterial, zeta: bytes, reference: bool = False) -> bytes:
    """F(zeta) = Q(phi(zeta))"""
    return _q32(km, phi(zeta), reference)


def G(km: KeyMaterial, zeta: bytes, reference: bool = False) -> bytes:
    """G(zeta) = F(F(F(zeta) xor K-hat) xor K-check)"""
    inner = _xor(F(km, zeta, reference), km.k_hat)
    middle = _xor(F(km, inner, reference), km.k_check)
    return F(km, middle, reference)


@dataclass(frozen=True)
class InitializedState:
    """The engine state at t = 0"""

    eta: bytes = field(repr=False)
    u0: bytes = field(repr=False)
    v0: bytes = field(repr=False)
    alpha0: FieldElem = field(repr=False)
    beta0: FieldElem = field(repr=False)
    omega0: FieldElem = field(repr=False)
    tau0: FieldElem = field(repr=False)
    used_fallback: bool = False


def derive_xi_chain(km: KeyMaterial, iv: bytes, reference: bool = False) -> XiChain:
    """xi_0 = G(IV xor c), xi_i = G(xi_{i-1} xor c) for i = 1, 2, 3"""
    if len(iv) != IV_LENGTH:
        raise ContractViolation(f"IV must be {IV_LENGTH} bytes, got {len(iv)}")
    c = compute_c()
    chain = []
    previous = iv
    for _ in range(4):
        previous = G(km, _xor(previous, c), reference)
        chain.append(previous)
    return tuple(chain)  # type: ignore[return-value]


def load_state(km: KeyMaterial, chain: XiChain) -> InitializedState:
    """Split the xi-chain into the individual state registers"""
    xi0, xi1, xi2, xi3 = chain

    xi2_int = int.from_bytes(xi2, "little")
    alpha0 = xi2_int & FIELD_E1.mask
    beta0 = (xi2_int >> 128) & FIELD_E2.mask

    used_fallback = not any(xi3)
    if used_fallback:
        logger.warning("xi_3 is zero; loading the combiner from K-hat")
        xi3 = km.k_hat

    return InitializedState(
        eta=_xor(xi0[:16], xi0[16:]),
        u0=xi1[:16],
        v0=xi1[16:],
        alpha0=FIELD_E1.element(alpha0),
        beta0=FIELD_E2.element(beta0),
        omega0=FIELD_E3.element(int.from_bytes(xi3[:16], "little")),
        tau0=FIELD_E4.element(int.from_bytes(xi3[16:], "little")),
        used_fallback=used_fallback,
    )


@timed_operation("ivsetup", ComponentType.IV_SETUP, OperationType.IV_SETUP)
def ivsetup(km: KeyMaterial, iv: bytes, reference: bool = False) -> InitializedState:
    """The cipher's IV setup"""
    return load_state(km, derive_xi_chain(km, iv, reference))
