"""
The running cipher

Controller: projectors Gamma1 (alpha in E1) and Gamma2 (beta in E2) advance by
x^8 each cycle and their low bytes, the dices, choose the step sizes of the
combiner. Combiner: projectors Gamma3 (omega in E3) and Gamma4 (tau in E4)
advance by x^a and x^b and are XOR-accumulated into the memorizers u and v,
which the combining function turns into one 16-byte keystream block.

One cycle, in order:
  1. (a, b) from the dice byte of the previous controller state
  2. omega <- x^a omega, tau <- x^b tau
  3. u <- u xor omega, v <- v xor tau
  4. alpha <- x^8 alpha, beta <- x^8 beta
  5. t <- t + 1
and then z_t = C(u_t, v_t). The first block is emitted after one clock.

Besides the fast table-driven generator this module carries a reference
engine built only from field elements, naive multiplication and the
definitional Q; both must produce identical streams in every mode.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Optional, Tuple

from utils.observability import ComponentType, get_logger

from .exceptions import ContractViolation, ModeMismatchError
from .gf2x import (
    FIELD_E1,
    FIELD_E2,
    FIELD_E3,
    FIELD_E4,
    FIELD_E_HAT,
    FieldElem,
    FieldSpec,
    naive_mul,
    power,
)
from .ivsetup import InitializedState, ivsetup
from .keyschedule import BLOCK_TRANSPOSE, KeyMaterial, Q_apply, build_key_material

logger = get_logger(ComponentType.ENGINE)

BLOCK_SIZE = 16
MASK128 = (1 << 128) - 1
CONTROLLER_STEP = 8
TRANSPOSE = BLOCK_TRANSPOSE


class VariantMode(str, Enum):
    """Cipher variants; the mode is fixed when the generator is set up"""

    STANDARD = "standard"
    R1 = "r1"
    R2 = "r2"
    R3 = "r3"
    BIG = "big"


@dataclass
class EngineState:
    """Live cipher state; field registers are coefficient bit vectors

    In BIG mode the single 256-bit projector lives in sigma and omega/tau are
    unused; in R1 beta is frozen, in R3 alpha and beta are.
    """

    alpha: int
    beta: int
    omega: int
    tau: int
    u: int
    v: int
    eta: int
    mode: VariantMode = VariantMode.STANDARD
    sigma: int = 0
    t: int = 0
    pending: bytes = b""

    def alpha_elem(self) -> FieldElem:
        return FIELD_E1.element(self.alpha)

    def beta_elem(self) -> FieldElem:
        return FIELD_E2.element(self.beta)

    def omega_elem(self) -> FieldElem:
        return FIELD_E3.element(self.omega)

    def tau_elem(self) -> FieldElem:
        return FIELD_E4.element(self.tau)

    def sigma_elem(self) -> FieldElem:
        return FIELD_E_HAT.element(self.sigma)


def initial_engine_state(
    init: InitializedState, mode: VariantMode = VariantMode.STANDARD
) -> EngineState:
    mode = VariantMode(mode)
    omega = init.omega0.value
    tau = init.tau0.value
    return EngineState(
        alpha=init.alpha0.value,
        beta=init.beta0.value,
        omega=omega,
        tau=tau,
        u=int.from_bytes(init.u0, "little"),
        v=int.from_bytes(init.v0, "little"),
        eta=int.from_bytes(init.eta, "little"),
        mode=mode,
        sigma=omega | (tau << 128) if mode is VariantMode.BIG else 0,
    )


def dice_byte(state: EngineState) -> int:
    """D = D' xor D'' (D' alone once Gamma2 is dropped)"""
    if state.mode is VariantMode.R3:
        raise ModeMismatchError("R3 reads its dice from the combiner; use r3_dice_byte")
    if state.mode is VariantMode.R1:
        return state.alpha & 0xFF
    return (state.alpha ^ state.beta) & 0xFF


def r3_dice_byte(state: EngineState) -> int:
    """dice = omega[15] xor tau[15]"""
    if state.mode is not VariantMode.R3:
        raise ModeMismatchError(f"r3_dice_byte needs R3 mode, not {state.mode.value}")
    return ((state.omega ^ state.tau) >> 120) & 0xFF


def step_sizes(d: int) -> Tuple[int, int]:
    """a = 1 + (D & 15), b = 1 + (D >> 4)"""
    return 1 + (d & 15), 1 + ((d >> 4) & 15)


def _advance(state: EngineState) -> Tuple[int, int]:
    """One cycle in place; returns the step sizes used"""
    mode = state.mode
    if mode is VariantMode.R3:
        d = ((state.omega ^ state.tau) >> 120) & 0xFF
    elif mode is VariantMode.R1:
        d = state.alpha & 0xFF
    else:
        d = (state.alpha ^ state.beta) & 0xFF
    a = 1 + (d & 15)
    b = 1 + (d >> 4)

    if mode is VariantMode.BIG:
        sigma = FIELD_E_HAT.shift(state.sigma, a)
        state.sigma = sigma
        state.u ^= sigma & MASK128
        state.v ^= sigma >> 128
    else:
        state.omega = FIELD_E3.shift(state.omega, a)
        state.tau = FIELD_E4.shift(state.tau, b)
        state.u ^= state.omega
        state.v ^= state.tau

    if mode is not VariantMode.R3:
        state.alpha = FIELD_E1.shift(state.alpha, CONTROLLER_STEP)
        if mode is not VariantMode.R1:
            state.beta = FIELD_E2.shift(state.beta, CONTROLLER_STEP)

    state.t += 1
    return a, b


def clock(state: EngineState) -> EngineState:
    """Advance a copy of the state by one cycle"""
    advanced = replace(state)
    _advance(advanced)
    return advanced


def big_projector_clock(state: EngineState) -> EngineState:
    """One cycle of the 256-bit projector variant"""
    if state.mode is not VariantMode.BIG:
        raise ModeMismatchError(f"big_projector_clock needs BIG mode, not {state.mode.value}")
    return clock(state)


def transpose16(block: bytes) -> bytes:
    """Transpose a 16-byte block viewed row-major as a 4x4 byte matrix"""
    if len(block) != BLOCK_SIZE:
        raise ContractViolation(f"transpose16 needs 16 bytes, got {len(block)}")
    return bytes(block[j] for j in TRANSPOSE)


def _combine_int(km: KeyMaterial, state: EngineState) -> int:
    mode = state.mode
    if mode is VariantMode.STANDARD or mode is VariantMode.BIG:
        return km.q_transposed(km.q_block(state.u) ^ state.v) ^ state.eta
    if mode is VariantMode.R2 and state.alpha & 1:
        return km.q_block(state.v) ^ state.u
    return km.q_block(state.u) ^ state.v


def combine(km: KeyMaterial, state: EngineState) -> bytes:
    """z_t = Q((Q(u_t) xor v_t)^T) xor eta for the state's mode"""
    return _combine_int(km, state).to_bytes(BLOCK_SIZE, "little")


def _require(state: EngineState, *modes: VariantMode) -> None:
    if state.mode not in modes:
        names = ", ".join(m.value for m in modes)
        raise ModeMismatchError(f"operation needs mode {names}, not {state.mode.value}")


def combine_r1(km: KeyMaterial, state: EngineState) -> bytes:
    """C(u, v) = Q(u) xor v"""
    _require(state, VariantMode.R1)
    return combine(km, state)


def combine_r2(km: KeyMaterial, state: EngineState) -> bytes:
    """Q(u) xor v when alpha[0] = 0, Q(v) xor u when alpha[0] = 1"""
    _require(state, VariantMode.R2)
    return combine(km, state)


def combine_r3(km: KeyMaterial, state: EngineState) -> bytes:
    """R1 combiner over the controller-less engine"""
    _require(state, VariantMode.R3)
    return combine(km, state)


def keystream(km: KeyMaterial, state: EngineState, n_bytes: int) -> bytes:
    """Next n_bytes of z_1 | z_2 | ...; advances the state in place

    Bytes of a partly consumed block are kept in state.pending, so successive
    calls continue the stream seamlessly.
    """
    if n_bytes < 0:
        raise ContractViolation("keystream length must be nonnegative")
    if n_bytes <= len(state.pending):
        out = state.pending[:n_bytes]
        state.pending = state.pending[n_bytes:]
        return out

    needed = n_bytes - len(state.pending)
    blocks = -(-needed // BLOCK_SIZE)
    chunks: List[bytes] = [state.pending]
    for _ in range(blocks):
        _advance(state)
        chunks.append(_combine_int(km, state).to_bytes(BLOCK_SIZE, "little"))
    stream = b"".join(chunks)
    state.pending = stream[n_bytes:]
    return stream[:n_bytes]


class KeystreamGenerator:
    """A keystream generator exclusively owning one EngineState"""

    def __init__(
        self,
        km: KeyMaterial,
        init: InitializedState,
        mode: VariantMode = VariantMode.STANDARD,
        check_invariants: bool = False,
    ):
        self.km = km
        self.mode = VariantMode(mode)
        self.state = initial_engine_state(init, self.mode)
        self.check_invariants = check_invariants
        self.last_steps: Optional[Tuple[int, int]] = None

        logger.debug(
            "Keystream generator ready",
            mode=self.mode.value,
            key_size=km.key_size,
            used_fallback=init.used_fallback,
        )

    @classmethod
    def from_key_iv(
        cls,
        key: bytes,
        iv: bytes,
        mode: VariantMode = VariantMode.STANDARD,
        check_invariants: bool = False,
    ) -> "KeystreamGenerator":
        km = build_key_material(key)
        return cls(km, ivsetup(km, iv), mode, check_invariants)

    def clock(self) -> Tuple[int, int]:
        """Advance one cycle without producing output; returns (a, b)"""
        if self.check_invariants:
            return self._checked_advance()
        self.last_steps = _advance(self.state)
        return self.last_steps

    def _checked_advance(self) -> Tuple[int, int]:
        state = self.state
        u_prev, v_prev = state.u, state.v
        steps = _advance(state)
        if state.mode is VariantMode.BIG:
            sigma = state.sigma_elem()
            if sigma.is_zero():
                raise ContractViolation(f"big projector reached zero at t={state.t}")
            omega, tau = sigma.value & MASK128, sigma.value >> 128
        else:
            omega, tau = state.omega_elem().value, state.tau_elem().value
            if omega == 0 or tau == 0:
                raise ContractViolation(f"combiner projector reached zero at t={state.t}")
        state.alpha_elem()
        state.beta_elem()
        if u_prev ^ state.u != omega or v_prev ^ state.v != tau:
            raise ContractViolation(f"memorizer update broken at t={state.t}")
        self.last_steps = steps
        return steps

    def next_block(self) -> bytes:
        """Clock once and return z_t (ignores any pending partial block)"""
        self.clock()
        return combine(self.km, self.state)

    def keystream(self, n_bytes: int) -> bytes:
        if self.check_invariants:
            out = bytearray(self.state.pending[:n_bytes])
            self.state.pending = self.state.pending[len(out) :]
            while len(out) < n_bytes:
                block = self.next_block()
                take = min(BLOCK_SIZE, n_bytes - len(out))
                out += block[:take]
                self.state.pending = block[take:]
            return bytes(out)
        return keystream(self.km, self.state, n_bytes)

    def xor(self, data: bytes) -> bytes:
        """Ciphertext = plaintext xor keystream (and back)"""
        if not data:
            return b""
        stream = self.keystream(len(data))
        mixed = int.from_bytes(data, "little") ^ int.from_bytes(stream, "little")
        return mixed.to_bytes(len(data), "little")


class ReferenceEngine:
    """Table-free rendition of the cipher used as an oracle for the fast path"""

    def __init__(self, key: bytes, iv: bytes, mode: VariantMode = VariantMode.STANDARD):
        self.km = build_key_material(key)
        init = ivsetup(self.km, iv, reference=True)
        self.mode = VariantMode(mode)
        self.alpha = init.alpha0
        self.beta = init.beta0
        self.omega = init.omega0
        self.tau = init.tau0
        self.sigma = FIELD_E_HAT.element(init.omega0.value | (init.tau0.value << 128))
        self.u = init.u0
        self.v = init.v0
        self.eta = init.eta
        self._x_powers: Dict[str, List[FieldElem]] = {}

    def _times_x(self, e: FieldElem, k: int) -> FieldElem:
        field: FieldSpec = e.field
        powers = self._x_powers.get(field.name)
        if powers is None:
            powers = [power(field.x(), j) for j in range(17)]
            self._x_powers[field.name] = powers
        return naive_mul(e, powers[k])

    def _dice(self) -> int:
        if self.mode is VariantMode.R3:
            w = self.omega.value.to_bytes(16, "little")[15]
            t = self.tau.value.to_bytes(16, "little")[15]
            return w ^ t
        d1 = self.alpha.value.to_bytes(16, "little")[0]
        if self.mode is VariantMode.R1:
            return d1
        return d1 ^ self.beta.value.to_bytes(16, "little")[0]

    def clock(self) -> None:
        a, b = step_sizes(self._dice())
        if self.mode is VariantMode.BIG:
            self.sigma = self._times_x(self.sigma, a)
            raw = self.sigma.value.to_bytes(32, "little")
            omega_bytes, tau_bytes = raw[:16], raw[16:]
        else:
            self.omega = self._times_x(self.omega, a)
            self.tau = self._times_x(self.tau, b)
            omega_bytes = self.omega.value.to_bytes(16, "little")
            tau_bytes = self.tau.value.to_bytes(16, "little")
        self.u = bytes(p ^ q for p, q in zip(self.u, omega_bytes))
        self.v = bytes(p ^ q for p, q in zip(self.v, tau_bytes))
        if self.mode is not VariantMode.R3:
            self.alpha = self._times_x(self.alpha, CONTROLLER_STEP)
            if self.mode is not VariantMode.R1:
                self.beta = self._times_x(self.beta, CONTROLLER_STEP)

    def combine(self) -> bytes:
        q = Q_apply
        if self.mode in (VariantMode.STANDARD, VariantMode.BIG):
            inner = bytes(p ^ r for p, r in zip(q(self.km, self.u), self.v))
            outer = q(self.km, transpose16(inner))
            return bytes(p ^ r for p, r in zip(outer, self.eta))
        if self.mode is VariantMode.R2 and self.alpha.value & 1:
            return bytes(p ^ r for p, r in zip(q(self.km, self.v), self.u))
        return bytes(p ^ r for p, r in zip(q(self.km, self.u), self.v))

    def blocks(self, count: int) -> List[bytes]:
        out = []
        for _ in range(count):
            self.clock()
            out.append(self.combine())
        return out


def reference_keystream(
    key: bytes, iv: bytes, n_bytes: int, mode: VariantMode = VariantMode.STANDARD
) -> bytes:
    engine = ReferenceEngine(key, iv, mode)
    return b"".join(engine.blocks(-(-n_bytes // BLOCK_SIZE)))[:n_bytes]
