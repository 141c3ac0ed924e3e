"""
Key setup: everything derived from the secret key alone

The key-defined S-box S, the diffusion layer L built from two 8x8 bit
matrices A and B, their composite Q = L . S, and the whitening strings
K-hat and K-check used by the IV setup. Two renditions of L and Q live here:
the definitional ones (bit matrices applied byte by byte) and 256-entry word
tables used by the keystream engine. They are tested against each other.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Sequence, Tuple

from utils.observability import (
    ComponentType,
    OperationType,
    get_logger,
    timed_operation,
)

from .exceptions import ContractViolation, UnsupportedKeySizeError
from .gf2x import FIELD_K, naive_mul, power

logger = get_logger(ComponentType.KEY_SCHEDULE)

KEY_SIZES = (16, 32)
SBOX0_EXPONENT = 127
SBOX0_MULTIPLIER = 0x05
SBOX0_OFFSET = 0x03

# Row i lists (matrix, input position) for output byte i; "AB" is A(x) xor B(x)
L_PATTERN = (
    ("A", "B", "A", "AB"),
    ("B", "A", "AB", "A"),
    ("A", "AB", "A", "B"),
    ("AB", "A", "B", "A"),
)

# Output byte i of the transposed 4x4 block is input byte BLOCK_TRANSPOSE[i]
BLOCK_TRANSPOSE = tuple(4 * (i % 4) + i // 4 for i in range(16))

Tables = Tuple[Tuple[int, ...], ...]


def _bit(data: bytes, index: int) -> int:
    return (data[index >> 3] >> (index & 7)) & 1


def _parity(value: int) -> int:
    return bin(value).count("1") & 1


def rotl8(value: int, shift: int = 1) -> int:
    """Rotate a byte toward higher bit indices"""
    shift &= 7
    return ((value << shift) | (value >> (8 - shift))) & 0xFF


@dataclass(frozen=True)
class BitMatrix8:
    """8x8 matrix over GF(2); rows[i] holds M[i][j] in bit j"""

    rows: Tuple[int, ...]

    def __post_init__(self):
        if len(self.rows) != 8 or any(not 0 <= r <= 0xFF for r in self.rows):
            raise ContractViolation("a BitMatrix8 has exactly eight byte-sized rows")

    @classmethod
    def identity(cls) -> "BitMatrix8":
        return cls(tuple(1 << i for i in range(8)))

    def entry(self, i: int, j: int) -> int:
        return (self.rows[i] >> j) & 1

    def apply(self, x: int) -> int:
        """y_i = XOR_j M[i][j] * x_j with x_j = bit j of x"""
        y = 0
        for i, row in enumerate(self.rows):
            y |= _parity(row & x) << i
        return y

    def __matmul__(self, other: "BitMatrix8") -> "BitMatrix8":
        rows = []
        for row in self.rows:
            acc = 0
            for k in range(8):
                if (row >> k) & 1:
                    acc ^= other.rows[k]
            rows.append(acc)
        return BitMatrix8(tuple(rows))

    def rank(self) -> int:
        return gf2_rank(list(self.rows))

    def is_invertible(self) -> bool:
        return self.rank() == 8

    def table(self) -> Tuple[int, ...]:
        return tuple(self.apply(x) for x in range(256))


def gf2_rank(rows: List[int]) -> int:
    """Rank of a GF(2) matrix given as integer rows (Gaussian elimination)"""
    rows = [r for r in rows if r]
    rank = 0
    while rows:
        pivot = rows.pop()
        if not pivot:
            continue
        rank += 1
        low = pivot & -pivot
        rows = [r ^ pivot if r & low else r for r in rows]
        rows = [r for r in rows if r]
    return rank


def derive_lambda(key: bytes) -> bytes:
    """lambda = K[0..15] xor K[16..31] for 256-bit keys, the key itself otherwise"""
    if len(key) not in KEY_SIZES:
        raise UnsupportedKeySizeError(len(key))
    if len(key) == 16:
        return bytes(key)
    return bytes(a ^ b for a, b in zip(key[:16], key[16:]))


def split_lambda(lam: bytes) -> Tuple[bytes, bytes]:
    """(lambda', lambda'') = (lambda[0..7], lambda[8..15])"""
    return lam[:8], lam[8:16]


def _check_rho(rho: bytes) -> None:
    if len(rho) != 8:
        raise ContractViolation(f"rho must be 8 bytes, got {len(rho)}")


def build_V(rho: bytes) -> int:
    """The diagonal of rho's 8x8 bit matrix: V[i] = rho bit 9i"""
    _check_rho(rho)
    return sum(_bit(rho, 8 * i + i) << i for i in range(8))


def build_M(rho: bytes) -> BitMatrix8:
    """M = T_u . T_l with unit diagonals; J is the identity"""
    _check_rho(rho)
    upper = []
    lower = []
    for i in range(8):
        u_row = 1 << i
        l_row = 1 << i
        for j in range(8):
            if i < j:
                u_row |= _bit(rho, 8 * i + j) << j
            elif i > j:
                l_row |= _bit(rho, 8 * i + j) << j
        upper.append(u_row)
        lower.append(l_row)
    return BitMatrix8(tuple(upper)) @ BitMatrix8(tuple(lower))


@lru_cache(maxsize=None)
def sbox0_table() -> Tuple[int, ...]:
    return tuple(sbox0(x) for x in range(256))


def sbox0(x: int) -> int:
    """S_0(x) = 5 . (x xor 3)^127 in K"""
    base = FIELD_K.element(x ^ SBOX0_OFFSET)
    return naive_mul(
        FIELD_K.element(SBOX0_MULTIPLIER), power(base, SBOX0_EXPONENT)
    ).value


def build_sbox(v1: int, v2: int) -> Tuple[int, ...]:
    """S(x) = S_0(x xor V_2) xor V_1, tabulated"""
    s0 = sbox0_table()
    return tuple(s0[x ^ v2] ^ v1 for x in range(256))


def derive_vectors(lam: bytes) -> Tuple[int, int]:
    """(V_1, V_2) from lambda"""
    v_lo = build_V(lam[:8])
    v_hi = build_V(lam[8:16])
    return v_lo ^ v_hi, v_lo ^ rotl8(v_hi, 1)


def sbox_for_key(key: bytes) -> Tuple[int, ...]:
    """Just the key-defined S-box, without building the diffusion tables"""
    v1, v2 = derive_vectors(derive_lambda(key))
    return build_sbox(v1, v2)


@dataclass(frozen=True)
class LMap:
    """The 4x4 operator matrix over {A, B, A xor B} acting on one 32-bit word"""

    a: BitMatrix8
    b: BitMatrix8

    def block(self, name: str, x: int) -> int:
        if name == "A":
            return self.a.apply(x)
        if name == "B":
            return self.b.apply(x)
        return self.a.apply(x) ^ self.b.apply(x)

    def column_tables(self) -> Tuple[Tuple[int, ...], ...]:
        """For input position j, x -> packed 32-bit column image (byte i = row i)"""
        a_tab = self.a.table()
        b_tab = self.b.table()
        parts = {
            "A": a_tab,
            "B": b_tab,
            "AB": tuple(p ^ q for p, q in zip(a_tab, b_tab)),
        }
        columns = []
        for j in range(4):
            columns.append(
                tuple(
                    sum(parts[L_PATTERN[i][j]][x] << (8 * i) for i in range(4))
                    for x in range(256)
                )
            )
        return tuple(columns)

    def bit_rows(self) -> List[int]:
        """The dense 32x32 GF(2) matrix, rows as integers (bit 8j+k = input bit)"""
        columns = []
        for bit in range(32):
            unit = (1 << bit).to_bytes(4, "little")
            columns.append(int.from_bytes(L_apply(self, unit), "little"))
        return [
            sum(((col >> r) & 1) << c for c, col in enumerate(columns))
            for r in range(32)
        ]

    def is_invertible(self) -> bool:
        return gf2_rank(self.bit_rows()) == 32


def L_apply(lmap: LMap, word: bytes) -> bytes:
    """Apply L to one 4-byte word; byte 0 is s0"""
    if len(word) != 4:
        raise ContractViolation(f"L acts on 4-byte words, got {len(word)} bytes")
    out = []
    for i in range(4):
        acc = 0
        for j in range(4):
            acc ^= lmap.block(L_PATTERN[i][j], word[j])
        out.append(acc)
    return bytes(out)


@dataclass(frozen=True)
class KeyMaterial:
    """Everything keysetup derives; immutable and shareable"""

    key_size: int
    sbox: Tuple[int, ...]
    lmap: LMap
    k_hat: bytes = field(repr=False)
    k_check: bytes = field(repr=False)
    v1: int
    v2: int
    # Q = L.S folded into one table per byte position of a 16-byte block,
    # each entry already shifted into place in a 128-bit integer
    q_tables: Tables = field(repr=False, compare=False)
    # The same tables reindexed so that the lookup computes Q(value^T)
    qt_tables: Tables = field(repr=False, compare=False)

    def q_block(self, value: int) -> int:
        """Q on a 16-byte block held as a little-endian 128-bit integer"""
        return _lookup(self.q_tables, value)

    def q_transposed(self, value: int) -> int:
        """Q(value^T) for the 4x4 byte transposition T"""
        return _lookup(self.qt_tables, value)


def _lookup(t: Tables, value: int) -> int:
    b = value.to_bytes(16, "little")
    return (
        t[0][b[0]] ^ t[1][b[1]] ^ t[2][b[2]] ^ t[3][b[3]]
        ^ t[4][b[4]] ^ t[5][b[5]] ^ t[6][b[6]] ^ t[7][b[7]]
        ^ t[8][b[8]] ^ t[9][b[9]] ^ t[10][b[10]] ^ t[11][b[11]]
        ^ t[12][b[12]] ^ t[13][b[13]] ^ t[14][b[14]] ^ t[15][b[15]]
    )


def build_q_tables(sbox: Sequence[int], lmap: LMap) -> Tables:
    columns = lmap.column_tables()
    tables = []
    for position in range(16):
        word, j = divmod(position, 4)
        column = columns[j]
        tables.append(tuple(column[sbox[x]] << (32 * word) for x in range(256)))
    return tuple(tables)


def transpose_tables(q_tables: Tables) -> Tables:
    return tuple(q_tables[BLOCK_TRANSPOSE[p]] for p in range(16))


def derive_whitening(key: bytes) -> Tuple[bytes, bytes]:
    """(K-hat, K-check)"""
    if len(key) not in KEY_SIZES:
        raise UnsupportedKeySizeError(len(key))
    if len(key) == 32:
        k_hat = bytes(key)
    else:
        k_hat = bytes(key) + bytes(~b & 0xFF for b in key)
    k_check = bytes(~b & 0xFF for b in k_hat[16:]) + bytes(~b & 0xFF for b in k_hat[:16])
    return k_hat, k_check


@timed_operation("keysetup", ComponentType.KEY_SCHEDULE, OperationType.KEY_SETUP)
def build_key_material(key: bytes) -> KeyMaterial:
    """The cipher's keysetup"""
    lam = derive_lambda(key)
    lam_lo, lam_hi = split_lambda(lam)
    lmap = LMap(build_M(lam_lo), build_M(lam_hi))
    v1, v2 = derive_vectors(lam)
    sbox = build_sbox(v1, v2)
    k_hat, k_check = derive_whitening(key)

    logger.debug(
        "Key material derived",
        key_size=len(key) * 8,
        l_invertible=lmap.is_invertible(),
    )

    q_tables = build_q_tables(sbox, lmap)
    return KeyMaterial(
        key_size=len(key) * 8,
        sbox=sbox,
        lmap=lmap,
        k_hat=k_hat,
        k_check=k_check,
        v1=v1,
        v2=v2,
        q_tables=q_tables,
        qt_tables=transpose_tables(q_tables),
    )


def Q_apply(km: KeyMaterial, data: bytes) -> bytes:
    """Definitional Q: substitute every byte, then L on each word"""
    if len(data) % 4:
        raise ContractViolation(f"Q needs a multiple of 4 bytes, got {len(data)}")
    substituted = bytes(km.sbox[b] for b in data)
    return b"".join(
        L_apply(km.lmap, substituted[i : i + 4]) for i in range(0, len(data), 4)
    )
