"""
Binary extension field arithmetic F[x]/p(x)
Polynomials over GF(2) are held in Python integers: the coefficient of x^j is bit j.
The same convention fixes the byte layout of every string in the cipher:
bit i of a byte string is bit (i mod 8) of byte i // 8, least significant first.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import sympy

from utils.observability import ComponentType, get_logger

from .exceptions import BadFactorizationError, ContractViolation, FieldMismatchError

logger = get_logger(ComponentType.GF2X)

MIN_DEGREE = 2
MAX_DEGREE = 256
MAX_SHIFT = 16

Factorization = Union[Mapping[int, int], Iterable[Tuple[int, int]]]


def poly_mul(a: int, b: int) -> int:
    """Carry-less product of two GF(2) polynomials"""
    if a < b:
        a, b = b, a
    product = 0
    while b:
        if b & 1:
            product ^= a
        a <<= 1
        b >>= 1
    return product


def poly_mod(a: int, b: int) -> int:
    """Remainder of a divided by b (long division over GF(2))"""
    if b == 0:
        raise ZeroDivisionError("division by zero polynomial")
    deg_b = b.bit_length() - 1
    deg_a = a.bit_length() - 1
    while deg_a >= deg_b:
        a ^= b << (deg_a - deg_b)
        deg_a = a.bit_length() - 1
    return a


def exponents(bits: int) -> List[int]:
    """Exponents with a nonzero coefficient, highest first"""
    return [j for j in range(bits.bit_length() - 1, -1, -1) if (bits >> j) & 1]


def from_exponents(exps: Iterable[int]) -> int:
    bits = 0
    for e in exps:
        bits ^= 1 << e
    return bits


@dataclass(frozen=True)
class PolynomialForm:
    """A modulus written as x^leading + (f_1)(f_2)...(f_r), each f_i a sparse sum

    This is the product-sum shape the cipher's polynomials are published in.
    """

    name: str
    leading: int
    factors: Tuple[Tuple[int, ...], ...]


def expand_polynomial(form: PolynomialForm) -> int:
    """Expand a product-sum description into its coefficient bit vector"""
    product = 1
    for factor in form.factors:
        product = poly_mul(product, from_exponents(factor))
    return (1 << form.leading) ^ product


POLYNOMIAL_FORMS: Dict[str, PolynomialForm] = {
    "p": PolynomialForm("p", 8, ((6, 5, 1, 0),)),
    "p1": PolynomialForm("p1", 127, ((89, 41, 0), (3, 0))),
    "p2": PolynomialForm("p2", 126, ((83, 35, 0), (7, 0))),
    "p3": PolynomialForm("p3", 128, ((96, 67, 32, 0), (3, 0))),
    "p4": PolynomialForm("p4", 128, ((96, 64, 37, 0), (7, 5, 0))),
    "p_hat": PolynomialForm(
        "p_hat", 256, ((224, 192, 161, 128, 96, 67, 32, 0), (6, 0))
    ),
}


@dataclass(frozen=True)
class FieldSpec:
    """The field F[x]/p(x); modulus holds every coefficient of p including x^degree"""

    name: str
    degree: int
    modulus: int
    primitive_claimed: bool = False

    def __post_init__(self):
        if not MIN_DEGREE <= self.degree <= MAX_DEGREE:
            raise ContractViolation(
                f"field degree {self.degree} outside {MIN_DEGREE}..{MAX_DEGREE}"
            )
        if self.modulus.bit_length() - 1 != self.degree:
            raise ContractViolation(
                f"modulus of {self.name} has degree {self.modulus.bit_length() - 1}, "
                f"expected {self.degree}"
            )
        if not self.modulus & 1:
            raise ContractViolation(
                f"modulus of {self.name} has no constant term; x would be a zero divisor"
            )

    @classmethod
    def from_form(
        cls, form: PolynomialForm, primitive_claimed: bool = True
    ) -> "FieldSpec":
        return cls(form.name, form.leading, expand_polynomial(form), primitive_claimed)

    @property
    def mask(self) -> int:
        return (1 << self.degree) - 1

    @property
    def byte_length(self) -> int:
        """Size of the little-endian container (127 and 126 bits live in 16 bytes)"""
        return (self.degree + 7) // 8

    @property
    def group_order(self) -> int:
        return (1 << self.degree) - 1

    @cached_property
    def reduction_table(self) -> Tuple[int, ...]:
        """h(x) * x^degree mod p(x) for every byte-sized overflow h"""
        return tuple(poly_mod(h << self.degree, self.modulus) for h in range(256))

    def shift(self, value: int, k: int) -> int:
        """x^k * value for 1 <= k <= 16 without validation (hot path)"""
        table = self.reduction_table
        if k > 8:
            value <<= 8
            value = (value & self.mask) ^ table[value >> self.degree]
            k -= 8
        value <<= k
        return (value & self.mask) ^ table[value >> self.degree]

    def element(self, value: int) -> "FieldElem":
        return FieldElem(value, self)

    def zero(self) -> "FieldElem":
        return FieldElem(0, self)

    def one(self) -> "FieldElem":
        return FieldElem(1, self)

    def x(self) -> "FieldElem":
        return FieldElem(2, self)


@dataclass(frozen=True)
class FieldElem:
    """A field element as its coefficient bit vector"""

    value: int
    field: FieldSpec

    def __post_init__(self):
        if self.value < 0 or self.value >> self.field.degree:
            raise ContractViolation(
                f"element has bits at or above degree {self.field.degree} "
                f"of field {self.field.name}"
            )

    def __xor__(self, other: "FieldElem") -> "FieldElem":
        _check_same_field(self, other)
        return FieldElem(self.value ^ other.value, self.field)

    def is_zero(self) -> bool:
        return self.value == 0


def _check_same_field(a: FieldElem, b: FieldElem) -> None:
    if a.field != b.field:
        raise FieldMismatchError(
            f"cannot combine elements of {a.field.name} and {b.field.name}"
        )


def naive_mul(a: FieldElem, b: FieldElem) -> FieldElem:
    """Schoolbook product followed by long division; no tables"""
    _check_same_field(a, b)
    return FieldElem(poly_mod(poly_mul(a.value, b.value), a.field.modulus), a.field)


def mul_x_pow(e: FieldElem, k: int) -> FieldElem:
    """x^k * e through the byte reduction table"""
    if not 1 <= k <= MAX_SHIFT:
        raise ContractViolation(f"shift exponent {k} outside 1..{MAX_SHIFT}")
    return FieldElem(e.field.shift(e.value, k), e.field)


def power(e: FieldElem, n: int) -> FieldElem:
    """e^n by square-and-multiply over naive_mul"""
    if n < 0:
        raise ContractViolation("exponent must be nonnegative")
    result = e.field.one()
    base = e
    while n:
        if n & 1:
            result = naive_mul(result, base)
        base = naive_mul(base, base)
        n >>= 1
    return result


def bytes_to_elem(data: bytes, spec: FieldSpec) -> FieldElem:
    if len(data) != spec.byte_length:
        raise ContractViolation(
            f"{spec.name} elements take {spec.byte_length} bytes, got {len(data)}"
        )
    return FieldElem(int.from_bytes(data, "little"), spec)


def elem_to_bytes(e: FieldElem) -> bytes:
    return e.value.to_bytes(e.field.byte_length, "little")


# 2^256 - 1 = (2^128 - 1) * F7; sympy cannot split F7 quickly
KNOWN_FACTORIZATIONS: Dict[int, Dict[int, int]] = {
    256: {
        3: 1,
        5: 1,
        17: 1,
        257: 1,
        641: 1,
        65537: 1,
        274177: 1,
        6700417: 1,
        67280421310721: 1,
        59649589127497217: 1,
        5704689200685129054721: 1,
    },
}


@lru_cache(maxsize=None)
def _factor_group_order(degree: int) -> Tuple[Tuple[int, int], ...]:
    if degree in KNOWN_FACTORIZATIONS:
        factors = KNOWN_FACTORIZATIONS[degree]
    else:
        factors = sympy.factorint((1 << degree) - 1)
    return tuple(sorted(factors.items()))


def factor_group_order(degree: int) -> Dict[int, int]:
    """Prime factorization of 2^degree - 1 as {prime: multiplicity}"""
    return dict(_factor_group_order(degree))


def verify_primitive(spec: FieldSpec, factorization: Factorization) -> bool:
    """Check that x generates the multiplicative group of the field

    Raises BadFactorizationError when the factor list does not multiply out
    to 2^degree - 1 or contains a composite; returns False when the list is
    sound but x has smaller order.
    """
    factors = dict(factorization)
    order = spec.group_order

    product = 1
    for prime, multiplicity in factors.items():
        if multiplicity < 1:
            raise BadFactorizationError(f"multiplicity of {prime} must be positive")
        product *= prime**multiplicity
    if product != order:
        raise BadFactorizationError(
            f"claimed factors multiply to {product}, not 2^{spec.degree} - 1"
        )
    composite = [p for p in factors if not sympy.isprime(p)]
    if composite:
        raise BadFactorizationError(f"claimed prime factors are composite: {composite}")

    x = spec.x()
    one = spec.one()
    if power(x, order) != one:
        logger.info("x^(2^d-1) != 1", field=spec.name)
        return False
    for prime in factors:
        if power(x, order // prime) == one:
            logger.info("x has a smaller order", field=spec.name, cofactor_prime=prime)
            return False

    logger.debug("x is primitive", field=spec.name, degree=spec.degree)
    return True


def is_irreducible_by_trial_division(spec: FieldSpec) -> bool:
    """Exhaustively divide by every polynomial of degree 1..degree//2"""
    limit = 1 << (spec.degree // 2 + 1)
    return all(poly_mod(spec.modulus, g) != 0 for g in range(2, limit))


def multiplicative_order(
    e: FieldElem, factorization: Optional[Factorization] = None
) -> int:
    """Order of a nonzero element in the multiplicative group"""
    if e.is_zero():
        raise ContractViolation("zero has no multiplicative order")
    if factorization is None:
        factors = factor_group_order(e.field.degree)
    else:
        factors = dict(factorization)
    order = e.field.group_order
    one = e.field.one()
    for prime in factors:
        while order % prime == 0 and power(e, order // prime) == one:
            order //= prime
    return order


FIELD_K = FieldSpec.from_form(POLYNOMIAL_FORMS["p"], primitive_claimed=False)
FIELD_E1 = FieldSpec.from_form(POLYNOMIAL_FORMS["p1"])
FIELD_E2 = FieldSpec.from_form(POLYNOMIAL_FORMS["p2"])
FIELD_E3 = FieldSpec.from_form(POLYNOMIAL_FORMS["p3"])
FIELD_E4 = FieldSpec.from_form(POLYNOMIAL_FORMS["p4"])
FIELD_E_HAT = FieldSpec.from_form(POLYNOMIAL_FORMS["p_hat"])

CIPHER_FIELDS: Dict[str, FieldSpec] = {
    "K": FIELD_K,
    "E1": FIELD_E1,
    "E2": FIELD_E2,
    "E3": FIELD_E3,
    "E4": FIELD_E4,
    "E_hat": FIELD_E_HAT,
}
