"""
Unit tests for binary field arithmetic
The table-driven shift is the hot path of the engine and is checked against
schoolbook multiplication everywhere
"""

import pytest

from dicing.exceptions import (
    BadFactorizationError,
    ContractViolation,
    FieldMismatchError,
)
from dicing.gf2x import (
    CIPHER_FIELDS,
    FIELD_E1,
    FIELD_E2,
    FIELD_E3,
    FIELD_E4,
    FIELD_K,
    POLYNOMIAL_FORMS,
    FieldSpec,
    bytes_to_elem,
    elem_to_bytes,
    expand_polynomial,
    exponents,
    factor_group_order,
    is_irreducible_by_trial_division,
    mul_x_pow,
    multiplicative_order,
    naive_mul,
    poly_mod,
    poly_mul,
    power,
    verify_primitive,
)


class TestPolynomialExpansion:
    """Expanded moduli of the cipher's fields"""

    @pytest.mark.parametrize(
        "name, expected",
        [
            ("p", [8, 6, 5, 1, 0]),
            ("p1", [127, 92, 89, 44, 41, 3, 0]),
            ("p2", [126, 90, 83, 42, 35, 7, 0]),
            ("p3", [128, 99, 96, 70, 67, 35, 32, 3, 0]),
            ("p4", [128, 103, 101, 96, 71, 69, 64, 44, 42, 37, 7, 5, 0]),
            (
                "p_hat",
                [256, 230, 224, 198, 192, 167, 161, 134, 128, 102, 96, 73, 67, 38, 32, 6, 0],
            ),
        ],
    )
    def test_exponent_sets(self, name, expected):
        assert exponents(expand_polynomial(POLYNOMIAL_FORMS[name])) == expected

    def test_k_modulus_value(self):
        assert FIELD_K.modulus == 0x163

    def test_field_degrees(self):
        degrees = {name: spec.degree for name, spec in CIPHER_FIELDS.items()}
        assert degrees == {"K": 8, "E1": 127, "E2": 126, "E3": 128, "E4": 128, "E_hat": 256}

    def test_poly_mul_and_mod_are_consistent(self):
        a, b = 0b1011, 0b110
        product = poly_mul(a, b)
        assert product == 0b111010
        assert poly_mod(product, a) == 0


class TestFieldSpecValidation:
    """FieldSpec refuses malformed moduli"""

    def test_rejects_missing_constant_term(self):
        with pytest.raises(ContractViolation):
            FieldSpec("bad", 8, 0x162)

    def test_rejects_wrong_degree(self):
        with pytest.raises(ContractViolation):
            FieldSpec("bad", 9, 0x163)

    def test_rejects_degree_out_of_range(self):
        with pytest.raises(ContractViolation):
            FieldSpec("bad", 1, 0b11)

    def test_element_padding_bits_rejected(self):
        with pytest.raises(ContractViolation):
            FIELD_E1.element(1 << 127)

    def test_container_size(self):
        assert FIELD_E1.byte_length == 16
        assert FIELD_E2.byte_length == 16
        assert FIELD_K.byte_length == 1


class TestMulXPow:
    """x^k multiplication through the reduction table"""

    def test_forced_reduction_in_k(self):
        assert mul_x_pow(FIELD_K.element(0x80), 1).value == 0x63

    def test_no_reduction_needed(self):
        assert mul_x_pow(FIELD_K.one(), 5).value == 1 << 5

    def test_naive_product_forced_reduction(self):
        assert naive_mul(FIELD_K.element(0x02), FIELD_K.element(0x80)).value == 0x63

    @pytest.mark.parametrize("k", [0, 17, -1])
    def test_exponent_out_of_range(self, k):
        with pytest.raises(ContractViolation):
            mul_x_pow(FIELD_K.one(), k)

    def test_input_unchanged(self):
        e = FIELD_E3.element(0xDEADBEEF)
        mul_x_pow(e, 9)
        assert e.value == 0xDEADBEEF

    def test_exhaustive_in_k(self):
        for value in range(256):
            e = FIELD_K.element(value)
            for k in range(1, 17):
                assert mul_x_pow(e, k) == naive_mul(e, power(FIELD_K.x(), k))

    @pytest.mark.parametrize("spec", [FIELD_E1, FIELD_E2, FIELD_E3, FIELD_E4])
    def test_random_elements_match_naive(self, spec, rng):
        x_powers = [power(spec.x(), k) for k in range(17)]
        for _ in range(300):
            e = spec.element(rng.getrandbits(spec.degree))
            k = rng.randint(1, 16)
            result = mul_x_pow(e, k)
            assert result == naive_mul(e, x_powers[k])
            assert result.value >> spec.degree == 0

    @pytest.mark.slow
    @pytest.mark.parametrize("spec", [FIELD_E1, FIELD_E2, FIELD_E3, FIELD_E4])
    def test_ten_thousand_random_elements(self, spec, rng):
        x_powers = [power(spec.x(), k) for k in range(17)]
        for _ in range(10_000):
            e = spec.element(rng.getrandbits(spec.degree))
            k = rng.randint(1, 16)
            assert mul_x_pow(e, k) == naive_mul(e, x_powers[k])

    def test_high_bits_force_reduction_in_e1(self):
        top = FIELD_E1.element(1 << 126)
        # x^127 = x^92 + x^89 + x^44 + x^41 + x^3 + 1
        expected = sum(1 << j for j in (92, 89, 44, 41, 3, 0))
        assert mul_x_pow(top, 1).value == expected


class TestNaiveMul:
    """Schoolbook multiplication is the oracle for everything else"""

    def test_zero_absorbs(self):
        assert naive_mul(FIELD_K.zero(), FIELD_K.element(0x9A)).is_zero()

    def test_one_is_identity(self):
        b = FIELD_K.element(0x9A)
        assert naive_mul(FIELD_K.one(), b) == b

    def test_field_mismatch(self):
        with pytest.raises(FieldMismatchError):
            naive_mul(FIELD_E3.one(), FIELD_E4.one())

    def test_xor_field_mismatch(self):
        with pytest.raises(FieldMismatchError):
            FIELD_E3.one() ^ FIELD_E4.one()

    def test_ring_laws_in_k(self, rng):
        elements = [FIELD_K.element(v) for v in range(256)]
        for _ in range(2000):
            a, b, c = (rng.choice(elements) for _ in range(3))
            assert naive_mul(a, b) == naive_mul(b, a)
            assert naive_mul(naive_mul(a, b), c) == naive_mul(a, naive_mul(b, c))
            assert naive_mul(a, b ^ c) == naive_mul(a, b) ^ naive_mul(a, c)


class TestPower:
    def test_zero_exponent(self):
        assert power(FIELD_E3.element(0x1234), 0) == FIELD_E3.one()

    def test_one_base(self):
        assert power(FIELD_K.one(), 12345) == FIELD_K.one()

    def test_x_order_divides_255_in_k(self):
        assert power(FIELD_K.x(), 255) == FIELD_K.one()

    def test_negative_exponent(self):
        with pytest.raises(ContractViolation):
            power(FIELD_K.x(), -1)

    def test_powers_of_x_cycle_in_k(self):
        value, seen = 1, set()
        for _ in range(255):
            seen.add(value)
            value = FIELD_K.shift(value, 1)
        assert value == 1
        assert len(seen) == multiplicative_order(FIELD_K.x())

    def test_fermat_in_large_fields(self):
        for spec in (FIELD_E1, FIELD_E2, FIELD_E3):
            assert power(spec.x(), spec.group_order) == spec.one()


class TestPrimitivity:
    """x generates the multiplicative group of the combiner and controller fields"""

    def test_e1_mersenne(self):
        assert verify_primitive(FIELD_E1, {(1 << 127) - 1: 1})

    @pytest.mark.parametrize("spec", [FIELD_E2, FIELD_E3, FIELD_E4])
    def test_factored_fields(self, spec):
        assert verify_primitive(spec, factor_group_order(spec.degree))

    def test_k_is_irreducible(self):
        assert is_irreducible_by_trial_division(FIELD_K)

    def test_reducible_polynomial_detected(self):
        # (x^4 + x + 1)^2 = x^8 + x^2 + 1
        assert not is_irreducible_by_trial_division(FieldSpec("sq", 8, 0x105))

    def test_product_mismatch_is_bad_factorization(self):
        with pytest.raises(BadFactorizationError):
            verify_primitive(FIELD_K, {3: 1, 5: 1})

    def test_composite_factor_is_bad_factorization(self):
        with pytest.raises(BadFactorizationError):
            verify_primitive(FIELD_K, {15: 1, 17: 1})

    def test_non_primitive_returns_false(self):
        # x^4 + x^3 + x^2 + x + 1 is irreducible but x has order 5
        spec = FieldSpec("order5", 4, 0b11111)
        assert verify_primitive(spec, {3: 1, 5: 1}) is False
        assert multiplicative_order(spec.x()) == 5

    def test_known_factorization_multiplies_out(self):
        product = 1
        for prime, multiplicity in factor_group_order(256).items():
            product *= prime**multiplicity
        assert product == (1 << 256) - 1


class TestByteEncoding:
    def test_zero_bytes(self):
        assert bytes_to_elem(bytes(16), FIELD_E3).is_zero()

    def test_low_byte_one(self):
        assert bytes_to_elem(b"\x01" + bytes(15), FIELD_E3) == FIELD_E3.one()

    def test_padding_rejected(self):
        with pytest.raises(ContractViolation):
            bytes_to_elem(bytes(15) + b"\x80", FIELD_E1)

    def test_wrong_length_rejected(self):
        with pytest.raises(ContractViolation):
            bytes_to_elem(bytes(15), FIELD_E3)

    def test_little_endian_layout(self):
        e = FIELD_E3.element(1 << 9)
        assert elem_to_bytes(e) == b"\x00\x02" + bytes(14)
