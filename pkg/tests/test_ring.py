"""Modular arithmetic: hand-checked values, exhaustive inverses, properties."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from secagg import (
    FieldPrime,
    LengthMismatch,
    RingModulus,
    RingVector,
    ZeroInverse,
    mod_add,
    mod_inv,
    mod_mul,
    mod_sub,
    vec_add,
    vec_sub,
)
from secagg.ring import M61, is_prime_u64

M = (1 << 61) - 1


# ---------------------------------------------------------------------------
# scalar ops
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "a,b,m,expected",
    [
        (0, 0, 31, 0),
        (30, 5, 31, 4),  # 35 mod 31
        (2**61 - 2, 3, M, 2),  # wraps past the Mersenne modulus
    ],
)
def test_mod_add_examples(a, b, m, expected):
    assert mod_add(a, b, m) == expected


@pytest.mark.parametrize(
    "a,b,m,expected",
    [
        (5, 5, 31, 0),
        (2, 5, 31, 28),
        (0, 1, 2**32, 2**32 - 1),
    ],
)
def test_mod_sub_examples(a, b, m, expected):
    assert mod_sub(a, b, m) == expected


@pytest.mark.parametrize(
    "a,b,p,expected",
    [
        (1, 7, 31, 7),
        (6, 6, 31, 5),  # 36 mod 31
        (2**60, 2, M, 1),  # 2^61 mod (2^61 - 1)
    ],
)
def test_mod_mul_examples(a, b, p, expected):
    assert mod_mul(a, b, FieldPrime(p)) == expected


@pytest.mark.parametrize("a,p,expected", [(1, 31, 1), (2, 31, 16), (5, 7, 3)])
def test_mod_inv_examples(a, p, expected):
    assert mod_inv(a, FieldPrime(p)) == expected


def test_mod_inv_zero_raises():
    with pytest.raises(ZeroInverse):
        mod_inv(0, FieldPrime(31))


@pytest.mark.parametrize("p", [7, 31, 251])
def test_mod_inv_exhaustive(p):
    field = FieldPrime(p)
    for a in range(1, p):
        assert mod_mul(a, mod_inv(a, field), field) == 1


@given(st.integers(2, 2**61 - 1), st.data())
def test_add_sub_round_trip(m, data):
    a = data.draw(st.integers(0, m - 1))
    b = data.draw(st.integers(0, m - 1))
    assert mod_add(a, mod_sub(b, a, m), m) == b


@given(st.integers(0, M - 1), st.integers(0, M - 1))
def test_mul_matches_bigint(a, b):
    assert mod_mul(a, b, FieldPrime(M)) == (a * b) % M


# ---------------------------------------------------------------------------
# moduli validation
# ---------------------------------------------------------------------------


def test_field_prime_rejects_composite_and_small():
    for bad in (0, 1, 2, 4, 91, 2**61):
        with pytest.raises(ValueError):
            FieldPrime(bad)
    assert FieldPrime().p == M61


def test_is_prime_u64_spot_checks():
    assert is_prime_u64(M61)
    assert is_prime_u64(2)
    assert not is_prime_u64(3215031751)  # strong pseudoprime to bases 2,3,5,7... not all
    assert not is_prime_u64((1 << 61) + 1)


def test_ring_modulus_bounds():
    for bad in (0, 65, -3):
        with pytest.raises(ValueError):
            RingModulus(bad)
    R = RingModulus(32)
    assert R.R == 2**32 and R.bytes_per_entry == 4
    assert RingModulus(61).bytes_per_entry == 8
    assert RingModulus(1).bytes_per_entry == 1


# ---------------------------------------------------------------------------
# vector ops
# ---------------------------------------------------------------------------


def _rv(vals, bits):
    return RingVector.of(vals, RingModulus(bits))


def test_vec_add_examples():
    R = RingModulus(16)
    assert vec_add(_rv([0, 0], 16), _rv([0, 0], 16), R) == _rv([0, 0], 16)
    assert vec_add(_rv([65535, 1], 16), _rv([1, 2], 16), R) == _rv([0, 3], 16)
    R3 = RingModulus(3)
    assert vec_add(_rv([5], 3), _rv([6], 3), R3) == _rv([3], 3)  # 11 mod 8


def test_vec_sub_examples():
    R = RingModulus(16)
    assert vec_sub(_rv([7, 7], 16), _rv([7, 7], 16), R) == _rv([0, 0], 16)
    assert vec_sub(_rv([0], 8), _rv([1], 8), RingModulus(8)) == _rv([255], 8)
    R4 = RingModulus(4)
    assert vec_sub(_rv([3, 1], 4), _rv([1, 2], 4), R4) == _rv([2, 15], 4)


def test_vec_length_mismatch():
    R = RingModulus(8)
    with pytest.raises(LengthMismatch):
        vec_add(_rv([1], 8), _rv([1, 2], 8), R)
    with pytest.raises(LengthMismatch):
        vec_sub(_rv([1, 2, 3], 8), _rv([1], 8), R)


@given(
    st.integers(1, 64),
    st.lists(st.integers(0, 2**64 - 1), min_size=1, max_size=32),
    st.data(),
)
def test_vec_properties(bits, raw, data):
    R = RingModulus(bits)
    mod = R.R
    u = RingVector.of([v % mod for v in raw], R)
    v = RingVector.of(
        [data.draw(st.integers(0, mod - 1)) for _ in raw], R
    )
    w = RingVector.of(
        [data.draw(st.integers(0, mod - 1)) for _ in raw], R
    )
    assert vec_add(u, v, R) == vec_add(v, u, R)
    assert vec_add(vec_add(u, v, R), w, R) == vec_add(u, vec_add(v, w, R), R)
    assert vec_sub(vec_add(u, v, R), v, R) == u
    # exactness against plain Python ints
    expected = [(a + b) % mod for a, b in zip(u.tolist(), v.tolist())]
    assert vec_add(u, v, R).tolist() == expected


def test_vector_64bit_wraparound_exact():
    R = RingModulus(64)
    top = 2**64 - 1
    assert vec_add(_rv([top], 64), _rv([top], 64), R).tolist() == [(top + top) % 2**64]
    assert vec_sub(_rv([0], 64), _rv([1], 64), R).tolist() == [2**64 - 1]


def test_of_rejects_out_of_range():
    with pytest.raises(ValueError):
        RingVector.of([256], RingModulus(8))


# ---------------------------------------------------------------------------
# byte encoding
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("bits", [1, 7, 8, 12, 16, 24, 32, 40, 61, 64])
def test_vector_bytes_round_trip(bits):
    R = RingModulus(bits)
    rng = np.random.default_rng(bits)
    vals = [int(v) % R.R for v in rng.integers(0, 2**63, size=17, dtype=np.uint64)]
    vec = RingVector.of(vals, R)
    data = vec.to_bytes(R)
    assert len(data) == 17 * R.bytes_per_entry
    assert RingVector.from_bytes(data, 17, R) == vec


def test_vector_bytes_little_endian_layout():
    R = RingModulus(24)
    vec = RingVector.of([0x010203], R)
    assert vec.to_bytes(R) == bytes([0x03, 0x02, 0x01])


def test_vector_from_bytes_rejects_bad_input():
    R = RingModulus(12)
    with pytest.raises(ValueError):
        RingVector.from_bytes(b"\x00" * 3, 1, R)  # wrong length
    with pytest.raises(ValueError):
        RingVector.from_bytes(b"\xff\xff", 1, R)  # 0xffff >= 2^12
