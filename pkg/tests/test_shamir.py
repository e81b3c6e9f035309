"""Shamir sharing: hand-derived shares, brute-force weights, secrecy, round trips."""

import itertools
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import StubRng, stream_of

from secagg import (
    ChunkedSecret,
    DuplicateEvaluationPoint,
    FieldPrime,
    InsufficientShares,
    InvalidThreshold,
    SecretShare,
    lagrange_weights,
    reconstruct,
    share,
)

P31 = FieldPrime(31)
P7 = FieldPrime(7)


def one_chunk(value: int) -> ChunkedSecret:
    return ChunkedSecret((value,), 1)


# ---------------------------------------------------------------------------
# share
# ---------------------------------------------------------------------------


def test_share_degree_zero_is_constant():
    shares = share(one_chunk(5), 1, 1, StubRng([]), P31)
    assert [(s.x, s.ys[0]) for s in shares] == [(1, 5)]


def test_share_hand_derived_line():
    # f(x) = 5 + 3x mod 31
    shares = share(one_chunk(5), 2, 3, StubRng([3]), P31)
    assert [(s.x, s.ys[0]) for s in shares] == [(1, 8), (2, 11), (3, 14)]


def test_share_zero_polynomial():
    shares = share(one_chunk(0), 2, 2, StubRng([0]), P7)
    assert [(s.x, s.ys[0]) for s in shares] == [(1, 0), (2, 0)]


def test_share_threshold_validation():
    with pytest.raises(InvalidThreshold):
        share(one_chunk(1), 0, 3, StubRng([]), P31)
    with pytest.raises(InvalidThreshold):
        share(one_chunk(1), 4, 3, StubRng([0, 0, 0]), P31)
    with pytest.raises(InvalidThreshold):
        share(one_chunk(1), 2, 8, StubRng([0]), P7)  # n >= p
    with pytest.raises(ValueError):
        share(one_chunk(40), 1, 2, StubRng([]), P31)  # chunk >= p


def test_share_owner_tagging():
    shares = share(one_chunk(9), 2, 4, stream_of(1), P31, owner_id=17)
    assert {s.owner_id for s in shares} == {17}
    assert [s.x for s in shares] == [1, 2, 3, 4]


# ---------------------------------------------------------------------------
# lagrange weights
# ---------------------------------------------------------------------------


def test_weights_trivial():
    assert lagrange_weights([1], P31) == [1]


def test_weights_two_points_hand_derived():
    # w1 = 2/(2-1) = 2, w2 = 1/(1-2) = -1 = 30 mod 31
    assert lagrange_weights([1, 2], P31) == [2, 30]


def test_weights_three_points_brute_force():
    xs = [1, 2, 3]
    weights = lagrange_weights(xs, P7)
    assert weights == [3, 4, 1]
    # oracle: w must send (f(1), f(2), f(3)) to f(0) for every quadratic over Z_7
    for c0, c1, c2 in itertools.product(range(7), repeat=3):
        f = lambda x: (c0 + c1 * x + c2 * x * x) % 7
        recovered = sum(w * f(x) for w, x in zip(weights, xs)) % 7
        assert recovered == c0


def test_weights_reject_bad_points():
    with pytest.raises(DuplicateEvaluationPoint):
        lagrange_weights([1, 2, 1], P31)
    with pytest.raises(ValueError):
        lagrange_weights([0, 1], P31)


# ---------------------------------------------------------------------------
# reconstruct
# ---------------------------------------------------------------------------


def _mk(pairs, owner=0):
    return [SecretShare(owner, x, (y,)) for x, y in pairs]


def test_reconstruct_inverts_share_example():
    assert reconstruct(_mk([(1, 8), (2, 11)]), 2, P31, 1).chunks == (5,)


def test_reconstruct_constant():
    assert reconstruct(_mk([(1, 5)]), 1, P31, 1).chunks == (5,)


def test_reconstruct_any_two_of_three():
    all_shares = _mk([(1, 8), (2, 11), (3, 14)])
    for pair in itertools.combinations(all_shares, 2):
        assert reconstruct(list(pair), 2, P31, 1).chunks == (5,)
    # order independence, and "first t sorted by x" uses the smallest points
    assert reconstruct(list(reversed(all_shares)), 2, P31, 1).chunks == (5,)


def test_reconstruct_errors():
    with pytest.raises(InsufficientShares):
        reconstruct(_mk([(1, 8)]), 2, P31, 1)
    with pytest.raises(InsufficientShares):
        reconstruct([], 1, P31, 1)
    with pytest.raises(DuplicateEvaluationPoint):
        reconstruct(_mk([(1, 8), (1, 9), (2, 11)]), 2, P31, 1)
    with pytest.raises(ValueError):
        reconstruct([SecretShare(0, 1, (1,)), SecretShare(0, 2, (1, 2))], 2, P31, 1)


def test_round_trip_multichunk_secret():
    secret = ChunkedSecret.from_bytes(bytes(range(16)))
    shares = share(secret, 3, 5, stream_of(2), owner_id=4)
    for subset in itertools.combinations(shares, 3):
        got = reconstruct(list(subset), 3, num_bytes=16)
        assert got.to_bytes() == bytes(range(16))


# ---------------------------------------------------------------------------
# secrecy and distribution
# ---------------------------------------------------------------------------


def test_single_share_reveals_nothing_exhaustive():
    """All 49 degree-1 polynomials over Z_7: conditioning on one share
    leaves the secret exactly uniform."""
    observed = {}  # (x, y) -> Counter of consistent secrets
    for secret in range(7):
        for a1 in range(7):
            for s in share(one_chunk(secret), 2, 3, StubRng([a1]), P7):
                observed.setdefault((s.x, s.ys[0]), Counter())[secret] += 1
    assert len(observed) == 3 * 7
    for counter in observed.values():
        assert counter == Counter({s: 1 for s in range(7)})


def test_share_values_marginally_uniform_chi_square():
    from scipy.stats import chisquare

    stream = stream_of(3)
    counts = Counter()
    for _ in range(10_000):
        secret = one_chunk(stream.field_element(31))
        for s in share(secret, 2, 3, stream, P31):
            counts[s.ys[0]] += 1
    freqs = [counts[v] for v in range(31)]
    assert chisquare(freqs).pvalue > 0.001


@settings(deadline=None)  # first example may pay the numba compile
@given(
    st.integers(1, 6).flatmap(
        lambda n: st.tuples(st.just(n), st.integers(1, n), st.binary(min_size=1, max_size=20))
    )
)
def test_round_trip_property(args):
    n, t, secret_bytes = args
    secret = ChunkedSecret.from_bytes(secret_bytes)
    shares = share(secret, t, n, stream_of(len(secret_bytes) * 131 + n * 7 + t))
    got = reconstruct(shares[:t], t, num_bytes=len(secret_bytes))
    assert got.to_bytes() == secret_bytes


# ---------------------------------------------------------------------------
# chunk embedding and wire encoding
# ---------------------------------------------------------------------------


@given(st.binary(min_size=0, max_size=64))
def test_chunk_embedding_round_trip(data):
    cs = ChunkedSecret.from_bytes(data)
    assert cs.num_bytes == len(data)
    assert cs.to_bytes() == data
    assert all(c < (1 << 60) for c in cs.chunks)
    assert len(cs.chunks) == max(1, (len(data) * 8 + 59) // 60)


def test_chunk_counts_for_protocol_secrets():
    assert ChunkedSecret.chunk_count(16) == 3  # 128 bits
    assert ChunkedSecret.chunk_count(32) == 5  # 256 bits
    assert ChunkedSecret.chunk_count(8) == 2


def test_share_wire_encoding():
    s = SecretShare(7, 2, (0x0102030405060708, 0x1122334455667788))
    data = s.encode()
    assert data[:4] == (7).to_bytes(4, "little")
    assert data[4:8] == (2).to_bytes(4, "little")
    assert data[8:16] == (0x0102030405060708).to_bytes(8, "little")
    assert SecretShare.decode(data, 2) == s
    with pytest.raises(ValueError):
        SecretShare.decode(data, 3)
