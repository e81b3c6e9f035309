"""Deterministic ChaCha20 keystream with numba and pure-numpy backends.

The mask generator is the hot loop of the whole protocol: every user expands
one 16-byte seed per peer into a length-K vector, so at realistic sizes the
keystream dominates runtime. Two bit-identical implementations are provided:

* ``numba`` -- an @njit scalar kernel (default when numba imports cleanly),
* ``numpy`` -- a vectorized fallback that processes all blocks at once.

Select with the ``SECAGG_BACKEND`` environment variable ("numba" or "numpy")
or :func:`set_backend`. ``benchmarks/bench_backends.py`` compares the two.

Construction: ChaCha20 (djb variant), 256-bit key = the 16-byte seed doubled,
64-bit block counter, 64-bit nonce fixed at zero -- each seed keys exactly one
stream, and the counter gives random access for resumable draws.
"""

from __future__ import annotations

import os

import numpy as np

SEED_BYTES = 16
BLOCK_BYTES = 64

_CONSTANT_WORDS = np.frombuffer(b"expand 32-byte k", dtype="<u4").copy()


def _key_words(seed: bytes) -> np.ndarray:
    if len(seed) != SEED_BYTES:
        raise ValueError(f"seed must be {SEED_BYTES} bytes, got {len(seed)}")
    return np.frombuffer(seed + seed, dtype="<u4").copy()


# ---------------------------------------------------------------------------
# numpy backend: one vectorized pass over all requested blocks
# ---------------------------------------------------------------------------


def _rotl(x: np.ndarray, n: int) -> np.ndarray:
    return (x << np.uint32(n)) | (x >> np.uint32(32 - n))


def _quarter(s: np.ndarray, a: int, b: int, c: int, d: int) -> None:
    s[a] += s[b]
    s[d] = _rotl(s[d] ^ s[a], 16)
    s[c] += s[d]
    s[b] = _rotl(s[b] ^ s[c], 12)
    s[a] += s[b]
    s[d] = _rotl(s[d] ^ s[a], 8)
    s[c] += s[d]
    s[b] = _rotl(s[b] ^ s[c], 7)


def _blocks_numpy(key_words: np.ndarray, first_block: int, nblocks: int) -> np.ndarray:
    """Keystream blocks [first_block, first_block+nblocks) as a uint8 array."""
    counters = np.uint64(first_block) + np.arange(nblocks, dtype=np.uint64)
    init = np.empty((16, nblocks), dtype=np.uint32)
    init[0:4] = _CONSTANT_WORDS[:, None]
    init[4:12] = key_words.astype(np.uint32)[:, None]
    init[12] = (counters & np.uint64(0xFFFFFFFF)).astype(np.uint32)
    init[13] = (counters >> np.uint64(32)).astype(np.uint32)
    init[14:16] = 0

    s = init.copy()
    for _ in range(10):
        _quarter(s, 0, 4, 8, 12)
        _quarter(s, 1, 5, 9, 13)
        _quarter(s, 2, 6, 10, 14)
        _quarter(s, 3, 7, 11, 15)
        _quarter(s, 0, 5, 10, 15)
        _quarter(s, 1, 6, 11, 12)
        _quarter(s, 2, 7, 8, 13)
        _quarter(s, 3, 4, 9, 14)
    s += init
    # words are column-major per block; emit little-endian bytes per block
    return np.frombuffer(s.T.astype("<u4").tobytes(), dtype=np.uint8)


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

_BACKENDS: dict[str, object] = {"numpy": _blocks_numpy}
_active: str | None = None


def _load_numba() -> bool:
    if "numba" in _BACKENDS:
        return True
    try:
        from ._keystream_numba import blocks_numba
    except ImportError:
        return False
    _BACKENDS["numba"] = blocks_numba
    return True


def available_backends() -> tuple[str, ...]:
    _load_numba()
    return tuple(sorted(_BACKENDS))


def set_backend(name: str) -> None:
    """Force a backend ("numba" or "numpy"); raises if it cannot load."""
    global _active
    if name == "numba" and not _load_numba():
        raise RuntimeError("numba backend requested but numba is not importable")
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from numba, numpy")
    _active = name


def active_backend() -> str:
    """Resolve the backend: explicit set_backend > SECAGG_BACKEND > numba > numpy."""
    global _active
    if _active is None:
        env = os.environ.get("SECAGG_BACKEND", "").strip().lower()
        if env:
            set_backend(env)
        else:
            _active = "numba" if _load_numba() else "numpy"
    return _active


def _blocks(key_words: np.ndarray, first_block: int, nblocks: int) -> np.ndarray:
    return _BACKENDS[active_backend()](key_words, first_block, nblocks)


# ---------------------------------------------------------------------------
# public stream API
# ---------------------------------------------------------------------------


def keystream_bytes(seed: bytes, nbytes: int, offset: int = 0) -> bytes:
    """``nbytes`` of the seed's keystream starting at byte ``offset``."""
    if nbytes < 0:
        raise ValueError("nbytes must be non-negative")
    if nbytes == 0:
        return b""
    first_block, skip = divmod(offset, BLOCK_BYTES)
    nblocks = (skip + nbytes + BLOCK_BYTES - 1) // BLOCK_BYTES
    raw = _blocks(_key_words(seed), first_block, nblocks)
    return raw[skip : skip + nbytes].tobytes()


def expand_residues(seed: bytes, K: int, bits: int) -> np.ndarray:
    """K residues mod 2^bits: ceil(bits/8) keystream bytes per entry, LE, masked."""
    if K < 0:
        raise ValueError("K must be non-negative")
    bpe = (bits + 7) // 8
    if K == 0:
        return np.zeros(0, dtype=np.uint64)
    nbytes = K * bpe
    nblocks = (nbytes + BLOCK_BYTES - 1) // BLOCK_BYTES
    raw = _blocks(_key_words(seed), 0, nblocks)[:nbytes]
    if bpe in (1, 2, 4, 8):
        vals = np.frombuffer(raw.tobytes(), dtype=f"<u{bpe}").astype(np.uint64)
    else:
        cols = raw.reshape(K, bpe)
        vals = np.zeros(K, dtype=np.uint64)
        for i in range(bpe):
            vals |= cols[:, i].astype(np.uint64) << np.uint64(8 * i)
    return vals & np.uint64((1 << bits) - 1)
