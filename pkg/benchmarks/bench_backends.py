#!/usr/bin/env python3
"""Compare the numba and numpy keystream backends.

Measures raw keystream throughput, mask expansion, a full per-user masking
step, and an end-to-end protocol run under each backend, verifying on the
way that both produce bit-identical results. Prints a table; --json writes
machine-readable output.
"""

import argparse
import json
import statistics
import sys
import time

from secagg import (
    PairwiseSeedTable,
    ProtocolConfig,
    RingModulus,
    kdf,
    mask_input,
    prg_expand,
    run_protocol,
)
from secagg.harness import derive_inputs
from secagg.keystream import available_backends, keystream_bytes, set_backend

WARMUP = 2
RUNS = 5


def timed(fn, runs=RUNS, warmup=WARMUP):
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def bench_keystream(backend: str, nbytes: int) -> float:
    set_backend(backend)
    seed = bytes(range(16))
    return timed(lambda: keystream_bytes(seed, nbytes))


def bench_expand(backend: str, K: int, bits: int) -> float:
    set_backend(backend)
    seed = kdf(b"bench", "expand", K, bits)
    R = RingModulus(bits)
    return timed(lambda: prg_expand(seed, K, R))


def bench_mask_step(backend: str, peers: int, K: int) -> float:
    """One user's full masking work against `peers` neighbours."""
    set_backend(backend)
    R = RingModulus(32)
    ids = list(range(1, peers + 2))
    seeds = {v: kdf(b"bench", "pair", 1, v) for v in ids if v != 1}
    table = PairwiseSeedTable(1, seeds)
    x = prg_expand(kdf(b"bench", "input", 1, 0), K, R)
    b = kdf(b"bench", "self", 1, 0)
    return timed(lambda: mask_input(x, b, 1, table, ids, K, R))


def bench_protocol(backend: str, n: int, K: int) -> float:
    set_backend(backend)
    seed = kdf(b"bench", "proto", n, K).data
    config = ProtocolConfig(n=n, K=K, t=n // 2 + 1, ring=RingModulus(32),
                            group_name="prod", master_seed=seed)
    inputs = derive_inputs(seed, n, K, config.ring)
    return timed(lambda: run_protocol(config, inputs), runs=3, warmup=1)


def verify_backends_agree() -> None:
    seed = bytes(range(16))
    set_backend("numpy")
    ks_numpy = keystream_bytes(seed, 1 << 16, offset=13)
    vec_numpy = prg_expand(kdf(b"bench", "verify", 0, 0), 4096, RingModulus(32))
    set_backend("numba")
    assert keystream_bytes(seed, 1 << 16, offset=13) == ks_numpy
    assert prg_expand(kdf(b"bench", "verify", 0, 0), 4096, RingModulus(32)) == vec_numpy


def main() -> int:
    parser = argparse.ArgumentParser(description="secagg backend comparison")
    parser.add_argument("--stream-mb", type=int, default=16, help="keystream size in MiB")
    parser.add_argument("--veclen", type=int, default=100_000)
    parser.add_argument("--peers", type=int, default=49)
    parser.add_argument("--proto-n", type=int, default=20)
    parser.add_argument("--proto-k", type=int, default=5000)
    parser.add_argument("--json", metavar="PATH", default=None)
    args = parser.parse_args()

    backends = available_backends()
    if "numba" not in backends:
        print("numba backend unavailable; nothing to compare", file=sys.stderr)
        return 1
    verify_backends_agree()
    print("backends produce bit-identical output; timing...\n")

    nbytes = args.stream_mb << 20
    results = {}
    for backend in ("numba", "numpy"):
        stream_s = bench_keystream(backend, nbytes)
        results[backend] = {
            "keystream_MBps": nbytes / stream_s / 1e6,
            "expand_ms": 1000 * bench_expand(backend, args.veclen, 32),
            "mask_step_ms": 1000 * bench_mask_step(backend, args.peers, 10_000),
            "protocol_s": bench_protocol(backend, args.proto_n, args.proto_k),
        }

    rows = [
        ("keystream MB/s", "keystream_MBps", "{:.0f}"),
        (f"prg_expand K={args.veclen} ms", "expand_ms", "{:.2f}"),
        (f"mask step peers={args.peers} K=10000 ms", "mask_step_ms", "{:.1f}"),
        (f"protocol n={args.proto_n} K={args.proto_k} s", "protocol_s", "{:.2f}"),
    ]
    width = max(len(r[0]) for r in rows)
    print(f"{'metric'.ljust(width)}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for label, key, fmt in rows:
        a, b = results["numba"][key], results["numpy"][key]
        speedup = (a / b) if key == "keystream_MBps" else (b / a)
        print(f"{label.ljust(width)}  {fmt.format(a):>10}  {fmt.format(b):>10}  {speedup:>7.1f}x")

    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)
        print(f"\nwrote {args.json}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
