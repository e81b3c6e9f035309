"""Command-line interface.

``secagg run``    one deterministic execution; prints the aggregate and a
                  transcript summary. Exit 0 on success, 2 on protocol abort.
``secagg bench``  grid sweep writing one CSV row per (point, trial).

Usage errors exit 1. SECAGG_GROUP ("test"/"prod") selects the key-agreement
group; SECAGG_BACKEND ("numba"/"numpy") selects the keystream kernel.
"""

from __future__ import annotations

import argparse
import statistics
import sys

from .harness import (
    BenchRecord,
    DropoutSchedule,
    default_group_name,
    derive_inputs,
    emit_csv,
    run_protocol,
    sweep,
)
from .keystream import active_backend
from .protocol import ProtocolConfig
from .ring import RingModulus


class _Parser(argparse.ArgumentParser):
    # the CLI contract reserves exit code 2 for protocol aborts
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p.strip()]


def _float_list(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip()]


def _seed_bytes(text: str) -> bytes:
    cleaned = text.strip().lower().removeprefix("0x")
    if len(cleaned) > 32 or any(c not in "0123456789abcdef" for c in cleaned):
        raise argparse.ArgumentTypeError(
            f"seed must be up to 32 hex digits (16 bytes), got {text!r}"
        )
    return bytes.fromhex(cleaned.zfill(32))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="secagg", description="Dropout-robust secure vector aggregation")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[], help="execute one protocol instance")
    run.add_argument("--users", type=int, required=True, metavar="N")
    run.add_argument("--veclen", type=int, required=True, metavar="K")
    run.add_argument("--threshold", type=int, default=None, metavar="T",
                     help="reconstruction threshold (default: floor(N/2)+1)")
    run.add_argument("--drop", default="", metavar="ID:ROUND,...",
                     help="users to silence from a round, e.g. '2:2,4:3'")
    run.add_argument("--seed", type=_seed_bytes, default="00" * 16, metavar="HEX16")
    run.add_argument("--modulus-bits", type=int, default=32, metavar="BITS")

    bench = sub.add_parser("bench", help="sweep a grid and emit CSV")
    bench.add_argument("--users", type=_int_list, default=[10, 20, 40], metavar="N,N,...")
    bench.add_argument("--veclen", type=_int_list, default=[1000, 10000], metavar="K,K,...")
    bench.add_argument("--threshold-frac", type=float, default=None, metavar="F")
    bench.add_argument("--dropout-frac", type=_float_list, default=[0.0, 0.1], metavar="F,F,...")
    bench.add_argument("--trials", type=int, default=3, metavar="COUNT")
    bench.add_argument("--seed", type=_seed_bytes, default="00" * 16, metavar="HEX16")
    bench.add_argument("--modulus-bits", type=int, default=32, metavar="BITS")
    bench.add_argument("--out", required=True, metavar="PATH.csv")
    return parser


def _format_vector(vec, limit: int = 16) -> str:
    vals = vec.tolist()
    if len(vals) <= limit:
        return "[" + ", ".join(map(str, vals)) + "]"
    head = ", ".join(map(str, vals[:limit]))
    return f"[{head}, ...] ({len(vals)} entries)"


def _cmd_run(args) -> int:
    try:
        schedule = DropoutSchedule.parse(args.drop)
        config = ProtocolConfig(
            n=args.users, K=args.veclen, t=args.threshold,
            ring=RingModulus(args.modulus_bits),
            group_name=default_group_name(), master_seed=args.seed,
        )
    except ValueError as exc:
        print(f"secagg run: {exc}", file=sys.stderr)
        return 1
    inputs = derive_inputs(args.seed, config.n, config.K, config.ring)
    tr = run_protocol(config, inputs, schedule)

    print(f"group={config.group_name} backend={active_backend()} "
          f"n={config.n} t={config.t} K={config.K} R=2^{config.ring.bits}")
    if tr.outcome != "ok":
        print(f"outcome: abort ({tr.abort_reason})")
        if tr.dropout_events:
            print("dropouts: " + ", ".join(f"{u}@r{r}" for u, r in tr.dropout_events))
        return 2
    print("outcome: ok")
    print("aggregate:", _format_vector(tr.output))
    if tr.dropout_events:
        print("dropouts: " + ", ".join(f"{u}@r{r}" for u, r in tr.dropout_events))
    per_client = [tr.client_bytes(uid) for uid in range(1, config.n + 1)]
    print(f"messages: {len(tr.records)} ({tr.total_bytes} bytes total)")
    print(f"client bytes: max={max(per_client)} mean={sum(per_client) / config.n:.1f}")
    print(f"server bytes: {tr.server_bytes}")
    phases = " ".join(
        f"r{r}={1000 * tr.server_phase_s.get(r, 0.0):.2f}ms" for r in range(4)
    )
    print(f"server compute: {phases}")
    print(f"transcript digest: {tr.digest()}")
    return 0


def _summarize(records: list[BenchRecord]) -> None:
    points = {}
    for rec in records:
        points.setdefault((rec.n, rec.K, rec.dropouts), []).append(rec)
    print(f"{'n':>6} {'K':>8} {'drop':>5} {'outcome':>8} {'client_B':>10} "
          f"{'server_B':>10} {'client_ms':>10} {'server_r3_ms':>12}")
    for (n, K, d), recs in sorted(points.items()):
        # median over trials; byte columns are trial-invariant by construction
        client_ms = statistics.median(r.client_ms_mean for r in recs)
        r3_ms = statistics.median(r.server_ms_r3 for r in recs)
        print(f"{n:>6} {K:>8} {d:>5} {recs[0].outcome:>8} {recs[0].client_bytes_max:>10} "
              f"{recs[0].server_bytes:>10} {client_ms:>10.2f} {r3_ms:>12.2f}")


def _cmd_bench(args) -> int:
    try:
        records = sweep(
            users=args.users, veclens=args.veclen, dropout_fracs=args.dropout_frac,
            trials=args.trials, seed=args.seed, threshold_frac=args.threshold_frac,
            bits=args.modulus_bits,
        )
    except ValueError as exc:
        print(f"secagg bench: {exc}", file=sys.stderr)
        return 1
    path = emit_csv(records, args.out)
    _summarize(records)
    print(f"wrote {len(records)} records to {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_bench(args)


if __name__ == "__main__":
    sys.exit(main())
