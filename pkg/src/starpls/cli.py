"""Command-line entry point: ``starpls run|sweep|validate``.

Exit codes: 0 on success, 1 for configuration errors, 2 when every run
failed.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .experiment import load_sweep_spec, resolve_threads, run_single, run_sweep, run_validation
from .optimizer import SCHEMES

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits: {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON config file")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--threads", type=int, default=None,
                        help="worker processes (0 = one per CPU; default from $STAR_PLS_THREADS, else 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="starpls", description="Secure STAR-RIS beamforming experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="optimize one channel realization")
    run.add_argument("--seed", type=_u64, required=True)
    run.add_argument("--schemes", nargs="+", choices=SCHEMES, default=list(SCHEMES))
    sweep = sub.add_parser("sweep", parents=[common], help="sweep one parameter over schemes and seeds")
    sweep.add_argument("--spec", required=True, help="JSON sweep spec (axis, values, schemes, seeds)")
    val = sub.add_parser("validate", parents=[common], help="run the numerical oracle suite")
    val.add_argument("--seed", type=_u64, default=0)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        threads = resolve_threads(args.threads)
        spec = load_sweep_spec(args.spec) if args.command == "sweep" else None
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "run":
        records = [o.record for o in run_single(cfg, args.seed, args.out, args.schemes, threads)]
    elif args.command == "sweep":
        records = run_sweep(spec, cfg, args.out, threads)
    else:
        checks = run_validation(cfg, args.out, args.seed)
        for c in checks:
            print(f"{'PASS' if c.passed else 'FAIL'} {c.name} = {c.value:.3g} (tol {c.tolerance:g})")
        return EXIT_OK

    for r in records:
        if not r.ok:
            print(f"failed: {r.scheme} value={r.value} seed={r.seed}: {r.message}", file=sys.stderr)
    if not any(r.ok for r in records):
        return EXIT_RUNTIME
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
