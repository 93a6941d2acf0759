# cowkit/cli.py
"""
Command-line entry point.

    cowkit construct <kind> [name] [--m M] [--n N] [--p P] [--c C] [--out STEM]
    cowkit verify <code> [--method auto|naive|fast|structural]
    cowkit bounds (--fig F | --bound B[,B..] --m RANGE [--n RANGE]) [--out CSV]
    cowkit decode --code C --in FILE [--decoder auto|tensor|block|ml|optical]
    cowkit simulate (--config FILE | --code C --ebn0 RANGE) [--out CSV]
    cowkit selftest

Exit codes: 0 ok or errorless, 1 negative verdict, 2 input error, 3 resource limit,
4 internal failure of a bound or numerical check.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any, Callable, Dict, Iterator, List, Optional, Sequence

import numpy as np
import orjson
from pydantic import ValidationError

from . import __version__
from . import bootstrap  # noqa: F401  (env + logging side effects)
from .core.descriptor import CodeDescriptor
from .core.errors import (
    AlphabetMismatchError,
    CowkitError,
    LimitExceededError,
    MatrixFormatError,
    PreconditionError,
    SingularMatrixError,
    StructureError,
    UnsupportedOrderError,
)
from .core.logging import current_run_id, set_level
from .core.matrix import hadamard
from .core.matrix_io import format_word, parse_range, read_vector, write_descriptor
from .core.schema import SimConfig
from .deps import get_settings
from .services import capacity_service as capacity
from .services import construct_service as construct
from .services import decoder_service as decoder
from .services import simulation_service as simulation
from .services.verify_service import verify

log = logging.getLogger("cowkit.cli")

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_LIMIT = 3
EXIT_FAILURE = 4

_INPUT_ERRORS = (
    MatrixFormatError,
    PreconditionError,
    StructureError,
    AlphabetMismatchError,
    SingularMatrixError,
    UnsupportedOrderError,
    OSError,
)

CONSTRUCT_KINDS = ("hadamard", "kron", "augment", "optical", "builtin", "cow2coo", "coo2cow")


# -----------------------------
# Output helpers
# -----------------------------

def _emit_json(obj: Dict[str, Any], out: IO[str]) -> None:
    out.write(orjson.dumps(obj, option=orjson.OPT_SERIALIZE_NUMPY).decode("utf-8") + "\n")


@contextmanager
def _output(path: Optional[str]) -> Iterator[IO[str]]:
    if not path:
        yield sys.stdout
        return
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", encoding="utf-8", newline="") as fh:
        yield fh
    log.info("wrote %s", p)


# -----------------------------
# Subcommands
# -----------------------------

def _build(args: argparse.Namespace) -> CodeDescriptor:
    kind = args.kind
    if kind == "builtin":
        if not args.name:
            raise PreconditionError("construct builtin needs a name (C4x5, C8x13, D64x104, H<k>, I<k>)")
        return construct.builtin(args.name)
    if kind == "hadamard":
        if args.m is None:
            raise PreconditionError("construct hadamard needs --m")
        return construct.builtin(f"H{args.m}")
    if kind == "optical":
        if args.m is None:
            raise PreconditionError("construct optical needs --m")
        return construct.optical_geometric(args.m)
    if kind == "kron":
        if not args.p or not args.c:
            raise PreconditionError("construct kron needs --p and --c")
        factor = construct.load_factor(args.p)
        return construct.kronecker_lift(factor, construct.load_code(args.c), name=args.name)
    if kind == "augment":
        if not args.c:
            raise PreconditionError("construct augment needs --c")
        res = construct.augment_columns(
            construct.load_code(args.c),
            budget=args.budget,
            seed=args.seed if args.seed_given else None,
            target=args.target,
        )
        print(
            f"added {res.added} floor {res.floor} drawn {res.drawn}"
            + (" budget-exhausted" if res.budget_exhausted else "")
            + (" space-exhausted" if res.space_exhausted else ""),
            file=sys.stderr,
        )
        return res.descriptor
    if not args.c:
        raise PreconditionError(f"construct {kind} needs --c")
    source = construct.load_code(args.c)
    return construct.cow_to_coo(source) if kind == "cow2coo" else construct.coo_to_cow(source)


def cmd_construct(args: argparse.Namespace) -> int:
    desc = _build(args)
    if args.name and args.kind != "builtin":
        desc = desc.renamed(args.name)
    stem = args.out or desc.name or "code"
    written = write_descriptor(stem, desc)
    if args.json:
        _emit_json(
            {
                "name": desc.name,
                "rows": desc.rows,
                "cols": desc.cols,
                "alphabet": desc.alphabet,
                "provenance": desc.provenance,
                "files": [str(p) for p in written],
            },
            sys.stdout,
        )
    else:
        print(f"{desc.name} {desc.rows}x{desc.cols} {desc.alphabet} {desc.provenance}".rstrip())
        for p in written:
            print(f"wrote {p}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    code = construct.load_code(args.code)
    started = time.perf_counter()
    verdict = verify(code, args.method)
    log.info("verify %s (%dx%d) by %s in %.3fs: %s", code.name, code.rows, code.cols,
             verdict.method, time.perf_counter() - started, verdict.label)
    if args.json:
        _emit_json({"code": code.name, "label": verdict.label, **verdict.model_dump()}, sys.stdout)
    else:
        print(verdict.line())
    return EXIT_OK if verdict.is_errorless else EXIT_NEGATIVE


def _bound_reports(args: argparse.Namespace) -> List[Any]:
    threads = args.threads
    if args.fig:
        return capacity.run_figure(args.fig, threads=threads)
    if not args.bound or not args.m:
        raise PreconditionError("bounds needs --fig, or --bound with --m (and --n for capacity bounds)")
    bounds = [b.strip() for b in args.bound.split(",") if b.strip()]
    m_values = parse_range(args.m, integer=True)
    n_values = parse_range(args.n, integer=True) if args.n else []
    return capacity.sweep(m_values, n_values, bounds, threads=threads)


def cmd_bounds(args: argparse.Namespace) -> int:
    reports = _bound_reports(args)
    if args.json:
        for r in reports:
            _emit_json(r.model_dump(), sys.stdout)
        return EXIT_OK
    if len(reports) == 1 and not args.out:
        r = reports[0]
        print(f"{r.value_bits:.{args.digits or get_settings().capacity.sweep_digits}g}")
        return EXIT_OK
    with _output(args.out) as fh:
        capacity.write_bounds_csv(reports, fh, digits=args.digits)
    return EXIT_OK


def cmd_decode(args: argparse.Namespace) -> int:
    code = construct.load_code(args.code)
    y = read_vector(args.input)
    if y.size % code.rows:
        raise PreconditionError(f"received vector length {y.size} is not a multiple of m={code.rows}")
    dec = decoder.batch_decoder(code, args.decoder)
    result = dec(y.reshape(-1, code.rows))
    alphabet = code.alphabet
    for bits, score in zip(result.bits, result.scores):
        if args.json:
            _emit_json(
                {"code": code.name, "bits": [int(b) for b in bits], "score": float(score),
                 "alphabet": alphabet, "candidates": int(result.candidates)},
                sys.stdout,
            )
        else:
            print(format_word(bits, alphabet))
            print(f"score {float(score):.6g}")
    return EXIT_OK


def _sim_config(args: argparse.Namespace) -> SimConfig:
    if args.config:
        cfg = simulation.load_sim_config(args.config)
        overrides: Dict[str, Any] = {}
        if args.code:
            overrides["code"] = args.code
        if args.decoder:
            overrides["decoder"] = args.decoder
        if args.ebn0:
            overrides["ebn0_db"] = parse_range(args.ebn0)
        if args.max_trials is not None:
            overrides["max_trials"] = args.max_trials
        if args.min_errors is not None:
            overrides["min_bit_errors"] = args.min_errors
        if args.batch_size is not None:
            overrides["batch_size"] = args.batch_size
        if args.seed_given:
            overrides["seed"] = args.seed
        if args.threads is not None:
            overrides["threads"] = args.threads
        return SimConfig.model_validate({**cfg.model_dump(), **overrides})

    if not args.code:
        raise PreconditionError("simulate needs --code (or --config)")
    defaults = get_settings().simulation
    return SimConfig(
        code=args.code,
        decoder=args.decoder or "tensor",
        ebn0_db=parse_range(args.ebn0) if args.ebn0 else [],
        max_trials=args.max_trials if args.max_trials is not None else defaults.max_trials,
        min_bit_errors=args.min_errors if args.min_errors is not None else defaults.min_bit_errors,
        batch_size=args.batch_size if args.batch_size is not None else defaults.batch_size,
        seed=args.seed,
        threads=args.threads,
    )


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _sim_config(args)
    records = simulation.run_sweep(cfg)
    if args.json:
        for r in records:
            lo, hi = simulation.ber_confidence_interval(r)
            _emit_json({**r.model_dump(), "ber_ci": [lo, hi], "bpsk": simulation.bpsk_theoretical(r.ebn0_db)},
                       sys.stdout)
        return EXIT_OK
    with _output(args.out) as fh:
        simulation.write_ber_csv(records, fh)
    return EXIT_OK


# -----------------------------
# Self-test
# -----------------------------

def _selftest_checks() -> List[tuple[str, Callable[[], bool]]]:
    def builtins_fast() -> bool:
        return all(verify(construct.builtin(n), "fast").is_errorless for n in ("C4x5", "C8x13"))

    def structural() -> bool:
        v = verify(construct.builtin("D64x104"), "structural")
        return v.is_errorless and v.method == "structural"

    def golden_lower_bounds() -> bool:
        return (
            abs(capacity.capacity_lower_thm7(4, 5) - 4.21) <= 0.01
            and abs(capacity.capacity_lower_thm7(8, 13) - 12.164) <= 0.005
        )

    def noiseless_builtins() -> bool:
        rng = np.random.default_rng(0)
        for name in construct.BUILTIN_NAMES:
            code = construct.builtin(name)
            x = 1 - 2 * rng.integers(0, 2, size=(64, code.cols))
            res = decoder.decode_batch(code, x @ code.array.T)
            if not np.array_equal(res.bits, x):
                return False
        return True

    def optical_round_trip() -> bool:
        code = construct.optical_geometric(16)
        if not verify(code, "fast").is_errorless:
            return False
        rng = np.random.default_rng(1)
        x = rng.integers(0, 2, size=(64, code.cols))
        if not np.array_equal(decoder.decode_batch(code, x @ code.array.T).bits, x):
            return False
        # first rows of the built-in tables are all +1, so the round trip is exact
        return all(
            construct.coo_to_cow(construct.cow_to_coo(construct.builtin(n))).matrix == construct.builtin(n).matrix
            for n in ("C4x5", "C8x13")
        )

    def hadamard_baseline() -> bool:
        h = hadamard(8)
        x = np.array([1, -1, 1, 1, -1, -1, 1, -1])
        return simulation.hadamard_baseline_decode(h, h.array @ x) == list(x)

    return [
        ("built-in tables verify (fast)", builtins_fast),
        ("64x104 kronecker code verifies (structural)", structural),
        ("collision-sum lower bound golden values", golden_lower_bounds),
        ("noiseless decoding of built-ins", noiseless_builtins),
        ("optical construction round trip", optical_round_trip),
        ("hadamard matched filter", hadamard_baseline),
    ]


def cmd_selftest(args: argparse.Namespace) -> int:
    failed = 0
    for label, check in _selftest_checks():
        started = time.perf_counter()
        try:
            ok = check()
        except CowkitError as e:
            log.error("selftest %s raised: %s", label, e)
            ok = False
        elapsed = time.perf_counter() - started
        if args.json:
            _emit_json({"check": label, "ok": ok, "seconds": round(elapsed, 4)}, sys.stdout)
        else:
            print(f"{'ok  ' if ok else 'FAIL'} {label} ({elapsed:.2f}s)")
        failed += not ok
    return EXIT_OK if failed == 0 else EXIT_NEGATIVE


# -----------------------------
# Parser
# -----------------------------

class _SeedAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):  # type: ignore[override]
        setattr(namespace, self.dest, values)
        namespace.seed_given = True


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="one JSON object per result line")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ...")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: machine parallelism)")
    common.add_argument("--seed", type=int, default=None, action=_SeedAction, help="base seed")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="cowkit", description="Errorless over-loaded CDMA codes")
    parser.add_argument("--version", action="version", version=f"cowkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", parents=[common], help="build a code and write matrix + descriptor files")
    p.add_argument("kind", choices=CONSTRUCT_KINDS)
    p.add_argument("name", nargs="?", default=None, help="built-in name, or the label of the new code")
    p.add_argument("--m", type=int, default=None, help="order (hadamard) or chips (optical)")
    p.add_argument("--p", default=None, help="kronecker factor: H<k>, I<k> or a matrix file")
    p.add_argument("--c", default=None, help="source code: built-in name, .desc or matrix file")
    p.add_argument("--budget", type=int, default=None, help="augmentation candidate budget")
    p.add_argument("--target", type=int, default=None, help="columns to add (default: guaranteed floor)")
    p.add_argument("--out", default=None, help="output stem (default: the code's name)")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", parents=[common], help="decide whether a code is errorless")
    p.add_argument("code", help="built-in name, .desc or matrix file")
    p.add_argument("--method", choices=("auto", "naive", "fast", "structural"), default="auto")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bounds", parents=[common], help="capacity and user-count bounds")
    p.add_argument("--fig", choices=capacity.FIGURE_NAMES, default=None, help="preset sweep")
    p.add_argument("--bound", default=None, help=f"comma list of {', '.join(capacity.ALL_BOUNDS)}")
    p.add_argument("--m", default=None, help="start:step:stop, list or value")
    p.add_argument("--n", default=None, help="start:step:stop, list or value")
    p.add_argument("--digits", type=int, default=None, help="significant digits in CSV")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("decode", parents=[common], help="decode received vectors")
    p.add_argument("--code", required=True)
    p.add_argument("--in", dest="input", required=True, help="received vector file (m reals per vector)")
    p.add_argument("--decoder", choices=decoder.DECODERS, default="auto")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("simulate", parents=[common], help="Monte-Carlo BER over AWGN")
    p.add_argument("--config", default=None, help="`key value` simulation config file")
    p.add_argument("--code", default=None)
    p.add_argument("--decoder", choices=("tensor", "ml", "hadamard_baseline", "block", "optical", "auto"),
                   default=None)
    p.add_argument("--ebn0", default=None, help="Eb/N0 grid in dB, start:step:stop")
    p.add_argument("--max-trials", type=int, default=None)
    p.add_argument("--min-errors", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("selftest", parents=[common], help="built-in verifications and oracle spot-checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def _resolve_seed(args: argparse.Namespace) -> None:
    if not getattr(args, "seed_given", False):
        args.seed_given = False
        args.seed = get_settings().simulation.seed


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _resolve_seed(args)
    set_level(args.log_level or get_settings().logging.level)
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    if args.seed < 0:
        parser.error("--seed must be >= 0")

    print(f"cowkit {__version__} seed {args.seed} run {current_run_id()}", file=sys.stderr)
    try:
        return args.func(args)
    except LimitExceededError as e:
        log.error("%s", e)
        return EXIT_LIMIT
    except MatrixFormatError as e:
        log.error("%s", e)
        for err in e.errors:
            print(f"  {err}", file=sys.stderr)
        return EXIT_INPUT
    except ValidationError as e:
        log.error("invalid settings: %s", e)
        return EXIT_INPUT
    except _INPUT_ERRORS as e:
        log.error("%s", e)
        return EXIT_INPUT
    except CowkitError as e:
        log.error("%s: %s", type(e).__name__, e)
        return EXIT_FAILURE


__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_NEGATIVE", "EXIT_INPUT", "EXIT_LIMIT", "EXIT_FAILURE"]


if __name__ == "__main__":
    sys.exit(main())
