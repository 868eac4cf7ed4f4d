"""Command-line front end.

Exit status: 0 when everything passed, 1 on a conformance mismatch, 2 on a
usage, parse or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from pathlib import Path

from .conformance import (VectorFileError, exhaustive_p8, generate, read_vectors, run_campaign,
                          write_vectors)
from .engine import SpadeEngine, format_traces
from .posit import PositClass, PositWord, decode, dyadic_str, format_by_name, to_real
from .simd import InvalidModeError, Mode

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2

DATA_ENV = "SPADE_DATA_DIR"
PACKAGE_DATA = Path(__file__).resolve().parent / "data"


class UsageError(Exception):
    pass


def default_dataset_dir() -> Path:
    return Path(os.environ.get(DATA_ENV, PACKAGE_DATA / "mnist"))


def default_weights() -> Path:
    return PACKAGE_DATA / "mnist_small.spdw"


# -- decode -----------------------------------------------------------------------

def cmd_decode(args, out) -> int:
    fmt = format_by_name(args.format)
    w = PositWord.from_hex(args.word, fmt)
    d = decode(w)
    print(f"format  {fmt}", file=out)
    print(f"bits    {w.hex()}", file=out)
    if d.cls is PositClass.NAR:
        print("class   NaR", file=out)
        print("value   NaR", file=out)
        return EXIT_OK
    if d.cls is PositClass.ZERO:
        print("class   zero", file=out)
        print("value   0", file=out)
        return EXIT_OK
    fbits = fmt.frac_width - 1
    frac_str = format(d.frac & ((1 << fbits) - 1), f"0{fbits}b")
    print("class   normal", file=out)
    print(f"sign    {int(d.sign)}", file=out)
    print(f"k       {d.k}", file=out)
    print(f"e       {d.e}", file=out)
    print(f"frac    {d.frac:#x} (1.{frac_str})", file=out)
    print(f"sf      {d.sf}", file=out)
    print(f"value   {dyadic_str(to_real(w))}", file=out)
    return EXIT_OK


# -- conformance ------------------------------------------------------------------

def cmd_conformance(args, out) -> int:
    mode = Mode.from_name(args.mode)
    if args.vectors:
        vectors = read_vectors(args.vectors)
        wrong = [v for v in vectors if v.mode != mode]
        if wrong:
            raise UsageError(f"{args.vectors} holds {wrong[0].mode.name} vectors, not {mode.name}")
        source = f"vector file {args.vectors}"
    elif args.exhaustive:
        if mode is not Mode.P8:
            raise UsageError("--exhaustive is only available for p8")
        vectors = exhaustive_p8()
        source = "exhaustive 256x256 single pairs"
    else:
        vectors = generate(mode, args.count, args.seed)
        source = f"{args.count} random vectors, seed {args.seed}"
    if args.save_vectors:
        filled = [v if v.expected is not None else v.with_expected() for v in vectors]
        write_vectors(args.save_vectors, filled, f"{mode.name} conformance vectors: {source}")
        vectors = filled
    start = time.perf_counter()
    report = run_campaign(vectors, mode)
    elapsed = time.perf_counter() - start
    print(f"source: {source}", file=out)
    print(report.summary(), file=out)
    print(f"elapsed: {elapsed:.1f}s", file=out)
    if report.failures:
        for f in report.failures[:10]:
            print(f"MISMATCH vector {f.index}: got {f.actual:08x}: {f.vector.to_line()}", file=out)
        if args.dump_failures:
            write_vectors(args.dump_failures, [f.vector for f in report.failures],
                          f"{len(report.failures)} failing {mode.name} vectors from {source}")
            print(f"failures written to {args.dump_failures}", file=out)
        print("RESULT: FAIL", file=out)
        return EXIT_MISMATCH
    print("RESULT: PASS", file=out)
    return EXIT_OK


# -- trace ---------------------------------------------------------------------------

def parse_operand_file(path, mode: Mode) -> list[tuple[int, int, list[bool]]]:
    """Lines of ``a_hex b_hex [enables_hex]``; ``#`` comments."""
    issues = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if len(parts) not in (2, 3):
                    raise ValueError(f"expected 'a_hex b_hex [enables_hex]', got {len(parts)} fields")
                a, b = int(parts[0], 16), int(parts[1], 16)
                en = int(parts[2], 16) if len(parts) == 3 else (1 << mode.lanes) - 1
                if a >> 32 or b >> 32:
                    raise ValueError("operand words are 32 bits")
                if en >> mode.lanes:
                    raise ValueError(f"enable mask wider than {mode.lanes} lanes")
            except ValueError as exc:
                raise VectorFileError(f"{path}:{lineno}: {exc}") from None
            issues.append((a, b, [bool((en >> i) & 1) for i in range(mode.lanes)]))
    return issues


def cmd_trace(args, out) -> int:
    mode = Mode.from_name(args.mode)
    issues = parse_operand_file(args.operands, mode)
    engine = SpadeEngine(mode)
    traces = [engine.issue(a, b, en, trace=True) for a, b, en in issues]
    text = format_traces(traces)
    if args.output == "-":
        out.write(text)
    else:
        Path(args.output).write_text(text)
        print(f"{len(traces)} issue records written to {args.output}", file=out)
    return EXIT_OK


# -- infer ----------------------------------------------------------------------------

def _parse_precisions(text: str):
    items = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        items.append("float" if tok == "float" else format_by_name(tok))
    return items


def cmd_infer(args, out) -> int:
    from .nn import container, evaluate, load_mnist

    weights = Path(args.weights) if args.weights else default_weights()
    data_dir = Path(args.data) if args.data else default_dataset_dir()
    if not weights.exists():
        raise FileNotFoundError(f"weights file not found: {weights}")
    if not data_dir.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {data_dir}")
    layers, meta = container.load(weights)
    images, labels = load_mnist(data_dir, args.split)
    n = args.samples if args.samples is not None else len(images)
    runs = []
    if args.layer_precision:
        runs.append(("per-layer:" + args.layer_precision, _parse_precisions(args.layer_precision)))
    for p in _parse_precisions(args.precision) if args.precision else []:
        runs.append((p if p == "float" else p.name, p))
    if not any(name == "float" for name, _ in runs):
        runs.insert(0, ("float", "float"))
    results = {}
    for name, prec in runs:
        start = time.perf_counter()
        res = evaluate(layers, images, labels, n, prec)
        results[name] = (res, time.perf_counter() - start)
    base = results["float"][0].accuracy
    recorded = meta.get("float_accuracy")
    print(f"model: {weights.name} ({meta.get('params', '?')} params), {n} samples from {data_dir}", file=out)
    if recorded is not None and n == meta.get("test_samples"):
        print(f"recorded float baseline: {recorded:.4f}", file=out)
    print(f"{'precision':<24}{'accuracy':>10}{'delta(pt)':>11}{'seconds':>9}", file=out)
    rows = []
    for name, (res, secs) in results.items():
        delta = 100.0 * (res.accuracy - base)
        print(f"{name:<24}{res.accuracy:>10.4f}{delta:>+11.2f}{secs:>9.1f}", file=out)
        rows.append([name, n, f"{res.accuracy:.6f}", f"{delta:.4f}"])
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["precision", "samples", "accuracy", "delta_pt"])
            w.writerows(rows)
    return EXIT_OK


# -- wiring ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spade", description="SIMD posit MAC engine model")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="show the fields of one posit word")
    p.add_argument("format", help="p8, p16 or p32")
    p.add_argument("word", help="fixed-width hex pattern, e.g. 6c")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("conformance", help="engine vs. oracle differential campaign")
    p.add_argument("mode", help="p8, p16 or p32")
    p.add_argument("--count", type=int, default=1000, help="random vectors (default 1000)")
    p.add_argument("--seed", type=int, default=1, help="64-bit generator seed")
    p.add_argument("--exhaustive", action="store_true", help="all 65536 single-pair cases (p8)")
    p.add_argument("--vectors", help="replay a vector file instead of generating")
    p.add_argument("--save-vectors", help="write the vectors (with expectations) to this file")
    p.add_argument("--dump-failures", help="write failing vectors to this file")
    p.set_defaults(func=cmd_conformance)

    p = sub.add_parser("trace", help="per-stage trace log for a sequence of issues")
    p.add_argument("mode", help="p8, p16 or p32")
    p.add_argument("operands", help="file of 'a_hex b_hex [enables_hex]' lines")
    p.add_argument("-o", "--output", default="-", help="log path (default stdout)")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("infer", help="MNIST accuracy through the engine")
    p.add_argument("--weights", help="weights container (default: shipped model)")
    p.add_argument("--data", help=f"IDX dataset directory (default ${DATA_ENV} or shipped split)")
    p.add_argument("--split", default="t10k")
    p.add_argument("--precision", default="p8,p16,p32",
                   help="comma list of float/p8/p16/p32, each a uniform run")
    p.add_argument("--layer-precision", help="one format per compute layer, comma separated")
    p.add_argument("-n", "--samples", type=int, help="number of samples (default all)")
    p.add_argument("--csv", help="also write the accuracy table as CSV")
    p.set_defaults(func=cmd_infer)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args, out)
    except (UsageError, InvalidModeError, VectorFileError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
