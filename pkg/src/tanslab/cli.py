"""Command line interface: ``tanslab <command> ...``.

Exit codes: 0 success, 2 parse/validation error, 3 singular system,
4 enumeration cap exceeded.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import __version__
from .core import SymbolDistribution, build_tables, decode, encode, quantize
from .errors import CapExceeded, DecodeError, DistributionError, SingularSystem, SpreadError
from .formats import (empty_container, format_spread, pack_container, read_dist, read_spread,
                      unpack_container, write_text)
from .keyed import derive_keyed_spread, keyed_decode, keyed_encode
from .markov import analyze
from .optimize import SearchConfig, exhaustive_spreads, swap_search
from .tuning import preferred_positions, rank_match_spread, spread_distance, tune_spread

EXIT_OK, EXIT_USAGE, EXIT_SINGULAR, EXIT_CAP = 0, 2, 3, 4
THREADS_ENV = "TANSLAB_THREADS"

BENCH_FIELDS = ["R", "L", "seed", "iterations",
                "delta_h_min", "good_swaps_min", "evaluations_min", "seconds_min",
                "delta_h_max", "good_swaps_max", "evaluations_max", "seconds_max"]


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(target, args, inputs=(), mode=None, seed=None, started=None) -> Path:
    """Record what is needed to rerun a command next to its artifact."""
    path = Path(str(target) + ".manifest.json")
    manifest = {
        "tool": "tanslab",
        "version": __version__,
        "command": args.command,
        "argv": args.argv,
        "flags": {k: v for k, v in vars(args).items() if k not in ("func", "argv")},
        "seed": seed,
        "arithmetic": mode,
        "inputs": {str(p): _digest(p) for p in inputs if p},
        "wall_seconds": None if started is None else round(time.perf_counter() - started, 6),
    }
    path.write_text(json.dumps(manifest, indent=2, default=str) + "\n", encoding="utf-8")
    return path


def _dist_for_spread(dist_path, spread_path, R=None):
    symbols, probs = read_dist(dist_path)
    spread = read_spread(spread_path, symbols)
    if R is not None and R != spread.R:
        raise SpreadError(f"--R {R} disagrees with the spread file (R={spread.R})")
    dist = SymbolDistribution(symbols, probs, spread.R, spread.counts)
    return dist, spread


def _mode_flag(args) -> str:
    return "exact" if args.exact else "float" if args.float else "auto"


def _emit(report: dict, as_json: bool, out=None) -> None:
    out = sys.stdout if out is None else out
    if as_json:
        json.dump(report, out, indent=2, default=str)
        out.write("\n")
        return
    for k, v in report.items():
        if isinstance(v, list):
            continue
        out.write(f"{k}: {v}\n")
    for x, p in report.get("state_probs", []):
        out.write(f"p[{x}] = {p}\n")


def _report_dict(rep, extra=None) -> dict:
    d = {"mode": "exact" if rep.exact else "float"}
    if extra:
        d.update(extra)
    d["kappa"] = float(rep.kappa)
    if rep.exact:
        d["kappa_fraction"] = str(rep.kappa)
    d["entropy"] = float(rep.entropy)
    d["delta_h"] = float(rep.delta_h)
    return d


# -- commands -------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    dist, spread = _dist_for_spread(args.dist, args.spread, args.R)
    tables = build_tables(dist, spread)
    try:
        eq, rep = analyze(tables, mode=_mode_flag(args))
    except SingularSystem:
        print(f"error: spread {args.spread} gives a singular Markov system "
              "(no unique equilibrium)", file=sys.stderr)
        return EXIT_SINGULAR
    out = _report_dict(rep, {"L": dist.L})
    if args.probs:
        out["state_probs"] = [(dist.L + i, str(p) if eq.exact else repr(p)) for i, p in enumerate(eq.probs)]
    _emit(out, args.json)
    if args.plot:
        from .plotting import plot_equilibrium

        plot_equilibrium(eq.probs, dist.L, args.plot, title=f"ΔH = {float(rep.delta_h):.3e}")
    return EXIT_OK


def cmd_tune(args) -> int:
    started = time.perf_counter()
    symbols, probs = read_dist(args.dist)
    dist = quantize(probs, args.R, symbols=symbols)
    spread = tune_spread(dist) if args.method == "tune" else rank_match_spread(dist)
    d = spread_distance(spread, preferred_positions(dist))
    try:
        eq, rep = analyze(build_tables(dist, spread), mode=_mode_flag(args))
        out = _report_dict(rep, {"method": args.method, "L": dist.L, "distance": d})
    except SingularSystem:
        eq, out = None, {"method": args.method, "L": dist.L, "distance": d, "singular": True}
    out["counts"] = " ".join(map(str, dist.counts))
    if args.out:
        write_text(args.out, format_spread(spread))
        write_manifest(args.out, args, [args.dist], started=started)
    else:
        sys.stdout.write(format_spread(spread))
    _emit(out, args.json, sys.stderr if not args.out else sys.stdout)
    if args.plot and eq is not None:
        from .plotting import plot_equilibrium

        plot_equilibrium(eq.probs, dist.L, args.plot, title=f"{args.method}: ΔH = {out['delta_h']:.3e}")
    return EXIT_OK


def _search_dist(args) -> SymbolDistribution:
    symbols, probs = read_dist(args.dist)
    return quantize(probs, args.R, symbols=symbols)


def cmd_optimize(args) -> int:
    started = time.perf_counter()
    dist = _search_dist(args)
    init = args.init
    inputs = [args.dist]
    if init == "file":
        if not args.init_spread:
            raise SpreadError("--init file needs --init-spread PATH")
        init = read_spread(args.init_spread, dist.symbols)
        inputs.append(args.init_spread)
    cfg = SearchConfig(iterations=args.iters, threshold=args.threshold, seed=args.seed,
                       initial=init, objective=args.objective,
                       arithmetic="exact" if args.exact else "float")
    trace = swap_search(dist, cfg)
    if trace.report is None:
        print("error: no non-singular spread found", file=sys.stderr)
        return EXIT_SINGULAR
    out = _report_dict(trace.report, {"L": dist.L, "seed": args.seed, "objective": args.objective})
    out.update(iterations=trace.iterations, evaluations=trace.evaluations,
               good_swaps=trace.good_swaps, singular=trace.singular,
               initial_delta_h=trace.initial_delta_h, seconds=round(trace.seconds, 3))
    if args.out:
        write_text(args.out, format_spread(trace.spread))
        write_manifest(args.out, args, inputs, mode=cfg.arithmetic, seed=args.seed, started=started)
    if args.trace:
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "x", "y", "delta_h"])
            for g in trace.accepted:
                w.writerow([g.iteration, g.x, g.y, repr(g.delta_h)])
    if args.plot:
        from .plotting import plot_trace

        plot_trace([trace], args.plot)
    _emit(out, args.json)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    started = time.perf_counter()
    dist = _search_dist(args)
    edges = tuple(float(e) for e in args.edges.split(",")) if args.edges else (1.48, 1.49, 1.5)
    res = exhaustive_spreads(dist, cap=args.cap, mode="float" if args.float else "exact", edges=edges)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    hist = outdir / "histogram.csv"
    with open(hist, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["bucket_low", "bucket_high", "count"])
        w.writerow([repr(float(res.min_kappa)), repr(float(res.min_kappa)), res.min_count])
        for lo, hi, c in res.buckets:
            w.writerow([repr(lo), repr(hi), c])
        w.writerow([repr(float(res.max_kappa)), repr(float(res.max_kappa)), res.max_count])
    write_text(outdir / "min_spread.txt", format_spread(res.min_spread))
    write_text(outdir / "max_spread.txt", format_spread(res.max_spread))
    write_manifest(hist, args, [args.dist], mode="exact" if res.exact else "float", started=started)
    if args.plot:
        from .plotting import plot_kappa_histogram

        plot_kappa_histogram(res.kappas, float(dist.entropy()), outdir / "kappa_histogram.png")
    out = {"total": res.total, "failures": res.failures, "min_kappa": str(res.min_kappa),
           "min_count": res.min_count, "max_kappa": str(res.max_kappa), "max_count": res.max_count,
           "exact": res.exact, "seconds": round(res.seconds, 1)}
    _emit(out, args.json)
    return EXIT_OK


def _byte_dist(data: bytes, R: int) -> SymbolDistribution:
    freq = Counter(data)
    # a one-symbol source still needs a two-symbol coder
    if len(freq) == 1:
        (b,) = freq
        freq[(b + 1) % 256] = 0
    symbols = sorted(freq)
    weights = [Fraction(freq[s]) if freq[s] else Fraction(1, 2 * len(data)) for s in symbols]
    total = sum(weights)
    return quantize([w / total for w in weights], R, symbols=symbols)


def cmd_encode(args) -> int:
    started = time.perf_counter()
    data = Path(args.input).read_bytes()
    inputs = [args.input]
    if args.spread:
        if not args.dist:
            raise SpreadError("--spread needs --dist")
        symbols, probs = read_dist(args.dist)
        spread = read_spread(args.spread, symbols)
        dist = SymbolDistribution(tuple(int(s) for s in symbols), probs, spread.R, spread.counts)
        spread = type(spread)(dist.symbols, spread.labels)
        inputs += [args.dist, args.spread]
    else:
        if args.R is None:
            raise DistributionError("--R is required unless --spread is given")
        if not data:
            Path(args.output).write_bytes(empty_container(args.R))
            write_manifest(args.output, args, inputs, started=started)
            return EXIT_OK
        if args.dist:
            symbols, probs = read_dist(args.dist)
            dist = quantize(probs, args.R, symbols=[int(s) for s in symbols])
            inputs.append(args.dist)
        else:
            dist = _byte_dist(data, args.R)
        spread = tune_spread(dist) if args.method == "tune" else rank_match_spread(dist)
    tables = build_tables(dist, spread)
    frame = encode(data, tables, args.x_init)
    Path(args.output).write_bytes(pack_container(dist, frame, len(data), spread=spread))
    write_manifest(args.output, args, inputs, started=started)
    if args.verbose:
        print(f"{len(data)} symbols -> {frame.bit_length} payload bits "
              f"({frame.bit_length / max(len(data), 1):.6f} bits/symbol)", file=sys.stderr)
    return EXIT_OK


def cmd_decode(args) -> int:
    box = unpack_container(Path(args.input).read_bytes())
    if box.keyed:
        raise DecodeError("keyed container: use 'tanslab keyed decode'")
    if box.length == 0:
        Path(args.output).write_bytes(b"")
        return EXIT_OK
    spread = box.spread()
    dist = SymbolDistribution.from_counts(box.counts, box.symbols)
    out = decode(box.frame, build_tables(dist, spread), box.length)
    if any(s > 255 for s in out):
        raise DecodeError("decoded symbols do not fit in bytes")
    Path(args.output).write_bytes(bytes(out))
    return EXIT_OK


def _keyed_session(args):
    key = bytes.fromhex(args.key_hex)
    symbols, probs = read_dist(args.dist_file)
    # integer symbols (byte values) hash the same way for derive and encode
    if all(s.lstrip("-").isdigit() for s in symbols):
        symbols = [int(s) for s in symbols]
    return derive_keyed_spread(key, probs, args.R, iterations=args.iters, symbols=symbols,
                               arithmetic="exact" if args.exact else "float")


def cmd_keyed(args) -> int:
    started = time.perf_counter()
    if args.action == "derive":
        session = _keyed_session(args)
        out = _report_dict(session.report, {"L": session.dist.L, "iterations": args.iters})
        out["spread_sha256"] = session.spread_digest()
        out["good_swaps"] = session.trace.good_swaps
        out["differs_from_public"] = session.spread.labels != session.public_spread.labels
        if args.out:
            write_text(args.out, format_spread(session.spread))
            write_manifest(args.out, args, [args.dist_file], started=started)
        _emit(out, args.json)
        return EXIT_OK
    if not args.input or not args.output:
        raise ValueError("encode/decode need INPUT and OUTPUT")
    session = _keyed_session(args)
    if args.action == "encode":
        data = Path(args.input).read_bytes()
        Path(args.output).write_bytes(keyed_encode(session, data))
        write_manifest(args.output, args, [args.input, args.dist_file], started=started)
    else:
        out = keyed_decode(session, Path(args.input).read_bytes())
        Path(args.output).write_bytes(bytes(out))
    return EXIT_OK


def _bench_one(job):
    dist, R, seed, iters, objectives = job
    row = {"R": R, "L": 1 << R, "seed": seed, "iterations": iters}
    for obj in objectives:
        tr = swap_search(dist, SearchConfig(iterations=iters, seed=seed, initial="random",
                                            objective=obj), final_report=False)
        row[f"delta_h_{obj}"] = tr.delta_h
        row[f"good_swaps_{obj}"] = tr.good_swaps
        row[f"evaluations_{obj}"] = tr.evaluations
        row[f"seconds_{obj}"] = round(tr.seconds, 3)
    return row


def run_bench(probs, symbols, R_list, iters, seeds, objectives=("min", "max"), threads=1):
    jobs = []
    for R in R_list:
        dist = quantize(probs, R, symbols=symbols)
        jobs += [(dist, R, seed, iters, objectives) for seed in seeds]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_bench_one, jobs))
    return [_bench_one(j) for j in jobs]


def cmd_bench(args) -> int:
    started = time.perf_counter()
    symbols, probs = read_dist(args.dist)
    R_list = [int(r) for r in args.R_list.split(",") if r]
    objectives = ("min", "max") if args.objective == "both" else (args.objective,)
    seeds = list(range(args.seed_base, args.seed_base + args.seeds))
    rows = run_bench(probs, symbols, R_list, args.iters, seeds, objectives, args.threads)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=BENCH_FIELDS, restval="")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    finally:
        if args.out:
            out.close()
    if args.out:
        write_manifest(args.out, args, [args.dist], mode="float", started=started)
    if args.plot and rows:
        from .plotting import plot_bench

        plot_bench(rows, args.plot)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------

def _arith(p, default_help="auto: exact for rational inputs with L <= 256"):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="rational arithmetic")
    g.add_argument("--float", action="store_true", help=f"floating point ({default_help})")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tanslab", description="Analyse, tune and search tANS symbol spreads; encode and decode files.")
    p.add_argument("--version", action="version", version=f"tanslab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="equilibrium, κ, H and ΔH of a coder")
    a.add_argument("dist")
    a.add_argument("spread")
    a.add_argument("--R", type=int)
    _arith(a)
    a.add_argument("--probs", action="store_true", help="list every p_x")
    a.add_argument("--json", action="store_true")
    a.add_argument("--plot", help="write a p_x figure to this path")
    a.set_defaults(func=cmd_analyze)

    t = sub.add_parser("tune", help="analytic spread from preferred states")
    t.add_argument("dist")
    t.add_argument("--R", type=int, required=True)
    t.add_argument("--method", choices=("tune", "rank"), default="tune")
    t.add_argument("--out", help="spread file (default: stdout)")
    _arith(t)
    t.add_argument("--json", action="store_true")
    t.add_argument("--plot")
    t.set_defaults(func=cmd_tune)

    o = sub.add_parser("optimize", help="random swap search for small (or large) ΔH")
    o.add_argument("dist")
    o.add_argument("--R", type=int, required=True)
    o.add_argument("--threshold", type=float)
    o.add_argument("--iters", type=int, default=10_000)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--init", choices=("random", "tuned", "rank", "file"), default="random")
    o.add_argument("--init-spread")
    o.add_argument("--objective", choices=("min", "max"), default="min")
    o.add_argument("--exact", action="store_true", help="compare candidates with rational κ")
    o.add_argument("--out", help="final spread file")
    o.add_argument("--trace", help="CSV with one line per good swap")
    o.add_argument("--plot")
    o.add_argument("--json", action="store_true")
    o.set_defaults(func=cmd_optimize)

    e = sub.add_parser("enumerate", help="κ histogram over every spread")
    e.add_argument("dist")
    e.add_argument("--R", type=int, required=True)
    e.add_argument("--cap", type=int, default=10**6)
    e.add_argument("--float", action="store_true",
                   help="batched floating solves; extremes and edge cases re-checked exactly")
    e.add_argument("--edges", help="comma-separated κ bucket edges (default 1.48,1.49,1.5)")
    e.add_argument("--out-dir", default=".")
    e.add_argument("--plot", action="store_true")
    e.add_argument("--json", action="store_true")
    e.set_defaults(func=cmd_enumerate)

    en = sub.add_parser("encode", help="compress a file into an ANS1 container")
    en.add_argument("input")
    en.add_argument("output")
    en.add_argument("--R", type=int)
    en.add_argument("--dist", help="byte distribution (default: counted from the input)")
    en.add_argument("--spread", help="explicit spread file (needs --dist)")
    en.add_argument("--method", choices=("rank", "tune"), default="rank")
    en.add_argument("--x-init", type=int)
    en.add_argument("-v", "--verbose", action="store_true")
    en.set_defaults(func=cmd_encode)

    de = sub.add_parser("decode", help="restore a file from an ANS1 container")
    de.add_argument("input")
    de.add_argument("output")
    de.set_defaults(func=cmd_decode)

    k = sub.add_parser("keyed", help="key-derived secret spreads")
    k.add_argument("action", choices=("derive", "encode", "decode"))
    k.add_argument("input", nargs="?")
    k.add_argument("output", nargs="?")
    k.add_argument("--key-hex", required=True)
    k.add_argument("--dist-file", required=True)
    k.add_argument("--R", type=int, required=True)
    k.add_argument("--iters", type=int, default=1000)
    k.add_argument("--exact", action="store_true")
    k.add_argument("--out", help="derive: write the secret spread here")
    k.add_argument("--json", action="store_true")
    k.set_defaults(func=cmd_keyed)

    b = sub.add_parser("bench", help="ΔH_min / ΔH_max per state count and seed (CSV)")
    b.add_argument("dist")
    b.add_argument("--R-list", default="7")
    b.add_argument("--iters", type=int, default=100_000)
    b.add_argument("--seeds", type=int, default=10)
    b.add_argument("--seed-base", type=int, default=0)
    b.add_argument("--objective", choices=("min", "max", "both"), default="both")
    b.add_argument("--threads", type=int, default=int(os.environ.get(THREADS_ENV, "1")))
    b.add_argument("--out", help="CSV path (default: stdout)")
    b.add_argument("--plot")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except SingularSystem as exc:
        print(f"error: singular system: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (DistributionError, SpreadError, DecodeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
