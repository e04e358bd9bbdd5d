"""Command-line front end: ``analyze``, ``simulate`` and ``report``."""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from dataclasses import replace

from . import report
from .design import Dataset, EffectSpec
from .errors import ConfigError, InvalidInputError, SyncPermError, UnsupportedDesignError
from .parametric import ats, wts
from .permutation import PermutationPlan, csp_test, usp_test, wtps
from .simulation import METHODS, load_config, run_study

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_UNSUPPORTED = 0, 2, 3, 4
EFFECTS = ("A", "B", "AxB")


class DataError(SyncPermError):
    pass


def read_long_csv(path, factor_a: str, factor_b: str, response: str):
    """Long-format CSV -> (Dataset, levels_a, levels_b).

    Factor levels are sorted as strings; the first maps to index 1.
    """
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        missing = [c for c in (factor_a, factor_b, response) if c not in reader.fieldnames]
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
        for rec in reader:
            line = reader.line_num
            if None in rec or any(rec[c] is None for c in (factor_a, factor_b, response)):
                raise DataError(f"{path}, line {line}: wrong number of fields")
            a, b, y = rec[factor_a].strip(), rec[factor_b].strip(), rec[response].strip()
            if not a or not b:
                raise DataError(f"{path}, line {line}: empty factor level")
            try:
                value = float(y)
            except ValueError:
                raise DataError(f"{path}, line {line}: response {y!r} is not a number") from None
            if not math.isfinite(value):
                raise DataError(f"{path}, line {line}: response {y!r} is not finite")
            rows.append((a, b, value))
    if not rows:
        raise DataError(f"{path}: no observations")
    levels_a = sorted({r[0] for r in rows})
    levels_b = sorted({r[1] for r in rows})
    for name, levels in ((factor_a, levels_a), (factor_b, levels_b)):
        if len(levels) != 2:
            raise UnsupportedDesignError(
                f"factor {name!r} has {len(levels)} level(s) {levels}; exactly 2 are required"
            )
    cells = [[], [], [], []]
    for a, b, y in rows:
        cells[2 * levels_a.index(a) + levels_b.index(b)].append(y)
    for k, c in enumerate(cells):
        if not c:
            i, j = divmod(k, 2)
            raise UnsupportedDesignError(
                f"cell ({levels_a[i]}, {levels_b[j]}) has no observations"
            )
    return Dataset(cells), levels_a, levels_b


def analyze_dataset(d: Dataset, methods=METHODS, n_perm: int = 5000, seed: int = 0,
                    pre_randomize: bool = True):
    """Run every requested method on A, B and AxB; yields result records."""
    for eff in EFFECTS:
        e = EffectSpec.of(eff)
        for m in methods:
            rec = {"effect": eff, "method": m}
            try:
                if m == "WTS":
                    res = wts(d, e)
                elif m == "ATS":
                    res = ats(d, e)
                elif m == "WTPS":
                    res = wtps(d, e, PermutationPlan("pooled", n_perm, seed))
                elif m == "CSP":
                    res = csp_test(d, e, PermutationPlan("csp", n_perm, seed, pre_randomize))
                else:
                    res = usp_test(d, e, PermutationPlan("usp", n_perm, seed))
            except (UnsupportedDesignError, InvalidInputError) as exc:
                rec.update(status="skipped", note=str(exc))
            else:
                rec.update(status="degenerate" if res.degenerate else "ok", result=res)
            yield rec


def _fmt(x, spec=".6g"):
    if x is None:
        return ""
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return format(x, spec)


def cmd_analyze(args) -> int:
    methods = tuple(m.strip().upper() for m in args.methods.split(",") if m.strip())
    bad = [m for m in methods if m not in METHODS]
    if bad:
        print(f"error: unknown method(s) {', '.join(bad)}", file=sys.stderr)
        return EXIT_USAGE
    if args.n_perm < 1:
        print("error: --n-perm must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    d, la, lb = read_long_csv(args.input, args.factor_a, args.factor_b, args.response)
    print(f"factor A ({args.factor_a}): 1 = {la[0]}, 2 = {la[1]}")
    print(f"factor B ({args.factor_b}): 1 = {lb[0]}, 2 = {lb[1]}")
    print("cell sizes (11,12,21,22): " + ", ".join(str(k) for k in d.n))
    print(f"{'effect':<6} {'method':<5} {'statistic':>14} {'df1':>8} {'df2/resamples':>14} {'p-value':>10}")
    records = list(analyze_dataset(d, methods, args.n_perm, args.seed, not args.no_prerandomize))
    for rec in records:
        if rec["status"] == "skipped":
            print(f"{rec['effect']:<6} {rec['method']:<5} skipped: {rec['note']}")
            continue
        r = rec["result"]
        tail = r.n_resamples if r.n_resamples is not None else _fmt(r.df2)
        print(
            f"{rec['effect']:<6} {rec['method']:<5} {_fmt(r.statistic):>14} {_fmt(r.df1):>8} "
            f"{tail!s:>14} {_fmt(r.p_value, '.6f'):>10}"
            + ("  (degenerate)" if r.degenerate else "")
        )
    if args.csv_out:
        with open(args.csv_out, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["effect", "method", "status", "statistic", "df1", "df2", "n_resamples", "p_value"])
            for rec in records:
                r = rec.get("result")
                if r is None:
                    w.writerow([rec["effect"], rec["method"], "skipped", "", "", "", "", ""])
                else:
                    w.writerow([
                        rec["effect"], rec["method"], rec["status"], repr(r.statistic),
                        "" if r.df1 is None else repr(r.df1), "" if r.df2 is None else repr(r.df2),
                        "" if r.n_resamples is None else r.n_resamples, repr(r.p_value),
                    ])
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        config = replace(config, **overrides)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"{config.study}_study.csv")
    n_points = len(config.grid())
    t0 = time.perf_counter()

    def progress(done, total):
        print(f"\r{done}/{total} work units", end="", file=sys.stderr, flush=True)

    try:
        table = run_study(config, progress=progress if not args.quiet else None)
        report.emit_csv(table, path)
    except BaseException:
        if os.path.exists(path):
            os.remove(path)
        raise
    finally:
        if not args.quiet:
            print(file=sys.stderr)
    elapsed = time.perf_counter() - t0
    print(f"{n_points} grid points, {len(table)} rows, {elapsed:.1f} s -> {path}")
    return EXIT_OK


def cmd_report(args) -> int:
    table = report.read_csv(args.csv)
    if not len(table):
        print(f"error: {args.csv} contains no rows; nothing to plot", file=sys.stderr)
        return EXIT_DATA
    paths = report.emit_svg(table, args.out, alpha=args.alpha)
    for p in paths:
        print(p)
    print(f"{len(paths)} charts written to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="syncperm",
        description="Parametric and permutation tests for 2x2 factorial designs.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="test A, B and AxB on a long-format CSV")
    a.add_argument("--input", required=True)
    a.add_argument("--factor-a", required=True)
    a.add_argument("--factor-b", required=True)
    a.add_argument("--response", required=True)
    a.add_argument("--methods", default=",".join(METHODS))
    a.add_argument("--n-perm", type=int, default=5000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--no-prerandomize", action="store_true",
                   help="keep the file order of observations for CSP")
    a.add_argument("--csv-out", help="also write the results to this CSV file")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="run a simulation study from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("report", help="render SVG charts from a study CSV")
    r.add_argument("--csv", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--alpha", type=float, default=0.05)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UnsupportedDesignError as exc:
        print(f"error: unsupported design: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, InvalidInputError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
