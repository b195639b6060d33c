"""Command-line interface.

Subcommands: estimate | table | certify | oracle | pisot | cylinders |
wedge | conjugacy.  Output is JSON or CSV, to --out or stdout.  A plain
key=value config file supplies defaults; flags override.  Exit codes:
0 success, 1 domain or configuration error, 2 internal consistency
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction

from . import certifier, estimator, pisot
from .core import ConsistencyError, DomainError


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(ValueError):
    pass


def _parse_steps(s: str) -> int:
    try:
        return int(s)
    except ValueError:
        v = float(s)
        if v != int(v) or v < 0:
            raise ValueError(f"not an integer step count: {s}")
        return int(v)


def _parse_seed(s: str) -> int:
    v = int(s)
    if not 0 <= v < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return v


def _parse_decimal_up(s: str) -> float:
    """Nearest representable value, rounded up (never below the exact
    decimal), as required for an externally certified measure bound."""
    exact = Fraction(s)
    f = float(exact)
    if Fraction(f) < exact:
        f = math.nextafter(f, math.inf)
    return f


def _read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _build_parser() -> _Parser:
    p = _Parser(prog="mcf", description=__doc__)
    p.add_argument("--config", help="key=value defaults file")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, steps_default=None):
        sp.add_argument("--seed", type=_parse_seed, default=0)
        sp.add_argument("--renorm", type=int, default=1024,
                        help="renormalization interval (default 1024)")
        sp.add_argument("--tasks", type=int, default=1)
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        if steps_default is not None:
            sp.add_argument("--steps", type=_parse_steps, default=steps_default)

    sp = sub.add_parser("estimate", help="Lyapunov spectrum of one algorithm")
    sp.add_argument("--alg", required=True,
                    choices=("selmer", "cassaigne", "brun", "jacobi_perron",
                             "intermediate", "garrity"))
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--orbits", type=int, default=10)
    common(sp, steps_default=estimator.DESK_STEPS)

    sp = sub.add_parser("table", help="whole comparison-table grid")
    sp.add_argument("--table", type=int, required=True, choices=range(1, 7))
    sp.add_argument("--budget", type=_parse_steps, default=10**7)
    sp.add_argument("--orbits", type=int, default=3)
    common(sp)
    sp.set_defaults(renorm=256)

    sp = sub.add_parser("certify", help="certified second-exponent bound")
    sp.add_argument("--alg", default="selmer", choices=["selmer"])
    sp.add_argument("--dim", type=int, required=True, choices=(2, 3))
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--split-depth", type=int, default=8)
    sp.add_argument("--aggregate", action="store_true",
                    help="close negligible subtrees early (sound overestimate)")
    sp.add_argument("--agg-log2", type=int, default=-44)
    sp.add_argument("--refine", type=int, default=0,
                    help="midpoint-subdivision levels per cylinder (tightens the bound)")
    sp.add_argument("--singular-measure", type=_parse_decimal_up, default=None,
                    help="externally certified all-'b' cylinder measure")
    sp.add_argument("--provenance", default=None)
    sp.add_argument("--pure-python", action="store_true")
    common(sp)

    sp = sub.add_parser("oracle", help="high-precision interval recomputation")
    sp.add_argument("--dim", type=int, required=True, choices=(2, 3))
    sp.add_argument("--depth", type=int, required=True)
    sp.add_argument("--prec", type=int, default=220)
    sp.add_argument("--aggregate", action="store_true")
    sp.add_argument("--agg-log2", type=int, default=-44)
    sp.add_argument("--refine", type=int, default=0)
    sp.add_argument("--split-depth", type=int, default=8)
    common(sp)

    sp = sub.add_parser("pisot", help="word classification scan")
    sp.add_argument("--max-len", type=int, default=10)
    common(sp)

    sp = sub.add_parser("cylinders", help="exact cylinder dump")
    sp.add_argument("--dim", type=int, required=True, choices=(2, 3))
    sp.add_argument("--depth", type=int, required=True)
    common(sp)

    sp = sub.add_parser("wedge", help="exterior-square and balancedness monitor")
    sp.add_argument("--alg", required=True)
    sp.add_argument("--dim", type=int, required=True)
    common(sp, steps_default=10**5)

    sp = sub.add_parser("conjugacy", help="sorted vs triangle spectrum comparison")
    sp.add_argument("--orbits", type=int, default=4)
    common(sp, steps_default=10**6)
    sp.set_defaults(renorm=256)

    return p


def _emit(payload, fmt: str, out: str | None, csv_rows=None) -> None:
    if fmt == "csv":
        if csv_rows is None:
            raise _UsageError("csv output is not defined for this subcommand")
        buf = io.StringIO()
        w = csv.writer(buf)
        for row in csv_rows:
            w.writerow(row)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _estimate_csv(rep) -> list:
    rows = [["record", "orbit", "attempt", "lambda1", "lambda2", "eta_star"]]
    for o in rep.orbits:
        rows.append(["orbit", o.orbit, o.attempt, repr(o.lambda1),
                     repr(o.lambda2), repr(o.eta_star)])
    rows.append(["pooled", "", "", repr(rep.lambda1), repr(rep.lambda2),
                 repr(rep.eta_star)])
    return rows


def _table_csv(payload) -> list:
    if payload["table"] == 6:
        hdr = ["d", "selmer", "brun", "jacobi_perron", "intermediate",
               "garrity", "dirichlet"]
        rows = [hdr]
        for r in payload["rows"]:
            rows.append([r["d"]] + [repr(r[k]) for k in hdr[1:]])
        return rows
    rows = [["algorithm", "d", "lambda1", "lambda2", "eta_star",
             "lambda2_std", "dirichlet"]]
    for r in payload["rows"]:
        rows.append([r["algorithm"], r["d"], repr(r["lambda1"]),
                     repr(r["lambda2"]), repr(r["eta_star"]),
                     repr(r["lambda2_std"]), repr(r["dirichlet"])])
    return rows


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        # configuration file supplies defaults; flags override
        args_list = list(sys.argv[1:] if argv is None else argv)
        if "--config" in args_list:
            i = args_list.index("--config")
            cfg = _read_config(args_list[i + 1])
            defaults = {}
            for k, v in cfg.items():
                if k in ("steps", "budget"):
                    defaults[k] = _parse_steps(v)
                elif k in ("seed",):
                    defaults[k] = _parse_seed(v)
                elif k in ("singular_measure",):
                    defaults[k] = _parse_decimal_up(v)
                elif k in ("dim", "depth", "orbits", "renorm", "tasks",
                           "max_len", "table", "prec", "split_depth",
                           "agg_log2"):
                    defaults[k] = int(v)
                elif k in ("aggregate", "pure_python"):
                    defaults[k] = v.lower() in ("1", "true", "yes")
                else:
                    defaults[k] = v
            parser.set_defaults(**defaults)
        args = parser.parse_args(args_list)
        return _dispatch(args)
    except (_UsageError, DomainError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ConsistencyError as e:
        print(f"internal consistency failure: {e}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "estimate":
        cfg = estimator.EstimatorConfig(
            args.alg, args.dim, steps=args.steps, renorm=args.renorm,
            orbits=args.orbits, seed=args.seed)
        rep = estimator.estimate(cfg, tasks=args.tasks)
        _emit(rep.to_dict(), args.format, args.out, _estimate_csv(rep))
        return 0
    if cmd == "table":
        payload = estimator.table(args.table, budget=args.budget,
                                  orbits=args.orbits, seed=args.seed,
                                  renorm=args.renorm, tasks=args.tasks)
        _emit(payload, args.format, args.out, _table_csv(payload))
        return 0
    if cmd == "certify":
        if args.singular_measure is not None and not args.provenance:
            raise _UsageError("--singular-measure requires --provenance")
        cert = certifier.certify(
            args.dim, args.depth, tasks=args.tasks,
            split_depth=args.split_depth, aggregate=args.aggregate,
            agg_log2=args.agg_log2, refine=args.refine,
            singular_measure=args.singular_measure,
            provenance=args.provenance, force_python=args.pure_python)
        _emit(cert.to_dict(), args.format, args.out, None)
        return 0
    if cmd == "oracle":
        payload = certifier.oracle_recompute(
            args.dim, args.depth, prec=args.prec, aggregate=args.aggregate,
            agg_log2=args.agg_log2, refine=args.refine,
            split_depth=args.split_depth, max_depth=max(16, args.depth))
        payload["schema"] = 1
        payload["kind"] = "oracle"
        _emit(payload, args.format, args.out, None)
        return 0
    if cmd == "pisot":
        rep = pisot.verify_theorem(args.max_len)
        rows = [["word", "primitive", "pisot", "condition3",
                 "c0", "c1", "c2", "c3"]]
        for cl in rep["rows"]:
            rows.append([cl.word, int(cl.primitive), int(cl.pisot),
                         int(cl.condition3), *cl.char_poly])
        payload = {
            "schema": 1, "kind": "pisot", "max_len": rep["max_len"],
            "words": rep["words"], "mismatches": rep["mismatches"],
            "rows": [
                {"word": c.word, "primitive": c.primitive, "pisot": c.pisot,
                 "condition3": c.condition3, "char_poly": list(c.char_poly)}
                for c in rep["rows"]
            ],
        }
        _emit(payload, args.format, args.out, rows)
        return 0
    if cmd == "cylinders":
        rows = [["word", "volume_num", "volume_den", "singular", "vertices"]]
        data = []
        for c in certifier.enumerate_cylinders(args.dim, args.depth):
            verts = ";".join(
                ",".join(str(v) for v in p.coords) for p in c.vertices
            )
            rows.append([c.word, c.volume.numerator, c.volume.denominator,
                         int(c.singular), verts])
            data.append({
                "word": c.word,
                "volume": [c.volume.numerator, c.volume.denominator],
                "singular": c.singular,
                "vertices": [[str(v) for v in p.coords] for p in c.vertices],
            })
        _emit({"schema": 1, "kind": "cylinders", "dim": args.dim,
               "depth": args.depth, "cylinders": data},
              args.format, args.out, rows)
        return 0
    if cmd == "wedge":
        rep = estimator.wedge_monitor(args.alg, args.dim, args.steps,
                                      seed=args.seed, renorm=args.renorm)
        _emit(rep.to_dict(), args.format, args.out, None)
        return 0
    if cmd == "conjugacy":
        payload = estimator.conjugacy_check(args.steps, seed=args.seed,
                                            orbits=args.orbits,
                                            renorm=args.renorm,
                                            tasks=args.tasks)
        _emit(payload, args.format, args.out, None)
        return 0
    raise _UsageError(f"unknown command {cmd!r}")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
