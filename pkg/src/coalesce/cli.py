"""Command-line front end.

Every invocation writes a one-line JSON run manifest to stderr: the argv,
sha256 digests of the input files it read, the seed in effect, the caps, the
package version, and wall-clock time. Stdout carries only the results, in
the format selected by --format.

Exit codes: 0 success, 1 a check or reproduction failed, 2 bad input,
3 a configured budget was exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import secrets
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__
from .birkhoff import birkhoff_decomposition
from .blocks import check_lumpability, construct_block_measure, is_block_measure
from .cftp import (
    DEFAULT_T_MAX,
    RngStream,
    equidistribution_report,
    sample_counts,
    total_variation,
)
from .coupling import (
    DEFAULT_SUPPORT_CAP,
    BlockCoupling,
    doeblin_coupling,
    expand_support,
    induced_matrix,
    parse_coupling,
    serialize_coupling,
)
from .diagram import emit_trajectory_diagram
from .errors import (
    BudgetExceeded,
    ClosureTooLarge,
    CoalesceError,
    SupportTooLarge,
)
from .feasibility import feasible_weights, is_weakly_feasible
from .kset import DEFAULT_SUBSET_BUDGET, k_set_report
from .mapfun import MapFunction, Partition, Support
from .matrix import (
    StochasticMatrix,
    invariant_distribution,
    is_doubly_stochastic,
    is_irreducible,
    parse_matrix,
    period,
)
from .rational import format_rational
from .reference import REGISTRY, run_example
from .semigroup import (
    DEFAULT_CLOSURE_CAP,
    coalescence_number,
    coalescing_pairs,
    limiting_partitions,
)

DEFAULT_DIAGRAM_STEPS = 30


@dataclass
class _Run:
    """What the manifest needs to know about one invocation."""

    seed: int
    threads: int
    inputs: list = field(default_factory=list)

    def read_file(self, path: str) -> str:
        data = Path(path).read_bytes()
        self.inputs.append(
            {"path": path, "sha256": hashlib.sha256(data).hexdigest()}
        )
        return data.decode()


def _load_matrix(run: _Run, path: str) -> StochasticMatrix:
    return parse_matrix(run.read_file(path))


def _load_coupling(run: _Run, path: str):
    return parse_coupling(run.read_file(path))


def _parse_support_arg(run: _Run, value: str) -> Support:
    """A support given as a file of function notations, or inline."""
    if Path(value).is_file():
        text = run.read_file(value)
    else:
        text = value
    tokens = text.split()
    if not tokens:
        raise ValueError("empty support")
    return Support.of(MapFunction.from_notation(tok) for tok in tokens)


def _require_format(args, *allowed: str) -> None:
    if args.format not in allowed:
        raise ValueError(
            f"format {args.format!r} not supported here; use one of {', '.join(allowed)}"
        )


def _float6(x) -> str:
    return f"{float(x):.6f}"


def _pairs_text(pairs) -> str:
    parts = sorted(tuple(sorted(v + 1 for v in p)) for p in pairs)
    return " ".join("{" + ",".join(map(str, p)) + "}" for p in parts)


def _coupling_summary(mu) -> str:
    if isinstance(mu, BlockCoupling):
        return f"block coupling over {mu.partition.format_onebased()}"
    return f"{mu.support_size()} weighted functions"


def _kset_payload(report, include_couplings: bool) -> dict:
    members = []
    for m in report.members:
        entry = {"k": m.k, "how": m.how}
        if include_couplings:
            entry["coupling"] = json.loads(serialize_coupling(m.coupling))
        members.append(entry)
    return {
        "n": report.n,
        "values": sorted(report.values),
        "exact": report.exact,
        "members": members,
        "exclusions": [
            {"k": e.k, "reason": e.reason, "detail": e.detail}
            for e in report.exclusions
        ],
        "stats": {
            "subsets_enumerated": report.subsets_enumerated,
            "lp_decided": report.lp_decided,
            "cover_skipped": report.cover_skipped,
            "pruned": report.pruned,
        },
        "notes": list(report.notes),
    }


def _kset_lines(report) -> list[str]:
    values = " ".join(map(str, sorted(report.values)))
    lines = [
        f"coalescence numbers: {values} ({'exact' if report.exact else 'not exhaustive'})"
    ]
    for m in report.members:
        lines.append(f"  k={m.k}: {m.how}; witness: {_coupling_summary(m.coupling)}")
    for e in report.exclusions:
        lines.append(f"  ruled out k={e.k}: {e.reason}")
    if report.exact:
        lines.append(
            f"  subsets enumerated: {report.subsets_enumerated}"
            f" (lp {report.lp_decided}, cover-skipped {report.cover_skipped},"
            f" pruned {report.pruned})"
        )
    for note in report.notes:
        lines.append(f"  note: {note}")
    return lines


# --- command handlers -------------------------------------------------------


def _cmd_analyze(args, run: _Run) -> int:
    _require_format(args, "text", "json")
    P = _load_matrix(run, args.matrix)
    if not is_irreducible(P):
        raise ValueError("matrix is not irreducible")
    p = period(P)
    ds = is_doubly_stochastic(P)
    pi = invariant_distribution(P)
    allowed = math.prod(len(s) for s in P.row_supports)
    report = k_set_report(P, cap=args.exact_cap, max_closure=args.max_closure)
    if args.format == "json":
        payload = {
            "n": P.n,
            "irreducible": True,
            "period": p,
            "doubly_stochastic": ds,
            "invariant_distribution": [str(v) for v in pi],
            "allowed_functions": allowed,
            "kset": _kset_payload(report, include_couplings=True),
        }
        print(json.dumps(payload, indent=2))
        return 0
    print(f"states: {P.n}")
    print("irreducible: yes")
    print(f"period: {p}")
    print(f"doubly stochastic: {'yes' if ds else 'no'}")
    print("invariant distribution:", " ".join(format_rational(v) for v in pi))
    print(f"allowed functions: {allowed}")
    for line in _kset_lines(report):
        print(line)
    return 0


def _cmd_coupling_check(args, run: _Run) -> int:
    _require_format(args, "text", "json")
    mu = _load_coupling(run, args.coupling)
    P = _load_matrix(run, args.matrix)
    if mu.n != P.n:
        raise ValueError(f"coupling is on {mu.n} states, matrix on {P.n}")
    induced = induced_matrix(mu)
    mismatches = [
        (i, j, induced.entries[i][j], P.entries[i][j])
        for i in range(P.n)
        for j in range(P.n)
        if induced.entries[i][j] != P.entries[i][j]
    ]
    ok = not mismatches
    if args.format == "json":
        payload = {"consistent": ok}
        if not ok:
            i, j, got, want = mismatches[0]
            payload["first_mismatch"] = {
                "row": i + 1, "column": j + 1, "coupling": str(got), "matrix": str(want)
            }
        print(json.dumps(payload, indent=2))
    elif ok:
        print("consistent: the coupling resums to the matrix")
    else:
        i, j, got, want = mismatches[0]
        print(
            f"not consistent: entry ({i + 1},{j + 1}) resums to "
            f"{format_rational(got)}, matrix has {format_rational(want)}"
            f" ({len(mismatches)} entries differ)"
        )
    return 0 if ok else 1


def _cmd_k_number(args, run: _Run) -> int:
    _require_format(args, "text", "json")
    mu = _load_coupling(run, args.coupling)
    support = expand_support(mu)
    k = coalescence_number(support, max_closure=args.max_closure)
    pairs = coalescing_pairs(support)
    parts = sorted(
        p.format_onebased()
        for p in limiting_partitions(support, max_closure=args.max_closure)
    )
    if args.format == "json":
        print(
            json.dumps(
                {
                    "support_size": len(support.functions),
                    "coalescence_number": k,
                    "coalescing_pairs": [
                        sorted(v + 1 for v in p) for p in sorted(pairs, key=sorted)
                    ],
                    "limiting_partitions": parts,
                },
                indent=2,
            )
        )
        return 0
    print(f"support: {len(support.functions)} functions")
    print(f"coalescence number: {k}")
    print(f"coalescing pairs: {_pairs_text(pairs) or 'none'}")
    print("limiting partitions:")
    for text in parts:
        print(f"  {text}")
    return 0


def _cmd_feasible(args, run: _Run) -> int:
    _require_format(args, "text", "json")
    P = _load_matrix(run, args.matrix)
    support = _parse_support_arg(run, args.support)
    result = feasible_weights(P, support)
    if result:
        if args.format == "json":
            print(
                json.dumps(
                    {
                        "feasible": True,
                        "weights": [[f.to_notation(), str(w)] for f, w in result.weights],
                    },
                    indent=2,
                )
            )
        else:
            print("feasible: yes")
            for f, w in result.weights:
                print(f"  {f.to_notation()}: {format_rational(w)}")
        return 0
    weak = is_weakly_feasible(P, support)
    if args.format == "json":
        print(
            json.dumps(
                {
                    "feasible": False,
                    "reason": result.reason,
                    "detail": result.detail,
                    "some_subset_feasible": weak,
                },
                indent=2,
            )
        )
    else:
        print("feasible: no")
        print(f"reason: {result.reason}")
        print(f"detail: {result.detail}")
        print(f"some subset feasible: {'yes' if weak else 'no'}")
    return 1


def _cmd_blocks(args, run: _Run) -> int:
    _require_format(args, "text", "json")
    P = _load_matrix(run, args.matrix)
    partition = Partition.parse(args.partition)
    if partition.n != P.n:
        raise ValueError(f"partition covers {partition.n} states, matrix has {P.n}")
    lumped = check_lumpability(P, partition)
    if not lumped:
        if args.format == "json":
            print(json.dumps({"lumpable": False, "detail": lumped.describe()}, indent=2))
        else:
            print("lumpable: no")
            print(f"detail: {lumped.describe()}")
        return 1
    try:
        mu = construct_block_measure(P, partition)
    except CoalesceError as exc:
        if args.format == "json":
            print(
                json.dumps(
                    {"lumpable": True, "lumped": [[str(v) for v in r] for r in lumped.entries],
                     "constructed": False, "detail": str(exc)},
                    indent=2,
                )
            )
        else:
            print("lumpable: yes")
            print("lumped matrix:")
            print(lumped.to_text(), end="")
            print("coupling constructed: no")
            print(f"detail: {exc}")
        return 1
    verified = is_block_measure(mu, partition, max_closure=args.max_closure)
    law_terms = [
        (MapFunction(perm).to_notation(), mu.law.weight_of(perm))
        for perm in mu.law.iter_support()
    ]
    if args.format == "json":
        payload = {
            "lumpable": True,
            "lumped": [[str(v) for v in r] for r in lumped.entries],
            "law": [[p, str(w)] for p, w in law_terms],
            "constructed": True,
            "block_measure": verified,
            "coupling": json.loads(serialize_coupling(mu)),
        }
        print(json.dumps(payload, indent=2))
    else:
        print("lumpable: yes")
        print("lumped matrix:")
        print(lumped.to_text(), end="")
        print(
            "block permutation law:",
            ", ".join(f"{p}: {format_rational(w)}" for p, w in law_terms),
        )
        print("coupling constructed: yes")
        print(f"verified block measure: {'yes' if verified else 'no'}")
        print("coupling:")
        print(serialize_coupling(mu))
    return 0 if verified else 1


def _cmd_birkhoff(args, run: _Run) -> int:
    _require_format(args, "text", "json")
    P = _load_matrix(run, args.matrix)
    decomp = birkhoff_decomposition(P)
    bound = (P.n - 1) ** 2 + 1
    if args.format == "json":
        print(
            json.dumps(
                {
                    "terms": [[f.to_notation(), str(w)] for f, w in decomp.terms],
                    "term_count": len(decomp.terms),
                    "bound": bound,
                },
                indent=2,
            )
        )
        return 0
    print(f"terms: {len(decomp.terms)} (bound {bound})")
    for f, w in decomp.terms:
        print(f"  {f.to_notation()}: {format_rational(w)}")
    return 0


def _cmd_kset(args, run: _Run) -> int:
    _require_format(args, "text", "json")
    P = _load_matrix(run, args.matrix)
    report = k_set_report(P, cap=args.exact_cap, max_closure=args.max_closure)
    if args.format == "json":
        print(json.dumps(_kset_payload(report, include_couplings=True), indent=2))
        return 0
    for line in _kset_lines(report):
        print(line)
    return 0


def _cmd_sample(args, run: _Run) -> int:
    _require_format(args, "text", "json", "tsv")
    P = _load_matrix(run, args.matrix)
    if args.coupling is not None:
        mu = _load_coupling(run, args.coupling)
        if mu.n != P.n:
            raise ValueError(f"coupling is on {mu.n} states, matrix on {P.n}")
        if induced_matrix(mu).entries != P.entries:
            raise ValueError("the coupling does not resum to the matrix")
    else:
        mu = doeblin_coupling(P, lazy=True)
    t_max = args.t_max if args.t_max is not None else DEFAULT_T_MAX
    stream = RngStream(run.seed)
    counts, failures = sample_counts(mu, stream, args.n_samples, t_max=t_max)
    pi = invariant_distribution(P)
    tv = total_variation(counts, pi) if counts else None
    if args.format == "json":
        print(
            json.dumps(
                {
                    "seed": run.seed,
                    "samples": args.n_samples,
                    "failures": failures,
                    "counts": {str(s + 1): c for s, c in sorted(counts.items())},
                    "tv_to_invariant": None if tv is None else str(tv),
                },
                indent=2,
            )
        )
    elif args.format == "tsv":
        print("state\tcount")
        for s, c in sorted(counts.items()):
            print(f"{s + 1}\t{c}")
        print(f"# failures: {failures}")
        if tv is not None:
            print(f"# tv_to_invariant: {_float6(tv)}")
    else:
        total = sum(counts.values())
        print(f"samples: {total} (failures: {failures}, seed: {run.seed})")
        for s, c in sorted(counts.items()):
            share = Fraction(c, total)
            print(f"  state {s + 1}: {c} ({_float6(share)})")
        if tv is not None:
            print(f"total variation to invariant law: {_float6(tv)} ({tv})")
    return 1 if failures else 0


def _cmd_verify_equidist(args, run: _Run) -> int:
    _require_format(args, "text", "json")
    mu = _load_coupling(run, args.coupling)
    t_max = args.t_max if args.t_max is not None else DEFAULT_T_MAX
    report = equidistribution_report(mu, RngStream(run.seed), args.runs, t_max=t_max)
    ok = (
        report.passed(args.tolerance)
        and report.backward_failures == 0
        and report.forward_failures == 0
    )
    if args.format == "json":
        print(
            json.dumps(
                {
                    "seed": run.seed,
                    "runs": report.runs,
                    "backward_failures": report.backward_failures,
                    "forward_failures": report.forward_failures,
                    "max_cdf_gap": str(report.max_cdf_gap),
                    "tolerance": args.tolerance,
                    "passed": ok,
                },
                indent=2,
            )
        )
    else:
        print(f"runs: {report.runs} backward + {report.runs} forward (seed: {run.seed})")
        print(f"backward failures: {report.backward_failures}")
        print(f"forward failures: {report.forward_failures}")
        print(f"max CDF gap: {_float6(report.max_cdf_gap)} ({report.max_cdf_gap})")
        print(f"tolerance: {_float6(args.tolerance)}")
        print(f"verdict: {'pass' if ok else 'fail'}")
    return 0 if ok else 1


def _cmd_examples(args, run: _Run) -> int:
    _require_format(args, "text", "json", "tsv")
    overrides = {}
    for item in args.override or []:
        example_id, sep, path = item.partition("=")
        if not sep or not path:
            raise ValueError(f"--override wants id=path, got {item!r}")
        overrides[example_id] = _load_matrix(run, path)
    only = None
    if args.only:
        only = [x for item in args.only for x in item.split(",") if x]
    ids = only if only is not None else list(REGISTRY)
    rows = []
    for example_id in ids:
        rows.extend(run_example(example_id, overrides.get(example_id)))
    for example_id in overrides:
        if example_id not in ids:
            raise ValueError(f"--override for {example_id!r} which did not run")
    failed = [r for r in rows if not r.passed]
    if args.format == "json":
        print(
            json.dumps(
                {
                    "rows": [
                        {
                            "example": r.example,
                            "check": r.check,
                            "expected": r.expected,
                            "computed": r.computed,
                            "passed": r.passed,
                        }
                        for r in rows
                    ],
                    "failed": len(failed),
                },
                indent=2,
            )
        )
    elif args.format == "tsv":
        print("example\tcheck\texpected\tcomputed\tpassed")
        for r in rows:
            expected = r.expected.replace("\t", " ").replace("\n", "\\n")
            computed = r.computed.replace("\t", " ").replace("\n", "\\n")
            print(f"{r.example}\t{r.check}\t{expected}\t{computed}\t{r.passed}")
    else:
        for r in rows:
            mark = "ok " if r.passed else "FAIL"
            line = f"[{mark}] {r.example}: {r.check}"
            if not r.passed:
                line += f" (expected {r.expected!r}, computed {r.computed!r})"
            print(line)
        print(f"{len(rows) - len(failed)}/{len(rows)} checks passed")
    return 1 if failed else 0


def _cmd_diagram(args, run: _Run) -> int:
    _require_format(args, "text", "dot")
    mu = _load_coupling(run, args.coupling)
    t_max = args.t_max if args.t_max is not None else DEFAULT_DIAGRAM_STEPS
    print(emit_trajectory_diagram(mu, RngStream(run.seed), t_max, fmt=args.format), end="")
    return 0


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: fresh random, recorded in the manifest)")
    common.add_argument("--exact-cap", type=int, default=DEFAULT_SUBSET_BUDGET, help="max support subsets to enumerate before falling back to certificates")
    common.add_argument("--max-closure", type=int, default=DEFAULT_CLOSURE_CAP, help="max semigroup closure size")
    common.add_argument("--t-max", type=int, default=None, help="time horizon for sampling runs")
    common.add_argument("--format", choices=("text", "json", "tsv", "dot"), default="text", help="output format")

    parser = argparse.ArgumentParser(
        prog="coalesce",
        description="Exact analysis of grand couplings of finite Markov chains.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("analyze", parents=[common], help="full report for a matrix file")
    p.add_argument("matrix")
    p.set_defaults(handler=_cmd_analyze)

    p = sub.add_parser("coupling-check", parents=[common], help="does a coupling resum to a matrix")
    p.add_argument("coupling")
    p.add_argument("matrix")
    p.set_defaults(handler=_cmd_coupling_check)

    p = sub.add_parser("k-number", parents=[common], help="coalescence number of a coupling file")
    p.add_argument("coupling")
    p.set_defaults(handler=_cmd_k_number)

    p = sub.add_parser("feasible", parents=[common], help="exact-support feasibility for a matrix")
    p.add_argument("matrix")
    p.add_argument("--support", required=True, help="file of function notations, or inline whitespace-separated notations")
    p.set_defaults(handler=_cmd_feasible)

    p = sub.add_parser("blocks", parents=[common], help="lumpability and block-structured coupling over a partition")
    p.add_argument("matrix")
    p.add_argument("--partition", required=True, help='one-based blocks, e.g. "1,2|3,4"')
    p.set_defaults(handler=_cmd_blocks)

    p = sub.add_parser("birkhoff", parents=[common], help="permutation mixture of a doubly stochastic matrix")
    p.add_argument("matrix")
    p.set_defaults(handler=_cmd_birkhoff)

    p = sub.add_parser("kset", parents=[common], help="achievable coalescence numbers of a matrix")
    p.add_argument("matrix")
    p.set_defaults(handler=_cmd_kset)

    p = sub.add_parser("sample", parents=[common], help="exact invariant-law samples via coupling from the past")
    p.add_argument("matrix")
    p.add_argument("--coupling", default=None, help="coupling file (default: the independent product coupling)")
    p.add_argument("--n-samples", type=int, required=True)
    p.set_defaults(handler=_cmd_sample)

    p = sub.add_parser("verify-equidist", parents=[common], help="compare backward and forward coalescence-time laws")
    p.add_argument("coupling")
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--tolerance", type=float, default=0.05, help="max allowed CDF gap")
    p.set_defaults(handler=_cmd_verify_equidist)

    p = sub.add_parser(
        "examples",
        parents=[common],
        aliases=["paper-examples"],
        help="re-run the bundled worked examples against their pinned results",
    )
    p.add_argument("--only", action="append", help="example id(s), comma-separated or repeated")
    p.add_argument("--override", action="append", help="id=path: replace a bundled matrix (a negative control)")
    p.set_defaults(handler=_cmd_examples)

    p = sub.add_parser("diagram", parents=[common], help="trajectory merge diagram for a coupling file")
    p.add_argument("coupling")
    p.set_defaults(handler=_cmd_diagram)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    args = build_parser().parse_args(argv)

    threads = 1
    raw_threads = os.environ.get("COALESCE_THREADS")
    if raw_threads is not None:
        try:
            threads = int(raw_threads)
        except ValueError:
            threads = -1
        if threads < 1:
            print(f"error: COALESCE_THREADS={raw_threads!r} is not a positive integer", file=sys.stderr)
            return 2

    seed = args.seed if args.seed is not None else secrets.randbits(32)
    run = _Run(seed=seed, threads=threads)
    started = time.perf_counter()
    try:
        code = args.handler(args, run)
    except (BudgetExceeded, SupportTooLarge, ClosureTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 3
    except (CoalesceError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 2
    manifest = {
        "command": ["coalesce"] + argv,
        "inputs": run.inputs,
        "seed": run.seed,
        "caps": {
            "exact_cap": args.exact_cap,
            "max_closure": args.max_closure,
            "t_max": args.t_max,
            "support_cap": DEFAULT_SUPPORT_CAP,
        },
        "threads": threads,
        "version": __version__,
        "wall_clock_seconds": round(time.perf_counter() - started, 6),
        "exit_code": code,
    }
    print(json.dumps(manifest, separators=(",", ":")), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
