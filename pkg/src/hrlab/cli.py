"""``hrlab`` command line.

Exit codes: 0 success, 1 property false or nothing found, 2 bad input,
3 malformed certificate, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from hrlab import __version__
from hrlab.config import Budget, default_budget, default_seed
from hrlab.errors import BudgetExceeded, CertificateFormatError, FormParseError, HypothesisError
from hrlab.forms import check_hypotheses, parse_form, render, subset_sums

EXIT_OK = 0
EXIT_FALSE = 1
EXIT_INPUT = 2
EXIT_FORMAT = 3
EXIT_BUDGET = 4


def _budget(args: argparse.Namespace) -> Budget:
    b = default_budget()
    changes = {}
    if args.max_bits is not None:
        changes["bitset_bits"] = args.max_bits
    if args.max_enumeration is not None:
        changes["max_enumeration"] = args.max_enumeration
    if args.max_sample is not None:
        changes["max_sample"] = args.max_sample
    return b.with_(**changes) if changes else b


def _rational(text: str):
    from hrlab.construction.schedule import parse_rational

    try:
        return parse_rational(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.replace(",", " ").split())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected integers separated by commas: {text!r}") from exc


def _fmt_set(values) -> str:
    return "{" + ", ".join(str(v) for v in sorted(values)) + "}"


# -- commands ------------------------------------------------------------------------


def cmd_analyze(args: argparse.Namespace) -> int:
    form = parse_form(args.form)
    prof = subset_sums(form)
    print(f"form: {render(form)}")
    print(f"arity: {form.arity}")
    print(f"total: {form.total}")
    print(f"S = {_fmt_set(prof.sums)}")
    print(f"contains_zero = {str(prof.contains_zero).lower()}")
    if args.phi:
        hyp = check_hypotheses(form, parse_form(args.phi))
        print(f"zero_in_upsilon = {str(hyp.zero_in_upsilon).lower()}")
        print(f"zero_notin_phi = {str(hyp.zero_notin_phi).lower()}")
        print(f"hypotheses_hold = {str(hyp.holds).lower()}")
    return EXIT_OK


def cmd_construct(args: argparse.Namespace) -> int:
    from hrlab.construction import ConstructionInputs, EpsilonSchedule, dumps, run_construction, seal

    upsilons = tuple(parse_form(u) for u in args.upsilon)
    phis = tuple(parse_form(p) for p in args.phi)
    h = sum(p.arity for p in phis)
    if args.schedule:
        schedule = EpsilonSchedule.from_values(args.eps, args.schedule.split(","))
    else:
        schedule = EpsilonSchedule.uniform(args.eps, h)
    inputs = ConstructionInputs(
        upsilons=upsilons,
        phis=phis,
        schedule=schedule,
        c=args.c,
        mode=args.mode,
        seed=args.seed if args.seed is not None else default_seed(),
        sample_size=args.sample_size,
        square_samples=args.square_samples,
        toy_factors=args.toy_factors,
        budget=_budget(args),
    )
    doc = seal(run_construction(inputs))
    text = dumps(doc)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    final = doc["final"]
    if args.out:
        print(f"wrote {args.out} ({doc['mode']} mode, {len(doc['levels'])} levels, seed {inputs.seed})")
    claimed = final.get("bound_holds", final.get("bound_follows"))
    if args.mode != "toy" and not claimed:
        print("the final bound does not hold", file=sys.stderr)
        return EXIT_FALSE
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    from hrlab.construction import load_certificate, verify_certificate

    doc = load_certificate(args.cert)
    report = verify_certificate(doc, _budget(args), rederive=not args.claims_only)
    for prop, msg in report.failures:
        print(f"FAIL {prop}: {msg}")
    if report.ok:
        print(f"OK ({', '.join(report.stages)})")
        return EXIT_OK
    return EXIT_FALSE


def cmd_search(args: argparse.Namespace) -> int:
    from hrlab.search import PropertyQuery, min_m

    query = PropertyQuery(parse_form(args.upsilon), parse_form(args.phi), args.eps, args.include_zero)
    budget = _budget(args)
    report = min_m(query, args.max_m, exhaustive=args.exhaustive, workers=args.threads,
                   budget=budget, seed=args.seed if args.seed is not None else default_seed())
    csv_text = report.to_csv()
    if args.out:
        out = Path(args.out)
        out.write_text(csv_text, encoding="utf-8")
        out.with_suffix(".json").write_text(report.dumps_json(), encoding="utf-8")
    else:
        sys.stdout.write(csv_text)
    if report.min_m is None:
        print(f"none <= {args.max_m}", file=sys.stderr)
        return EXIT_FALSE
    print(f"min_m = {report.min_m}", file=sys.stderr)
    return EXIT_OK


def cmd_ratio(args: argparse.Namespace) -> int:
    from hrlab.search import random_instances, ratio_csv, ratio_json, ratio_report

    upsilon, phi = parse_form(args.upsilon), parse_form(args.phi)
    seed = args.seed if args.seed is not None else default_seed()
    if args.set:
        instances = [(args.m, list(s)) for s in args.set]
    else:
        instances = random_instances(args.m, args.trials, seed)
    rows = ratio_report(upsilon, phi, instances)
    text = ratio_csv(rows)
    if args.out:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        out.with_suffix(".json").write_text(ratio_json(rows, upsilon, phi, None if args.set else seed),
                                            encoding="utf-8")
    else:
        sys.stdout.write(text)
    band_pair = render(upsilon) == "t1 - t2" and render(phi) == "t1 + t2"
    violations = sum(1 for r in rows if r.in_band is False)
    undefined = sum(1 for r in rows if r.undefined)
    print(f"rows: {len(rows)}, undefined: {undefined}, band violations: {violations}", file=sys.stderr)
    return EXIT_FALSE if band_pair and violations else EXIT_OK


# -- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--threads", type=int, default=1, help="worker processes for the subset search")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: HRLAB_SEED or 12345)")
    common.add_argument("--max-bits", type=int, default=None, help="largest bit-vector set, as a power of two")
    common.add_argument("--max-enumeration", type=int, default=None)
    common.add_argument("--max-sample", type=int, default=None)
    p = argparse.ArgumentParser(prog="hrlab", allow_abbrev=False,
                                description="Linear-form image constructions and searches.")
    p.add_argument("--version", action="version", version=f"hrlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], allow_abbrev=False, help="subset sums of a form")
    a.add_argument("--form", required=True)
    a.add_argument("--phi", help="also check the hypotheses with --form as upsilon")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("construct", parents=[common], allow_abbrev=False, help="build M and f and write a certificate")
    c.add_argument("--upsilon", nargs="+", action="extend", required=True)
    c.add_argument("--phi", nargs="+", action="extend", required=True)
    c.add_argument("--eps", type=_rational, required=True)
    c.add_argument("--c", type=int, default=1)
    c.add_argument("--mode", choices=("exhaustive", "sampled", "toy"), default="sampled")
    c.add_argument("--schedule", help="comma-separated eps_1,...,eps_h (default: eps*l/(h+1))")
    c.add_argument("--sample-size", type=int, default=200)
    c.add_argument("--square-samples", type=int, default=1000)
    c.add_argument("--toy-factors", type=_ints, default=None, help="level-1 factors for toy mode, e.g. 5,7")
    c.add_argument("--out")
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify", parents=[common], allow_abbrev=False, help="re-check a certificate")
    v.add_argument("--cert", required=True)
    v.add_argument("--claims-only", action="store_true", help="skip the full re-run")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("search", parents=[common], allow_abbrev=False, help="smallest m with the property")
    s.add_argument("--upsilon", required=True)
    s.add_argument("--phi", required=True)
    s.add_argument("--eps", type=_rational, required=True)
    s.add_argument("--max-m", type=int, required=True)
    s.add_argument("--exhaustive", action="store_true", help="refuse heuristic rows above the scan limit")
    s.add_argument("--include-zero", action="store_true", help="test upsilon on A ∪ {0}")
    s.add_argument("--out", help="CSV path; a JSON mirror is written next to it")
    s.set_defaults(func=cmd_search)

    r = sub.add_parser("ratio", parents=[common], allow_abbrev=False, help="log|upsilon(A)| / log|phi(A)| table")
    r.add_argument("--upsilon", default="t1-t2")
    r.add_argument("--phi", default="t1+t2")
    r.add_argument("--m", type=int, default=101)
    r.add_argument("--trials", type=int, default=200)
    r.add_argument("--set", type=_ints, action="append", help="explicit A, e.g. 0,1,2 (repeatable)")
    r.add_argument("--out", help="CSV path; a JSON mirror with the seed is written next to it")
    r.set_defaults(func=cmd_ratio)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CertificateFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (FormParseError, HypothesisError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
