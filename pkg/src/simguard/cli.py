"""Command-line entry point: ``simguard validate|infer|suggest|bench``.

Exit codes: 0 clean, 1 violations (error severity), 2 run-configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import SimguardError
from .reporting import render

EXIT_CLEAN = 0
EXIT_VIOLATIONS = 1
EXIT_RUN_ERROR = 2

log = logging.getLogger("simguard")


class UsageError(Exception):
    """Bad flags or flag values; reported with exit code 2."""


def _write(data: bytes | str, out: str | None) -> None:
    if isinstance(data, str):
        data = data.encode("utf-8")
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _inputs(path: str):
    from .runner import DirectoryInputs

    return DirectoryInputs(path)


def cmd_validate(args) -> int:
    from .runner import exit_code, run_validation
    from .specfile import load_guard_spec

    spec = load_guard_spec(args.spec)
    report = run_validation(spec, _inputs(args.inputs), jobs=args.jobs, fail_fast=args.fail_fast)
    _write(render(report, args.format), args.out)
    return exit_code(report)


def _inference_options(args):
    from .inference import InferenceOptions

    try:
        return InferenceOptions(
            enum_max_cardinality=args.enum_max,
            enum_min_rows=args.enum_min_rows,
            range_padding=args.padding,
            infer_uniqueness=not args.no_unique,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_infer(args) -> int:
    from .errors import DocumentSyntaxError, DuplicateKey, ParseError, SpecError
    from .inference import infer_inputs, round_trip_check
    from .specfile import parse_guard_spec

    inputs = _inputs(args.inputs)
    if not inputs.paths():
        raise SpecError(f"no inputs in {args.inputs}")
    try:
        _, text = infer_inputs(inputs, _inference_options(args), name=args.name)
    except (ParseError, DocumentSyntaxError, DuplicateKey) as exc:
        raise SpecError(f"unreadable input: {exc}") from None
    _write(text, args.out)
    if not args.check:
        return EXIT_CLEAN
    spec = parse_guard_spec(text, base_dir=str(Path(args.out).parent) if args.out else ".")
    report = round_trip_check(inputs, spec)
    if report.totals.failed:
        sys.stderr.write(render(report, "text").decode("utf-8"))
        return EXIT_VIOLATIONS
    sys.stderr.write(f"round trip clean: {report.totals.evaluated} constraints evaluated\n")
    return EXIT_CLEAN


def cmd_suggest(args) -> int:
    from .specfile import load_guard_spec
    from .suggest import SuggestionRequest, make_provider, render_outcome, run_suggestion, samples_from_inputs

    samples = ()
    if args.inputs:
        inputs = _inputs(args.inputs)
        samples = samples_from_inputs(inputs, args.file or None)
    existing = load_guard_spec(args.spec) if args.spec else None
    context = Path(args.context).read_text(encoding="utf-8") if args.context else ""
    try:
        req = SuggestionRequest(
            file_samples=samples,
            context_docs=context,
            existing_spec=existing,
            task="generate" if args.describe else "infer",
            description=args.describe,
            sample_rows=args.sample_rows,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    provider = make_provider(args.provider)
    if args.show_prompt:
        from .suggest import build_prompt

        sys.stderr.write(build_prompt(req, args.prompt_limit))
    outcome = run_suggestion(req, provider, timeout=args.timeout, limit=args.prompt_limit)
    _write(render_outcome(outcome, with_labels=existing is not None), args.out)
    return EXIT_CLEAN


def cmd_bench(args) -> int:
    from . import bench

    try:
        base = bench.CorpusParams(
            complexity=args.complexity, columns=args.cols, rows=args.rows, files=args.files, seed=args.seed
        )
        sweep = bench.parse_sweep(args.sweep) if args.sweep else None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.reps < 1 or args.warmup < 0 or args.inject < 0:
        raise UsageError("--reps must be >= 1, --warmup and --inject >= 0")
    doc: dict = {"params": base.__dict__, "jobs": args.jobs}
    lines: list[str] = []
    if args.jobs != 1:
        lines.append(f"note: timings taken with --jobs {args.jobs}")
    if sweep:
        dim, values = sweep
        res = bench.run_scaling(values, dim, base, args.warmup, args.reps, args.jobs)
        doc["results"] = res.to_rows()
        doc["throughput_rows_per_s"] = round(res.throughput_rows_per_s, 3)
        lines.append(bench.render_scaling_text(res).rstrip("\n"))
    elif args.inject:
        corpus = bench.generate_corpus(base)
        try:
            plan = bench.plan_injections(corpus, args.inject, seed=args.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        mutated, truth = bench.inject_violations(corpus, plan)
        from .runner import run_validation

        report = run_validation(mutated.spec(), mutated.inputs(), jobs=args.jobs, timestamp="")
        sc = bench.score(truth, report)
        doc["injection"] = {
            "injected": sc.expected, "reported": sc.reported, "matched": sc.matched,
            "precision": sc.precision, "recall": sc.recall,
            "ground_truth": [e.__dict__ for e in truth],
        }
        lines.append(f"injected {sc.expected}, reported {sc.reported}, matched {sc.matched}")
        lines.append(f"precision {sc.precision:.3f}  recall {sc.recall:.3f}")
    else:
        from .runner import run_validation

        corpus = bench.generate_corpus(base)
        spec, inputs = corpus.spec(), corpus.inputs()
        for _ in range(args.warmup):
            run_validation(spec, inputs, jobs=args.jobs, timestamp="")
        report = run_validation(spec, inputs, jobs=args.jobs, timestamp="")
        rows = [{"dim": "file", "value": f.file, "median_ms": round(f.elapsed * 1000, 3)}
                for f in report.files if f.file in corpus.data_files]
        doc["results"] = rows
        lines.append(f"{'file':>14}  {'ms':>10}")
        lines.extend(f"{r['value']:>14}  {r['median_ms']:>10.3f}" for r in rows)
        lines.append(f"{len(rows)} timing samples, {corpus.total_rows()} rows")
    if args.format == "structured":
        _write(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        _write("\n".join(lines) + "\n", args.out)
    return EXIT_CLEAN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simguard", description="Verify simulation input files against guard specs.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check inputs against a guard spec")
    v.add_argument("--spec", required=True)
    v.add_argument("--inputs", required=True, help="directory holding the input files")
    v.add_argument("--format", choices=("text", "structured"), default="text")
    v.add_argument("--out", help="write the report here instead of stdout")
    v.add_argument("--jobs", type=int, default=None, help="files validated concurrently (default: CPU count)")
    v.add_argument("--fail-fast", action="store_true", help="stop after the first failing file")
    v.set_defaults(func=cmd_validate)

    i = sub.add_parser("infer", help="bootstrap a guard spec from sample inputs")
    i.add_argument("--inputs", required=True)
    i.add_argument("--out", help="spec path (default: stdout)")
    i.add_argument("--name", default="inferred")
    i.add_argument("--check", action="store_true", help="validate the inputs against the inferred spec")
    i.add_argument("--enum-max", type=int, default=10, help="largest distinct count inferred as an enum")
    i.add_argument("--enum-min-rows", type=int, default=20, help="rows needed before inferring enums")
    i.add_argument("--padding", type=float, default=0.0, help="widen inferred numeric ranges by this much")
    i.add_argument("--no-unique", action="store_true", help="do not infer uniqueness")
    i.set_defaults(func=cmd_infer)

    s = sub.add_parser("suggest", help="ask a provider for constraint suggestions")
    s.add_argument("--provider", choices=("mock", "http"), default="mock")
    s.add_argument("--inputs", help="directory whose files are sampled into the prompt")
    s.add_argument("--file", action="append", help="sample only this relative path (repeatable)")
    s.add_argument("--describe", help="requirement text to turn into constraints")
    s.add_argument("--spec", help="existing spec to compare suggestions against")
    s.add_argument("--context", help="text file describing the simulation")
    s.add_argument("--sample-rows", type=int, default=50)
    s.add_argument("--prompt-limit", type=int, default=200_000, help="maximum prompt size in characters")
    s.add_argument("--timeout", type=float, default=60.0)
    s.add_argument("--show-prompt", action="store_true", help="echo the prompt to stderr")
    s.add_argument("--out")
    s.set_defaults(func=cmd_suggest)

    b = sub.add_parser("bench", help="synthetic corpus timing and injection runs")
    b.add_argument("--complexity", type=int, default=5)
    b.add_argument("--cols", type=int, default=10)
    b.add_argument("--rows", type=int, default=100)
    b.add_argument("--files", type=int, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--sweep", help="e.g. files=1:100, rows=100,500,1000")
    b.add_argument("--inject", type=int, default=0, help="inject this many violations and score detection")
    b.add_argument("--warmup", type=int, default=5)
    b.add_argument("--reps", type=int, default=10)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--format", choices=("text", "structured"), default="text")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_RUN_ERROR if exc.code not in (0, None) else EXIT_CLEAN
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        sys.stderr.write("simguard: error: --jobs must be >= 1\n")
        return EXIT_RUN_ERROR
    try:
        return args.func(args)
    except (SimguardError, UsageError, OSError) as exc:
        sys.stderr.write(f"simguard: error: {exc}\n")
        return EXIT_RUN_ERROR

if __name__ == "__main__":
    sys.exit(main())
