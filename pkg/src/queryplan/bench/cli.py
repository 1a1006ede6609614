"""Command line entry point: ``queryplan run | gen | solve | summarize``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..data import builtin_problem
from ..llm.client import API_KEY_ENV, ChatClient, LlmConfig, Transcript
from ..pddl import PDDLError, load_problem
from .generator import MAX_BLOCKS, MIN_BLOCKS, optimal_length_oracle, write_blocksworld
from .records import histogram_csv, read_records, summary_csv
from .suite import ALGORITHMS, ConfigError, PlannerSpec, SuiteConfig, run_one, run_suite


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="queryplan", description="Query-budgeted planning benchmark harness.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark suite from a TOML config")
    run.add_argument("--config", required=True, type=Path)

    gen = sub.add_parser("gen", help="generate problem files")
    gen_sub = gen.add_subparsers(dest="domain", required=True)
    bw = gen_sub.add_parser("blocksworld", help="random Blocksworld instances")
    bw.add_argument("--n", type=int, required=True, help=f"blocks per instance ({MIN_BLOCKS}-{MAX_BLOCKS})")
    bw.add_argument("--count", type=int, default=1)
    bw.add_argument("--seed", type=int, default=0)
    bw.add_argument("--out", type=Path, required=True)

    solve = sub.add_parser("solve", help="solve one problem and print its run record as JSON")
    solve.add_argument("--domain", type=Path, help="domain file; not needed for builtin problems")
    solve.add_argument("--problem", required=True, help="problem file or builtin:NAME (e.g. builtin:blocksworld-3)")
    solve.add_argument("--planner", required=True, choices=ALGORITHMS)
    solve.add_argument("--policy", choices=("llm", "oracle", "random"),
                       help="decision policy; defaults to llm with --live/--replay, else oracle")
    solve.add_argument("--budget", type=int, default=20, help="world-model query budget; 0 means unlimited")
    solve.add_argument("--heuristic", default="goal_count", choices=("goal_count", "h_add", "h_ff"))
    solve.add_argument("--seed", type=int, default=0)
    mode = solve.add_mutually_exclusive_group()
    mode.add_argument("--replay", type=Path, metavar="TRANSCRIPT", help="answer LLM calls from a transcript")
    mode.add_argument("--live", action="store_true", help=f"call a live endpoint (key from ${API_KEY_ENV})")
    solve.add_argument("--record", type=Path, metavar="TRANSCRIPT", help="with --live, append exchanges here")
    solve.add_argument("--model", default=LlmConfig.model)
    solve.add_argument("--base-url", default=LlmConfig.base_url)
    solve.add_argument("--temperature", type=float, default=LlmConfig.temperature)
    solve.add_argument("--no-translate", action="store_true", help="show raw predicates instead of summaries")

    summ = sub.add_parser("summarize", help="aggregate a records file")
    summ.add_argument("--records", required=True, type=Path)
    summ.add_argument("--out", required=True, type=Path)
    summ.add_argument("--histogram", type=Path, help="also write the WMQ histogram CSV here")
    return ap


def _cmd_run(args) -> int:
    cfg = SuiteConfig.from_toml(args.config)
    result = run_suite(cfg)
    sys.stdout.write(result.summary_csv)
    return 0


def _cmd_gen(args) -> int:
    if not MIN_BLOCKS <= args.n <= MAX_BLOCKS:
        raise ConfigError(f"--n must lie in [{MIN_BLOCKS}, {MAX_BLOCKS}]")
    for path in write_blocksworld(args.n, args.count, args.seed, args.out):
        print(path)
    return 0


def _load(domain: Path | None, problem: str):
    if problem.startswith("builtin:"):
        try:
            return builtin_problem(problem[len("builtin:"):])
        except FileNotFoundError as exc:
            raise ConfigError(f"no bundled problem {problem!r}") from exc
    if domain is None:
        raise ConfigError("--domain is required for problem files")
    return load_problem(domain, problem)


def _cmd_solve(args) -> int:
    problem = _load(args.domain, args.problem)
    policy = args.policy or ("llm" if (args.live or args.replay) else "oracle")
    client = None
    if policy == "llm":
        cfg = LlmConfig(model=args.model, base_url=args.base_url, temperature=args.temperature)
        if args.replay:
            client = ChatClient(cfg, "replay", Transcript(args.replay))
        elif args.live:
            if not cfg.api_key:
                print(f"warning: ${API_KEY_ENV} is not set; sending no credentials", file=sys.stderr)
            client = ChatClient(cfg, "record" if args.record else "live",
                                Transcript(args.record) if args.record else None)
        else:
            raise ConfigError("the llm policy needs --live or --replay")
    params = {"heuristic": args.heuristic} if args.planner in ("astar", "wastar", "gbfs") else {}
    spec = PlannerSpec(args.planner, args.planner, policy, params)
    budget = None if args.budget == 0 else args.budget
    record = run_one(spec, problem, args.seed, budget, client, translate=not args.no_translate,
                     optimal_length=optimal_length_oracle(problem))
    print(record.to_json())
    return 0 if record.success else 1


def _cmd_summarize(args) -> int:
    records = read_records(args.records)
    if not records:
        raise ConfigError(f"{args.records} holds no records")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(summary_csv(records))
    if args.histogram:
        args.histogram.write_text(histogram_csv(records))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "gen": _cmd_gen, "solve": _cmd_solve, "summarize": _cmd_summarize}[args.command]
    try:
        return handler(args)
    except (ConfigError, PDDLError, OSError, json.JSONDecodeError) as exc:
        print(f"queryplan: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
