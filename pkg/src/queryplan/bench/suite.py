"""Suite configuration and execution.

A suite is the cross product of problems, planners and seeds. Every run
gets a fresh world model, ledger, policy and history; records are written
in job order so outputs are byte-stable regardless of parallelism.

Config file (TOML)::

    [suite]
    problems = ["builtin:blocksworld-3", "probs/*.pddl"]  # globs need `domain`
    domain = "probs/domain.pddl"
    generate = {n_blocks = [3, 4], count = 5, seed = 0}    # optional
    budget = 20          # 0 = unlimited
    uncapped = false     # run without a ledger cap, judge success against budget
    seeds = [0]
    out_dir = "results"
    parallelism = 1
    optimality = true    # compute optimal lengths with the BFS oracle

    [llm]
    mode = "replay"      # live | record | replay
    backend = "http"     # http | mock
    transcript = "results/transcript.jsonl"
    model = "gpt-4-turbo"
    base_url = "https://api.openai.com/v1"
    temperature = 0.7
    translate = true
    mock_error_rate = 0.2

    [planners.boomerang_llm]
    algorithm = "boomerang"   # see ALGORITHMS
    policy = "llm"            # llm | oracle | random | scripted-free classical ("none")
    T = 20
"""

from __future__ import annotations

import glob
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from ..classical.heuristics import HeuristicKind
from ..classical.search import GREEDY, run_best_first
from ..data import builtin_problem, domain_text
from ..llm.client import ChatClient, LlmConfig, Transcript
from ..llm.mock import MockChatModel
from ..llm.policy import LLMPolicy
from ..pddl import ProblemInstance, load_problem
from ..planners import PLANNERS, PlannerOutcome, verify_outcome
from ..policy import OraclePolicy, Policy, RandomPolicy, Rating, WorldContext
from ..world import DEFAULT_BUDGET, WorldModel
from .generator import gen_blocksworld, optimal_length_oracle
from .records import RunRecord, histogram_csv, records_csv, summary_csv

CLASSICAL = {"astar": 1.0, "wastar": 3.0, "gbfs": GREEDY}
ALGORITHMS = tuple(PLANNERS) + tuple(CLASSICAL)
POLICIES = ("llm", "oracle", "random", "none")


class ConfigError(ValueError):
    pass


@dataclass
class PlannerSpec:
    planner_id: str
    algorithm: str
    policy: str = "oracle"
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"planner {self.planner_id!r}: unknown algorithm {self.algorithm!r}")
        if self.algorithm in CLASSICAL:
            self.policy = "none"
        elif self.policy not in POLICIES[:-1]:
            raise ConfigError(f"planner {self.planner_id!r}: unknown policy {self.policy!r}")

    @property
    def uses_llm(self) -> bool:
        return self.policy == "llm"


@dataclass
class LlmSettings:
    mode: str = "replay"
    backend: str = "http"
    transcript: str | None = None
    config: LlmConfig = field(default_factory=LlmConfig)
    translate: bool = True
    mock_error_rate: float = 0.0
    mock_seed: int = 0


@dataclass
class SuiteConfig:
    problems: list[ProblemInstance]
    planners: list[PlannerSpec]
    budget: int | None = DEFAULT_BUDGET
    uncapped: bool = False
    seeds: list[int] = field(default_factory=lambda: [0])
    out_dir: Path | None = None
    parallelism: int = 1
    optimality: bool = True
    llm: LlmSettings = field(default_factory=LlmSettings)

    def __post_init__(self):
        if not self.planners:
            raise ConfigError("the planner list is empty")
        if not self.problems:
            raise ConfigError("no problems selected")
        if self.budget is not None and self.budget < 1:
            raise ConfigError("budget must be at least 1 (use 0 in files for unlimited)")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be at least 1")
        if any(p.uses_llm for p in self.planners):
            if self.llm.mode not in ChatClient.MODES:
                raise ConfigError(f"llm mode must be one of {ChatClient.MODES}")
            if self.llm.mode in ("record", "replay") and not self.llm.transcript:
                raise ConfigError(f"llm mode {self.llm.mode!r} needs a transcript path")
            if self.llm.mode == "replay" and not Path(self.llm.transcript).exists():
                raise ConfigError(f"transcript {self.llm.transcript} does not exist")
            if self.llm.backend not in ("http", "mock"):
                raise ConfigError("llm backend must be 'http' or 'mock'")

    # -- loading ---------------------------------------------------------------

    @classmethod
    def from_toml(cls, path: str | Path) -> "SuiteConfig":
        path = Path(path)
        try:
            data = tomllib.loads(path.read_text())
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data, base=path.parent)

    @classmethod
    def from_dict(cls, data: dict, base: Path = Path(".")) -> "SuiteConfig":
        suite = dict(data.get("suite", {}))
        problems = _select_problems(suite, base)
        planners = [PlannerSpec(pid, str(p.get("algorithm", pid)), str(p.get("policy", "oracle")),
                                {k: v for k, v in p.items() if k not in ("algorithm", "policy")})
                    for pid, p in data.get("planners", {}).items()]
        budget = int(suite.get("budget", DEFAULT_BUDGET))
        llm = dict(data.get("llm", {}))
        cfg_keys = ("model", "base_url", "temperature", "max_retries", "timeout", "api_key_env", "examples")
        try:
            llm_cfg = LlmConfig(**{k: llm[k] for k in cfg_keys if k in llm})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[llm]: {exc}") from exc
        transcript = llm.get("transcript")
        settings = LlmSettings(
            mode=str(llm.get("mode", "replay")),
            backend=str(llm.get("backend", "http")),
            transcript=str(base / transcript) if transcript else None,
            config=llm_cfg,
            translate=bool(llm.get("translate", True)),
            mock_error_rate=float(llm.get("mock_error_rate", 0.0)),
            mock_seed=int(llm.get("mock_seed", 0)),
        )
        out_dir = suite.get("out_dir")
        return cls(
            problems=problems,
            planners=planners,
            budget=None if budget == 0 else budget,
            uncapped=bool(suite.get("uncapped", False)),
            seeds=[int(s) for s in suite.get("seeds", [0])],
            out_dir=base / out_dir if out_dir else None,
            parallelism=int(suite.get("parallelism", 1)),
            optimality=bool(suite.get("optimality", True)),
            llm=settings,
        )


def _select_problems(suite: dict, base: Path) -> list[ProblemInstance]:
    problems: list[ProblemInstance] = []
    domain = suite.get("domain")
    for pattern in suite.get("problems", []):
        if pattern.startswith("builtin:"):
            try:
                problems.append(builtin_problem(pattern[len("builtin:"):]))
            except FileNotFoundError as exc:
                raise ConfigError(f"no bundled problem {pattern!r}") from exc
            continue
        if domain is None:
            raise ConfigError("problem globs need [suite].domain")
        matches = sorted(glob.glob(str(base / pattern)))
        if not matches:
            raise ConfigError(f"pattern {pattern!r} matched no files")
        for m in matches:
            if Path(m).resolve() != (base / domain).resolve():
                problems.append(load_problem(base / domain, m))
    gen = suite.get("generate")
    if gen:
        sizes = gen.get("n_blocks", [3])
        sizes = [sizes] if isinstance(sizes, int) else list(sizes)
        for n in sizes:
            for i in range(int(gen.get("count", 1))):
                problems.append(gen_blocksworld(int(n), int(gen.get("seed", 0)) + i))
    return problems


# --------------------------------------------------------------------------
# Running
# --------------------------------------------------------------------------


def run_id_for(problem: ProblemInstance, spec: PlannerSpec, seed: int) -> str:
    return f"{problem.name}/{spec.planner_id}/{seed}"


def make_policy(spec: PlannerSpec, problem: ProblemInstance, seed: int, client: ChatClient | None,
                translate: bool = True, run_id: str = "") -> Policy | None:
    if spec.policy == "none":
        return None
    if spec.policy == "oracle":
        return OraclePolicy(problem, d_sure=int(spec.params.get("d_sure", 2)))
    if spec.policy == "random":
        return RandomPolicy(problem, seed=seed)
    if client is None:
        raise ConfigError(f"planner {spec.planner_id!r} needs an LLM client")
    return LLMPolicy(problem, client, translate=bool(spec.params.get("translate", translate)),
                     history_char_cap=spec.params.get("history_char_cap"), run_id=run_id)


def execute(spec: PlannerSpec, problem: ProblemInstance, world: WorldModel, policy: Policy | None) -> PlannerOutcome:
    params = dict(spec.params)
    params.pop("translate", None)
    params.pop("d_sure", None)
    params.pop("history_char_cap", None)
    if spec.algorithm in CLASSICAL:
        kind = HeuristicKind(params.pop("heuristic", "goal_count"))
        w = float(params.pop("w", CLASSICAL[spec.algorithm]))
        return run_best_first(problem, world, kind, GREEDY if math.isinf(w) else w)
    if "v_min" in params:
        params["v_min"] = Rating.from_label(str(params["v_min"]))
    ctx = WorldContext.for_problem(problem)
    return PLANNERS[spec.algorithm](problem, policy, world, ctx=ctx, **params)


def run_one(spec: PlannerSpec, problem: ProblemInstance, seed: int, budget: int | None,
            client: ChatClient | None = None, translate: bool = True, optimal_length: int | None = None,
            uncapped: bool = False) -> RunRecord:
    """One planner on one problem with a fresh world model."""
    rid = run_id_for(problem, spec, seed)
    world = WorldModel.with_budget(problem, None if uncapped else budget)
    start = time.perf_counter()
    policy = make_policy(spec, problem, seed, client, translate, rid)
    try:
        outcome = execute(spec, problem, world, policy)
    except Exception as exc:  # a broken run is a recorded failure, never a suite abort
        stats = policy.stats if policy is not None else None
        outcome = PlannerOutcome(False, None, world.ledger.used,
                                 llm_calls=stats.llm_calls if stats else 0,
                                 prompt_tokens=stats.prompt_tokens if stats else 0,
                                 completion_tokens=stats.completion_tokens if stats else 0,
                                 malformed_actions=stats.malformed_actions if stats else 0,
                                 info={"error": f"{type(exc).__name__}: {exc}"})
        outcome.failure_mode = type(exc).__name__
    elapsed = time.perf_counter() - start
    success = outcome.success and verify_outcome(problem, outcome)
    if success:
        reason = None
    elif outcome.failure_reason is not None:
        reason = outcome.failure_reason.value
    else:
        reason = outcome.failure_mode or "InvalidPlan"
    if success and uncapped and budget is not None and outcome.wmq_used > budget:
        success, reason = False, "BudgetExhausted"
    plan_length = outcome.plan_length if success else None
    optimal = None
    if optimal_length is not None:
        optimal = bool(success and plan_length == optimal_length)
    return RunRecord(
        problem_id=problem.name, planner_id=spec.planner_id, success=success, wmq_used=outcome.wmq_used,
        budget=budget, seed=seed, optimal=optimal, plan_length=plan_length, optimal_length=optimal_length,
        llm_calls=outcome.llm_calls, prompt_tokens=outcome.prompt_tokens, completion_tokens=outcome.completion_tokens,
        malformed_actions=outcome.malformed_actions, wall_time=round(elapsed, 6), failure_reason=reason,
        plan=[a.display_name for a in outcome.plan] if success else [],
    )


def _client_factory(cfg: SuiteConfig) -> Callable[[ProblemInstance], ChatClient | None]:
    if not any(p.uses_llm for p in cfg.planners):
        return lambda problem: None
    s = cfg.llm
    transcript = Transcript(s.transcript) if s.mode in ("record", "replay") else None
    if s.mode == "record" and transcript.exchanges:
        raise ConfigError(f"transcript {s.transcript} already has exchanges; record into a fresh file")
    if s.mode == "replay" or s.backend == "http":
        shared = ChatClient(s.config, s.mode, transcript)
        return lambda problem: shared
    mocks: dict[str, ChatClient] = {}

    def for_problem(problem: ProblemInstance) -> ChatClient:
        # the mock needs the problem's domain to reason about states
        key = problem.domain.name
        if key not in mocks:
            model = MockChatModel(problem.domain_text or domain_text("blocksworld"), s.mock_seed, s.mock_error_rate)
            mocks[key] = ChatClient(s.config, s.mode, transcript, transport=model.transport())
        return mocks[key]

    return for_problem


@dataclass
class SuiteResult:
    records: list[RunRecord]
    records_csv: str
    summary_csv: str
    histogram_csv: str


def run_suite(cfg: SuiteConfig, on_record: Callable[[RunRecord], None] | None = None) -> SuiteResult:
    clients = _client_factory(cfg)
    optimal: dict[str, int | None] = {}
    if cfg.optimality:
        for p in cfg.problems:
            optimal[p.name] = optimal_length_oracle(p)
    jobs = [(spec, p, seed) for p in cfg.problems for spec in cfg.planners for seed in cfg.seeds]

    def job(args) -> RunRecord:
        spec, p, seed = args
        return run_one(spec, p, seed, cfg.budget, clients(p) if spec.uses_llm else None, cfg.llm.translate,
                       optimal.get(p.name), cfg.uncapped)

    jsonl = None
    if cfg.out_dir is not None:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        jsonl = (cfg.out_dir / "records.jsonl").open("w", encoding="utf-8")
    records = []
    try:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
            for rec in pool.map(job, jobs):  # yields in job order
                records.append(rec)
                if jsonl is not None:
                    jsonl.write(rec.to_json() + "\n")
                    jsonl.flush()
                if on_record is not None:
                    on_record(rec)
    finally:
        if jsonl is not None:
            jsonl.close()
    result = SuiteResult(records, records_csv(records), summary_csv(records), histogram_csv(records))
    if cfg.out_dir is not None:
        (cfg.out_dir / "records.csv").write_text(result.records_csv)
        (cfg.out_dir / "summary.csv").write_text(result.summary_csv)
        (cfg.out_dir / "histogram.csv").write_text(result.histogram_csv)
    return result
