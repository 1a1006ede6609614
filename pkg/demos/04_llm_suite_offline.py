"""A full LLM-backed suite, recorded and replayed without a network.

The mock endpoint speaks the chat-completions protocol and answers from a
BFS solver, corrupting a fraction of its answers. Recording writes every
exchange to a transcript; replaying serves them back and must reproduce
the records byte for byte. Point ``[llm]`` at a real endpoint (mode "record",
backend "http", key in QUERYPLAN_API_KEY) to collect a live transcript.
"""

import tempfile
from pathlib import Path

from queryplan.bench import SuiteConfig, run_suite


def config(base: Path, mode: str) -> SuiteConfig:
    return SuiteConfig.from_dict({
        "suite": {"problems": ["builtin:blocksworld-3", "builtin:grippers-1"],
                  "generate": {"n_blocks": [3, 4], "count": 3, "seed": 0},
                  "budget": 20, "out_dir": f"out-{mode}"},
        "llm": {"mode": mode, "backend": "mock", "transcript": "transcript.jsonl", "mock_error_rate": 0.3},
        "planners": {
            "boomerang": {"policy": "llm"},
            "react": {"policy": "llm"},
            "toi_bfs": {"policy": "llm", "k": 2, "b": 2},
            "io": {"policy": "llm"},
            "astar": {"heuristic": "goal_count"},
        },
    }, base=base)


def main():
    with tempfile.TemporaryDirectory() as tmp:
        base = Path(tmp)
        recorded = run_suite(config(base, "record"))
        print(recorded.summary_csv)
        replayed = run_suite(config(base, "replay"))
        lines = (base / "transcript.jsonl").read_text().count("\n")
        print(f"transcript: {lines} exchanges")
        print("replay reproduces records.csv:", replayed.records_csv == recorded.records_csv)


if __name__ == "__main__":
    main()
