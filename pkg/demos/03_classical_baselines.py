"""Heuristic search baselines and what they cost in queries.

Each generated successor costs one world-model query, so the heuristic
decides how much of the state space gets paid for.
"""

from queryplan import WorldModel
from queryplan.bench import gen_blocksworld, optimal_length_oracle
from queryplan.classical import GREEDY, HeuristicKind, run_best_first


def main():
    problems = [gen_blocksworld(n, seed) for n in (4, 5, 6) for seed in range(3)]
    print(f"{'problem':<10}{'opt':>4}  " + "  ".join(f"{name:>16}" for name in ("A* goal_count", "WA* h_ff", "GBFS h_add")))
    for p in problems:
        opt = optimal_length_oracle(p)
        cells = []
        for kind, w in ((HeuristicKind.GOAL_COUNT, 1.0), (HeuristicKind.H_FF, 3.0), (HeuristicKind.H_ADD, GREEDY)):
            out = run_best_first(p, WorldModel.with_budget(p, None), kind, w)
            cells.append(f"len {out.plan_length:>2} / {out.wmq_used:>4} q")
        print(f"{p.name:<10}{opt:>4}  " + "  ".join(f"{c:>16}" for c in cells))
    print("\nA* with goal_count stays optimal here because every action adds at most one goal atom.")


if __name__ == "__main__":
    main()
