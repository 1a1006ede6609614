"""Lazy edge evaluation versus A* on explicit graphs.

The chain graph shows the constructed gap: A* with a perfect heuristic still
evaluates every out-edge of the vertices it expands, while lazy search
checks only the edges of the path it believes in. The second half runs
posterior sampling against random path proposals on random graphs.
"""

from queryplan.classical import (
    astar_edge_evaluations,
    chain_world,
    mean_regret_curve,
    random_graph_world,
    run_lazysp_psrl,
    run_random_paths,
)


def main():
    for dummies in (1, 2, 4):
        world = chain_world(5, dummies)
        _, astar = astar_edge_evaluations(world)
        lazy = run_lazysp_psrl(world.with_truth_prior()).wmq_used
        print(f"chain of 5, {dummies} dead ends per vertex: A* {astar} evaluations, lazy {lazy}")
    print()

    psrl, rand = [], []
    for seed in range(30):
        world = random_graph_world(30, seed, p_valid=0.8)
        psrl.append(run_lazysp_psrl(world, seed=seed).trace)
        rand.append(run_random_paths(world, seed=seed).trace)
    horizon = max(len(t.deltas) for t in psrl + rand)
    print("iteration  mean regret (posterior sampling)  mean regret (random paths)")
    for t, (a, b) in enumerate(zip(mean_regret_curve(psrl, horizon), mean_regret_curve(rand, horizon)), 1):
        print(f"{t:>9}  {a:>31.2f}  {b:>26.2f}")
    print(f"total regret: {sum(t.total for t in psrl)} vs {sum(t.total for t in rand)}")


if __name__ == "__main__":
    main()
