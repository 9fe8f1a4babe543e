"""Solve the explicit belief-set game as a ground-truth oracle.

Builds every reachable belief state of the 5x5 arena and solves a few
objectives directly, without any abstraction.  This only works on tiny
maps; the abstraction loop in demo 03 exists precisely because this
construction blows up elsewhere.
"""

from surveil import (
    MotionConfig,
    VisionConfig,
    belief_successors,
    build_belief_game,
    build_game_structure,
    make_arena,
    parse_grid,
    parse_spec,
    solve,
)
from surveil.cli import bundled_map


def main():
    grid = parse_grid(bundled_map("paper5x5.txt"))
    G = build_game_structure(grid, MotionConfig(), VisionConfig())

    print("belief successors of the initial belief state (4, {18}):")
    for B, replies in belief_successors(G, (4, frozenset({18}))):
        kind = "seen at" if len(B) == 1 and G.vis(4, next(iter(B))) else "hidden in"
        print(f"  {kind} {sorted(B)}, agent replies {sorted(replies)}")
    print()

    game = build_belief_game(G)
    print(f"reachable belief states: {len(game)}")
    print()

    for spec in ("G p<=2", "G p<=3", "GF p<=1"):
        obj = parse_spec(spec)
        arena = make_arena(game, G, obj)
        result = solve(arena, obj)
        verdict = "realizable" if result.agent_wins else "unrealizable"
        print(f"  {spec:10s} -> {verdict}")


if __name__ == "__main__":
    main()
