"""Combined surveillance and task objectives in a small room.

The agent must repeatedly reach the goal cell on the right wall while
keeping uncertainty about the target bounded.  Two readings of the
surveillance half are solved: keep it bounded at all times (safety), or
drive it down again and again (recurrence).

A subtlety of this arena: with staying in place forbidden, both players
change chessboard colour every round.  If the agent and the target start
on the same colour, the target, moving first, can sit on the goal at
exactly the rounds the agent could enter it and block the task forever.
The bundled map therefore starts them on opposite colours.
"""

from surveil import (
    build_game_structure,
    cegar_loop,
    parse_config,
    parse_grid,
    parse_spec,
)
from surveil.belief import predicates_from_grid
from surveil.cli import bundled_map


def main():
    text = bundled_map("bigroom.txt")
    print(text)
    grid = parse_grid(text)
    motion, vision = parse_config(bundled_map("bigroom.cfg"))
    G = build_game_structure(grid, motion, vision)
    predicates = predicates_from_grid(grid)

    for spec_file in ("bigroom_safety.spec", "bigroom_liveness.spec"):
        spec = bundled_map(spec_file).strip()
        out = cegar_loop(G, parse_spec(spec), predicates=predicates)
        print(f"  {spec:20s} -> {out.verdict} "
              f"({out.iterations} iterations, {len(out.final_partition)} blocks)")


if __name__ == "__main__":
    main()
