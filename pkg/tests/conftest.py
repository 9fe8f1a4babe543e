import pytest

from surveil import (
    MotionConfig,
    Partition,
    PredicateDef,
    VisionConfig,
    build_game_structure,
    parse_grid,
)

# 5x5 arena: agent top-right, target bottom middle, a wall of three
# obstacles in the middle row
PAPER5X5 = """\
....A
.....
.###.
...T.
.....
"""

# first two columns vs the rest (of the free cells)
TWO_COLUMNS = (
    frozenset({0, 1, 5, 6, 10, 15, 16, 20, 21}),
    frozenset({2, 3, 4, 7, 8, 9, 14, 17, 18, 19, 22, 23, 24}),
)


@pytest.fixture(scope="session")
def grid5():
    return parse_grid(PAPER5X5)


@pytest.fixture(scope="session")
def game5(grid5):
    return build_game_structure(grid5, MotionConfig(), VisionConfig())


@pytest.fixture(scope="session")
def rows_partition(game5):
    """One block per grid row (restricted to free cells)."""
    blocks = {}
    for r in range(5):
        cells = frozenset(
            c for c in range(r * 5, r * 5 + 5) if c in game5.target_locations
        )
        if cells:
            blocks[r] = cells
    return Partition(blocks, frozenset(game5.target_locations))


@pytest.fixture(scope="session")
def two_col_partition(game5):
    q1, q2 = TWO_COLUMNS
    return Partition({0: q1, 1: q2}, frozenset(game5.target_locations))


@pytest.fixture(scope="session")
def goal_pred():
    """Task predicate: the agent stands on cell 0."""
    return {"goal": PredicateDef("goal", frozenset({0}))}


def build_hide_reveal_cex(game, partition):
    """Finite-memory target strategy as a counterexample graph.

    Phase one: always take the invisible block-set move.  The first time
    the agent stands on cell 19 with full uncertainty, the target shows
    itself by moving to the visible cell 15, then returns to hiding
    forever.  The single reveal lets the pursuing agent's belief collapse
    to one cell, so the graph is a spurious recurrence counterexample.
    """
    from surveil.abstraction import abstract_successors
    from surveil.solver import CounterexampleGraph

    full = frozenset(partition.blocks)

    def hiding_move(state):
        moves = dict(abstract_successors(game, partition, state))
        sets = [c for c in moves if not isinstance(c, int)]
        assert len(sets) == 1
        return sets[0], moves[sets[0]]

    init = (game.initial[0], game.initial[1], "hide")
    choice, edges, mode = {}, {}, {}
    queue = [init]
    while queue:
        v = queue.pop(0)
        if v in choice:
            continue
        l_a, label, phase = v
        if phase == "hide" and l_a == 19 and label == full:
            moves = dict(abstract_successors(game, partition, (l_a, label)))
            lab, replies, phase2 = 15, moves[15], "settle"
        else:
            lab, replies = hiding_move((l_a, label))
            phase2 = phase
        choice[v] = lab
        kids = tuple((r, lab, phase2) for r in replies)
        edges[v] = kids
        mode[v] = ("avoid", 0)
        queue.extend(k for k in kids if k not in choice)
    return CounterexampleGraph(initial=init, choice=choice, edges=edges, mode=mode)
