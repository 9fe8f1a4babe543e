"""Exact belief-set game construction and predicate evaluation.

The belief game is the oracle semantics: agent location paired with the
set of target locations considered possible.  After every transition a
belief is either a visible singleton or a set of all-invisible locations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .structure import SurveillanceGameStructure

# A belief inside a game state: a frozenset of target locations in the
# exact game, or a concrete location (int) / frozenset of partition block
# ids in the abstract game.  A state is (agent_location, belief).
Belief = "int | frozenset[int]"
State = "tuple[int, int | frozenset[int]]"


class BudgetExceeded(RuntimeError):
    """Explicit game construction exceeded the configured state budget."""


class PredicateError(ValueError):
    """Undeclared or unobservable task predicate."""


@dataclass(frozen=True)
class PredicateDef:
    """A task predicate over concrete states.

    Agent-kind predicates hold when the agent stands on a labelled cell;
    target-kind ones when the target does.  Target-kind predicates must be
    observable: invisible locations may not disagree on membership.
    """

    name: str
    cells: frozenset[int]
    on_target: bool = False

    def holds(self, l_a: int, l_t: int) -> bool:
        return (l_t if self.on_target else l_a) in self.cells


def predicates_from_grid(grid) -> dict[str, PredicateDef]:
    """Declared predicates of a grid: one per label letter plus ``goal``."""
    preds = {
        name: PredicateDef(name, cells) for name, cells in grid.labels.items()
    }
    if grid.goal_cells:
        preds["goal"] = PredicateDef("goal", grid.goal_cells)
    return preds


def check_observable(G: SurveillanceGameStructure, pred: PredicateDef) -> None:
    """Reject target-kind predicates whose truth could depend on which
    invisible location the target occupies."""
    if not pred.on_target:
        return
    for l_a in G.agent_locations:
        invisible = [t for t in G.target_locations if not G.vis(l_a, t)]
        if invisible:
            vals = {t in pred.cells for t in invisible}
            if len(vals) > 1:
                raise PredicateError(
                    f"predicate {pred.name!r} is not observable: invisible "
                    f"locations from agent cell {l_a} disagree"
                )


def concretize(belief, partition=None) -> frozenset[int]:
    """Concrete target locations denoted by a belief.

    With a partition, frozenset beliefs are block-id sets and are expanded
    through it; without one they are already concrete location sets.
    """
    if isinstance(belief, int):
        return frozenset({belief})
    if partition is not None:
        return partition.gamma(belief)
    return belief


def invisible_count(G: SurveillanceGameStructure, l_a: int, locs: Iterable[int]) -> int:
    return sum(1 for l in locs if not G.vis(l_a, l))


def eval_surveillance_pred(G, state, k: int, partition=None) -> bool:
    """``p_k``: at most ``k`` invisible locations in the (concretized) belief."""
    if k < 1:
        raise ValueError("surveillance threshold k must be >= 1")
    l_a, belief = state
    return invisible_count(G, l_a, concretize(belief, partition)) <= k


def eval_task_pred(G, state, pred: PredicateDef, partition=None) -> bool:
    """Task predicate on a belief/abstract state: true iff it holds for
    every location in the concretized belief."""
    l_a, belief = state
    return all(pred.holds(l_a, l_t) for l_t in concretize(belief, partition))


def belief_successors(G: SurveillanceGameStructure, state):
    """Target belief choices and agent replies from an exact belief state.

    Returns a list of ``(new_belief, replies)`` pairs: one visible
    singleton per observable successor location, plus at most one
    all-invisible set.  Sorted canonically (visible by location, invisible
    set last).
    """
    l_a, belief = state
    if not belief:
        raise ValueError("empty belief")
    visible: dict[int, set[int]] = {}
    invisible: set[int] = set()
    inv_pair = None
    for l_t in sorted(belief):
        for l_t2 in G.target_succ[(l_a, l_t)]:
            if G.vis(l_a, l_t2):
                visible.setdefault(l_t2, set()).update(G.succ_a(l_a, l_t, l_t2))
            else:
                invisible.add(l_t2)
                if inv_pair is None:
                    inv_pair = (l_t, l_t2)
    choices = [
        (frozenset({l_t2}), tuple(sorted(replies)))
        for l_t2, replies in sorted(visible.items())
    ]
    if invisible:
        # any representative works under invisible-independence
        replies = G.succ_a(l_a, *inv_pair)
        choices.append((frozenset(invisible), tuple(replies)))
    return choices


@dataclass
class TurnGame:
    """Explicit reachable game with target-then-agent turn structure.

    ``moves[s]`` lists ``(choice, reply_states)`` pairs in canonical
    order, where ``choice`` is the target's successor belief and the reply
    states are the agent's possible follow-up states.
    """

    initial: tuple
    moves: dict = field(default_factory=dict)

    @property
    def states(self) -> list:
        return sorted(self.moves, key=state_key)

    def __len__(self) -> int:
        return len(self.moves)


def belief_key(belief):
    if isinstance(belief, int):
        return (0, (belief,))
    return (1, tuple(sorted(belief)))


def state_key(state):
    return (state[0],) + belief_key(state[1])


def _explore(initial, successors, max_states):
    game = TurnGame(initial=initial)
    queue = [initial]
    game.moves[initial] = None
    while queue:
        state = queue.pop(0)
        out = []
        for new_belief, replies in successors(state):
            reply_states = tuple((l_a2, new_belief) for l_a2 in replies)
            for s2 in reply_states:
                if s2 not in game.moves:
                    if len(game.moves) >= max_states:
                        raise BudgetExceeded(
                            f"state budget of {max_states} exceeded"
                        )
                    game.moves[s2] = None
                    queue.append(s2)
            out.append((new_belief, reply_states))
        game.moves[state] = out
    return game


def build_belief_game(G: SurveillanceGameStructure, max_states: int = 2_000_000) -> TurnGame:
    """Enumerate the reachable exact belief game (the oracle).

    Raises :class:`BudgetExceeded` past ``max_states``; the exponential
    blow-up of the construction is the reason the abstraction exists.
    """
    l_a0, l_t0 = G.initial
    initial = (l_a0, frozenset({l_t0}))
    game = _explore(initial, lambda s: belief_successors(G, s), max_states)
    # shape invariant: beliefs are nonempty, and multi-element ones were
    # all-invisible from the agent location they were formed at (checked
    # at formation time in belief_successors, not against the new l_a)
    for _, belief in game.moves:
        assert belief, "empty belief reached"
    return game
