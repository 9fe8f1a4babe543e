"""Surveillance game structures: successor functions and validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable


@dataclass(frozen=True)
class SurveillanceGameStructure:
    """Turn-based game: from ``(l_a, l_t)`` the target moves first, then
    the agent replies knowing the target's move (when visible)."""

    agent_locations: frozenset[int]
    target_locations: frozenset[int]
    initial: tuple[int, int]
    # (l_a, l_t) -> sorted target successor locations
    target_succ: dict[tuple[int, int], tuple[int, ...]]
    # (l_a, l_t, l_t') -> sorted agent reply locations
    agent_succ: dict[tuple[int, int, int], tuple[int, ...]]
    # (l_a, l_t) -> bool
    visibility: dict[tuple[int, int], bool]

    def vis(self, l_a: int, l_t: int) -> bool:
        return self.visibility[(l_a, l_t)]

    def succ_t(self, l_a: int, belief: Iterable[int]) -> frozenset[int]:
        """Union of target successors over all locations in the belief."""
        out: set[int] = set()
        for l_t in belief:
            out.update(self.target_succ[(l_a, l_t)])
        return frozenset(out)

    def succ_a(self, l_a: int, l_t: int, l_t2: int) -> tuple[int, ...]:
        return self.agent_succ[(l_a, l_t, l_t2)]

    def invisible_succ(self, l_a: int, belief: Iterable[int]) -> frozenset[int]:
        """Target successors of the belief that are invisible from ``l_a``."""
        return frozenset(
            l for l in self.succ_t(l_a, belief) if not self.visibility[(l_a, l)]
        )


@dataclass(frozen=True)
class SuccessorReport:
    total: bool
    invisible_independent: bool
    violations: tuple = ()

    def __post_init__(self):
        assert (not self.violations) == (self.total and self.invisible_independent)

    @property
    def ok(self) -> bool:
        return self.total and self.invisible_independent


def reachable_states(G: SurveillanceGameStructure) -> list[tuple[int, int]]:
    """Concrete states reachable from the initial one, in BFS order."""
    seen = {G.initial}
    order = [G.initial]
    queue = [G.initial]
    while queue:
        l_a, l_t = queue.pop(0)
        for l_t2 in G.target_succ[(l_a, l_t)]:
            for l_a2 in G.agent_succ[(l_a, l_t, l_t2)]:
                s = (l_a2, l_t2)
                if s not in seen:
                    seen.add(s)
                    order.append(s)
                    queue.append(s)
    return order


def validate_assumptions(G: SurveillanceGameStructure) -> SuccessorReport:
    """Check totality and invisible-independence over reachable states.

    Invisible-independence: for a fixed agent location, the agent's reply
    set may not depend on which invisible successor the target chose.
    """
    total = True
    independent = True
    violations = []
    # reference reply set per agent location: the condition quantifies over
    # every reachable source state sharing l_a, not just a single one
    reference: dict[int, tuple[tuple[int, ...], tuple[int, int], int]] = {}
    for l_a, l_t in reachable_states(G):
        succs = G.target_succ[(l_a, l_t)]
        if not succs:
            total = False
            violations.append(("no_target_move", (l_a, l_t)))
            continue
        for l_t2 in succs:
            replies = G.agent_succ[(l_a, l_t, l_t2)]
            if not replies:
                total = False
                violations.append(("no_agent_reply", (l_a, l_t), l_t2))
            if not G.visibility[(l_a, l_t2)]:
                if l_a not in reference:
                    reference[l_a] = (replies, (l_a, l_t), l_t2)
                elif replies != reference[l_a][0]:
                    independent = False
                    violations.append(("invisible_dependence", (l_a, l_t), l_t2))
    return SuccessorReport(total, independent, tuple(violations))
