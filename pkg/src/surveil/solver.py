"""Turn-based game solving for the supported objective fragment.

Arenas are turn-expanded explicit games: in every state the target picks
a belief-level choice, then the agent picks a reply.  Safety conjuncts
are solved by a greatest fixpoint over the controllable predecessor;
recurrence conjuncts by a generalized-Buchi nested fixpoint with a
memory index cycling through the recurrence atoms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .belief import (
    PredicateDef,
    TurnGame,
    belief_key,
    eval_surveillance_pred,
    eval_task_pred,
    state_key,
)
from .objective import Atom, Objective, SurvAtom, TaskAtom


class SolverError(RuntimeError):
    pass


def choice_key(choice):
    """Canonical order: visible (concrete) choices first, then belief sets."""
    return belief_key(choice)


@dataclass
class Arena:
    """Indexed turn game plus atom valuations.

    ``moves[i]`` lists ``(choice, reply_indices)`` in canonical choice
    order; ``atom_sets`` maps each objective atom to the set of state
    indices satisfying it.
    """

    states: list
    index: dict
    moves: list
    initial: int
    atom_sets: dict[Atom, frozenset[int]]

    def __len__(self) -> int:
        return len(self.states)

    def sat(self, atom: Atom, i: int) -> bool:
        return i in self.atom_sets[atom]


def make_arena(
    game: TurnGame,
    structure,
    objective: Objective,
    predicates: Optional[dict[str, PredicateDef]] = None,
    partition=None,
) -> Arena:
    """Index a belief or abstract game and evaluate the objective's atoms."""
    predicates = predicates or {}
    states = game.states
    index = {s: i for i, s in enumerate(states)}
    moves = []
    for s in states:
        out = sorted(game.moves[s], key=lambda cr: choice_key(cr[0]))
        moves.append(
            [(c, tuple(index[r] for r in replies)) for c, replies in out]
        )
    atom_sets = {}
    for atom in objective.atoms:
        if isinstance(atom, SurvAtom):
            sat = [
                i
                for i, s in enumerate(states)
                if eval_surveillance_pred(structure, s, atom.k, partition)
            ]
        else:
            if atom.name not in predicates:
                raise SolverError(f"undeclared task predicate {atom.name!r}")
            pred = predicates[atom.name]
            sat = [
                i
                for i, s in enumerate(states)
                if eval_task_pred(structure, s, pred, partition)
            ]
        atom_sets[atom] = frozenset(sat)
    return Arena(states, index, moves, index[game.initial], atom_sets)


def cpre(arena: Arena, W: frozenset[int] | set[int]) -> frozenset[int]:
    """States where, whatever the target picks, some agent reply stays in W."""
    out = []
    for i, choices in enumerate(arena.moves):
        if all(any(r in W for r in replies) for _, replies in choices):
            out.append(i)
    return frozenset(out)


def _gfp_safe(arena: Arena, safe: frozenset[int]) -> frozenset[int]:
    W = safe
    while True:
        W2 = safe & cpre(arena, W)
        if W2 == W:
            return W
        W = W2


def _attractor(arena, target: frozenset[int], domain: frozenset[int]):
    """Agent attractor toward ``target`` inside ``domain``; returns ranks."""
    rank = {i: 0 for i in target}
    current = set(target)
    level = 0
    while True:
        level += 1
        added = set()
        for i in domain:
            if i in rank:
                continue
            if all(
                any(r in current for r in replies) for _, replies in arena.moves[i]
            ):
                added.add(i)
        if not added:
            return rank
        for i in added:
            rank[i] = level
        current |= added


def _target_attractor(arena, base: dict, domain: frozenset[int]):
    """Target attractor: states where some choice forces every reply into
    the attracted set.  Returns ``{state: (rank, choice)}``."""
    info = dict(base)
    current = set(info)
    level = max((r for r, _ in info.values()), default=0)
    while True:
        level += 1
        added = {}
        for i in domain:
            if i in info:
                continue
            for c, replies in arena.moves[i]:
                if replies and all(r in current for r in replies):
                    added[i] = (level, c)
                    break
        if not added:
            return info
        info.update(added)
        current |= added.keys()


@dataclass
class StrategyData:
    """Finite-memory agent controller on arena states.

    Memory is an index into the recurrence atoms (a single mode for pure
    safety).  ``moves[(state, memory, choice_key)] = (reply, memory')``.
    """

    memory_count: int
    winning_region: frozenset[int]
    moves: dict


@dataclass
class TargetStrategyData:
    """Positional spoiling strategy on the target's winning region.

    ``mode[i]`` explains why the target wins from state ``i``:
    ``("unsafe",)`` for a safety-atom violation at the state itself,
    ``("reach", rank)`` while forcing toward a violation, and
    ``("avoid", j)`` while trapping the play away from recurrence atom j.
    """

    region: frozenset[int]
    choice: dict
    mode: dict


@dataclass
class SolveResult:
    agent_wins: bool
    winning_region: frozenset[int]
    agent_strategy: Optional[StrategyData] = None
    target_strategy: Optional[TargetStrategyData] = None


def _canonical_reply(replies, allowed):
    for r in replies:
        if r in allowed:
            return r
    return None


def solve(arena: Arena, objective: Objective) -> SolveResult:
    everything = frozenset(range(len(arena)))
    safe = everything
    for atom in objective.safety_terms:
        safe &= arena.atom_sets[atom]
    w_safe = _gfp_safe(arena, safe)

    rec = objective.recurrence_terms
    if not rec:
        win = w_safe
        if arena.initial in win:
            strat = _safety_strategy(arena, win)
            return SolveResult(True, win, agent_strategy=strat)
        tstrat = _target_strategy(arena, objective, win, safe)
        return SolveResult(False, win, target_strategy=tstrat)

    targets = [arena.atom_sets[a] & w_safe for a in rec]
    Z = w_safe
    while True:
        attrs = []
        for F in targets:
            core = F & cpre(arena, Z) & w_safe
            attrs.append(_attractor(arena, core, w_safe))
        Z2 = frozenset.intersection(*(frozenset(a) for a in attrs)) & w_safe
        if Z2 == Z:
            break
        Z = Z2
    if arena.initial in Z:
        strat = _buchi_strategy(arena, objective, Z, w_safe, targets)
        return SolveResult(True, Z, agent_strategy=strat)
    tstrat = _target_strategy(arena, objective, Z, safe)
    return SolveResult(False, Z, target_strategy=tstrat)


def _safety_strategy(arena, win) -> StrategyData:
    moves = {}
    for i in win:
        for c, replies in arena.moves[i]:
            r = _canonical_reply(replies, win)
            assert r is not None
            moves[(i, 0, c)] = (r, 0)
    return StrategyData(1, win, moves)


def _buchi_strategy(arena, objective, Z, w_safe, targets) -> StrategyData:
    m = len(objective.recurrence_terms)
    cpre_z = cpre(arena, Z)
    moves = {}
    for j in range(m):
        core = targets[j] & cpre_z & w_safe
        rank = _attractor(arena, core, w_safe)
        for i in Z:
            hit = i in core
            for c, replies in arena.moves[i]:
                if hit:
                    r = _canonical_reply(replies, Z)
                    assert r is not None
                    moves[(i, j, c)] = (r, (j + 1) % m)
                else:
                    level = rank[i]
                    r = _canonical_reply(
                        replies, {s for s, v in rank.items() if v < level}
                    )
                    assert r is not None
                    moves[(i, j, c)] = (r, j)
    return StrategyData(m, Z, moves)


def _target_strategy(arena, objective, agent_win, safe) -> TargetStrategyData:
    """Layered positional strategy on the complement of the agent region.

    The unsafe core and its target attractor come first; then traps in
    which the target confines the play away from one recurrence atom,
    iterated with further attractors until the region is closed.  The
    layering keeps ranks well-founded, so counterexample trees stay
    finite and every cycle lies inside a single trap.
    """
    everything = frozenset(range(len(arena)))
    complement = everything - agent_win
    unsafe = everything - safe
    mode: dict[int, tuple] = {}
    choice: dict = {}
    info = {i: (0, None) for i in unsafe}
    for i in unsafe:
        mode[i] = ("unsafe",)
        choice[i] = arena.moves[i][0][0] if arena.moves[i] else None
    rec = objective.recurrence_terms
    while True:
        grown = False
        info2 = _target_attractor(arena, info, everything)
        for i, (rank, c) in info2.items():
            if i not in info:
                info[i] = (rank, c)
                mode[i] = ("reach", rank)
                choice[i] = c
                grown = True
        for j, atom in enumerate(rec):
            avoid = arena.atom_sets[atom]
            won = set(info)
            # greatest fixpoint: stay outside atom j, inside trap or won
            Y = {i for i in everything - won if i not in avoid}
            while True:
                Y2 = set()
                for i in Y:
                    for c, replies in arena.moves[i]:
                        if replies and all(r in Y or r in won for r in replies):
                            Y2.add(i)
                            break
                if Y2 == Y:
                    break
                Y = Y2
            for i in sorted(Y):
                if i in info:
                    continue
                for c, replies in arena.moves[i]:
                    if replies and all(r in Y or r in set(info) for r in replies):
                        info[i] = (0, c)
                        mode[i] = ("avoid", j)
                        choice[i] = c
                        grown = True
                        break
        if not grown:
            break
    region = frozenset(info)
    if region != complement:
        raise SolverError(
            "determinacy check failed: target region does not match the "
            "complement of the agent's winning region"
        )
    return TargetStrategyData(region, choice, mode)


@dataclass
class CexTreeNode:
    state: tuple
    choice: object = None
    children: list = field(default_factory=list)
    annotation: Optional[frozenset] = None


@dataclass
class CounterexampleTree:
    root: CexTreeNode
    safety: frozenset[Atom]

    def nodes(self):
        stack = [self.root]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(reversed(n.children))


def extract_cex_tree(arena: Arena, result: SolveResult, objective: Objective) -> CounterexampleTree:
    """Unfold the target's safety-spoiling strategy into a finite tree.

    Internal nodes apply the target's positional choice and branch over
    all agent replies; a node is a leaf exactly when its state violates
    the safety conjunction.
    """
    if result.target_strategy is None:
        raise SolverError("no target strategy to extract a counterexample from")
    ts = result.target_strategy
    safety = objective.safety_terms

    def violates(i):
        return frozenset(a for a in safety if not arena.sat(a, i))

    def build(i, depth):
        node = CexTreeNode(state=arena.states[i])
        if violates(i):
            return node
        if depth > len(arena) + 1:
            raise SolverError("counterexample tree extraction did not terminate")
        c = ts.choice[i]
        node.choice = c
        replies = dict(arena.moves[i])[c]
        node.children = [build(r, depth + 1) for r in replies]
        return node

    root = build(arena.initial, 0)
    return CounterexampleTree(root, frozenset(safety))


@dataclass
class CounterexampleGraph:
    """Closure of the target's positional strategy under all agent replies."""

    initial: tuple
    choice: dict
    edges: dict
    mode: dict


def extract_cex_graph(arena: Arena, result: SolveResult) -> CounterexampleGraph:
    if result.target_strategy is None:
        raise SolverError("no target strategy to extract a counterexample from")
    ts = result.target_strategy
    choice, edges, mode = {}, {}, {}
    queue = [arena.initial]
    seen = {arena.initial}
    while queue:
        i = queue.pop(0)
        s = arena.states[i]
        c = ts.choice.get(i)
        if c is None:
            c = arena.moves[i][0][0]
        choice[s] = c
        mode[s] = ts.mode.get(i, ("unsafe",))
        if mode[s] == ("unsafe",):
            # the safety violation already happened here; the play is
            # decided, so the node is a sink of the counterexample
            edges[s] = ()
            continue
        replies = dict(arena.moves[i])[c]
        edges[s] = tuple(arena.states[r] for r in replies)
        for r in replies:
            if r not in seen:
                seen.add(r)
                queue.append(r)
    return CounterexampleGraph(arena.states[arena.initial], choice, edges, mode)


def export_strategy(
    arena: Arena, strat: StrategyData, digest: str = "", partition=None
) -> dict:
    """JSON-ready dump of a finite-memory controller with stable ordering."""

    def belief_json(b):
        return b if isinstance(b, int) else sorted(b)

    states = [[s[0], belief_json(s[1])] for s in arena.states]
    moves = []
    for (i, mem, c), (r, mem2) in sorted(
        strat.moves.items(), key=lambda kv: (kv[0][0], kv[0][1], choice_key(kv[0][2]))
    ):
        moves.append([i, mem, belief_json(c), r, mem2])
    blocks = None
    if partition is not None:
        blocks = {
            str(bid): sorted(cells) for bid, cells in partition.blocks.items()
        }
    return {
        "digest": digest,
        "memory_count": strat.memory_count,
        "initial": arena.initial,
        "winning_region": sorted(strat.winning_region),
        "states": states,
        "moves": moves,
        "blocks": blocks,
    }
