"""Counterexample analysis, partition refinement, and the main loop.

Safety counterexamples are trees: forward belief propagation either
concretizes them or yields a spurious path, which drives backward
partition splitting.  Liveness counterexamples are graphs: an analysis
graph pairs each abstract node with the exact forward-propagated belief,
and a lasso whose cycle contains a precise-enough belief witnesses
spuriousness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .abstraction import Partition, build_abstract_game, refines
from .belief import BudgetExceeded, PredicateDef, invisible_count
from .objective import Atom, Objective, SurvAtom, TaskAtom
from .solver import (
    Arena,
    CounterexampleGraph,
    CounterexampleTree,
    SolveResult,
    extract_cex_graph,
    extract_cex_tree,
    make_arena,
    solve,
)
from .structure import SurveillanceGameStructure

CONCRETIZABLE = "CONCRETIZABLE"


class RefinementError(RuntimeError):
    """Refinement failed to make progress (internal invariant violation)."""


def _concrete_step(G, Q, l_a, belief, abstract_label):
    """Exact belief after the target's abstract move ``abstract_label``.

    Visible moves give singletons; a block-set move collects the belief's
    invisible successors lying under the abstract label.
    """
    if isinstance(abstract_label, int):
        return frozenset({abstract_label})
    return G.invisible_succ(l_a, belief) & Q.gamma(abstract_label)


def _sat_concrete(G, l_a, belief, atom, predicates):
    if isinstance(atom, SurvAtom):
        return invisible_count(G, l_a, belief) <= atom.k
    pred = predicates[atom.name]
    return all(pred.holds(l_a, l_t) for l_t in belief)


def annotate_tree(
    G: SurveillanceGameStructure,
    Q: Partition,
    tree: CounterexampleTree,
    predicates: Optional[dict[str, PredicateDef]] = None,
):
    """Forward belief propagation over an abstract counterexample tree.

    Returns the first (canonical order) root-to-leaf path whose leaf's
    exact belief satisfies the safety conjunction, or CONCRETIZABLE when
    every leaf's exact belief genuinely violates it.
    """
    predicates = predicates or {}
    l_a0, l_t0 = G.initial
    tree.root.annotation = frozenset({l_t0})
    good_path = None

    def walk(node, path):
        nonlocal good_path
        if good_path is not None:
            return
        l_a, _ = node.state
        if not node.children:
            if all(
                _sat_concrete(G, l_a, node.annotation, a, predicates)
                for a in tree.safety
            ):
                good_path = list(path)
            return
        for child in node.children:
            l_a2, label = child.state
            child.annotation = _concrete_step(G, Q, l_a, node.annotation, label)
            assert child.annotation <= Q.gamma(label)
            walk(child, path + [child])

    walk(tree.root, [tree.root])
    if good_path is not None:
        return good_path
    return CONCRETIZABLE


def split_along(G: SurveillanceGameStructure, Q: Partition, pairs) -> Partition:
    """Backward partition splitting along an annotated path.

    ``pairs`` is a list of ``(l_a, abstract_label, exact_belief)`` from
    the root to a node whose exact belief is to be made expressible.
    Splits the final node's blocks against its belief, then walks
    backward separating the locations whose invisible successors stay
    inside the precise region, stopping at concrete labels.
    """
    gammas = [
        Q.gamma(label) if not isinstance(label, int) else frozenset({label})
        for _, label, _ in pairs
    ]
    n = len(pairs) - 1
    l_a_n, label_n, belief_n = pairs[n]
    result = Q
    if not isinstance(label_n, int):
        result = result.split(gammas[n], belief_n)
    precise = belief_n
    for j in range(n - 1, -1, -1):
        l_a_j, label_j, _ = pairs[j]
        if isinstance(label_j, int):
            break
        keep = frozenset(
            l
            for l in gammas[j]
            if (G.invisible_succ(l_a_j, (l,)) & gammas[j + 1]) <= precise
        )
        result = result.split(gammas[j], keep)
        precise = keep
    return result


def refine_safety(G: SurveillanceGameStructure, Q: Partition, path) -> Partition:
    """Refine ``Q`` to eliminate a spurious safety counterexample path."""
    if any(node.annotation is None for node in path):
        raise RefinementError("path is not annotated")
    pairs = [(node.state[0], node.state[1], node.annotation) for node in path]
    refined = split_along(G, Q, pairs)
    if len(refined) <= len(Q):
        # direct fallback: make every annotation along the path expressible
        for l_a, label, belief in pairs:
            if not isinstance(label, int):
                refined = refined.split(Q.gamma(label), belief)
    if len(refined) <= len(Q):
        raise RefinementError("safety refinement produced no new blocks")
    assert refines(refined, Q)
    return refined


@dataclass
class AnalysisGraphD:
    """Counterexample graph paired with exact forward beliefs.

    Node ``i`` carries the belief state, the abstract counterexample
    state it tracks, and that state's winning mode.
    """

    beliefs: list
    cex_states: list
    modes: list
    edges: dict
    initial: int = 0
    index: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.beliefs)


def build_analysis_graph(
    G: SurveillanceGameStructure, Q: Partition, cex: CounterexampleGraph
) -> AnalysisGraphD:
    """Close the counterexample graph under exact belief propagation."""
    l_a0, l_t0 = G.initial
    d0 = ((l_a0, frozenset({l_t0})), cex.initial)
    beliefs, cex_states, modes = [d0[0]], [d0[1]], [cex.mode[cex.initial]]
    index = {d0: 0}
    edges: dict[int, tuple[int, ...]] = {}
    queue = [d0]
    while queue:
        key = queue.pop(0)
        (l_a, belief), v = key
        i = index[key]
        label = cex.choice[v]
        belief2 = _concrete_step(G, Q, l_a, belief, label)
        out = []
        for v2 in cex.edges[v]:
            assert belief2 <= Q.gamma(v2[1])
            key2 = ((v2[0], belief2), v2)
            if key2 not in index:
                index[key2] = len(beliefs)
                beliefs.append(key2[0])
                cex_states.append(v2)
                modes.append(cex.mode[v2])
                queue.append(key2)
            out.append(index[key2])
        edges[i] = tuple(out)
    return AnalysisGraphD(beliefs, cex_states, modes, edges, 0, index)


def _bfs_path(edges, start, goals, allowed=None):
    """Shortest path (canonical neighbour order) from start into goals."""
    if start in goals:
        return [start]
    prev = {start: None}
    queue = [start]
    while queue:
        i = queue.pop(0)
        for j in edges.get(i, ()):
            if allowed is not None and j not in allowed:
                continue
            if j not in prev:
                prev[j] = i
                if j in goals:
                    path = [j]
                    while prev[path[-1]] is not None:
                        path.append(prev[path[-1]])
                    return path[::-1]
                queue.append(j)
    return None


def _cycle_through(D, g, allowed):
    """Shortest cycle g -> ... -> g, optionally confined to ``allowed``."""
    prev = {}
    queue = []
    for j in D.edges.get(g, ()):
        if j == g:
            return [g, g]
        if (allowed is None or j in allowed) and j not in prev:
            prev[j] = None
            queue.append(j)
    while queue:
        i = queue.pop(0)
        for j in D.edges.get(i, ()):
            if j == g:
                path = [i]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return [g] + path[::-1] + [g]
            if (allowed is None or j in allowed) and j not in prev:
                prev[j] = i
                queue.append(j)
    return None


def find_good_lasso(
    G: SurveillanceGameStructure,
    D: AnalysisGraphD,
    k: int,
    restrict_mode=None,
    good=None,
):
    """Search for a lasso whose cycle contains a belief satisfying p_k.

    Returns ``(stem, cycle)`` as node index lists with the cycle anchored
    at the good node (the stem ends there, the cycle returns there), or
    None when no such lasso exists and D is a concrete counterexample.
    """
    if good is None:
        good = {
            i
            for i, (l_a, b) in enumerate(D.beliefs)
            if invisible_count(G, l_a, b) <= k
        }
    allowed = None
    if restrict_mode is not None:
        allowed = {i for i, m in enumerate(D.modes) if m == restrict_mode}
        good = good & allowed
    for g in sorted(good):
        cycle = _cycle_through(D, g, allowed)
        if cycle is None:
            continue
        stem = _bfs_path(D.edges, D.initial, {g})
        if stem is None:
            continue
        return stem, cycle
    return None


def _d_pairs(D: AnalysisGraphD, indices):
    """(agent, abstract label, exact belief) triples for D node indices."""
    out = []
    for i in indices:
        l_a, belief = D.beliefs[i]
        out.append((l_a, D.cex_states[i][1], belief))
    return out


def refine_liveness(
    G: SurveillanceGameStructure, Q: Partition, D: AnalysisGraphD, lasso
) -> Partition:
    """Refine along a spurious lasso: split along stem+cycle and along the
    stem alone, then take the common refinement of the two results."""
    stem, cycle = lasso
    full = split_along(G, Q, _d_pairs(D, stem + cycle[1:]))
    prefix = split_along(G, Q, _d_pairs(D, stem))
    refined = full.meet(prefix)
    if len(refined) <= len(Q):
        # direct fallback as in refine_safety
        for l_a, label, belief in _d_pairs(D, stem + cycle[1:]):
            if not isinstance(label, int):
                refined = refined.split(Q.gamma(label), belief)
    if len(refined) <= len(Q):
        raise RefinementError("liveness refinement produced no new blocks")
    assert refines(refined, Q)
    return refined


def _abstract_sat(G, Q, state, atom, predicates):
    if isinstance(atom, SurvAtom):
        l_a, label = state
        return invisible_count(G, l_a, Q.gamma(label)) <= atom.k
    pred = predicates[atom.name]
    l_a, label = state
    return all(pred.holds(l_a, l_t) for l_t in Q.gamma(label))


def analyze_general(
    G: SurveillanceGameStructure,
    Q: Partition,
    D: AnalysisGraphD,
    objective: Objective,
    predicates: Optional[dict[str, PredicateDef]] = None,
):
    """Counterexample-graph analysis for conjunctions.

    Tries, in order: a node where a safety atom fails abstractly but the
    exact belief is fine (safety-style path refinement); a lasso trapped
    away from a recurrence atom whose cycle holds a precise-enough belief
    (liveness refinement); any node whose exact belief is a strict subset
    of the abstract one.  Returns a refined partition, or CONCRETIZABLE.
    """
    predicates = predicates or {}
    safety = sorted(objective.safety_terms, key=str)
    for i in range(len(D)):
        l_a, belief = D.beliefs[i]
        s_abs = D.cex_states[i]
        if not safety:
            break
        abs_bad = [a for a in safety if not _abstract_sat(G, Q, s_abs, a, predicates)]
        if not abs_bad:
            continue
        if all(_sat_concrete(G, l_a, belief, a, predicates) for a in safety):
            path = _bfs_path(D.edges, D.initial, {i})
            refined = _refine_d_path(G, Q, D, path)
            if refined is not None:
                return refined
    for j, atom in enumerate(objective.recurrence_terms):
        if isinstance(atom, SurvAtom):
            good = None
            k = atom.k
        else:
            k = 1  # unused when an explicit good set is given
            good = {
                i
                for i, (l_a, b) in enumerate(D.beliefs)
                if _sat_concrete(G, l_a, b, atom, predicates)
            }
        lasso = find_good_lasso(
            G, D, k, restrict_mode=("avoid", j), good=good
        )
        if lasso is not None:
            return refine_liveness(G, Q, D, lasso)
    for i in range(len(D)):
        l_a, belief = D.beliefs[i]
        label = D.cex_states[i][1]
        if isinstance(label, int):
            continue
        if belief < Q.gamma(label):
            path = _bfs_path(D.edges, D.initial, {i})
            refined = _refine_d_path(G, Q, D, path)
            if refined is not None:
                return refined
    return CONCRETIZABLE


def _refine_d_path(G, Q, D, path):
    """Split along a D path; None when no split results (keep scanning)."""
    pairs = _d_pairs(D, path)
    refined = split_along(G, Q, pairs)
    if len(refined) <= len(Q):
        for l_a, label, belief in pairs:
            if not isinstance(label, int):
                refined = refined.split(Q.gamma(label), belief)
    if len(refined) <= len(Q):
        return None
    assert refines(refined, Q)
    return refined


@dataclass
class CegarOutcome:
    verdict: str  # "realizable" | "unrealizable"
    iterations: int
    final_partition: Partition
    transcript: list[str]
    strategy: object = None
    arena: Optional[Arena] = None
    counterexample: object = None

    def __post_init__(self):
        assert self.verdict in ("realizable", "unrealizable")


class IterationBudgetExceeded(RuntimeError):
    pass


def cegar_loop(
    G: SurveillanceGameStructure,
    objective: Objective,
    Q: Optional[Partition] = None,
    predicates: Optional[dict[str, PredicateDef]] = None,
    max_states: int = 1_000_000,
    max_iters: int = 200,
) -> CegarOutcome:
    """Abstract-solve / analyze / refine until a verdict is reached.

    Terminates because every refinement strictly grows the partition,
    which is bounded by the partition into singletons.
    """
    from .abstraction import initial_partition

    predicates = predicates or {}
    if Q is None:
        Q = initial_partition(G, predicates.values())
    Q.check_uniform(predicates.values())
    transcript: list[str] = []
    for iteration in range(1, max_iters + 1):
        game = build_abstract_game(G, Q, max_states=max_states)
        arena = make_arena(game, G, objective, predicates, partition=Q)
        result = solve(arena, objective)
        if result.agent_wins:
            transcript.append(
                f"iter={iteration} blocks={len(Q)} verdict=realizable action=stop"
            )
            return CegarOutcome(
                "realizable", iteration, Q, transcript,
                strategy=result.agent_strategy, arena=arena,
            )
        if objective.recurrence_terms:
            cex = extract_cex_graph(arena, result)
            D = build_analysis_graph(G, Q, cex)
            analysis = analyze_general(G, Q, D, objective, predicates)
            if analysis == CONCRETIZABLE:
                transcript.append(
                    f"iter={iteration} blocks={len(Q)} verdict=unrealizable action=stop"
                )
                return CegarOutcome(
                    "unrealizable", iteration, Q, transcript,
                    arena=arena, counterexample=D,
                )
            refined = analysis
        else:
            tree = extract_cex_tree(arena, result, objective)
            analysis = annotate_tree(G, Q, tree, predicates)
            if analysis == CONCRETIZABLE:
                transcript.append(
                    f"iter={iteration} blocks={len(Q)} verdict=unrealizable action=stop"
                )
                return CegarOutcome(
                    "unrealizable", iteration, Q, transcript,
                    arena=arena, counterexample=tree,
                )
            refined = refine_safety(G, Q, analysis)
        transcript.append(
            f"iter={iteration} blocks={len(Q)} verdict=continue "
            f"action=refine->{len(refined)}"
        )
        if len(refined) <= len(Q):
            raise RefinementError("no refinement progress")
        Q = refined
    raise IterationBudgetExceeded(f"no verdict after {max_iters} iterations")


def tree_eliminated(
    G: SurveillanceGameStructure,
    Qold: Partition,
    Qnew: Partition,
    tree,
    predicates=None,
) -> bool:
    """Structural check of counterexample elimination for trees.

    Replays the old tree's target choices in the game refined from
    ``Qold`` to ``Qnew``; the old counterexample survives only if the
    replay keeps every new abstract belief gamma-contained in the old
    one, reproduces the branching, and still violates the safety
    conjunction at every leaf.  Returns True when it is eliminated.
    """
    from .abstraction import abstract_successors

    predicates = predicates or {}

    def walk(node, new_state):
        if not node.children:
            still_violates = any(
                not _abstract_sat(G, Qnew, new_state, a, predicates)
                for a in tree.safety
            )
            return not still_violates
        choices = dict(abstract_successors(G, Qnew, new_state))
        old_choice = node.choice
        if isinstance(old_choice, int):
            if old_choice not in choices:
                return True
            new_label = old_choice
        else:
            sets = [c for c in choices if not isinstance(c, int)]
            if not sets:
                return True
            new_label = sets[0]
        old_child_label = node.children[0].state[1]
        if not Qnew.gamma(new_label) <= Qold.gamma(old_child_label):
            return True
        replies = set(choices[new_label])
        old_replies = {ch.state[0] for ch in node.children}
        if replies != old_replies:
            return True
        return any(walk(ch, (ch.state[0], new_label)) for ch in node.children)

    return walk(tree.root, G.initial)


def graph_eliminated(
    G: SurveillanceGameStructure,
    Qold: Partition,
    Qnew: Partition,
    cex: CounterexampleGraph,
) -> bool:
    """Structural elimination check for counterexample graphs.

    Replays the graph's positional target choices under ``Qnew``.  The
    old counterexample survives only if every old node maps to a single
    gamma-contained new label and the replay closes.  Label conflicts,
    missing choices, or containment failures all mean elimination.
    """
    from .abstraction import abstract_successors

    new_label_of = {cex.initial: G.initial[1]}
    queue = [cex.initial]
    seen = {cex.initial}
    while queue:
        v = queue.pop(0)
        state = (v[0], new_label_of[v])
        choices = dict(abstract_successors(G, Qnew, state))
        old_choice = cex.choice[v]
        if isinstance(old_choice, int):
            if old_choice not in choices:
                return True
            new_label = old_choice
        else:
            sets = [c for c in choices if not isinstance(c, int)]
            if not sets:
                return True
            new_label = sets[0]
        for v2 in cex.edges[v]:
            if not Qnew.gamma(new_label) <= Qold.gamma(v2[1]):
                return True
            if v2 in new_label_of:
                if new_label_of[v2] != new_label:
                    return True
            else:
                new_label_of[v2] = new_label
            if v2 not in seen:
                seen.add(v2)
                queue.append(v2)
    return False
