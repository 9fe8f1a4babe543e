"""Closed-loop execution of a synthesized controller against a target.

The runner keeps the abstract game state and the controller memory; the
simulator additionally tracks the exact belief and the target's true
location, checking on every step that the true location lies in the
exact belief and the exact belief inside the concretized abstract one.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .abstraction import Partition, abstract_successors
from .grid import GridWorld
from .solver import Arena, StrategyData
from .structure import SurveillanceGameStructure


class SimulationError(RuntimeError):
    """A move outside the game structure, or a controller without a move."""


@dataclass
class StrategyRunner:
    """Steps a finite-memory controller along observed target moves."""

    G: SurveillanceGameStructure
    arena: Arena
    strategy: StrategyData
    partition: Optional[Partition] = None
    state: int = field(init=False)
    memory: int = field(init=False)

    def __post_init__(self):
        self.state = self.arena.initial
        self.memory = 0
        if self.state not in self.strategy.winning_region:
            raise SimulationError("initial state is not in the winning region")

    @property
    def abstract_state(self):
        return self.arena.states[self.state]

    def step(self, target_loc: int) -> int:
        """Feed the target's observation; returns the agent's next cell."""
        l_a, _ = self.arena.states[self.state]
        if self.G.vis(l_a, target_loc):
            choice = target_loc
        else:
            sets = [
                c for c, _ in self.arena.moves[self.state] if not isinstance(c, int)
            ]
            if not sets:
                raise SimulationError(
                    f"no invisible move available from state {self.state}"
                )
            choice = sets[0]
        key = (self.state, self.memory, choice)
        if key not in self.strategy.moves:
            raise SimulationError(f"controller has no move for {key}")
        reply, self.memory = self.strategy.moves[key]
        self.state = reply
        return self.arena.states[reply][0]


def load_runner(
    G: SurveillanceGameStructure, payload: dict, expected_digest: Optional[str] = None
) -> StrategyRunner:
    """Rebuild a runner from an exported controller dictionary.

    With ``expected_digest`` the payload's embedded map digest must match,
    so a controller synthesized for a different map is rejected before it
    can produce nonsense moves.
    """
    from .solver import choice_key

    if expected_digest is not None and payload.get("digest") != expected_digest:
        raise SimulationError(
            "strategy file was synthesized for a different map or config"
        )
    try:
        states = [
            (l_a, label if isinstance(label, int) else frozenset(label))
            for l_a, label in payload["states"]
        ]
        moves = {}
        available: dict[int, set] = {}
        for i, mem, c, r, mem2 in payload["moves"]:
            key = c if isinstance(c, int) else frozenset(c)
            moves[(i, mem, key)] = (r, mem2)
            available.setdefault(i, set()).add(key)
        arena = Arena(
            states=states,
            index={},
            moves=[
                tuple((c, ()) for c in sorted(available.get(i, ()), key=choice_key))
                for i in range(len(states))
            ],
            initial=payload["initial"],
            atom_sets={},
        )
        strategy = StrategyData(
            memory_count=payload["memory_count"],
            winning_region=frozenset(payload["winning_region"]),
            moves=moves,
        )
        partition = None
        if payload.get("blocks"):
            blocks = {
                int(bid): frozenset(cells)
                for bid, cells in payload["blocks"].items()
            }
            universe = frozenset().union(*blocks.values())
            partition = Partition(blocks, universe)
    except (KeyError, TypeError, ValueError) as exc:
        raise SimulationError(f"malformed strategy file: {exc}") from exc
    return StrategyRunner(G, arena, strategy, partition)


class TargetPolicy:
    def choose(self, G: SurveillanceGameStructure, l_a: int, l_t: int) -> int:
        raise NotImplementedError


class RandomPolicy(TargetPolicy):
    """Uniform over legal successors, reproducible from a seed."""

    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)

    def choose(self, G, l_a, l_t):
        return self.rng.choice(sorted(G.target_succ[(l_a, l_t)]))


class ScriptedPolicy(TargetPolicy):
    """Replays a fixed move list, validating each against the structure."""

    def __init__(self, moves):
        self.moves = deque(moves)

    def choose(self, G, l_a, l_t):
        if not self.moves:
            raise SimulationError("scripted target ran out of moves")
        l_t2 = self.moves.popleft()
        if l_t2 not in G.target_succ[(l_a, l_t)]:
            raise SimulationError(f"scripted move {l_t} -> {l_t2} is illegal")
        return l_t2


class EvasivePolicy(TargetPolicy):
    """Prefers invisible successors, then maximum distance from the agent."""

    def __init__(self, grid: GridWorld):
        self.grid = grid

    def choose(self, G, l_a, l_t):
        ar, ac = self.grid.rc(l_a)

        def score(l_t2):
            r, c = self.grid.rc(l_t2)
            return (G.vis(l_a, l_t2), -((r - ar) ** 2 + (c - ac) ** 2), l_t2)

        return min(G.target_succ[(l_a, l_t)], key=score)


class GoalSeekingPolicy(TargetPolicy):
    """Greedy descent of the BFS distance field toward the goal cells."""

    def __init__(self, grid: GridWorld, goal_cells=None):
        goals = frozenset(goal_cells if goal_cells is not None else grid.goal_cells)
        if not goals:
            raise SimulationError("no goal cells to seek")
        dist = {g: 0 for g in goals}
        queue = deque(sorted(goals))
        while queue:
            cell = queue.popleft()
            for n in grid.neighbors(cell):
                if n not in dist:
                    dist[n] = dist[cell] + 1
                    queue.append(n)
        self.dist = dist

    def choose(self, G, l_a, l_t):
        big = len(self.dist) + 1
        return min(
            G.target_succ[(l_a, l_t)],
            key=lambda l: (self.dist.get(l, big), l),
        )


@dataclass
class TraceStep:
    step: int
    target: int
    agent: int
    belief: frozenset
    abstract: object


@dataclass
class Trace:
    grid: GridWorld
    steps: list


def simulate(
    G: SurveillanceGameStructure,
    grid: GridWorld,
    runner: StrategyRunner,
    policy: TargetPolicy,
    steps: int,
) -> Trace:
    """Run the closed loop for ``steps`` rounds, recording every state.

    Checks after every round that the target's true location is inside
    the exact belief and the exact belief inside the concretized
    abstract belief.
    """
    l_a, l_t = G.initial
    belief = frozenset({l_t})
    trace = [TraceStep(0, l_t, l_a, belief, runner.abstract_state[1])]
    for n in range(1, steps + 1):
        l_t2 = policy.choose(G, l_a, l_t)
        if l_t2 not in G.target_succ[(l_a, l_t)]:
            raise SimulationError(f"target move {l_t} -> {l_t2} is illegal")
        if G.vis(l_a, l_t2):
            belief = frozenset({l_t2})
        else:
            belief = G.invisible_succ(l_a, belief)
        l_a = runner.step(l_t2)
        label = runner.abstract_state[1]
        gamma = (
            runner.partition.gamma(label)
            if runner.partition is not None
            else (frozenset({label}) if isinstance(label, int) else label)
        )
        assert l_t2 in belief, "true target location left the exact belief"
        assert belief <= gamma, "exact belief left the abstract belief"
        l_t = l_t2
        trace.append(TraceStep(n, l_t, l_a, belief, label))
    return trace_obj(grid, trace)


def trace_obj(grid, steps) -> Trace:
    return Trace(grid, steps)


def render_trace(trace: Trace, fmt: str = "text") -> str:
    if fmt == "text":
        return _render_text(trace)
    if fmt == "svg":
        return _render_svg(trace)
    raise ValueError(f"unknown trace format {fmt!r}")


def _render_text(trace: Trace) -> str:
    g = trace.grid
    frames = []
    for ts in trace.steps:
        lines = []
        for r in range(g.rows):
            row = []
            for c in range(g.cols):
                cell = r * g.cols + c
                if cell in g.obstacles:
                    ch = "#"
                elif cell == ts.agent:
                    ch = "A"
                elif cell == ts.target:
                    ch = "*"
                elif cell in ts.belief:
                    ch = "?"
                else:
                    ch = "."
                row.append(ch)
            lines.append("".join(row))
        frames.append(f"step {ts.step}\n" + "\n".join(lines))
    return "\n\n".join(frames) + "\n"


def _render_svg(trace: Trace, cell: int = 20) -> str:
    """One SVG per run: the final frame plus the agent/target paths."""
    g = trace.grid
    w, h = g.cols * cell, g.rows * cell
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
    ]
    for o in sorted(g.obstacles):
        r, c = g.rc(o)
        parts.append(
            f'<rect x="{c * cell}" y="{r * cell}" width="{cell}" '
            f'height="{cell}" fill="black"/>'
        )
    last = trace.steps[-1]
    for b in sorted(last.belief):
        r, c = g.rc(b)
        parts.append(
            f'<rect x="{c * cell}" y="{r * cell}" width="{cell}" '
            f'height="{cell}" fill="lightgray"/>'
        )

    def path(points, color):
        coords = " ".join(
            f"{col * cell + cell // 2},{row * cell + cell // 2}"
            for row, col in (g.rc(p) for p in points)
        )
        return f'<polyline points="{coords}" fill="none" stroke="{color}"/>'

    parts.append(path([ts.agent for ts in trace.steps], "blue"))
    parts.append(path([ts.target for ts in trace.steps], "red"))
    ar, ac = g.rc(last.agent)
    tr, tc = g.rc(last.target)
    parts.append(
        f'<circle cx="{ac * cell + cell // 2}" cy="{ar * cell + cell // 2}" '
        f'r="{cell // 3}" fill="blue"/>'
    )
    parts.append(
        f'<circle cx="{tc * cell + cell // 2}" cy="{tr * cell + cell // 2}" '
        f'r="{cell // 3}" fill="red"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def trace_jsonl(trace: Trace) -> str:
    """One JSON object per line, one line per simulation step."""
    lines = []
    for ts in trace.steps:
        abstract = (
            ts.abstract if isinstance(ts.abstract, int) else sorted(ts.abstract)
        )
        lines.append(
            json.dumps(
                {
                    "step": ts.step,
                    "target": ts.target,
                    "agent": ts.agent,
                    "belief": sorted(ts.belief),
                    "abstract": abstract,
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines) + "\n"
