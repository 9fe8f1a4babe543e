"""Grid maps, line-of-sight visibility, and movement.

Cells are row-major indices in ``[0, rows*cols)``.  Map files use one
character per cell: ``.`` free, ``#`` obstacle, ``A`` agent start, ``T``
target start, ``G`` goal cell, and lowercase letters for labelled cells.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache


class MapError(ValueError):
    """Malformed map or config file."""


@dataclass(frozen=True)
class GridWorld:
    rows: int
    cols: int
    obstacles: frozenset[int]
    agent_init: int
    target_init: int
    goal_cells: frozenset[int] = frozenset()
    labels: dict[str, frozenset[int]] = field(default_factory=dict)

    def __post_init__(self):
        n = self.rows * self.cols
        if self.rows <= 0 or self.cols <= 0:
            raise MapError("grid dimensions must be positive")
        for c in self.obstacles | self.goal_cells | {self.agent_init, self.target_init}:
            if not 0 <= c < n:
                raise MapError(f"cell {c} out of range")
        if self.agent_init in self.obstacles or self.target_init in self.obstacles:
            raise MapError("start cell inside an obstacle")
        if self.agent_init == self.target_init:
            raise MapError("agent and target must start on distinct cells")
        for name, cells in self.labels.items():
            if cells & self.obstacles:
                raise MapError(f"label {name!r} covers an obstacle cell")
        if self.goal_cells & self.obstacles:
            raise MapError("goal cell inside an obstacle")

    @property
    def free_cells(self) -> frozenset[int]:
        return frozenset(range(self.rows * self.cols)) - self.obstacles

    def rc(self, cell: int) -> tuple[int, int]:
        return divmod(cell, self.cols)

    def is_free(self, cell: int) -> bool:
        return 0 <= cell < self.rows * self.cols and cell not in self.obstacles

    def neighbors(self, cell: int):
        """Free 4-connected neighbours of a cell."""
        r, c = self.rc(cell)
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            nr, nc = r + dr, c + dc
            if 0 <= nr < self.rows and 0 <= nc < self.cols:
                n = nr * self.cols + nc
                if n not in self.obstacles:
                    yield n


@dataclass(frozen=True)
class MotionConfig:
    agent_radius: int = 1
    target_radius: int = 1
    allow_stay: bool = False
    restrict_agent_to_visible: bool = False

    def __post_init__(self):
        if self.agent_radius < 1 or self.target_radius < 1:
            raise MapError("motion radii must be >= 1")


@dataclass(frozen=True)
class VisionConfig:
    range: float | None = None

    def __post_init__(self):
        if self.range is not None and self.range <= 0:
            raise MapError("vision range must be positive")


def parse_grid(text: str) -> GridWorld:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MapError("empty map")
    cols = len(lines[0])
    obstacles, goals = set(), set()
    labels: dict[str, set[int]] = {}
    agent = target = None
    for r, ln in enumerate(lines):
        if len(ln) != cols:
            raise MapError(f"ragged map: line {r} has length {len(ln)}, expected {cols}")
        for c, ch in enumerate(ln):
            cell = r * cols + c
            if ch == ".":
                continue
            elif ch == "#":
                obstacles.add(cell)
            elif ch == "A":
                if agent is not None:
                    raise MapError("duplicate 'A'")
                agent = cell
            elif ch == "T":
                if target is not None:
                    raise MapError("duplicate 'T'")
                target = cell
            elif ch == "G":
                goals.add(cell)
            elif ch.islower() and ch.isalpha():
                labels.setdefault(ch, set()).add(cell)
            else:
                raise MapError(f"unknown map character {ch!r} at line {r}, column {c}")
    if agent is None:
        raise MapError("missing 'A' (agent start)")
    if target is None:
        raise MapError("missing 'T' (target start)")
    return GridWorld(
        rows=len(lines),
        cols=cols,
        obstacles=frozenset(obstacles),
        agent_init=agent,
        target_init=target,
        goal_cells=frozenset(goals),
        labels={k: frozenset(v) for k, v in sorted(labels.items())},
    )


_CONFIG_KEYS = {
    "agent_radius": int,
    "target_radius": int,
    "allow_stay": None,
    "vision_range": float,
    "restrict_agent_to_visible": None,
}


def parse_config(text: str) -> tuple[MotionConfig, VisionConfig]:
    """Parse ``key=value`` lines into motion and vision configs."""
    values: dict[str, object] = {}
    for i, raw in enumerate(text.splitlines()):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MapError(f"config line {i}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _CONFIG_KEYS:
            raise MapError(f"config line {i}: unknown key {key!r}")
        conv = _CONFIG_KEYS[key]
        if conv is None:
            if val.lower() not in ("true", "false", "0", "1"):
                raise MapError(f"config line {i}: boolean expected for {key}")
            values[key] = val.lower() in ("true", "1")
        else:
            values[key] = conv(val)
    vision = VisionConfig(range=values.pop("vision_range", None))
    motion = MotionConfig(**values)  # type: ignore[arg-type]
    return motion, vision


def _segment_hits_box(px, py, qx, qy, x0, y0, x1, y1, closed=False) -> bool:
    """Segment vs an axis-aligned box (Liang-Barsky clipping).

    With ``closed`` any contact counts, including touching a corner or
    sliding along an edge; otherwise only passing through the open box
    counts as a hit.
    """
    t0, t1 = 0.0, 1.0
    for p, lo, hi, d in ((px, x0, x1, qx - px), (py, y0, y1, qy - py)):
        if d == 0:
            if closed:
                if p < lo or p > hi:
                    return False
            elif p <= lo or p >= hi:
                return False
        else:
            a, b = (lo - p) / d, (hi - p) / d
            if a > b:
                a, b = b, a
            t0, t1 = max(t0, a), min(t1, b)
    if closed:
        return t0 <= t1
    return t0 < t1


def line_of_sight(g: GridWorld, v: VisionConfig, src: int, dst: int) -> bool:
    """True iff ``dst`` is visible from ``src``.

    Visibility requires (a) centre distance within the vision range, if
    one is set, and (b) the straight segment between cell centres not
    being occluded by any obstacle cell.  Passing through the interior of
    an obstacle square always occludes.  A segment that merely grazes an
    obstacle corner occludes only when the sight line runs at exactly 45
    degrees: such a line steps corner-to-corner between diagonal cells,
    and sight may not cut an obstacle corner, whereas a line at any other
    slope passes the touched corner on its way between different cells.
    """
    if src == dst:
        return True
    r0, c0 = g.rc(src)
    r1, c1 = g.rc(dst)
    px, py = c0 + 0.5, r0 + 0.5
    qx, qy = c1 + 0.5, r1 + 0.5
    if v.range is not None:
        if (px - qx) ** 2 + (py - qy) ** 2 > v.range**2:
            return False
    diagonal = abs(r1 - r0) == abs(c1 - c0)
    lo_r, hi_r = min(r0, r1), max(r0, r1)
    lo_c, hi_c = min(c0, c1), max(c0, c1)
    for o in g.obstacles:
        orr, oc = g.rc(o)
        # obstacles outside the bounding box of the segment cannot occlude
        if orr < lo_r - 1 or orr > hi_r + 1 or oc < lo_c - 1 or oc > hi_c + 1:
            continue
        if _segment_hits_box(
            px, py, qx, qy, oc, orr, oc + 1.0, orr + 1.0, closed=diagonal
        ):
            return False
    return True


def reachable_moves(
    g: GridWorld,
    start: int,
    radius: int,
    allow_stay: bool,
    forbidden: frozenset[int] | set[int] = frozenset(),
) -> frozenset[int]:
    """Cells reachable in at most ``radius`` unit steps through free cells.

    ``forbidden`` cells are removed from the result (not from the paths),
    as is ``start`` unless ``allow_stay``.  Falls back to ``{start}`` when
    the result would be empty, so transitions stay total.
    """
    if not g.is_free(start):
        raise MapError(f"reachable_moves from non-free cell {start}")
    seen = {start}
    frontier = [start]
    for _ in range(radius):
        nxt = []
        for cell in frontier:
            for n in g.neighbors(cell):
                if n not in seen:
                    seen.add(n)
                    nxt.append(n)
        frontier = nxt
    result = seen - set(forbidden)
    if not allow_stay:
        result.discard(start)
    if not result:
        return frozenset({start})
    return frozenset(result)


def build_game_structure(g: GridWorld, m: MotionConfig, v: VisionConfig):
    """Instantiate the turn-based game: target moves first, agent replies.

    The target may not move onto the agent's current cell; the agent may
    not move onto the target's new cell.  With
    ``restrict_agent_to_visible`` the agent is additionally confined to
    cells visible from its current location.
    """
    from .structure import SurveillanceGameStructure

    free = sorted(g.free_cells)
    vis = {}
    for a in free:
        for t in free:
            if a <= t:
                val = line_of_sight(g, v, a, t)
                vis[(a, t)] = val
                vis[(t, a)] = val if v.range is None else line_of_sight(g, v, t, a)

    @lru_cache(maxsize=None)
    def moves(start: int, radius: int, forbid: int) -> frozenset[int]:
        return reachable_moves(g, start, radius, m.allow_stay, {forbid})

    target_succ: dict[tuple[int, int], tuple[int, ...]] = {}
    agent_succ: dict[tuple[int, int, int], tuple[int, ...]] = {}
    for l_a in free:
        visible_from = None
        if m.restrict_agent_to_visible:
            visible_from = {c for c in free if vis[(l_a, c)]}
        for l_t in free:
            succs = tuple(sorted(moves(l_t, m.target_radius, l_a)))
            target_succ[(l_a, l_t)] = succs
            for l_t2 in succs:
                key = (l_a, l_t2)
                if key in agent_succ:
                    agent_succ[(l_a, l_t, l_t2)] = agent_succ[key]  # type: ignore[index]
                    continue
                replies = moves(l_a, m.agent_radius, l_t2)
                if visible_from is not None:
                    replies = replies & visible_from
                    if not replies:
                        replies = frozenset({l_a})
                reply_t = tuple(sorted(replies))
                agent_succ[key] = reply_t  # type: ignore[index]
                agent_succ[(l_a, l_t, l_t2)] = reply_t
    # drop the (l_a, l_t') cache entries, keep only full keys
    agent_succ = {k: v2 for k, v2 in agent_succ.items() if len(k) == 3}
    return SurveillanceGameStructure(
        agent_locations=frozenset(free),
        target_locations=frozenset(free),
        initial=(g.agent_init, g.target_init),
        target_succ=target_succ,
        agent_succ=agent_succ,
        visibility=vis,
    )
