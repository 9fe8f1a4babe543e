"""Abstraction partitions and the abstract belief game.

A partition groups target locations into blocks; abstract beliefs are
sets of block ids (or a concrete location while the target is visible).
Coarser partitions give smaller games at the price of over-approximated
beliefs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .belief import PredicateDef, TurnGame, _explore
from .structure import SurveillanceGameStructure


class PartitionError(ValueError):
    """Invalid abstraction partition."""


@dataclass(frozen=True)
class Partition:
    """Disjoint blocks of target locations covering all of them.

    Block ids are stable across refinement: a split retires the old id
    and allocates fresh ids for the parts, everything else keeps its id.
    ``parent`` records the partition a refinement came from.
    """

    blocks: dict[int, frozenset[int]]
    universe: frozenset[int]
    next_id: int = 0
    parent: Optional["Partition"] = None
    block_of: dict[int, int] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        covered: set[int] = set()
        block_of = {}
        for bid, cells in self.blocks.items():
            if not cells:
                raise PartitionError(f"empty block {bid}")
            if covered & cells:
                raise PartitionError("blocks are not disjoint")
            covered |= cells
            for c in cells:
                block_of[c] = bid
        if covered != self.universe:
            raise PartitionError("blocks do not cover the target locations")
        object.__setattr__(self, "block_of", block_of)
        if self.next_id <= (max(self.blocks) if self.blocks else -1):
            object.__setattr__(self, "next_id", max(self.blocks) + 1)

    def __len__(self) -> int:
        return len(self.blocks)

    def alpha(self, locs: Iterable[int]) -> frozenset[int]:
        """Abstract a set of locations to the set of blocks touching it."""
        return frozenset(self.block_of[l] for l in locs)

    def gamma(self, abstract) -> frozenset[int]:
        """Concretize an abstract belief (block-id set or location)."""
        if isinstance(abstract, int):
            return frozenset({abstract})
        out: set[int] = set()
        for bid in abstract:
            out |= self.blocks[bid]
        return frozenset(out)

    def check_uniform(self, predicates: Iterable[PredicateDef]) -> None:
        """Every target-kind predicate must be constant on each block."""
        for pred in predicates:
            if not pred.on_target:
                continue
            for bid, cells in self.blocks.items():
                vals = {c in pred.cells for c in cells}
                if len(vals) > 1:
                    raise PartitionError(
                        f"predicate {pred.name!r} is not uniform on block {bid}"
                    )

    def split(self, scope: frozenset[int], separator: frozenset[int]) -> "Partition":
        """Split every block inside ``scope`` against ``separator``.

        Blocks not contained in ``scope`` are untouched.  Returns self if
        nothing splits.
        """
        new_blocks = dict(self.blocks)
        nid = self.next_id
        changed = False
        for bid in sorted(self.blocks):
            cells = self.blocks[bid]
            if not cells <= scope:
                continue
            inter, diff = cells & separator, cells - separator
            if inter and diff:
                del new_blocks[bid]
                new_blocks[nid] = inter
                new_blocks[nid + 1] = diff
                nid += 2
                changed = True
        if not changed:
            return self
        return Partition(new_blocks, self.universe, nid, parent=self)

    def meet(self, other: "Partition") -> "Partition":
        """Coarsest common refinement of two partitions of the same set."""
        result = self
        for cells in sorted(other.blocks.values(), key=sorted):
            result = result.split(result.universe, cells)
        return result


def refines(finer: Partition, coarser: Partition) -> bool:
    """True iff every block of ``finer`` lies inside a block of ``coarser``."""
    if finer.universe != coarser.universe:
        return False
    return all(
        any(cells <= other for other in coarser.blocks.values())
        for cells in finer.blocks.values()
    )


def initial_partition(
    G: SurveillanceGameStructure, predicates: Iterable[PredicateDef] = ()
) -> Partition:
    """Coarsest partition that is uniform for every target-kind predicate."""
    preds = [p for p in predicates if p.on_target]
    groups: dict[tuple[bool, ...], set[int]] = {}
    for l_t in sorted(G.target_locations):
        sig = tuple(l_t in p.cells for p in preds)
        groups.setdefault(sig, set()).add(l_t)
    blocks = {
        i: frozenset(cells)
        for i, (_, cells) in enumerate(sorted(groups.items()))
    }
    return Partition(blocks, frozenset(G.target_locations))


def abstract_successors(G: SurveillanceGameStructure, Q: Partition, state):
    """Abstract choices and agent replies from an abstract state.

    One concrete choice per visible successor of the concretized belief,
    plus at most one block-set choice covering all invisible successors.
    """
    l_a, abstract = state
    belief = Q.gamma(abstract)
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
        (l_t2, tuple(sorted(replies))) for l_t2, replies in sorted(visible.items())
    ]
    if invisible:
        replies = G.succ_a(l_a, *inv_pair)
        choices.append((Q.alpha(invisible), tuple(replies)))
    return choices


def build_abstract_game(
    G: SurveillanceGameStructure, Q: Partition, max_states: int = 1_000_000
) -> TurnGame:
    """Enumerate the reachable abstract game for partition ``Q``."""
    game = _explore(
        G.initial, lambda s: abstract_successors(G, Q, s), max_states
    )
    return game
