import pytest
from hypothesis import given, settings, strategies as st

from surveil import (
    Partition,
    PartitionError,
    PredicateDef,
    abstract_successors,
    build_abstract_game,
    build_belief_game,
    initial_partition,
    refines,
)


def test_partition_validation(game5):
    universe = frozenset(game5.target_locations)
    with pytest.raises(PartitionError):
        Partition({0: frozenset()}, universe)
    with pytest.raises(PartitionError):
        Partition({0: universe, 1: frozenset({0})}, universe)  # overlap
    with pytest.raises(PartitionError):
        Partition({0: universe - {0}}, universe)  # not covering


def test_alpha_gamma(rows_partition):
    assert rows_partition.alpha({17}) == {3}
    assert rows_partition.alpha({23}) == {4}
    got = rows_partition.gamma(rows_partition.alpha({17, 23}))
    assert got == {15, 16, 17, 18, 19, 20, 21, 22, 23, 24}
    assert rows_partition.gamma(17) == {17}


def test_abstract_successors_from_initial(game5, rows_partition):
    """The four abstract successor states of (4, 18) under the row
    partition: visible 19 and the block pair for rows 4 and 5."""
    blocks = rows_partition.alpha({17, 23})
    succs = abstract_successors(game5, rows_partition, game5.initial)
    states = {(l_a2, A) for A, replies in succs for l_a2 in replies}
    assert states == {(3, 19), (9, 19), (3, blocks), (9, blocks)}


def test_split_retires_ids(rows_partition):
    scope = rows_partition.blocks[3]
    refined = rows_partition.split(scope, frozenset({17}))
    assert 3 not in refined.blocks
    assert frozenset({17}) in refined.blocks.values()
    assert scope - {17} in refined.blocks.values()
    assert refines(refined, rows_partition)
    assert refined.parent is rows_partition


def test_split_noop_returns_self(rows_partition):
    assert rows_partition.split(rows_partition.blocks[0], frozenset()) is rows_partition


def test_meet(game5, rows_partition, two_col_partition):
    m = rows_partition.meet(two_col_partition)
    assert refines(m, rows_partition)
    assert refines(m, two_col_partition)
    # the meet is the coarsest such partition: block count of the product
    expected = {
        r & c
        for r in rows_partition.blocks.values()
        for c in two_col_partition.blocks.values()
        if r & c
    }
    assert set(m.blocks.values()) == expected


def test_refines_is_a_preorder(rows_partition, two_col_partition):
    assert refines(rows_partition, rows_partition)
    assert not refines(rows_partition, two_col_partition)
    assert not refines(two_col_partition, rows_partition)


def test_initial_partition_trivial(game5):
    q = initial_partition(game5)
    assert len(q) == 1
    assert q.gamma(q.alpha({17})) == game5.target_locations


def test_initial_partition_predicate_uniform(game5):
    zone = PredicateDef("zone", frozenset({17, 23}), on_target=True)
    q = initial_partition(game5, [zone])
    assert len(q) == 2
    q.check_uniform([zone])
    assert frozenset({17, 23}) in q.blocks.values()


def test_check_uniform_rejects(game5, rows_partition):
    zone = PredicateDef("zone", frozenset({17}), on_target=True)
    with pytest.raises(PartitionError):
        rows_partition.check_uniform([zone])


def test_abstract_game_overapproximates(game5, rows_partition):
    """Joint BFS: every reachable exact belief is gamma-contained in a
    reachable abstract belief with the same agent location."""
    exact = build_belief_game(game5)
    abstract = build_abstract_game(game5, rows_partition)
    # pair exact and abstract states along matched transitions
    seen = set()
    init_e = exact.initial
    init_a = abstract.initial
    queue = [(init_e, init_a)]
    seen.add((init_e, init_a))
    while queue:
        (l_a, B), (l_a2, A) = queue.pop(0)
        assert l_a == l_a2
        gamma = rows_partition.gamma(A)
        assert B <= gamma, ((l_a, B), (l_a2, A))
        amoves = dict(abstract.moves[(l_a2, A)])
        for B2, replies in exact.moves[(l_a, B)]:
            if len(B2) == 1 and game5.vis(l_a, next(iter(B2))):
                (loc,) = B2
                key = loc
            else:
                key = next(k for k in amoves if not isinstance(k, int))
            for r in replies:
                pair = (r, (r[0], key))
                if pair not in seen:
                    seen.add(pair)
                    queue.append(pair)


def test_abstract_game_smaller_than_exact(game5, two_col_partition):
    exact = build_belief_game(game5)
    abstract = build_abstract_game(game5, two_col_partition)
    assert len(abstract) < len(exact)


@settings(max_examples=200, deadline=None)
@given(st.sets(st.integers(0, 24), min_size=1))
def test_gamma_alpha_overapproximates(game5, rows_partition, cells):
    locs = frozenset(cells) & game5.target_locations
    if not locs:
        return
    assert locs <= rows_partition.gamma(rows_partition.alpha(locs))


@settings(max_examples=200, deadline=None)
@given(
    st.sets(st.integers(0, 24), min_size=1),
    st.sets(st.integers(0, 24), min_size=1),
)
def test_refinement_monotonicity(game5, rows_partition, cells, sep):
    """A split never coarsens: gamma after refinement is contained in
    gamma before, for every abstract belief over surviving blocks."""
    locs = frozenset(cells) & game5.target_locations
    separator = frozenset(sep) & game5.target_locations
    if not locs or not separator:
        return
    refined = rows_partition.split(rows_partition.universe, separator)
    assert refines(refined, rows_partition)
    before = rows_partition.gamma(rows_partition.alpha(locs))
    after = refined.gamma(refined.alpha(locs))
    assert locs <= after <= before
