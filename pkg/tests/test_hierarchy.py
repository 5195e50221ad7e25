import pytest
from hypothesis import given
from hypothesis import strategies as st

from hierpoisson.hierarchy import Ball, HierarchyGeometry, ball_members, hier_distance, partition_blocks

G2 = HierarchyGeometry(2)


def brute_distance(x, y, n):
    k = 0
    while x // n**k != y // n**k:
        k += 1
    return k


@pytest.mark.parametrize("x,y,expected", [(5, 5, 0), (0, 1, 1), (0, 4, 3)])
def test_distance_examples(x, y, expected):
    assert hier_distance(x, y, G2) == expected == brute_distance(x, y, 2)


def test_ball_examples():
    assert list(ball_members(5, 0, G2)) == [5]
    assert list(ball_members(5, 2, G2)) == [4, 5, 6, 7]
    assert [y for y in range(16) if hier_distance(5, y, G2) <= 2] == [4, 5, 6, 7]
    g3 = HierarchyGeometry(3)
    assert list(ball_members(0, 3, g3)) == list(range(27))


def test_partition_examples():
    assert [list(b.members) for b in partition_blocks(2, 1, G2)] == [[0, 1], [2, 3]]
    singles = partition_blocks(3, 0, G2)
    assert [list(b.members) for b in singles] == [[i] for i in range(8)]
    blocks = partition_blocks(4, 2, G2)
    assert len(blocks) == 4 and all(len(b) == 4 for b in blocks)
    flat = [x for b in blocks for x in b.members]
    assert sorted(flat) == list(range(16)) and len(set(flat)) == 16


def test_first_block_is_inner_ball():
    blocks = partition_blocks(6, 3, G2)
    assert blocks[0].members == ball_members(0, 3, G2)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        HierarchyGeometry(1)
    with pytest.raises(ValueError):
        hier_distance(-1, 0, G2)
    with pytest.raises(ValueError):
        partition_blocks(2, 3, G2)
    with pytest.raises(ValueError):
        G2.level_of(6)


def test_ball_identity_is_by_members():
    assert Ball(5, 2, 2) == Ball(6, 2, 2)
    assert len({Ball(5, 2, 2), Ball(4, 2, 2), Ball(8, 2, 2)}) == 2
    assert 7 in Ball(5, 2, 2) and 8 not in Ball(5, 2, 2)


ns = st.integers(2, 5)
sites = st.integers(0, 10_000)


@given(ns, sites, sites, sites)
def test_ultrametric(n, x, y, z):
    g = HierarchyGeometry(n)
    assert hier_distance(x, z, g) <= max(hier_distance(x, y, g), hier_distance(y, z, g))
    assert hier_distance(x, y, g) == hier_distance(y, x, g) == brute_distance(x, y, n)


@given(ns, sites, st.integers(0, 5))
def test_ball_nesting(n, x, r):
    g = HierarchyGeometry(n)
    outer = ball_members(x, r + 1, g)
    inner = [ball_members(y, r, g) for y in outer[:: n**r]]
    assert len(inner) == n
    assert [y for b in inner for y in b] == list(outer)


@given(ns, st.integers(0, 5), st.data())
def test_balls_equal_or_disjoint(n, r, data):
    g = HierarchyGeometry(n)
    x = data.draw(sites)
    y = data.draw(sites)
    a, b = set(ball_members(x, r, g)), set(ball_members(y, r, g))
    assert a == b or not (a & b)
    assert len(a) == n**r


@given(ns, st.integers(0, 5), st.data())
def test_blocks_are_balls(n, k, data):
    r = data.draw(st.integers(0, k))
    g = HierarchyGeometry(n)
    for b in partition_blocks(k, r, g):
        assert b.members == ball_members(b.start, r, g)
